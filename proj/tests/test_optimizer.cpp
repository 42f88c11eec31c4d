#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "autolab/errors.hpp"
#include "autolab/optimizer.hpp"
#include "autolab/procedure.hpp"
#include "autolab/rng.hpp"
#include "autolab/simlab.hpp"

#include "support.hpp"

using namespace autolab;

namespace {

/// Evaluates candidates directly against a ground-truth surface with a fixed
/// linear cost for the cycle time, bypassing the lab entirely.
class SurfaceEvaluator : public BatchEvaluator {
 public:
  explicit SurfaceEvaluator(YieldSurface surface) : surface_(std::move(surface)) {}

  std::vector<Outcome> evaluate(const std::vector<Procedure>& procedures,
                                int /*iteration*/) override {
    std::vector<Outcome> out;
    for (const auto& p : procedures) {
      Outcome o;
      o.yield = surface_.stepwise_yield(p.params);
      o.time_min = 100 + 8 * param_num(p.params, "cycle_time", 0);
      out.push_back(o);
    }
    return out;
  }

 private:
  YieldSurface surface_;
};

Outcome make_outcome(std::optional<double> yield, double time) {
  Outcome o;
  o.yield = yield;
  o.time_min = time;
  return o;
}

std::vector<Procedure> synthesis_candidates() {
  TemplateKB kb = TemplateKB::load(testutil::scenario("templates.kb"));
  return kb.lookup("enzymatic_synthesis");
}

}  // namespace

TEST_CASE("lexicographic comparison orders threshold then tie-break goals") {
  Objective obj = Objective::parse({"yield>=0.98", "min:time"});

  // met beats unmet regardless of time
  CHECK(lex_compare(make_outcome(0.99, 500), make_outcome(0.97, 10), obj) == 1);
  CHECK(lex_compare(make_outcome(0.97, 10), make_outcome(0.99, 500), obj) == -1);
  // both unmet: closer to the threshold wins
  CHECK(lex_compare(make_outcome(0.95, 500), make_outcome(0.90, 10), obj) == 1);
  // both met: the faster run wins
  CHECK(lex_compare(make_outcome(0.99, 100), make_outcome(0.985, 200), obj) == 1);
  CHECK(lex_compare(make_outcome(0.985, 200), make_outcome(0.99, 100), obj) == -1);
  // identical on every goal: tie
  CHECK(lex_compare(make_outcome(0.99, 100), make_outcome(0.985, 100), obj) == 0);
  // a missing yield can never meet the threshold and loses to any value
  CHECK(lex_compare(make_outcome(std::nullopt, 10), make_outcome(0.1, 500), obj) == -1);
  // pure minimization ignores yield
  Objective fastest = Objective::parse({"min:time"});
  CHECK(lex_compare(make_outcome(0.1, 10), make_outcome(0.99, 20), fastest) == 1);
  // unknown metrics compare as absent on both sides: tie
  Objective odd = Objective::parse({"min:purity"});
  CHECK(lex_compare(make_outcome(0.1, 10), make_outcome(0.99, 20), odd) == 0);
}

TEST_CASE("lexicographic comparison matches a straight transcription") {
  Objective obj = Objective::parse({"yield>=0.98", "min:time"});
  auto oracle = [](const Outcome& a, const Outcome& b) {
    double ya = a.yield.value_or(-1e300);
    double yb = b.yield.value_or(-1e300);
    bool ma = a.yield && *a.yield >= 0.98;
    bool mb = b.yield && *b.yield >= 0.98;
    if (ma != mb) return ma ? 1 : -1;
    if (!ma && ya != yb) return ya > yb ? 1 : -1;
    if (a.time_min != b.time_min) return a.time_min < b.time_min ? 1 : -1;
    return 0;
  };
  Rng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    auto draw = [&]() {
      std::optional<double> y;
      if (rng.below(8) != 0) y = static_cast<double>(rng.below(101)) / 100.0;
      return make_outcome(y, static_cast<double>(rng.below(50)));
    };
    Outcome a = draw();
    Outcome b = draw();
    CHECK(lex_compare(a, b, obj) == oracle(a, b));
    CHECK(lex_compare(a, b, obj) == -lex_compare(b, a, obj));
    CHECK(lex_compare(a, a, obj) == 0);
  }
}

TEST_CASE("visited compares parameter sets by value and type") {
  OptimizationState st;
  EvalRecord rec;
  rec.params = Params{{"buffer", std::string("bw")}, {"cocl2", 0.5}};
  st.history.push_back(rec);
  CHECK(st.visited(Params{{"buffer", std::string("bw")}, {"cocl2", 0.5}}));
  CHECK_FALSE(st.visited(Params{{"buffer", std::string("bw")}, {"cocl2", 1.0}}));
  CHECK_FALSE(st.visited(Params{{"buffer", std::string("bw")}}));
  // a numeric 0.5 and the string "0.5" are different values
  CHECK_FALSE(st.visited(Params{{"buffer", std::string("bw")},
                                {"cocl2", std::string("0.5")}}));
}

TEST_CASE("the default grid walks buffer to cycle time in order") {
  ParameterGrid g = default_parameter_grid();
  REQUIRE(g.dims.size() == 6);
  CHECK(g.dims[0].name == "buffer");
  CHECK(g.dims[1].name == "tween20");
  CHECK(g.dims[2].name == "cocl2");
  CHECK(g.dims[3].name == "tdt");
  CHECK(g.dims[4].name == "terminator");
  CHECK(g.dims[5].name == "cycle_time");
  CHECK(g.dims[2].values.size() == 3);
  CHECK(std::get<double>(g.dims[5].values.front()) == doctest::Approx(20.0));
}

TEST_CASE("closed loop climbs the surface and halts on threshold regression") {
  auto candidates = synthesis_candidates();
  REQUIRE(candidates.size() == 2);
  Objective obj = candidates.front().objective;
  SurfaceEvaluator eval(default_yield_surface());
  CoordinateSearchProposer proposer(default_parameter_grid());

  LoopResult res = optimize_loop(candidates, obj, eval, proposer, 40);

  CHECK(res.halt_reason == "threshold-regression");
  CHECK(res.iterations == 7);
  CHECK(res.evaluations == 8);
  REQUIRE(res.best_outcome.yield);
  CHECK(*res.best_outcome.yield == doctest::Approx(0.985));

  CHECK(param_str(res.best.params, "buffer", "") == "bw");
  CHECK(param_num(res.best.params, "tween20", -1) == doctest::Approx(0.05));
  CHECK(param_num(res.best.params, "cocl2", -1) == doctest::Approx(1.0));
  CHECK(param_num(res.best.params, "tdt", -1) == doctest::Approx(2.0));
  CHECK(param_num(res.best.params, "terminator", -1) == doctest::Approx(2.0));
  CHECK(param_num(res.best.params, "cycle_time", -1) == doctest::Approx(20.0));

  // the climb, step by step
  std::vector<double> yields;
  for (const auto& rec : res.state.history) yields.push_back(rec.outcome.yield.value_or(-1));
  std::vector<double> expected{0.90, 0.93, 0.95, 0.957, 0.965, 0.975, 0.985, 0.95545};
  REQUIRE(yields.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(yields[i] == doctest::Approx(expected[i]));

  REQUIRE(res.journal.size() == 10);
  CHECK(res.journal[0] ==
        "iteration 1 evaluate synth_lysis {buffer=lysis cocl2=0.25 cycle_time=20 tdt=1 "
        "terminator=1 tween20=0} yield 0.9 time 260");
  CHECK(res.journal[1] ==
        "iteration 1 evaluate synth_bw {buffer=bw cocl2=0.25 cycle_time=20 tdt=1 "
        "terminator=1 tween20=0} yield 0.93 time 260");
  CHECK(res.journal[2] == "iteration 1 frontier synth_bw");
  CHECK(res.journal[3] == "iteration 2 vary tween20 to 0.05 yield 0.95 time 260 -> adopt");
  CHECK(res.journal[4] == "iteration 3 vary cocl2 to 0.5 yield 0.957 time 260 -> adopt");
  CHECK(res.journal[5] == "iteration 4 vary cocl2 to 1 yield 0.965 time 260 -> adopt");
  CHECK(res.journal[6] == "iteration 5 vary tdt to 2 yield 0.975 time 260 -> adopt");
  CHECK(res.journal[7] ==
        "iteration 6 vary terminator to 2 yield 0.985 time 260 -> adopt");
  CHECK(res.journal[8] ==
        "iteration 7 vary cycle_time to 15 yield 0.95545 time 220 -> reject");
  CHECK(res.journal[9] == "halt threshold-regression");

  std::string csv = res.journal_csv();
  CHECK(csv.rfind("iteration,procedure,params,yield,time_min,decision\n", 0) == 0);
  CHECK(csv.find("6,synth_bw,buffer=bw cocl2=1 cycle_time=20 tdt=2 terminator=2 "
                 "tween20=0.05,0.985,260,frontier") != std::string::npos);
  CHECK(csv.find("7,synth_bw,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);  // header + 8 evaluations
}

TEST_CASE("the adopted recipe is the grid-wide lexicographic optimum") {
  auto candidates = synthesis_candidates();
  Objective obj = candidates.front().objective;
  SurfaceEvaluator eval(default_yield_surface());
  CoordinateSearchProposer proposer(default_parameter_grid());
  LoopResult res = optimize_loop(candidates, obj, eval, proposer, 200);

  // brute force over the full 144-point grid with the same evaluator
  YieldSurface surface = default_yield_surface();
  ParameterGrid grid = default_parameter_grid();
  Params best_params;
  Outcome best_outcome;
  bool have = false;
  std::vector<std::size_t> idx(grid.dims.size(), 0);
  while (true) {
    Params p;
    for (std::size_t d = 0; d < grid.dims.size(); ++d)
      p[grid.dims[d].name] = grid.dims[d].values[idx[d]];
    Outcome o;
    o.yield = surface.stepwise_yield(p);
    o.time_min = 100 + 8 * param_num(p, "cycle_time", 0);
    if (!have || lex_compare(o, best_outcome, obj) > 0) {
      best_outcome = o;
      best_params = p;
      have = true;
    }
    std::size_t d = 0;
    for (; d < idx.size(); ++d) {
      if (++idx[d] < grid.dims[d].values.size()) break;
      idx[d] = 0;
    }
    if (d == idx.size()) break;
  }

  for (const auto& [k, v] : best_params) {
    CAPTURE(k);
    CHECK(param_value_eq(res.best.params.at(k), v));
  }
  CHECK(*res.best_outcome.yield == doctest::Approx(*best_outcome.yield));
  CHECK(res.best_outcome.time_min == doctest::Approx(best_outcome.time_min));
}

TEST_CASE("a failed proposal advances the search to the next dimension") {
  YieldSurface flat_tween = default_yield_surface();
  flat_tween.bonuses.erase(flat_tween.bonuses.begin() + 1);  // drop the tween20 bonus
  auto candidates = synthesis_candidates();
  Objective obj = candidates.front().objective;
  SurfaceEvaluator eval(flat_tween);
  CoordinateSearchProposer proposer(default_parameter_grid());
  LoopResult res = optimize_loop(candidates, obj, eval, proposer, 40);

  CHECK(res.journal[3] ==
        "iteration 2 vary tween20 to 0.05 yield 0.93 time 260 -> reject");
  // tween20 is abandoned; the very next proposal probes cobalt
  CHECK(res.journal[4].rfind("iteration 3 vary cocl2 to 0.5", 0) == 0);
  CHECK(param_num(res.best.params, "tween20", -1) == doctest::Approx(0.0));
}

TEST_CASE("the loop stops when the evaluation budget runs out") {
  auto candidates = synthesis_candidates();
  Objective obj = candidates.front().objective;
  SurfaceEvaluator eval(default_yield_surface());

  CoordinateSearchProposer p3(default_parameter_grid());
  LoopResult res = optimize_loop(candidates, obj, eval, p3, 3);
  CHECK(res.halt_reason == "budget");
  CHECK(res.evaluations == 3);
  CHECK(res.iterations == 2);
  CHECK(res.journal.back() == "halt budget");

  // budget below the candidate count truncates the fan-out pool
  CoordinateSearchProposer p1(default_parameter_grid());
  LoopResult tiny = optimize_loop(candidates, obj, eval, p1, 1);
  CHECK(tiny.halt_reason == "budget");
  CHECK(tiny.evaluations == 1);
  CHECK(tiny.state.history.size() == 1);
  CHECK(tiny.state.history[0].procedure_id == "synth_lysis");
  CHECK(param_str(tiny.best.params, "buffer", "") == "lysis");
}

TEST_CASE("the loop reports exhaustion when the grid is fully explored") {
  auto candidates = synthesis_candidates();
  Objective obj = candidates.front().objective;
  SurfaceEvaluator eval(default_yield_surface());
  ParameterGrid only_buffer;
  only_buffer.dims.push_back(
      {"buffer", {ParamValue{std::string("lysis")}, ParamValue{std::string("bw")}}});
  CoordinateSearchProposer proposer(only_buffer);

  LoopResult res = optimize_loop(candidates, obj, eval, proposer, 40);
  CHECK(res.halt_reason == "exhausted");
  CHECK(res.evaluations == 2);  // fan-out only; both buffer values already tried
  CHECK(res.journal.back() == "halt exhausted");
}

TEST_CASE("optimizing nothing is an error") {
  SurfaceEvaluator eval(default_yield_surface());
  CoordinateSearchProposer proposer(default_parameter_grid());
  Objective obj = Objective::parse({"min:time"});
  CHECK_THROWS_AS(optimize_loop({}, obj, eval, proposer, 5),
                  InfeasibleAllCandidatesError);
}
