#include "autolab/optimizer.hpp"

#include <algorithm>
#include <sstream>

#include "autolab/errors.hpp"
#include "autolab/text.hpp"

namespace autolab {

namespace {

std::optional<double> metric_value(const Outcome& o, const std::string& metric) {
  if (metric == "yield") return o.yield;
  if (metric == "time") return o.time_min;
  return std::nullopt;
}

std::string params_brief(const Params& p) {
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += " ";
    out += k + "=" + param_value_str(v);
  }
  return out;
}

}  // namespace

int lex_compare(const Outcome& a, const Outcome& b, const Objective& objective) {
  for (const auto& goal : objective.goals) {
    auto va = metric_value(a, goal.metric);
    auto vb = metric_value(b, goal.metric);
    if (goal.kind == Goal::Kind::threshold) {
      bool met_a = va && *va >= goal.value;
      bool met_b = vb && *vb >= goal.value;
      if (met_a != met_b) return met_a ? 1 : -1;
      if (!met_a) {
        double ya = va.value_or(-1e300);
        double yb = vb.value_or(-1e300);
        if (ya != yb) return ya > yb ? 1 : -1;
      }
    } else {
      double ta = va.value_or(1e300);
      double tb = vb.value_or(1e300);
      if (ta != tb) return ta < tb ? 1 : -1;
    }
  }
  return 0;
}

bool OptimizationState::visited(const Params& params) const {
  for (const auto& rec : history) {
    if (rec.params.size() != params.size()) continue;
    bool same = true;
    auto it = rec.params.begin();
    auto jt = params.begin();
    for (; it != rec.params.end(); ++it, ++jt)
      same &= it->first == jt->first && param_value_eq(it->second, jt->second);
    if (same) return true;
  }
  return false;
}

ParameterGrid default_parameter_grid() {
  ParameterGrid g;
  g.dims.push_back({"buffer", {ParamValue{std::string("lysis")}, ParamValue{std::string("bw")}}});
  g.dims.push_back({"tween20", {ParamValue{0.0}, ParamValue{0.05}}});
  g.dims.push_back({"cocl2", {ParamValue{0.25}, ParamValue{0.5}, ParamValue{1.0}}});
  g.dims.push_back({"tdt", {ParamValue{1.0}, ParamValue{2.0}}});
  g.dims.push_back({"terminator", {ParamValue{1.0}, ParamValue{2.0}}});
  g.dims.push_back({"cycle_time", {ParamValue{20.0}, ParamValue{15.0}, ParamValue{10.0}}});
  return g;
}

Proposal CoordinateSearchProposer::propose(const OptimizationState& state) {
  const EvalRecord* frontier = state.frontier();
  if (!frontier) return Exhausted{};
  for (std::size_t d = dim_idx_; d < grid_.dims.size(); ++d) {
    const auto& dim = grid_.dims[d];
    for (const auto& value : dim.values) {
      Params candidate = frontier->params;
      candidate[dim.name] = value;
      if (state.visited(candidate)) continue;
      last_proposed_dim_ = d;
      dim_idx_ = d;
      Hypothesis h;
      h.rationale = "vary " + dim.name + " to " + param_value_str(value);
      h.deltas[dim.name] = value;
      return h;
    }
  }
  return Exhausted{};
}

void CoordinateSearchProposer::observe(bool improved) {
  if (!improved) dim_idx_ = std::max(dim_idx_, last_proposed_dim_ + 1);
}

std::string LoopResult::journal_csv() const {
  std::ostringstream out;
  out << "iteration,procedure,params,yield,time_min,decision\n";
  for (const auto& rec : state.history) {
    out << rec.iteration << "," << rec.procedure_id << "," << params_brief(rec.params)
        << "," << (rec.outcome.yield ? text::format_number(*rec.outcome.yield) : "-")
        << "," << text::format_number(rec.outcome.time_min) << ",";
    bool is_frontier =
        state.frontier_index && &rec == &state.history[*state.frontier_index];
    out << (is_frontier ? "frontier" : "evaluated") << "\n";
  }
  return out.str();
}

LoopResult optimize_loop(const std::vector<Procedure>& candidates,
                         const Objective& objective, BatchEvaluator& evaluator,
                         ProposerStrategy& proposer, int budget) {
  if (candidates.empty())
    throw InfeasibleAllCandidatesError("no candidate procedures to optimize");
  LoopResult result;
  OptimizationState& state = result.state;
  state.objective = objective;

  auto log = [&](const std::string& line) { result.journal.push_back(line); };

  // Iteration 1: fan out over every candidate recipe.
  std::vector<Procedure> pool = candidates;
  if (budget < static_cast<int>(pool.size()))
    pool.resize(std::max<std::size_t>(1, static_cast<std::size_t>(budget)));
  auto outcomes = evaluator.evaluate(pool, 1);
  result.iterations = 1;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EvalRecord rec;
    rec.iteration = 1;
    rec.procedure_id = pool[i].procedure_id;
    rec.params = pool[i].params;
    rec.outcome = outcomes[i];
    state.history.push_back(rec);
    ++result.evaluations;
    if (!state.frontier_index ||
        lex_compare(rec.outcome, state.history[*state.frontier_index].outcome,
                    objective) > 0)
      state.frontier_index = state.history.size() - 1;
    log("iteration 1 evaluate " + rec.procedure_id + " {" + params_brief(rec.params) +
        "} yield " +
        (rec.outcome.yield ? text::format_number(*rec.outcome.yield) : "-") + " time " +
        text::format_number(rec.outcome.time_min));
  }
  std::size_t frontier_candidate = *state.frontier_index;
  Procedure best = pool[frontier_candidate];
  log("iteration 1 frontier " + state.history[frontier_candidate].procedure_id);

  auto frontier_outcome = [&]() { return state.history[*state.frontier_index].outcome; };
  auto threshold_regressed = [&](const Outcome& cand) {
    for (const auto& goal : objective.goals) {
      if (goal.kind != Goal::Kind::threshold) continue;
      auto vf = metric_value(frontier_outcome(), goal.metric);
      auto vc = metric_value(cand, goal.metric);
      bool frontier_met = vf && *vf >= goal.value;
      bool cand_met = vc && *vc >= goal.value;
      if (frontier_met && !cand_met) return true;
    }
    return false;
  };

  while (result.evaluations < budget) {
    Proposal proposal = proposer.propose(state);
    if (std::holds_alternative<Exhausted>(proposal)) {
      result.halt_reason = "exhausted";
      log("halt exhausted");
      break;
    }
    const Hypothesis& hyp = std::get<Hypothesis>(proposal);
    ++result.iterations;
    int iteration = result.iterations;

    Procedure trial = best;
    for (const auto& [k, v] : hyp.deltas) trial.params[k] = v;
    trial.procedure_id = best.procedure_id;
    resolve_step_params(trial);

    auto trial_outcomes = evaluator.evaluate({trial}, iteration);
    ++result.evaluations;
    EvalRecord rec;
    rec.iteration = iteration;
    rec.procedure_id = trial.procedure_id;
    rec.params = trial.params;
    rec.outcome = trial_outcomes[0];
    state.history.push_back(rec);

    int cmp = lex_compare(rec.outcome, frontier_outcome(), objective);
    bool improved = cmp > 0;
    log("iteration " + std::to_string(iteration) + " " + hyp.rationale + " yield " +
        (rec.outcome.yield ? text::format_number(*rec.outcome.yield) : "-") + " time " +
        text::format_number(rec.outcome.time_min) + " -> " +
        (improved ? "adopt" : "reject"));
    if (improved) {
      state.frontier_index = state.history.size() - 1;
      best = trial;
    } else if (threshold_regressed(rec.outcome)) {
      result.halt_reason = "threshold-regression";
      log("halt threshold-regression");
      break;
    }
    proposer.observe(improved);
  }
  if (result.halt_reason.empty()) {
    result.halt_reason = result.evaluations >= budget ? "budget" : "exhausted";
    if (result.halt_reason == "budget") log("halt budget");
  }
  result.best = best;
  result.best_outcome = frontier_outcome();
  return result;
}

}  // namespace autolab
