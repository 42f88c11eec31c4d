#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "autolab/compiler.hpp"
#include "autolab/rng.hpp"
#include "autolab/simlab.hpp"

#include "support.hpp"

using namespace autolab;

namespace {

std::string random_bases(std::size_t n, std::uint64_t seed) {
  static const char* kBases = "ACGT";
  Rng rng(seed);
  std::string out(n, 'A');
  for (auto& c : out) c = kBases[rng.below(4)];
  return out;
}

Params grid_point(const std::string& buffer, double tween, double cocl2, double tdt,
                  double term, double ct) {
  return Params{{"buffer", buffer}, {"tween20", tween}, {"cocl2", cocl2},
                {"tdt", tdt},       {"terminator", term}, {"cycle_time", ct}};
}

}  // namespace

TEST_CASE("yield surface composes bonuses, cap and time factor") {
  YieldSurface s = default_yield_surface();
  CHECK(s.stepwise_yield(grid_point("lysis", 0, 0.25, 1, 1, 20)) == doctest::Approx(0.90));
  CHECK(s.stepwise_yield(grid_point("bw", 0, 0.25, 1, 1, 20)) == doctest::Approx(0.93));
  CHECK(s.stepwise_yield(grid_point("bw", 0.05, 1.0, 2, 2, 20)) == doctest::Approx(0.985));
  CHECK(s.stepwise_yield(grid_point("bw", 0.05, 1.0, 2, 2, 15)) ==
        doctest::Approx(0.985 * 0.97));
  CHECK(s.stepwise_yield(grid_point("bw", 0.05, 1.0, 2, 2, 10)) ==
        doctest::Approx(0.985 * 0.90));
  // unknown cycle times get no scaling at all
  CHECK(s.stepwise_yield(grid_point("bw", 0, 0.25, 1, 1, 17)) == doctest::Approx(0.93));
}

TEST_CASE("yield surface matches the additive model over the whole grid") {
  YieldSurface s = default_yield_surface();
  const std::vector<std::string> buffers{"lysis", "bw"};
  const std::vector<double> tweens{0.0, 0.05};
  const std::vector<double> cobalts{0.25, 0.5, 1.0};
  const std::vector<double> tdts{1.0, 2.0};
  const std::vector<double> terms{1.0, 2.0};
  const std::vector<double> cts{20.0, 15.0, 10.0};
  auto tf = [](double ct) { return ct == 20.0 ? 1.0 : ct == 15.0 ? 0.97 : 0.90; };

  for (const auto& b : buffers)
    for (double tw : tweens)
      for (double co : cobalts)
        for (double td : tdts)
          for (double te : terms)
            for (double ct : cts) {
              double sum = 0.90;
              if (b == "bw") sum += 0.03;
              if (tw == 0.05) sum += 0.02;
              if (co == 0.5) sum += 0.007;
              if (co == 1.0) sum += 0.015;
              if (td == 2.0) sum += 0.01;
              if (te == 2.0) sum += 0.01;
              double expected = std::min(sum, 0.985) * tf(ct);
              CAPTURE(b);
              CAPTURE(tw);
              CAPTURE(co);
              CAPTURE(td);
              CAPTURE(te);
              CAPTURE(ct);
              CHECK(s.stepwise_yield(grid_point(b, tw, co, td, te, ct)) ==
                    doctest::Approx(expected));
            }
}

TEST_CASE("yield noise is seeded and clamped") {
  YieldSurface s = default_yield_surface();
  s.noise_sigma = 0.05;
  // base recipe sits at 0.90, far from both clamp rails
  Params p = grid_point("lysis", 0, 0.25, 1, 1, 20);
  CHECK(s.stepwise_yield(p, 7) == s.stepwise_yield(p, 7));
  CHECK(s.stepwise_yield(p, 7) != s.stepwise_yield(p, 8));
  CHECK(s.stepwise_yield(p, 7) == doctest::Approx(0.935651).epsilon(1e-4));

  YieldSurface wild = s;
  wild.base = 50.0;
  wild.cap = 50.0;
  CHECK(wild.stepwise_yield(p) == doctest::Approx(1.0));  // clamped from above
  wild.base = -50.0;
  wild.cap = 1.0;
  CHECK(wild.stepwise_yield(p) == doctest::Approx(0.0));  // clamped from below
}

TEST_CASE("the error channel ships the published per-base rates") {
  ErrorChannel ch;
  CHECK(ch.deletion == doctest::Approx(0.0235));
  CHECK(ch.insertion == doctest::Approx(0.0025));
  CHECK(ch.substitution == doctest::Approx(0.0012));
}

TEST_CASE("corruption is deterministic in sequence, channel and seed") {
  ErrorChannel ch;
  std::string strand = random_bases(500, 11);
  CHECK(corrupt(strand, ch, 99) == corrupt(strand, ch, 99));
  CHECK(corrupt(strand, ch, 99) != corrupt(strand, ch, 100));

  ErrorChannel off{0.0, 0.0, 0.0};
  CHECK(corrupt(strand, off, 99) == strand);
}

TEST_CASE("degenerate channels behave as their rates state") {
  std::string strand = random_bases(200, 5);

  ErrorChannel all_del{1.0, 0.0, 0.0};
  CHECK(corrupt(strand, all_del, 1).empty());

  ErrorChannel all_ins{0.0, 1.0, 0.0};
  CHECK(corrupt(strand, all_ins, 1).size() == 2 * strand.size());

  ErrorChannel all_sub{0.0, 0.0, 1.0};
  std::string mutated = corrupt(strand, all_sub, 1);
  REQUIRE(mutated.size() == strand.size());
  for (std::size_t i = 0; i < strand.size(); ++i) CHECK(mutated[i] != strand[i]);
}

TEST_CASE("observed corruption rates converge to the channel rates") {
  ErrorChannel ch;
  CorruptionStats stats;
  std::string strand = random_bases(500, 3);
  for (int i = 0; i < 4000; ++i) corrupt_traced(strand, ch, mix_seed(77, i), stats);
  REQUIRE(stats.bases == 2'000'000);

  double del = static_cast<double>(stats.deletions) / stats.bases;
  double ins = static_cast<double>(stats.insertions) / stats.bases;
  double sub = static_cast<double>(stats.substitutions) / stats.bases;
  CAPTURE(del);
  CAPTURE(ins);
  CAPTURE(sub);
  CHECK(std::abs(del - 0.0235) <= 0.001);
  CHECK(std::abs(ins - 0.0025) <= 0.0005);
  CHECK(std::abs(sub - 0.0012) <= 0.0005);
}

TEST_CASE("sequencing yields coverage-many reads per strand, shuffled") {
  ErrorChannel ch;
  std::vector<std::string> strands;
  for (int i = 0; i < 5; ++i) strands.push_back(random_bases(60, 100 + i));

  auto reads = sequence_strands(strands, 8, ch, 42);
  CHECK(reads.size() == 40);
  CHECK(sequence_strands(strands, 8, ch, 42) == reads);  // deterministic
  CHECK(sequence_strands(strands, 8, ch, 43) != reads);

  // the shuffle permutes exactly the per-strand corrupted reads
  std::vector<std::string> expected;
  for (std::size_t i = 0; i < strands.size(); ++i)
    for (int r = 0; r < 8; ++r)
      expected.push_back(corrupt(strands[i], ch, mix_seed(mix_seed(42, i), r)));
  std::vector<std::string> sorted_reads = reads;
  std::sort(sorted_reads.begin(), sorted_reads.end());
  std::sort(expected.begin(), expected.end());
  CHECK(sorted_reads == expected);
  CHECK(sequence_strands(strands, 0, ch, 42).empty());
}

TEST_CASE("executed synthesis programs report the surface yield") {
  SimLab lab(default_yield_surface(), ErrorChannel{}, 5);
  Program prog;
  prog.program_id = "synth_run";
  prog.has_synthesis = true;
  prog.params = grid_point("bw", 0.05, 1.0, 2, 2, 20);

  Outcome out = lab.run(prog, 123.5);
  REQUIRE(out.yield);
  CHECK(*out.yield == doctest::Approx(0.985));
  CHECK(out.time_min == doctest::Approx(123.5));
  CHECK(out.fluorescence.empty());
  CHECK(out.reads.empty());

  Program plain;
  plain.program_id = "assay";
  CHECK_FALSE(lab.run(plain, 10).yield);
}

TEST_CASE("fluorescence verdicts mirror the configured sample truth") {
  SimLab lab(default_yield_surface(), ErrorChannel{}, 5);
  lab.set_sample_truth("patientA", true);
  lab.set_sample_truth("patientB", false);

  Program prog;
  prog.program_id = "assay";
  prog.params["sample"] = std::string("patientA");
  Invocation read;
  read.id = 0;
  read.capability = cap::optical_fluorescence;
  prog.invocations.push_back(read);

  Outcome a = lab.run(prog, 50);
  REQUIRE(a.fluorescence.count("patientA"));
  CHECK(a.fluorescence.at("patientA"));

  prog.params["sample"] = std::string("patientB");
  CHECK_FALSE(lab.run(prog, 50).fluorescence.at("patientB"));

  // samples the lab has no ground truth for read as negative
  prog.params["sample"] = std::string("stranger");
  CHECK_FALSE(lab.run(prog, 50).fluorescence.at("stranger"));

  // no sample parameter, or no optical read: nothing to report
  prog.params.erase("sample");
  CHECK(lab.run(prog, 50).fluorescence.empty());
  prog.params["sample"] = std::string("patientA");
  prog.invocations.clear();
  CHECK(lab.run(prog, 50).fluorescence.empty());
}

TEST_CASE("sequencing programs read the whole archive at coverage") {
  SimLab lab(default_yield_surface(), ErrorChannel{}, 9);
  lab.set_coverage(6);
  CHECK(lab.coverage() == 6);
  lab.archive_strand(random_bases(40, 1));
  lab.archive_strand(random_bases(40, 2));
  lab.archive_strand(random_bases(40, 3));
  CHECK(lab.archive().size() == 3);

  Program prog;
  prog.program_id = "readback";
  prog.has_sequencing = true;
  Outcome out = lab.run(prog, 240);
  CHECK(out.reads.size() == 18);
  CHECK(lab.run(prog, 240).reads == out.reads);  // same lab state, same reads

  lab.clear_archive();
  CHECK(lab.run(prog, 240).reads.empty());
}
