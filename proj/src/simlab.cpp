#include "autolab/simlab.hpp"

#include <algorithm>

#include "autolab/rng.hpp"

namespace autolab {

namespace {

constexpr const char* kBases = "ACGT";

char random_base(Rng& rng) { return kBases[rng.below(4)]; }

char random_other_base(Rng& rng, char original) {
  char c;
  do {
    c = random_base(rng);
  } while (c == original);
  return c;
}

}  // namespace

double YieldSurface::stepwise_yield(const Params& params, std::uint64_t noise_seed) const {
  double y = base;
  for (const auto& b : bonuses) {
    auto it = params.find(b.param);
    if (it != params.end() && param_value_eq(it->second, b.equals)) y += b.bonus;
  }
  y = std::min(y, cap);
  double ct = param_num(params, "cycle_time", 0.0);
  auto tf = time_factor.find(ct);
  if (tf != time_factor.end()) y *= tf->second;
  if (noise_sigma > 0) {
    Rng rng(noise_seed);
    y += noise_sigma * rng.gaussian();
  }
  return std::clamp(y, 0.0, 1.0);
}

YieldSurface default_yield_surface() {
  YieldSurface s;
  s.base = 0.90;
  s.cap = 0.985;
  s.bonuses = {
      {"buffer", ParamValue{std::string("bw")}, 0.03},
      {"tween20", ParamValue{0.05}, 0.02},
      {"cocl2", ParamValue{0.5}, 0.007},
      {"cocl2", ParamValue{1.0}, 0.015},
      {"tdt", ParamValue{2.0}, 0.01},
      {"terminator", ParamValue{2.0}, 0.01},
  };
  s.time_factor = {{20.0, 1.0}, {15.0, 0.97}, {10.0, 0.90}};
  s.noise_sigma = 0.0;
  return s;
}

std::string corrupt_traced(const std::string& seq, const ErrorChannel& ch,
                           std::uint64_t seed, CorruptionStats& stats) {
  Rng rng(seed);
  std::string out;
  out.reserve(seq.size() + 4);
  for (char base : seq) {
    ++stats.bases;
    double u = rng.uniform();
    if (u < ch.deletion) {
      ++stats.deletions;
    } else if (u < ch.deletion + ch.substitution) {
      ++stats.substitutions;
      out.push_back(random_other_base(rng, base));
    } else {
      out.push_back(base);
    }
    if (rng.uniform() < ch.insertion) {
      ++stats.insertions;
      out.push_back(random_base(rng));
    }
  }
  return out;
}

std::string corrupt(const std::string& seq, const ErrorChannel& ch, std::uint64_t seed) {
  CorruptionStats stats;
  return corrupt_traced(seq, ch, seed, stats);
}

std::vector<std::string> sequence_strands(const std::vector<std::string>& strands,
                                          int coverage, const ErrorChannel& ch,
                                          std::uint64_t seed) {
  std::vector<std::string> reads;
  reads.reserve(strands.size() * static_cast<std::size_t>(coverage));
  for (std::size_t i = 0; i < strands.size(); ++i)
    for (int r = 0; r < coverage; ++r)
      reads.push_back(corrupt(strands[i], ch, mix_seed(mix_seed(seed, i), r)));
  // deterministic shuffle so decoding cannot lean on read order
  Rng rng(mix_seed(seed, 0x5eedull));
  for (std::size_t i = reads.size(); i > 1; --i)
    std::swap(reads[i - 1], reads[rng.below(i)]);
  return reads;
}

Outcome SimLab::run(const Program& prog, double makespan_min) const {
  Outcome out;
  out.time_min = makespan_min;
  if (prog.has_synthesis) {
    std::uint64_t noise_seed = mix_seed(seed_, hash_str(prog.program_id.empty()
                                                            ? prog.provenance
                                                            : prog.program_id));
    out.yield = surface_.stepwise_yield(prog.params, noise_seed);
  }
  bool has_fluor = false;
  for (const auto& inv : prog.invocations)
    has_fluor |= inv.capability == cap::optical_fluorescence;
  if (has_fluor) {
    std::string sample = param_str(prog.params, "sample", "");
    if (!sample.empty()) {
      auto it = sample_truth_.find(sample);
      out.fluorescence[sample] = it != sample_truth_.end() && it->second;
    }
  }
  if (prog.has_sequencing)
    out.reads = sequence_strands(archive_, coverage_, channel_, seed_);
  return out;
}

}  // namespace autolab
