#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autolab/compiler.hpp"
#include "autolab/procedure.hpp"

namespace autolab {

/// What one executed program produced, as observed by the requester.
struct Outcome {
  std::optional<double> yield;           // synthesis programs
  double time_min = 0;                   // wall time of the run
  std::map<std::string, bool> fluorescence;  // sample -> above-threshold verdict
  std::vector<std::string> reads;        // sequencing programs
};

/// Deterministic ground-truth yield model: additive bonuses on top of a base
/// stepwise efficiency, capped, then scaled by a cycle-time factor.  Optional
/// Gaussian noise models assay variance.
struct YieldSurface {
  struct Bonus {
    std::string param;
    ParamValue equals;
    double bonus = 0;
  };

  double base = 0.90;
  double cap = 0.985;
  std::vector<Bonus> bonuses;
  std::map<double, double> time_factor;  // keyed by cycle_time param
  double noise_sigma = 0.0;

  double stepwise_yield(const Params& params, std::uint64_t noise_seed = 0) const;
};

/// Shipped ground-truth surface for enzymatic synthesis: buffer/additive
/// bonuses and cycle-time factors, noise off.
YieldSurface default_yield_surface();

/// Per-base corruption rates applied independently to each position.
struct ErrorChannel {
  double deletion = 0.0235;
  double insertion = 0.0025;
  double substitution = 0.0012;
};

struct CorruptionStats {
  long bases = 0;
  long deletions = 0;
  long insertions = 0;
  long substitutions = 0;
};

/// Applies the channel to one strand.  Equal (seq, channel, seed) inputs give
/// identical output.
std::string corrupt(const std::string& seq, const ErrorChannel& ch, std::uint64_t seed);
std::string corrupt_traced(const std::string& seq, const ErrorChannel& ch,
                           std::uint64_t seed, CorruptionStats& stats);

/// Simulates a sequencing run over the archive: `coverage` noisy reads per
/// strand, deterministically shuffled.
std::vector<std::string> sequence_strands(const std::vector<std::string>& strands,
                                          int coverage, const ErrorChannel& ch,
                                          std::uint64_t seed);

/// Ground-truth side of the simulator: turns an executed program plus the
/// wall time it took into the outcome the requester observes.
class SimLab {
 public:
  SimLab() = default;
  SimLab(YieldSurface surface, ErrorChannel channel, std::uint64_t seed)
      : surface_(surface), channel_(channel), seed_(seed) {}

  void set_sample_truth(const std::string& sample, bool positive) {
    sample_truth_[sample] = positive;
  }
  void set_coverage(int coverage) { coverage_ = coverage; }
  int coverage() const { return coverage_; }

  const YieldSurface& surface() const { return surface_; }
  const ErrorChannel& channel() const { return channel_; }
  std::uint64_t seed() const { return seed_; }

  /// Archive of synthesized strands, appended by write runs and read by
  /// sequencing runs.
  const std::vector<std::string>& archive() const { return archive_; }
  void archive_strand(const std::string& s) { archive_.push_back(s); }
  void clear_archive() { archive_.clear(); }

  Outcome run(const Program& prog, double makespan_min) const;

 private:
  YieldSurface surface_;
  ErrorChannel channel_;
  std::map<std::string, bool> sample_truth_;
  std::vector<std::string> archive_;
  int coverage_ = 30;
  std::uint64_t seed_ = 1;
};

}  // namespace autolab
