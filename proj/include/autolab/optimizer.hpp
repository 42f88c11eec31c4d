#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "autolab/procedure.hpp"
#include "autolab/simlab.hpp"

namespace autolab {

/// Compares two outcomes under a lexicographic objective.
/// Returns +1 when a is better, -1 when b is better, 0 on a tie.
/// Threshold goals order met above unmet; among unmet, closer wins.
/// Minimize goals order lower metric values first.  Later goals only break
/// ties left by earlier ones.
int lex_compare(const Outcome& a, const Outcome& b, const Objective& objective);

struct EvalRecord {
  int iteration = 0;
  std::string procedure_id;
  Params params;
  Outcome outcome;
};

struct OptimizationState {
  Objective objective;
  std::vector<EvalRecord> history;
  std::optional<std::size_t> frontier_index;

  const EvalRecord* frontier() const {
    return frontier_index ? &history[*frontier_index] : nullptr;
  }
  bool visited(const Params& params) const;
};

/// Proposed parameter changes relative to the current frontier recipe.
struct Hypothesis {
  std::string rationale;
  Params deltas;
};

struct Exhausted {};
using Proposal = std::variant<Hypothesis, Exhausted>;

class ProposerStrategy {
 public:
  virtual ~ProposerStrategy() = default;
  virtual Proposal propose(const OptimizationState& state) = 0;
  /// Feedback after the engine evaluated the last proposal.
  virtual void observe(bool improved) {}
};

struct ParameterGrid {
  struct Dim {
    std::string name;
    std::vector<ParamValue> values;
  };
  std::vector<Dim> dims;
};

/// Grid used by synthesis recipe tuning when the scenario does not override
/// it: wash buffer, surfactant fraction, cobalt concentration, enzyme and
/// terminator stoichiometry, then cycle time as the final (time-side) dim.
ParameterGrid default_parameter_grid();

/// One-dimension-at-a-time walk over a parameter grid.  Holds every other
/// parameter at the frontier value, proposes untried values of the current
/// dimension in grid order, and advances to the next dimension when the
/// current one is exhausted or the last proposal failed to improve.
class CoordinateSearchProposer : public ProposerStrategy {
 public:
  explicit CoordinateSearchProposer(ParameterGrid grid)
      : grid_(std::move(grid)) {}

  Proposal propose(const OptimizationState& state) override;
  void observe(bool improved) override;

 private:
  ParameterGrid grid_;
  std::size_t dim_idx_ = 0;
  std::size_t last_proposed_dim_ = 0;
};

/// Callback the loop uses to run a batch of candidate procedures through the
/// lab and observe the outcomes (one per procedure, same order).
class BatchEvaluator {
 public:
  virtual ~BatchEvaluator() = default;
  virtual std::vector<Outcome> evaluate(const std::vector<Procedure>& procedures,
                                        int iteration) = 0;
};

struct LoopResult {
  Procedure best;
  Outcome best_outcome;
  OptimizationState state;
  std::string halt_reason;  // threshold-regression | exhausted | budget
  int iterations = 0;
  int evaluations = 0;
  std::vector<std::string> journal;
  std::string journal_csv() const;
};

/// Closed-loop optimization: iteration 1 evaluates every candidate recipe
/// (fan-out), later iterations evaluate one proposal at a time against the
/// frontier.  Stops when the proposer is exhausted, the evaluation budget is
/// spent, or a proposal regresses a threshold goal the frontier already
/// meets.
LoopResult optimize_loop(const std::vector<Procedure>& candidates,
                         const Objective& objective, BatchEvaluator& evaluator,
                         ProposerStrategy& proposer, int budget);

}  // namespace autolab
