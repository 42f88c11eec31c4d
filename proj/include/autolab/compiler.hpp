#pragma once

#include <set>
#include <string>
#include <vector>

#include "autolab/procedure.hpp"
#include "autolab/registry.hpp"

namespace autolab {

/// Capability tags used by the step translator.
namespace cap {
inline constexpr const char* liquid_transfer = "liquid.transfer";
inline constexpr const char* liquid_mix = "liquid.mix";
inline constexpr const char* liquid_wash = "liquid.wash";
inline constexpr const char* thermal_hold = "thermal.hold";
inline constexpr const char* thermal_cycle = "thermal.cycle";
inline constexpr const char* optical_fluorescence = "optical.fluorescence";
inline constexpr const char* optical_sequencing = "optical.sequencing";
inline constexpr const char* mechanical_move = "mechanical.move";
inline constexpr const char* mechanical_cap = "mechanical.cap";
inline constexpr const char* mechanical_uncap = "mechanical.uncap";
}  // namespace cap

/// One atomic-service call in a program.  `capability` names the required
/// tag; the concrete instrument is chosen by the scheduler, `bound_service`
/// only records the cheapest valid service as the preferred default.
struct Invocation {
  int id = 0;
  std::string capability;
  Params params;
  std::vector<ContainerAddr> reads;
  std::vector<ContainerAddr> writes;
  bool deposits = false;        // places liquid into the written containers
  bool requires_sealed = false; // thermal holds that need a capped container
  int source_step = -1;
  std::set<int> depends_on;

  std::string bound_service;  // preferred service after bind_and_estimate
  Tick est_ticks = 0;

  std::string params_str() const;
  bool touches(const ContainerAddr& c) const;
};

/// Record of a cross-program merge produced by consolidation.
struct MergeNote {
  std::string program_id;  // merged program
  std::string request_id;
  int invocation_id = 0;
  Tick at = 0;  // release tick of the merged program
  std::vector<std::pair<std::string, int>> sources;  // (program_id, original id)
};

/// Executable DAG of invocations.  Ids are dense 0..n-1 and topologically
/// ordered: every dependency id is smaller than the dependent's id.
struct Program {
  std::string program_id;
  std::string request_id;
  std::string provenance;  // procedure id this was compiled from
  Params params;
  std::vector<Invocation> invocations;
  bool has_synthesis = false;
  bool has_sequencing = false;
  std::string sequence;  // bases appended by synthesis steps, in step order
  Tick release_time = 0;
  std::vector<MergeNote> merge_notes;

  std::string dump() const;
};

struct LintFinding {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string rule;
  int invocation_id = -1;
  std::string message;
};

struct LintReport {
  std::vector<LintFinding> findings;
  bool clean() const;
  std::size_t error_count() const;
  std::string to_text() const;
};

/// Translates a validated procedure into a program of atomic-service
/// invocations.  Containers are tracked across stations so carrier moves are
/// emitted exactly where the deck layout requires them.  Parameters are
/// validated against the registry: a step whose params fit no service with
/// the required tag raises ParamOutOfRangeError, a missing tag raises
/// NoCapableInstrumentError.
Program compile(const Procedure& proc, const Registry& reg);

/// Inserts a capping invocation before each seal-requiring hold whose
/// container is not already sealed at that point.  Idempotent.
Program lint_seal_inference(const Program& prog, const Registry& reg);

/// Flags thermal or optical invocations operating on containers that no
/// earlier invocation has deposited liquid into.
LintReport lint_transfer_before_activate(const Program& prog);

/// Picks the cheapest valid service for every invocation and fills in the
/// estimated duration.  Ties break by service id.
Program bind_and_estimate(const Program& prog, const Registry& reg);

/// Longest path through the program by estimated duration (requires a bound
/// program).
Tick critical_path(const Program& prog);

/// True when every schema parameter of the service is present in `params`
/// and numeric values sit inside their declared ranges.
bool service_accepts(const AtomicService& svc, const Params& params);

}  // namespace autolab
