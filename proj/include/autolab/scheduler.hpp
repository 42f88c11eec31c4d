#pragma once

#include <map>
#include <string>
#include <vector>

#include "autolab/compiler.hpp"
#include "autolab/registry.hpp"

namespace autolab {

enum class Policy { serial_queue, dynamic_policy };

Policy policy_from_string(const std::string& s);
std::string policy_to_string(Policy p);

struct Allocation {
  std::string program_id;
  int invocation_id = 0;
  std::string request_id;
  std::string instrument_id;
  std::string service_id;
  std::string capability;
  Tick start = 0;
  Tick end = 0;
  Tick ready = 0;  // release + dependency completion
};

struct RerouteNote {
  std::string program_id;
  int invocation_id = 0;
  std::string request_id;
  std::string preferred_service;
  std::string chosen_service;
  std::string chosen_instrument;
  Tick at = 0;
};

struct Schedule {
  Policy policy = Policy::dynamic_policy;
  std::vector<Allocation> allocations;
  std::vector<RerouteNote> reroutes;
  std::vector<MergeNote> merges;
  Tick makespan = 0;
};

/// Chosen placement for one invocation given current instrument obligations.
struct Binding {
  std::string instrument_id;
  std::string service_id;
  Tick start = 0;
  Tick duration = 0;
  bool rerouted = false;
  std::string preferred_service;
};

/// Picks the earliest-starting placement among the preferred service and its
/// functional equivalents that accept the invocation's params.  Ties favour
/// the preferred service, then lower service id.
Binding reroute(const Invocation& inv, const Registry& reg,
                const std::map<std::string, Tick>& busy_until, Tick ready);

/// Merges a fan-out batch of programs into one program, running compatible
/// same-frontier invocations as single merged calls.  Container addresses are
/// remapped to disjoint column ranges per source program (shared reservoirs
/// excluded).  A single program passes through with only the remap applied.
Program consolidate(const std::vector<Program>& programs, const Registry& reg);

/// Stateful dispatcher so successive batches share one lab timeline.
class Dispatcher {
 public:
  explicit Dispatcher(const Registry& reg) : reg_(&reg) {}

  /// Schedules one batch under the policy, appending to the global timeline.
  /// Programs must be bound.  Returns allocations added for this batch.
  std::vector<Allocation> dispatch(const std::vector<Program>& batch, Policy policy,
                                   Schedule& into);

  const std::map<std::string, Tick>& busy_until() const { return busy_until_; }
  Tick serial_cursor() const { return serial_cursor_; }

 private:
  const Registry* reg_;
  std::map<std::string, Tick> busy_until_;
  Tick serial_cursor_ = 0;
};

/// One-shot scheduling of a batch starting from an idle lab.
Schedule schedule(const std::vector<Program>& programs, const Registry& reg,
                  Policy policy);

struct Event {
  enum class Kind { merge, finish, reroute, queue_wait, start };
  Tick time = 0;
  Kind kind = Kind::start;
  std::string request_id;
  std::string program_id;
  int invocation_id = 0;
  std::string instrument_id;
  std::string service_id;
};

std::string event_kind_str(Event::Kind k);

struct EventTrace {
  std::vector<Event> events;
  long step_count = 0;  // completed invocations
  Tick makespan = 0;
  std::string to_csv() const;
};

/// Replays a schedule into a deterministic, totally ordered event log.
EventTrace simulate(const Schedule& sched);

struct UtilizationReport {
  Tick makespan = 0;
  std::map<std::string, Tick> busy_ticks;
  std::map<std::string, double> busy_ratio;
  Tick total_queue_wait = 0;
  std::string to_csv() const;
  std::string to_text() const;
};

/// Busy fraction per instrument over the trace; throws ZeroMakespanError for
/// an empty window.
UtilizationReport utilization(const EventTrace& trace, Tick makespan);

}  // namespace autolab
