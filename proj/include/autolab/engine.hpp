#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autolab/optimizer.hpp"
#include "autolab/procedure.hpp"
#include "autolab/registry.hpp"
#include "autolab/scheduler.hpp"
#include "autolab/simlab.hpp"
#include "autolab/storage.hpp"

namespace autolab {

struct RequestSpec {
  std::string request_id;
  std::string user;
  Tick submit = 0;
  std::string task_expr;  // "task(key=value,...)"
  Objective objective;    // empty -> template default
  std::filesystem::path payload_path;  // storage tasks
};

struct ScenarioConfig {
  std::filesystem::path base_dir;
  std::filesystem::path registry_path;
  std::filesystem::path templates_path;
  std::filesystem::path inventory_path;
  std::string name;
  Policy policy = Policy::dynamic_policy;
  std::uint64_t seed = 1;
  int budget = 30;
  int coverage = 30;
  int payload_nt = 24;
  YieldSurface surface = default_yield_surface();
  ErrorChannel channel;
  std::map<std::string, bool> samples;
  std::vector<RequestSpec> requests;

  // programmatic extras used by the storage read path
  std::vector<std::string> preload_archive;
  StorageHeader preload_header;

  std::uint64_t content_hash = 0;  // over scenario + referenced files

  static ScenarioConfig load(const std::filesystem::path& path);
};

struct RequestResult {
  std::string request_id;
  std::string task;
  int iterations = 0;
  int evaluations = 0;
  std::string halt_reason;
  Outcome final_outcome;
  Params final_params;
  std::map<std::string, bool> verdicts;  // fluorescence sample calls
  std::vector<std::string> journal;
  std::string journal_csv;
  Tick release = 0;
  Tick completed = 0;

  // storage workloads
  bool is_storage = false;
  bool payload_match = false;
  std::size_t payload_bytes = 0;
  long reported_steps = 0;  // allocations executed for this request
  DecodeReport decode_report;
};

struct RunRecord {
  std::string run_id;
  std::string scenario_name;
  std::uint64_t scenario_hash = 0;
  std::string started_at;   // wall clock, not part of deterministic artifacts
  std::string finished_at;
  Policy policy = Policy::dynamic_policy;
  std::uint64_t seed = 1;
  int budget = 30;
  Tick makespan = 0;
  long step_count = 0;
  long scheduled_invocations = 0;
  std::vector<RequestResult> requests;
  Schedule schedule;
  EventTrace trace;
  UtilizationReport util;
  std::vector<std::pair<std::string, Program>> programs;  // scheduled programs
  std::vector<std::string> archive;
  StorageHeader archive_header;
  std::map<std::string, std::string> artifacts;  // label -> path written
  std::string manifest_text() const;
};

/// Executes every request of a scenario against one shared lab timeline.
class LabEngine {
 public:
  LabEngine(ScenarioConfig cfg, Policy policy, std::uint64_t seed, int budget);

  RunRecord run();

  const Registry& registry() const { return reg_; }
  const TemplateKB& templates() const { return kb_; }
  const ReagentInventory& inventory() const { return inv_; }

 private:
  friend class EngineEvaluator;

  std::vector<Procedure> feasible_candidates(const RequestSpec& spec, Params& overrides,
                                             std::string& task_name);
  Program build_program(const Procedure& proc, const RequestSpec& spec,
                        const std::string& label, Tick release);
  /// Compiles, merges (dynamic fan-out), dispatches and scores one batch of
  /// candidate procedures for a request.  Returns one outcome per candidate
  /// and the batch completion tick.
  std::vector<Outcome> run_batch(const std::vector<Procedure>& procs,
                                 const RequestSpec& spec, int iteration, Tick release,
                                 Tick& completion);
  /// Single-shot requests submitted at the same tick compete for instruments
  /// in one dispatch rather than by arrival order.
  void run_group(const std::vector<const RequestSpec*>& specs,
                 std::vector<RequestResult>& results);
  void run_loop(const RequestSpec& spec, RequestResult& result);
  void run_storage(const RequestSpec& spec, RequestResult& result);

  ScenarioConfig cfg_;
  Registry reg_;
  TemplateKB kb_;
  ReagentInventory inv_;
  SimLab lab_;
  Policy policy_;
  std::uint64_t seed_;
  int budget_;

  Dispatcher dispatcher_;
  Schedule global_;
  RunRecord rec_;
  long batch_allocs_ = 0;
};

struct RunOverrides {
  std::optional<Policy> policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::filesystem::path out_dir = "out";
  bool write_artifacts = true;
};

RunRecord run_scenario(const ScenarioConfig& cfg, const RunOverrides& overrides);
RunRecord run_scenario(const std::filesystem::path& scenario,
                       const RunOverrides& overrides);

struct CompareReport {
  RunRecord serial;
  RunRecord dynamic;
  double speedup = 0;
  std::string to_text() const;
  std::string to_csv() const;
};

CompareReport compare_policies(const ScenarioConfig& cfg, const RunOverrides& overrides);
CompareReport compare_policies(const std::filesystem::path& scenario,
                               const RunOverrides& overrides);

}  // namespace autolab
