#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "autolab/compiler.hpp"
#include "autolab/engine.hpp"
#include "autolab/errors.hpp"
#include "autolab/text.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

json params_json(const autolab::Params& params) {
  json out = json::object();
  for (const auto& [key, value] : params) {
    if (std::holds_alternative<double>(value))
      out[key] = std::get<double>(value);
    else
      out[key] = std::get<std::string>(value);
  }
  return out;
}

json request_json(const autolab::RequestResult& r) {
  json j;
  j["request"] = r.request_id;
  j["task"] = r.task;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["halt"] = r.halt_reason;
  j["released_min"] = static_cast<double>(r.release) / 10.0;
  j["completed_min"] = static_cast<double>(r.completed) / 10.0;
  if (r.final_outcome.yield) {
    j["yield"] = *r.final_outcome.yield;
    j["params"] = params_json(r.final_params);
    j["time_min"] = r.final_outcome.time_min;
  }
  if (!r.verdicts.empty()) {
    json v = json::object();
    for (const auto& [sample, call] : r.verdicts)
      v[sample] = call ? "positive" : "negative";
    j["verdicts"] = v;
  }
  if (r.is_storage) {
    j["steps"] = r.reported_steps;
    j["payload_bytes"] = r.payload_bytes;
    // a pure read has no in-run payload to compare; --expect reports instead
    if (r.payload_bytes > 0) j["payload_match"] = r.payload_match;
    j["discarded_reads"] = r.decode_report.discarded_reads;
  }
  return j;
}

json record_json(const autolab::RunRecord& rec) {
  json j;
  j["run_id"] = rec.run_id;
  j["scenario"] = rec.scenario_name;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(rec.scenario_hash));
  j["scenario_hash"] = hash_hex;
  j["policy"] = autolab::policy_to_string(rec.policy);
  j["seed"] = rec.seed;
  j["started_at"] = rec.started_at;
  j["finished_at"] = rec.finished_at;
  j["makespan_min"] = static_cast<double>(rec.makespan) / 10.0;
  j["step_count"] = rec.step_count;
  j["scheduled_invocations"] = rec.scheduled_invocations;
  json reqs = json::array();
  for (const auto& r : rec.requests) reqs.push_back(request_json(r));
  j["requests"] = reqs;
  json arts = json::object();
  for (const auto& [label, path] : rec.artifacts) arts[label] = path;
  j["artifacts"] = arts;
  return j;
}

struct CommonFlags {
  std::string scenario;
  std::string policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::string out_dir = "out";
  bool no_artifacts = false;

  autolab::RunOverrides overrides() const {
    autolab::RunOverrides o;
    if (!policy.empty()) o.policy = autolab::policy_from_string(policy);
    o.seed = seed;
    o.budget = budget;
    o.out_dir = out_dir;
    o.write_artifacts = !no_artifacts;
    return o;
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_policy = true) {
  cmd->add_option("--scenario", flags.scenario, "scenario config file")
      ->required()
      ->check(CLI::ExistingFile);
  if (with_policy)
    cmd->add_option("--policy", flags.policy, "serial|dynamic")
        ->check(CLI::IsMember({"serial", "dynamic"}));
  cmd->add_option("--seed", flags.seed, "override scenario seed");
  cmd->add_option("--budget", flags.budget, "override evaluation budget");
  cmd->add_option("--out", flags.out_dir, "artifact directory");
  cmd->add_flag("--no-artifacts", flags.no_artifacts, "skip artifact files");
}

std::pair<autolab::StorageHeader, std::vector<std::string>> parse_archive(
    const std::string& path) {
  auto nodes = autolab::text::parse_string(autolab::text::read_text_file(path), path);
  autolab::StorageHeader header;
  std::vector<std::string> strands;
  for (const auto& node : nodes) {
    if (node.key == "strands") {
      header.strand_count = static_cast<std::size_t>(node.integer(0));
      for (std::size_t i = 1; i + 1 < node.args.size(); i += 2) {
        if (node.args[i] == "payload_nt")
          header.payload_nt = static_cast<int>(std::stol(node.args[i + 1]));
        else if (node.args[i] == "index_nt")
          header.index_nt = static_cast<int>(std::stol(node.args[i + 1]));
        else if (node.args[i] == "data_bytes")
          header.data_bytes = static_cast<std::size_t>(std::stoul(node.args[i + 1]));
      }
    } else {
      strands.push_back(node.key);
    }
  }
  if (strands.size() != header.strand_count)
    throw autolab::ParseError(path + ": archive lists " + std::to_string(strands.size()) +
                              " strands, header says " +
                              std::to_string(header.strand_count));
  return {header, strands};
}

int cmd_run(const CommonFlags& flags) {
  auto rec = autolab::run_scenario(std::filesystem::path(flags.scenario),
                                   flags.overrides());
  std::cout << record_json(rec).dump(2) << "\n";
  return 0;
}

int cmd_compare(const CommonFlags& flags) {
  auto report = autolab::compare_policies(std::filesystem::path(flags.scenario),
                                          flags.overrides());
  json j;
  j["serial_makespan_min"] = static_cast<double>(report.serial.makespan) / 10.0;
  j["dynamic_makespan_min"] = static_cast<double>(report.dynamic.makespan) / 10.0;
  j["delta_min"] =
      static_cast<double>(report.serial.makespan - report.dynamic.makespan) / 10.0;
  j["speedup"] = report.speedup;
  j["serial_steps"] = report.serial.step_count;
  j["dynamic_steps"] = report.dynamic.step_count;
  json util = json::object();
  for (const auto& [id, ratio] : report.serial.util.busy_ratio) {
    json pair;
    pair["serial"] = ratio;
    pair["dynamic"] = report.dynamic.util.busy_ratio.count(id)
                          ? report.dynamic.util.busy_ratio.at(id)
                          : 0.0;
    util[id] = pair;
  }
  j["utilization"] = util;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_lint(const CommonFlags& flags, const std::string& task_expr) {
  auto cfg = autolab::ScenarioConfig::load(flags.scenario);
  auto registry = autolab::Registry::load(cfg.registry_path);
  auto kb = autolab::TemplateKB::load(cfg.templates_path);
  auto [task, overrides] = autolab::parse_task_expr(task_expr);
  if (!kb.has_task(task)) throw autolab::UnknownTaskError("task '" + task + "'");

  json out;
  out["task"] = task;
  json procs = json::array();
  std::size_t errors = 0;
  for (const auto& proc : kb.instantiate(task, overrides)) {
    autolab::Program prog = autolab::compile(proc, registry);
    std::size_t before = prog.invocations.size();
    prog = autolab::lint_seal_inference(prog, registry);
    autolab::LintReport report = autolab::lint_transfer_before_activate(prog);
    json p;
    p["procedure"] = proc.procedure_id;
    p["invocations"] = prog.invocations.size();
    p["seal_caps_inserted"] = prog.invocations.size() - before;
    json findings = json::array();
    for (const auto& f : report.findings) {
      json fj;
      fj["severity"] =
          f.severity == autolab::LintFinding::Severity::error ? "error" : "warning";
      fj["rule"] = f.rule;
      fj["invocation"] = f.invocation_id;
      fj["message"] = f.message;
      findings.push_back(fj);
    }
    p["findings"] = findings;
    p["clean"] = report.clean();
    errors += report.error_count();
    procs.push_back(p);
  }
  out["procedures"] = procs;
  out["clean"] = errors == 0;
  std::cout << out.dump(2) << "\n";
  return errors == 0 ? 0 : 3;
}

int cmd_registry_check(const std::string& scenario, const std::string& registry_path) {
  std::filesystem::path path = registry_path;
  if (path.empty()) {
    auto cfg = autolab::ScenarioConfig::load(scenario);
    path = cfg.registry_path;
  }
  auto registry = autolab::Registry::load(path);
  json j;
  j["registry"] = path.string();
  j["instruments"] = registry.instruments().size();
  std::size_t service_count = 0;
  std::map<std::string, std::size_t> tag_counts;
  json equiv = json::object();
  for (const auto& [iid, inst] : registry.instruments()) {
    service_count += inst.services.size();
    for (const auto& svc : inst.services) {
      for (const auto& tag : svc.tags) ++tag_counts[tag];
      json alts = json::array();
      for (const auto* other : registry.equivalents(svc.service_id))
        alts.push_back(other->service_id);
      if (!alts.empty()) equiv[svc.service_id] = alts;
    }
  }
  j["services"] = service_count;
  json tags = json::object();
  for (const auto& [tag, n] : tag_counts) tags[tag] = n;
  j["capability_tags"] = tags;
  j["equivalents"] = equiv;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_store_write(const CommonFlags& flags, const std::string& payload) {
  auto cfg = autolab::ScenarioConfig::load(flags.scenario);
  cfg.requests.clear();
  autolab::RequestSpec spec;
  spec.request_id = "store";
  spec.user = "cli";
  spec.task_expr = "storage_write";
  spec.payload_path = payload;
  cfg.requests.push_back(spec);
  auto rec = autolab::run_scenario(cfg, flags.overrides());
  std::cout << record_json(rec).dump(2) << "\n";
  return 0;
}

int cmd_store_read(const CommonFlags& flags, const std::string& archive,
                   const std::string& expect) {
  auto cfg = autolab::ScenarioConfig::load(flags.scenario);
  cfg.requests.clear();
  auto [header, strands] = parse_archive(archive);
  cfg.preload_header = header;
  cfg.preload_archive = strands;
  autolab::RequestSpec spec;
  spec.request_id = "restore";
  spec.user = "cli";
  spec.task_expr = "storage_read";
  cfg.requests.push_back(spec);
  auto rec = autolab::run_scenario(cfg, flags.overrides());
  json j = record_json(rec);
  if (!expect.empty()) {
    std::ifstream in(expect, std::ios::binary);
    if (!in) throw autolab::ConfigError("cannot open " + expect);
    std::vector<std::uint8_t> want((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    bool match = !rec.requests.empty() &&
                 rec.requests.front().decode_report.data == want;
    j["payload_match"] = match;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic lab orchestration engine and simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "execute a scenario");
  add_common(run_cmd, run_flags);

  CommonFlags cmp_flags;
  auto* cmp_cmd = app.add_subcommand("compare", "run serial and dynamic side by side");
  add_common(cmp_cmd, cmp_flags, /*with_policy=*/false);

  CommonFlags lint_flags;
  std::string lint_task;
  auto* lint_cmd = app.add_subcommand("lint", "compile a task and report lint findings");
  lint_cmd->add_option("--scenario", lint_flags.scenario, "scenario config file")
      ->required()
      ->check(CLI::ExistingFile);
  lint_cmd->add_option("--task", lint_task, "task expression, e.g. rpa_test(...)")
      ->required();

  std::string reg_scenario, reg_path;
  auto* reg_cmd = app.add_subcommand("registry", "registry utilities");
  reg_cmd->require_subcommand(1);
  auto* reg_check = reg_cmd->add_subcommand("check", "validate a registry file");
  reg_check->add_option("--scenario", reg_scenario, "scenario supplying the registry")
      ->check(CLI::ExistingFile);
  reg_check->add_option("--registry", reg_path, "registry file")
      ->check(CLI::ExistingFile);

  auto* store_cmd = app.add_subcommand("store", "DNA storage workloads");
  store_cmd->require_subcommand(1);
  CommonFlags sw_flags;
  std::string sw_payload;
  auto* sw_cmd = store_cmd->add_subcommand("write", "encode and synthesize a payload");
  add_common(sw_cmd, sw_flags);
  sw_cmd->add_option("--payload", sw_payload, "binary payload file")
      ->required()
      ->check(CLI::ExistingFile);
  CommonFlags sr_flags;
  std::string sr_archive, sr_expect;
  auto* sr_cmd = store_cmd->add_subcommand("read", "sequence and decode an archive");
  add_common(sr_cmd, sr_flags);
  sr_cmd->add_option("--archive", sr_archive, "archive file from store write")
      ->required()
      ->check(CLI::ExistingFile);
  sr_cmd->add_option("--expect", sr_expect, "payload file to verify against")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_flags);
    if (lint_cmd->parsed()) return cmd_lint(lint_flags, lint_task);
    if (reg_check->parsed()) {
      if (reg_scenario.empty() && reg_path.empty()) {
        std::cerr << "registry check needs --scenario or --registry\n";
        return 2;
      }
      return cmd_registry_check(reg_scenario, reg_path);
    }
    if (sw_cmd->parsed()) return cmd_store_write(sw_flags, sw_payload);
    if (sr_cmd->parsed()) return cmd_store_read(sr_flags, sr_archive, sr_expect);
  } catch (const autolab::Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
