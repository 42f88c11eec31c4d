#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "autolab/compiler.hpp"
#include "autolab/engine.hpp"
#include "autolab/errors.hpp"
#include "autolab/storage.hpp"

namespace py = pybind11;
using namespace autolab;

namespace {

RunOverrides make_overrides(const std::string& policy, std::optional<std::uint64_t> seed,
                            std::optional<int> budget, const std::string& out_dir,
                            bool write_artifacts) {
  RunOverrides o;
  if (!policy.empty()) o.policy = policy_from_string(policy);
  o.seed = seed;
  o.budget = budget;
  o.out_dir = out_dir;
  o.write_artifacts = write_artifacts;
  return o;
}

py::dict outcome_dict(const Outcome& o) {
  py::dict d;
  if (o.yield) d["yield"] = *o.yield;
  d["time_min"] = o.time_min;
  py::dict verdicts;
  for (const auto& [sample, call] : o.fluorescence) verdicts[py::str(sample)] = call;
  d["fluorescence"] = verdicts;
  d["reads"] = o.reads.size();
  return d;
}

py::dict request_dict(const RequestResult& r) {
  py::dict d;
  d["request"] = r.request_id;
  d["task"] = r.task;
  d["iterations"] = r.iterations;
  d["evaluations"] = r.evaluations;
  d["halt"] = r.halt_reason;
  d["completed_min"] = static_cast<double>(r.completed) / 10.0;
  d["outcome"] = outcome_dict(r.final_outcome);
  py::dict verdicts;
  for (const auto& [sample, call] : r.verdicts) verdicts[py::str(sample)] = call;
  d["verdicts"] = verdicts;
  if (r.is_storage) {
    d["steps"] = r.reported_steps;
    d["payload_bytes"] = r.payload_bytes;
    d["payload_match"] = r.payload_match;
    d["recovered"] = py::bytes(
        std::string(r.decode_report.data.begin(), r.decode_report.data.end()));
  }
  return d;
}

py::dict record_dict(const RunRecord& rec) {
  py::dict d;
  d["run_id"] = rec.run_id;
  d["scenario"] = rec.scenario_name;
  d["policy"] = policy_to_string(rec.policy);
  d["seed"] = rec.seed;
  d["makespan_min"] = static_cast<double>(rec.makespan) / 10.0;
  d["step_count"] = rec.step_count;
  d["scheduled_invocations"] = rec.scheduled_invocations;
  d["trace_csv"] = rec.trace.to_csv();
  py::list reqs;
  for (const auto& r : rec.requests) reqs.append(request_dict(r));
  d["requests"] = reqs;
  py::dict arts;
  for (const auto& [label, path] : rec.artifacts) arts[py::str(label)] = path;
  d["artifacts"] = arts;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "lab orchestration engine and simulator";

  py::register_exception<Error>(m, "EngineError");

  m.def(
      "run_scenario",
      [](const std::filesystem::path& path, const std::string& policy,
         std::optional<std::uint64_t> seed, std::optional<int> budget,
         const std::string& out_dir, bool write_artifacts) {
        return record_dict(run_scenario(
            path, make_overrides(policy, seed, budget, out_dir, write_artifacts)));
      },
      py::arg("scenario"), py::arg("policy") = "", py::arg("seed") = py::none(),
      py::arg("budget") = py::none(), py::arg("out_dir") = "out",
      py::arg("write_artifacts") = false);

  m.def(
      "compare_policies",
      [](const std::filesystem::path& path, std::optional<std::uint64_t> seed,
         const std::string& out_dir, bool write_artifacts) {
        auto rep = compare_policies(
            path, make_overrides("", seed, std::nullopt, out_dir, write_artifacts));
        py::dict d;
        d["serial"] = record_dict(rep.serial);
        d["dynamic"] = record_dict(rep.dynamic);
        d["speedup"] = rep.speedup;
        return d;
      },
      py::arg("scenario"), py::arg("seed") = py::none(), py::arg("out_dir") = "out",
      py::arg("write_artifacts") = false);

  m.def(
      "compile_task",
      [](const std::filesystem::path& registry_path,
         const std::filesystem::path& templates_path, const std::string& task_expr) {
        auto registry = Registry::load(registry_path);
        auto kb = TemplateKB::load(templates_path);
        auto [task, overrides] = parse_task_expr(task_expr);
        py::list out;
        for (const auto& proc : kb.instantiate(task, overrides)) {
          Program prog = compile(proc, registry);
          prog = lint_seal_inference(prog, registry);
          LintReport report = lint_transfer_before_activate(prog);
          prog = bind_and_estimate(prog, registry);
          py::dict d;
          d["procedure"] = proc.procedure_id;
          d["invocations"] = prog.invocations.size();
          d["dump"] = prog.dump();
          d["lint_errors"] = report.error_count();
          out.append(d);
        }
        return out;
      },
      py::arg("registry"), py::arg("templates"), py::arg("task"));

  m.def(
      "encode_payload",
      [](py::bytes data, int payload_nt) {
        std::string raw = data;
        StrandSet set =
            encode(std::vector<std::uint8_t>(raw.begin(), raw.end()), payload_nt);
        py::dict d;
        d["strands"] = set.strands;
        d["data_bytes"] = set.header.data_bytes;
        d["payload_nt"] = set.header.payload_nt;
        d["index_nt"] = set.header.index_nt;
        return d;
      },
      py::arg("data"), py::arg("payload_nt") = 24);

  m.def(
      "decode_reads",
      [](const std::vector<std::string>& reads, std::size_t strand_count,
         std::size_t data_bytes, int payload_nt, int index_nt) {
        StorageHeader header;
        header.strand_count = strand_count;
        header.data_bytes = data_bytes;
        header.payload_nt = payload_nt;
        header.index_nt = index_nt;
        DecodeReport report = decode(reads, header);
        py::dict d;
        d["data"] = py::bytes(std::string(report.data.begin(), report.data.end()));
        d["discarded_reads"] = report.discarded_reads;
        d["cluster_sizes"] = report.cluster_sizes;
        return d;
      },
      py::arg("reads"), py::arg("strand_count"), py::arg("data_bytes"),
      py::arg("payload_nt") = 24, py::arg("index_nt") = 8);

  m.def("registry_services", [](const std::filesystem::path& path) {
    auto registry = Registry::load(path);
    py::dict d;
    for (const auto& [iid, inst] : registry.instruments()) {
      py::list svcs;
      for (const auto& svc : inst.services) svcs.append(svc.service_id);
      d[py::str(iid)] = svcs;
    }
    return d;
  });
}
