#include "autolab/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "autolab/rng.hpp"

#include "autolab/compiler.hpp"
#include "autolab/errors.hpp"
#include "autolab/text.hpp"

namespace autolab {

namespace {

ParamValue parse_scenario_value(const std::string& tok) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used == tok.size()) return ParamValue{v};
  } catch (const std::exception&) {
  }
  return ParamValue{tok};
}

std::vector<std::uint8_t> read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open payload file " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

std::string sanitize_filename(std::string s) {
  for (char& c : s)
    if (c == '/' || c == '\\' || c == ':' || c == '#') c = '_';
  return s;
}

double ticks_to_minutes(Tick t) { return static_cast<double>(t) / 10.0; }

}  // namespace

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  ScenarioConfig cfg;
  cfg.base_dir = path.parent_path();
  cfg.name = path.stem().string();
  auto nodes = text::parse_string(text::read_text_file(path), path.string());
  for (const auto& node : nodes) {
    if (node.key == "registry") {
      cfg.registry_path = cfg.base_dir / node.arg(0);
    } else if (node.key == "templates") {
      cfg.templates_path = cfg.base_dir / node.arg(0);
    } else if (node.key == "inventory") {
      cfg.inventory_path = cfg.base_dir / node.arg(0);
    } else if (node.key == "policy") {
      cfg.policy = policy_from_string(node.arg(0));
    } else if (node.key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(node.integer(0));
    } else if (node.key == "budget") {
      cfg.budget = static_cast<int>(node.integer(0));
    } else if (node.key == "coverage") {
      cfg.coverage = static_cast<int>(node.integer(0));
    } else if (node.key == "payload_nt") {
      cfg.payload_nt = static_cast<int>(node.integer(0));
    } else if (node.key == "surface") {
      cfg.surface = YieldSurface{};  // explicit block replaces the shipped surface
      for (const auto& item : node.children) {
        if (item.key == "base") {
          cfg.surface.base = item.num(0);
        } else if (item.key == "cap") {
          cfg.surface.cap = item.num(0);
        } else if (item.key == "bonus") {
          YieldSurface::Bonus b;
          b.param = item.arg(0);
          b.equals = parse_scenario_value(item.arg(1));
          b.bonus = item.num(2);
          cfg.surface.bonuses.push_back(b);
        } else if (item.key == "time_factor") {
          cfg.surface.time_factor[item.num(0)] = item.num(1);
        } else if (item.key == "noise_sigma") {
          cfg.surface.noise_sigma = item.num(0);
        } else {
          throw ParseError("surface: unknown entry '" + item.key + "'");
        }
      }
    } else if (node.key == "channel") {
      for (const auto& item : node.children) {
        if (item.key == "deletion")
          cfg.channel.deletion = item.num(0);
        else if (item.key == "insertion")
          cfg.channel.insertion = item.num(0);
        else if (item.key == "substitution")
          cfg.channel.substitution = item.num(0);
        else
          throw ParseError("channel: unknown entry '" + item.key + "'");
      }
    } else if (node.key == "sample") {
      cfg.samples[node.arg(0)] = node.arg(1) == "positive";
    } else if (node.key == "request") {
      RequestSpec spec;
      spec.request_id = node.arg(0);
      for (const auto& item : node.children) {
        if (item.key == "user")
          spec.user = item.arg(0);
        else if (item.key == "submit")
          spec.submit = minutes_to_ticks(item.num(0));
        else if (item.key == "task")
          spec.task_expr = item.arg(0);
        else if (item.key == "objective")
          spec.objective = Objective::parse(item.args);
        else if (item.key == "payload")
          spec.payload_path = cfg.base_dir / item.arg(0);
        else
          throw ParseError("request " + spec.request_id + ": unknown entry '" +
                           item.key + "'");
      }
      if (spec.task_expr.empty())
        throw ParseError("request " + spec.request_id + " has no task");
      cfg.requests.push_back(spec);
    } else {
      throw ParseError(path.string() + ": unknown entry '" + node.key + "'");
    }
  }
  if (cfg.registry_path.empty() || cfg.templates_path.empty())
    throw ConfigError(path.string() + ": registry and templates are required");
  cfg.content_hash = hash_str(text::read_text_file(path));
  cfg.content_hash = mix_seed(cfg.content_hash, hash_str(text::read_text_file(cfg.registry_path)));
  cfg.content_hash = mix_seed(cfg.content_hash, hash_str(text::read_text_file(cfg.templates_path)));
  if (!cfg.inventory_path.empty())
    cfg.content_hash = mix_seed(cfg.content_hash, hash_str(text::read_text_file(cfg.inventory_path)));
  return cfg;
}

LabEngine::LabEngine(ScenarioConfig cfg, Policy policy, std::uint64_t seed, int budget)
    : cfg_(std::move(cfg)),
      reg_(Registry::load(cfg_.registry_path)),
      kb_(TemplateKB::load(cfg_.templates_path)),
      inv_(cfg_.inventory_path.empty() ? ReagentInventory()
                                       : ReagentInventory::load(cfg_.inventory_path)),
      lab_(cfg_.surface, cfg_.channel, seed),
      policy_(policy),
      seed_(seed),
      budget_(budget),
      dispatcher_(reg_) {
  lab_.set_coverage(cfg_.coverage);
  for (const auto& [sample, truth] : cfg_.samples) lab_.set_sample_truth(sample, truth);
  for (const auto& s : cfg_.preload_archive) lab_.archive_strand(s);
}

std::vector<Procedure> LabEngine::feasible_candidates(const RequestSpec& spec,
                                                      Params& overrides,
                                                      std::string& task_name) {
  auto [task, params] = parse_task_expr(spec.task_expr);
  task_name = task;
  overrides = params;
  if (!kb_.has_task(task))
    throw UnknownTaskError("request " + spec.request_id + ": task '" + task + "'");
  std::vector<Procedure> feasible;
  std::vector<std::string> shortfalls;
  for (auto& proc : kb_.instantiate(task, params)) {
    Feasibility f = inv_.screen(proc);
    if (f.feasible) {
      feasible.push_back(std::move(proc));
    } else {
      std::string why = proc.procedure_id + " short of";
      for (const auto& s : f.missing)
        why += " " + s.reagent + "(" + text::format_number(s.missing_ul) + "uL)";
      shortfalls.push_back(why);
    }
  }
  if (feasible.empty()) {
    std::string detail;
    for (const auto& s : shortfalls) detail += (detail.empty() ? "" : "; ") + s;
    throw InfeasibleAllCandidatesError("request " + spec.request_id + ": " + detail);
  }
  return feasible;
}

Program LabEngine::build_program(const Procedure& proc, const RequestSpec& spec,
                                 const std::string& label, Tick release) {
  Program prog = compile(proc, reg_);
  prog = lint_seal_inference(prog, reg_);
  LintReport lint = lint_transfer_before_activate(prog);
  if (!lint.clean())
    throw ConfigError("request " + spec.request_id + " procedure " + proc.procedure_id +
                      " failed lint:\n" + lint.to_text());
  prog = bind_and_estimate(prog, reg_);
  prog.program_id = label;
  prog.request_id = spec.request_id;
  prog.release_time = release;
  return prog;
}

std::vector<Outcome> LabEngine::run_batch(const std::vector<Procedure>& procs,
                                          const RequestSpec& spec, int iteration,
                                          Tick release, Tick& completion) {
  std::vector<Program> candidates;
  for (const auto& proc : procs) {
    std::string label = spec.request_id + "/" + proc.procedure_id;
    if (iteration > 1) label += "#" + std::to_string(iteration);
    inv_.reserve(proc, spec.request_id);
    candidates.push_back(build_program(proc, spec, label, release));
  }
  std::vector<Program> batch;
  if (policy_ == Policy::dynamic_policy && candidates.size() > 1) {
    Program merged = bind_and_estimate(consolidate(candidates, reg_), reg_);
    merged.release_time = release;
    for (auto& note : merged.merge_notes) note.at = release;
    batch.push_back(std::move(merged));
  } else {
    batch = candidates;
  }
  for (const auto& prog : batch) {
    rec_.programs.emplace_back(prog.program_id, prog);
    rec_.scheduled_invocations += static_cast<long>(prog.invocations.size());
  }
  auto added = dispatcher_.dispatch(batch, policy_, global_);
  batch_allocs_ += static_cast<long>(added.size());
  completion = release;
  for (const auto& a : added) completion = std::max(completion, a.end);

  std::vector<Outcome> outcomes;
  double minutes = ticks_to_minutes(completion - release);
  for (const auto& prog : candidates) {
    Outcome o = lab_.run(prog, minutes);
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

/// Feeds optimizer iterations through the engine's shared timeline: each
/// evaluation is released no earlier than the previous one completed.
class EngineEvaluator : public BatchEvaluator {
 public:
  EngineEvaluator(LabEngine& eng, const RequestSpec& spec, Tick start_clock)
      : eng_(&eng), spec_(&spec), clock_(start_clock) {}

  std::vector<Outcome> evaluate(const std::vector<Procedure>& procedures,
                                int iteration) override;

  Tick clock() const { return clock_; }

 private:
  LabEngine* eng_;
  const RequestSpec* spec_;
  Tick clock_ = 0;
};

void LabEngine::run_group(const std::vector<const RequestSpec*>& specs,
                          std::vector<RequestResult>& results) {
  struct Item {
    const RequestSpec* spec;
    std::vector<Procedure> procs;
    std::vector<Program> candidates;
    Objective objective;
    std::string task;
  };
  std::vector<Item> items;
  std::vector<Program> batch;
  for (const RequestSpec* spec : specs) {
    Item item;
    item.spec = spec;
    Params overrides;
    item.procs = feasible_candidates(*spec, overrides, item.task);
    item.objective =
        spec->objective.empty() ? item.procs.front().objective : spec->objective;
    for (const auto& proc : item.procs) {
      inv_.reserve(proc, spec->request_id);
      item.candidates.push_back(
          build_program(proc, *spec, spec->request_id + "/" + proc.procedure_id,
                        spec->submit));
    }
    if (policy_ == Policy::dynamic_policy && item.candidates.size() > 1) {
      Program merged = bind_and_estimate(consolidate(item.candidates, reg_), reg_);
      merged.release_time = spec->submit;
      for (auto& note : merged.merge_notes) note.at = spec->submit;
      batch.push_back(std::move(merged));
    } else {
      for (const auto& prog : item.candidates) batch.push_back(prog);
    }
    items.push_back(std::move(item));
  }
  for (const auto& prog : batch) {
    rec_.programs.emplace_back(prog.program_id, prog);
    rec_.scheduled_invocations += static_cast<long>(prog.invocations.size());
  }
  auto added = dispatcher_.dispatch(batch, policy_, global_);
  batch_allocs_ += static_cast<long>(added.size());

  for (auto& item : items) {
    RequestResult result;
    result.request_id = item.spec->request_id;
    result.task = item.task;
    Tick completion = item.spec->submit;
    long steps = 0;
    for (const auto& a : added) {
      if (a.request_id != item.spec->request_id) continue;
      completion = std::max(completion, a.end);
      ++steps;
    }
    double minutes = ticks_to_minutes(completion - item.spec->submit);
    std::vector<Outcome> outcomes;
    for (const auto& prog : item.candidates) outcomes.push_back(lab_.run(prog, minutes));

    result.iterations = 1;
    result.evaluations = static_cast<int>(outcomes.size());
    result.halt_reason = "single-shot";
    result.release = item.spec->submit;
    result.completed = completion;
    result.reported_steps = steps;
    std::size_t best = 0;
    for (std::size_t i = 1; i < outcomes.size(); ++i)
      if (lex_compare(outcomes[i], outcomes[best], item.objective) > 0) best = i;
    result.final_outcome = outcomes[best];
    result.final_params = item.procs[best].params;
    for (const auto& o : outcomes)
      for (const auto& [sample, call] : o.fluorescence) result.verdicts[sample] = call;
    results.push_back(std::move(result));
  }
}

void LabEngine::run_loop(const RequestSpec& spec, RequestResult& result) {
  Params overrides;
  std::string task;
  auto procs = feasible_candidates(spec, overrides, task);
  result.task = task;
  Objective objective = spec.objective.empty() ? procs.front().objective : spec.objective;

  EngineEvaluator evaluator(*this, spec, spec.submit);
  CoordinateSearchProposer proposer(default_parameter_grid());
  LoopResult loop = optimize_loop(procs, objective, evaluator, proposer, budget_);

  result.iterations = loop.iterations;
  result.evaluations = loop.evaluations;
  result.halt_reason = loop.halt_reason;
  result.final_outcome = loop.best_outcome;
  result.final_params = loop.best.params;
  result.journal = loop.journal;
  result.journal_csv = loop.journal_csv();
  result.release = spec.submit;
  result.completed = evaluator.clock();
}

void LabEngine::run_storage(const RequestSpec& spec, RequestResult& result) {
  auto [task, overrides] = parse_task_expr(spec.task_expr);
  result.task = task;
  result.is_storage = true;
  bool do_write = task == "storage_write" || task == "storage_roundtrip";
  bool do_read = task == "storage_read" || task == "storage_roundtrip";
  result.release = spec.submit;
  Tick clock = spec.submit;

  std::vector<std::uint8_t> payload;
  StorageHeader header = cfg_.preload_header;

  if (do_write) {
    if (spec.payload_path.empty())
      throw ConfigError("request " + spec.request_id + ": storage write needs a payload");
    payload = read_binary(spec.payload_path);
    StrandSet set = encode(payload, cfg_.payload_nt);
    header = set.header;
    result.payload_bytes = payload.size();

    auto bases = kb_.instantiate("storage_write", overrides);
    if (bases.empty())
      throw UnknownTaskError("template 'storage_write' is not in the knowledge base");
    const Procedure& base = bases.front();

    std::vector<Procedure> strand_procs;
    for (std::size_t i = 0; i < set.strands.size(); ++i) {
      Procedure proc = base;
      proc.procedure_id = base.procedure_id + "_s" + std::to_string(i);
      std::vector<Step> steps;
      for (const auto& step : base.steps) {
        if (step.kind == StepKind::synthesis_cycle) {
          for (char b : set.strands[i]) {
            Step cycle = step;
            cycle.base = b;
            steps.push_back(cycle);
          }
        } else {
          steps.push_back(step);
        }
      }
      proc.steps = std::move(steps);
      strand_procs.push_back(std::move(proc));
    }

    Tick completion = clock;
    run_batch(strand_procs, spec, 1, clock, completion);
    clock = completion;
    for (const auto& s : set.strands) lab_.archive_strand(s);
    rec_.archive = set.strands;
    rec_.archive_header = header;
  } else {
    rec_.archive = cfg_.preload_archive;
    rec_.archive_header = header;
  }

  if (do_read) {
    if (lab_.archive().empty())
      throw ConfigError("request " + spec.request_id + ": no archive to read");
    if (header.strand_count == 0) header.strand_count = lab_.archive().size();

    auto read_procs = kb_.instantiate("storage_read", overrides);
    if (read_procs.empty())
      throw UnknownTaskError("template 'storage_read' is not in the knowledge base");
    std::vector<Procedure> one{read_procs.front()};
    Tick completion = clock;
    auto outcomes = run_batch(one, spec, do_write ? 2 : 1, clock, completion);
    clock = completion;

    result.decode_report = decode(outcomes.front().reads, header);
    result.final_outcome = outcomes.front();
    result.final_outcome.reads.clear();  // reads live in the decode report path
    if (do_write)
      result.payload_match = result.decode_report.data == payload;
  }

  result.completed = clock;
  result.iterations = (do_write ? 1 : 0) + (do_read ? 1 : 0);
  result.evaluations = result.iterations;
  result.halt_reason = "storage";
}

RunRecord LabEngine::run() {
  rec_ = RunRecord{};
  rec_.scenario_name = cfg_.name;
  rec_.scenario_hash = cfg_.content_hash;
  rec_.policy = policy_;
  rec_.seed = seed_;
  rec_.budget = budget_;
  rec_.run_id = cfg_.name + "-" + policy_to_string(policy_) + "-s" +
                std::to_string(seed_);

  std::vector<std::size_t> order(cfg_.requests.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cfg_.requests[a].submit < cfg_.requests[b].submit;
  });

  auto is_storage_task = [](const std::string& expr) {
    return expr.rfind("storage_", 0) == 0;
  };
  auto is_loop = [&](const RequestSpec& spec) {
    for (const auto& g : spec.objective.goals)
      if (g.kind == Goal::Kind::threshold) return true;
    return false;
  };

  std::size_t i = 0;
  while (i < order.size()) {
    const RequestSpec& spec = cfg_.requests[order[i]];
    if (!is_storage_task(spec.task_expr) && !is_loop(spec)) {
      std::vector<const RequestSpec*> group;
      std::size_t j = i;
      while (j < order.size()) {
        const RequestSpec& peer = cfg_.requests[order[j]];
        if (peer.submit != spec.submit || is_storage_task(peer.task_expr) ||
            is_loop(peer))
          break;
        group.push_back(&peer);
        ++j;
      }
      std::vector<RequestResult> results;
      run_group(group, results);
      for (auto& r : results) rec_.requests.push_back(std::move(r));
      i = j;
      continue;
    }
    RequestResult result;
    result.request_id = spec.request_id;
    long allocs_before = batch_allocs_;
    if (is_storage_task(spec.task_expr)) {
      run_storage(spec, result);
    } else {
      run_loop(spec, result);
    }
    result.reported_steps = batch_allocs_ - allocs_before;
    rec_.requests.push_back(std::move(result));
    ++i;
  }

  rec_.schedule = global_;
  rec_.trace = simulate(global_);
  rec_.makespan = global_.makespan;
  rec_.step_count = rec_.trace.step_count;
  if (rec_.makespan > 0) {
    rec_.util = utilization(rec_.trace, rec_.makespan);
    for (const auto& [id, inst] : reg_.instruments()) {
      if (!rec_.util.busy_ticks.count(id)) {
        rec_.util.busy_ticks[id] = 0;
        rec_.util.busy_ratio[id] = 0.0;
      }
    }
    rec_.util.makespan = rec_.makespan;
  }
  return rec_;
}

std::string RunRecord::manifest_text() const {
  std::ostringstream out;
  out << "run " << run_id << "\n";
  out << "scenario " << scenario_name << "\n";
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(scenario_hash));
  out << "scenario_hash " << hash_hex << "\n";
  out << "policy " << policy_to_string(policy) << "\n";
  out << "seed " << seed << "\n";
  out << "budget " << budget << "\n";
  out << "makespan_ticks " << makespan << "\n";
  out << "makespan_min " << text::format_minutes(makespan) << "\n";
  out << "step_count " << step_count << "\n";
  out << "scheduled_invocations " << scheduled_invocations << "\n";
  for (const auto& r : requests) {
    out << "request " << r.request_id << " task " << r.task << " iterations "
        << r.iterations << " evaluations " << r.evaluations << " halt " << r.halt_reason
        << " completed_min " << text::format_minutes(r.completed);
    if (r.final_outcome.yield)
      out << " yield " << text::format_number(*r.final_outcome.yield);
    for (const auto& [sample, call] : r.verdicts)
      out << " sample:" << sample << "=" << (call ? "positive" : "negative");
    if (r.is_storage) {
      out << " steps " << r.reported_steps << " payload_bytes " << r.payload_bytes
          << " match " << (r.payload_match ? "yes" : "no");
    }
    out << "\n";
  }
  if (!archive.empty()) {
    out << "archive strands " << archive_header.strand_count << " payload_nt "
        << archive_header.payload_nt << " index_nt " << archive_header.index_nt
        << " data_bytes " << archive_header.data_bytes << "\n";
  }
  for (const auto& [label, path] : artifacts) out << "artifact " << label << " " << path
                                                  << "\n";
  return out.str();
}

namespace {

void write_artifacts(RunRecord& rec, const ScenarioConfig& cfg,
                     const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::path dir = out_dir / rec.run_id;
  fs::create_directories(dir);
  auto put = [&](const std::string& label, const fs::path& rel,
                 const std::string& content) {
    text::write_text_file(dir / rel, content);
    rec.artifacts[label] = (dir / rel).string();
  };
  put("trace", "trace.csv", rec.trace.to_csv());
  if (rec.makespan > 0) {
    put("utilization_csv", "utilization.csv", rec.util.to_csv());
    put("utilization_txt", "utilization.txt", rec.util.to_text());
  }
  for (const auto& [label, prog] : rec.programs)
    put("program:" + label, fs::path("programs") / (sanitize_filename(label) + ".txt"),
        prog.dump());
  for (const auto& r : rec.requests) {
    if (!r.journal.empty()) {
      std::string txt;
      for (const auto& line : r.journal) txt += line + "\n";
      put("journal:" + r.request_id,
          fs::path("journal_" + sanitize_filename(r.request_id) + ".txt"), txt);
      put("journal_csv:" + r.request_id,
          fs::path("journal_" + sanitize_filename(r.request_id) + ".csv"),
          r.journal_csv);
    }
    if (r.is_storage) {
      std::ostringstream rep;
      rep << "payload_bytes " << r.payload_bytes << "\n";
      rep << "steps " << r.reported_steps << "\n";
      rep << "match " << (r.payload_match ? "yes" : "no") << "\n";
      rep << "discarded_reads " << r.decode_report.discarded_reads << "\n";
      for (std::size_t s = 0; s < r.decode_report.cluster_sizes.size(); ++s)
        rep << "strand " << s << " reads " << r.decode_report.cluster_sizes[s]
            << " agreement "
            << text::format_number(r.decode_report.consensus_agreement[s]) << "\n";
      put("storage_report:" + r.request_id,
          fs::path("storage_report_" + sanitize_filename(r.request_id) + ".txt"),
          rep.str());
      if (!r.decode_report.data.empty()) {
        fs::path rel = "recovered_" + sanitize_filename(r.request_id) + ".bin";
        std::ofstream bin(dir / rel, std::ios::binary);
        bin.write(reinterpret_cast<const char*>(r.decode_report.data.data()),
                  static_cast<std::streamsize>(r.decode_report.data.size()));
        rec.artifacts["recovered:" + r.request_id] = (dir / rel).string();
      }
    }
  }
  if (!rec.archive.empty()) {
    std::ostringstream arc;
    arc << "strands " << rec.archive_header.strand_count << " payload_nt "
        << rec.archive_header.payload_nt << " index_nt " << rec.archive_header.index_nt
        << " data_bytes " << rec.archive_header.data_bytes << "\n";
    for (const auto& s : rec.archive) arc << s << "\n";
    put("archive", "archive.txt", arc.str());
  }
  // register first so the manifest lists its own path like any other artifact
  rec.artifacts["manifest"] = (dir / "manifest.txt").string();
  text::write_text_file(dir / "manifest.txt", rec.manifest_text());
}

}  // namespace

std::vector<Outcome> EngineEvaluator::evaluate(const std::vector<Procedure>& procedures,
                                               int iteration) {
  Tick release = std::max(spec_->submit, clock_);
  Tick completion = release;
  auto outcomes = eng_->run_batch(procedures, *spec_, iteration, release, completion);
  clock_ = completion;
  return outcomes;
}

namespace {

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunRecord run_scenario(const ScenarioConfig& cfg, const RunOverrides& overrides) {
  Policy policy = overrides.policy.value_or(cfg.policy);
  std::uint64_t seed = overrides.seed.value_or(cfg.seed);
  int budget = overrides.budget.value_or(cfg.budget);
  LabEngine engine(cfg, policy, seed, budget);
  std::string started = now_iso8601();
  RunRecord rec = engine.run();
  rec.started_at = started;
  rec.finished_at = now_iso8601();
  if (overrides.write_artifacts) write_artifacts(rec, cfg, overrides.out_dir);
  return rec;
}

RunRecord run_scenario(const std::filesystem::path& scenario,
                       const RunOverrides& overrides) {
  return run_scenario(ScenarioConfig::load(scenario), overrides);
}

std::string CompareReport::to_text() const {
  std::ostringstream out;
  out << "serial makespan  " << text::format_minutes(serial.makespan) << " min\n";
  out << "dynamic makespan " << text::format_minutes(dynamic.makespan) << " min\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", speedup);
  out << "speedup " << buf << "x\n";
  out << "instrument utilization (serial -> dynamic)\n";
  for (const auto& [id, ratio] : serial.util.busy_ratio) {
    double dyn = dynamic.util.busy_ratio.count(id) ? dynamic.util.busy_ratio.at(id) : 0;
    char a[32], b[32];
    std::snprintf(a, sizeof(a), "%5.1f%%", 100.0 * ratio);
    std::snprintf(b, sizeof(b), "%5.1f%%", 100.0 * dyn);
    out << "  " << id << "  " << a << " -> " << b << "\n";
  }
  return out.str();
}

std::string CompareReport::to_csv() const {
  std::ostringstream out;
  out << "metric,serial,dynamic\n";
  out << "makespan_ticks," << serial.makespan << "," << dynamic.makespan << "\n";
  out << "step_count," << serial.step_count << "," << dynamic.step_count << "\n";
  for (const auto& [id, ratio] : serial.util.busy_ratio) {
    double dyn = dynamic.util.busy_ratio.count(id) ? dynamic.util.busy_ratio.at(id) : 0;
    char a[32], b[32];
    std::snprintf(a, sizeof(a), "%.6f", ratio);
    std::snprintf(b, sizeof(b), "%.6f", dyn);
    out << "utilization:" << id << "," << a << "," << b << "\n";
  }
  return out.str();
}

CompareReport compare_policies(const ScenarioConfig& cfg, const RunOverrides& overrides) {
  CompareReport report;
  RunOverrides serial_over = overrides;
  serial_over.policy = Policy::serial_queue;
  RunOverrides dynamic_over = overrides;
  dynamic_over.policy = Policy::dynamic_policy;
  report.serial = run_scenario(cfg, serial_over);
  report.dynamic = run_scenario(cfg, dynamic_over);
  report.speedup = report.dynamic.makespan > 0
                       ? static_cast<double>(report.serial.makespan) /
                             static_cast<double>(report.dynamic.makespan)
                       : 0.0;
  if (overrides.write_artifacts) {
    std::filesystem::path dir =
        overrides.out_dir /
        ("compare-" + cfg.name + "-s" +
         std::to_string(overrides.seed.value_or(cfg.seed)));
    text::write_text_file(dir / "comparison.txt", report.to_text());
    text::write_text_file(dir / "comparison.csv", report.to_csv());
  }
  return report;
}

CompareReport compare_policies(const std::filesystem::path& scenario,
                               const RunOverrides& overrides) {
  return compare_policies(ScenarioConfig::load(scenario), overrides);
}

}  // namespace autolab
