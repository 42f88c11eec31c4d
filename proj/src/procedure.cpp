#include "autolab/procedure.hpp"

#include <algorithm>
#include <sstream>

#include "autolab/errors.hpp"
#include "autolab/text.hpp"

namespace autolab {

ContainerAddr ContainerAddr::parse(const std::string& s) {
  auto colon = s.find(':');
  auto comma = s.find(',', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || comma == std::string::npos || colon == 0)
    throw ParseError("bad container address '" + s + "' (want zone:row,col)");
  ContainerAddr a;
  a.zone = s.substr(0, colon);
  try {
    a.row = std::stoi(s.substr(colon + 1, comma - colon - 1));
    a.col = std::stoi(s.substr(comma + 1));
  } catch (const std::exception&) {
    throw ParseError("bad container address '" + s + "'");
  }
  return a;
}

std::string param_value_str(const ParamValue& v) {
  if (std::holds_alternative<double>(v))
    return text::format_number(std::get<double>(v));
  return std::get<std::string>(v);
}

bool param_value_eq(const ParamValue& a, const ParamValue& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<double>(a))
    return std::get<double>(a) == std::get<double>(b);
  return std::get<std::string>(a) == std::get<std::string>(b);
}

double param_num(const Params& p, const std::string& name, double fallback) {
  auto it = p.find(name);
  if (it == p.end()) return fallback;
  if (std::holds_alternative<double>(it->second)) return std::get<double>(it->second);
  try {
    return std::stod(std::get<std::string>(it->second));
  } catch (const std::exception&) {
    return fallback;
  }
}

std::string param_str(const Params& p, const std::string& name,
                      const std::string& fallback) {
  auto it = p.find(name);
  if (it == p.end()) return fallback;
  return param_value_str(it->second);
}

std::string Objective::str() const {
  std::string out;
  for (const auto& g : goals) {
    if (!out.empty()) out += " ";
    if (g.kind == Goal::Kind::threshold)
      out += g.metric + ">=" + text::format_number(g.value);
    else
      out += "min:" + g.metric;
  }
  return out;
}

Objective Objective::parse(const std::vector<std::string>& tokens) {
  Objective obj;
  for (const auto& tok : tokens) {
    Goal g;
    if (tok.rfind("min:", 0) == 0) {
      g.kind = Goal::Kind::minimize;
      g.metric = tok.substr(4);
    } else {
      auto pos = tok.find(">=");
      if (pos == std::string::npos)
        throw ParseError("bad objective token '" + tok + "' (want metric>=v or min:metric)");
      g.kind = Goal::Kind::threshold;
      g.metric = tok.substr(0, pos);
      try {
        g.value = std::stod(tok.substr(pos + 2));
      } catch (const std::exception&) {
        throw ParseError("bad objective token '" + tok + "'");
      }
    }
    if (g.metric.empty()) throw ParseError("objective goal without a metric");
    obj.goals.push_back(g);
  }
  return obj;
}

double wash_volume_ul(int repeats) { return 50.0 * repeats; }

std::map<std::string, double> reagent_demand(const Procedure& proc) {
  std::map<std::string, double> demand;
  for (const auto& step : proc.steps) {
    switch (step.kind) {
      case StepKind::transfer:
        if (step.src.shared_source()) demand[step.reagent] += step.volume_ul;
        break;
      case StepKind::wash:
        demand[step.buffer] += wash_volume_ul(step.repeats);
        break;
      case StepKind::synthesis_cycle: {
        std::string premix = std::string("premix_") + step.base;
        demand[premix] += 10.0;
        demand["deblock"] += 10.0;
        demand[param_str(proc.params, "buffer", "wash_buffer")] += wash_volume_ul(2);
        break;
      }
      default:
        break;
    }
  }
  return demand;
}

ReagentInventory ReagentInventory::load(const std::filesystem::path& path) {
  return parse(text::read_text_file(path), path.string());
}

ReagentInventory ReagentInventory::parse(const std::string& src,
                                         const std::string& origin) {
  ReagentInventory inv;
  for (const auto& node : text::parse_string(src, origin)) {
    if (node.key != "reagent")
      throw ParseError(origin + ": unexpected entry '" + node.key + "'");
    const std::string& name = node.arg(0);
    if (inv.stock_.count(name)) throw DuplicateIdError("reagent '" + name + "'");
    inv.stock_[name] = node.num(1);
  }
  return inv;
}

void ReagentInventory::set_stock(const std::string& reagent, double ul) {
  stock_[reagent] = ul;
}

double ReagentInventory::quantity(const std::string& reagent) const {
  auto it = stock_.find(reagent);
  return it == stock_.end() ? 0.0 : it->second;
}

Feasibility ReagentInventory::screen(const Procedure& proc) const {
  Feasibility f;
  for (const auto& [reagent, amount] : reagent_demand(proc)) {
    double have = quantity(reagent);
    if (have + 1e-9 < amount) {
      f.feasible = false;
      f.missing.push_back({reagent, amount - have});
    }
  }
  return f;
}

void ReagentInventory::reserve(const Procedure& proc, const std::string& request_id) {
  auto demand = reagent_demand(proc);
  for (const auto& [reagent, amount] : demand) {
    if (quantity(reagent) + 1e-9 < amount)
      throw InsufficientReagentError("reagent '" + reagent + "' short by " +
                                     text::format_number(amount - quantity(reagent)) +
                                     " uL for request " + request_id);
  }
  for (const auto& [reagent, amount] : demand) {
    stock_[reagent] -= amount;
    ledger_[request_id][reagent] += amount;
  }
}

void ReagentInventory::release(const std::string& request_id) {
  auto it = ledger_.find(request_id);
  if (it == ledger_.end()) return;
  for (const auto& [reagent, amount] : it->second) stock_[reagent] += amount;
  ledger_.erase(it);
}

std::string ReagentInventory::to_text() const {
  std::ostringstream out;
  for (const auto& [name, ul] : stock_)
    out << "reagent " << name << " " << text::format_number(ul) << "\n";
  return out.str();
}

namespace {

Step parse_step(const text::Node& node, const std::string& where) {
  Step s;
  const std::string& kind = node.arg(0);
  auto addr = [&](std::size_t i) { return ContainerAddr::parse(node.arg(i)); };
  if (kind == "transfer") {
    s.kind = StepKind::transfer;
    s.reagent = node.arg(1);
    s.volume_ul = node.num(2);
    s.src = addr(3);
    s.dst = addr(4);
    if (s.volume_ul <= 0)
      throw ParseError(where + ": transfer volume must be positive");
  } else if (kind == "incubate") {
    s.kind = StepKind::incubate;
    s.temp_c = node.num(1);
    const std::string& dur = node.arg(2);
    if (!dur.empty() && dur[0] == '$')
      s.duration_param = dur.substr(1);
    else
      s.duration_min = node.num(2);
    std::size_t i = 3;
    if (i < node.args.size() && node.arg(i) == "sealed") {
      s.requires_sealed = true;
      ++i;
    }
    s.container = addr(i);
  } else if (kind == "measure") {
    s.kind = StepKind::measure;
    const std::string& m = node.arg(1);
    if (m == "fluorescence")
      s.modality = Modality::fluorescence;
    else if (m == "sequencing")
      s.modality = Modality::sequencing;
    else
      throw ParseError(where + ": unknown modality '" + m + "'");
    s.container = addr(2);
    s.analysis_min = node.num(3);
  } else if (kind == "wash") {
    s.kind = StepKind::wash;
    s.buffer = node.arg(1);
    s.repeats = static_cast<int>(node.integer(2));
    s.container = addr(3);
    if (s.repeats < 1) throw ParseError(where + ": wash repeats must be >= 1");
  } else if (kind == "mix") {
    s.kind = StepKind::mix;
    s.container = addr(1);
  } else if (kind == "seal") {
    s.kind = StepKind::seal;
    s.container = addr(1);
  } else if (kind == "unseal") {
    s.kind = StepKind::unseal;
    s.container = addr(1);
  } else if (kind == "synthesis_cycle") {
    s.kind = StepKind::synthesis_cycle;
    const std::string& b = node.arg(1);
    if (b.size() != 1 || std::string("ACGT").find(b[0]) == std::string::npos)
      throw ParseError(where + ": synthesis base must be one of A C G T");
    s.base = b[0];
    s.container = addr(2);
  } else {
    throw ParseError(where + ": unknown step kind '" + kind + "'");
  }
  return s;
}

ParamValue parse_param_value(const text::Node& node) {
  const std::string& type = node.arg(1);
  if (type == "num") return ParamValue{node.num(2)};
  if (type == "str") return ParamValue{node.arg(2)};
  throw ParseError("param '" + node.arg(0) + "': unknown value type '" + type + "'");
}

}  // namespace

void resolve_step_params(Procedure& proc) {
  auto require = [&](const std::string& name, const std::string& why) {
    if (!proc.params.count(name))
      throw ParseError("procedure " + proc.procedure_id + ": step references param '" +
                       name + "' (" + why + ") which is not declared");
  };
  for (auto& step : proc.steps) {
    if (step.kind == StepKind::incubate && !step.duration_param.empty()) {
      require(step.duration_param, "incubation duration");
      step.duration_min = param_num(proc.params, step.duration_param, 0);
    }
    if (step.kind == StepKind::wash && !step.buffer.empty() && step.buffer[0] == '$') {
      std::string name = step.buffer.substr(1);
      require(name, "wash buffer");
      step.buffer = param_str(proc.params, name, "");
    }
    if (step.kind == StepKind::synthesis_cycle) {
      require("buffer", "cycle wash buffer");
      require("cycle_time", "extension duration");
    }
  }
}

TemplateKB TemplateKB::load(const std::filesystem::path& path) {
  return parse(text::read_text_file(path), path.string());
}

TemplateKB TemplateKB::parse(const std::string& src, const std::string& origin) {
  TemplateKB kb;
  for (const auto& node : text::parse_string(src, origin)) {
    if (node.key != "template")
      throw ParseError(origin + ": unexpected entry '" + node.key + "'");
    TemplateEntry entry;
    entry.task = node.arg(0);
    if (kb.find(entry.task)) throw DuplicateIdError("template '" + entry.task + "'");
    for (const auto& cand : node.children) {
      if (cand.key != "candidate")
        throw ParseError(origin + ": template " + entry.task + ": expected candidate");
      Procedure proc;
      proc.procedure_id = cand.arg(0);
      proc.task = entry.task;
      for (const auto& item : cand.children) {
        if (item.key == "param") {
          proc.params[item.arg(0)] = parse_param_value(item);
        } else if (item.key == "objective") {
          proc.objective = Objective::parse(item.args);
        } else if (item.key == "step") {
          proc.steps.push_back(parse_step(item, entry.task + "/" + proc.procedure_id));
        } else {
          throw ParseError(origin + ": candidate " + proc.procedure_id +
                           ": unknown entry '" + item.key + "'");
        }
      }
      if (proc.steps.empty())
        throw ParseError("candidate " + proc.procedure_id + " has no steps");
      for (const auto& other : entry.candidates)
        if (other.procedure_id == proc.procedure_id)
          throw DuplicateIdError("candidate '" + proc.procedure_id + "'");
      resolve_step_params(proc);
      entry.candidates.push_back(std::move(proc));
    }
    if (entry.candidates.empty())
      throw ParseError("template '" + entry.task + "' has no candidates");
    kb.entries_.push_back(std::move(entry));
  }
  return kb;
}

const TemplateKB::TemplateEntry* TemplateKB::find(const std::string& task) const {
  for (const auto& e : entries_)
    if (e.task == task) return &e;
  return nullptr;
}

std::vector<Procedure> TemplateKB::lookup(const std::string& task) const {
  const TemplateEntry* e = find(task);
  if (!e) return {};
  return e->candidates;
}

std::vector<Procedure> TemplateKB::instantiate(const std::string& task,
                                               const Params& overrides) const {
  std::vector<Procedure> out = lookup(task);
  for (auto& proc : out) {
    for (const auto& [k, v] : overrides) proc.params[k] = v;
    resolve_step_params(proc);
  }
  return out;
}

std::vector<std::string> TemplateKB::tasks() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.task);
  return out;
}

bool TemplateKB::has_task(const std::string& task) const { return find(task) != nullptr; }

std::string TemplateKB::to_text() const {
  std::ostringstream out;
  for (const auto& e : entries_) {
    out << "template " << e.task << " {\n";
    for (const auto& proc : e.candidates) {
      out << "  candidate " << proc.procedure_id << " {\n";
      for (const auto& [k, v] : proc.params) {
        out << "    param " << k << " "
            << (std::holds_alternative<double>(v) ? "num" : "str") << " "
            << param_value_str(v) << "\n";
      }
      if (!proc.objective.empty()) {
        out << "    objective";
        for (const auto& g : proc.objective.goals) {
          out << " "
              << (g.kind == Goal::Kind::threshold
                      ? g.metric + ">=" + text::format_number(g.value)
                      : "min:" + g.metric);
        }
        out << "\n";
      }
      for (const auto& s : proc.steps) {
        out << "    step ";
        switch (s.kind) {
          case StepKind::transfer:
            out << "transfer " << s.reagent << " " << text::format_number(s.volume_ul)
                << " " << s.src.str() << " " << s.dst.str();
            break;
          case StepKind::incubate:
            out << "incubate " << text::format_number(s.temp_c) << " "
                << (s.duration_param.empty() ? text::format_number(s.duration_min)
                                             : "$" + s.duration_param)
                << (s.requires_sealed ? " sealed " : " ") << s.container.str();
            break;
          case StepKind::measure:
            out << "measure "
                << (s.modality == Modality::fluorescence ? "fluorescence" : "sequencing")
                << " " << s.container.str() << " " << text::format_number(s.analysis_min);
            break;
          case StepKind::wash:
            out << "wash " << s.buffer << " " << s.repeats << " " << s.container.str();
            break;
          case StepKind::mix:
            out << "mix " << s.container.str();
            break;
          case StepKind::seal:
            out << "seal " << s.container.str();
            break;
          case StepKind::unseal:
            out << "unseal " << s.container.str();
            break;
          case StepKind::synthesis_cycle:
            out << "synthesis_cycle " << s.base << " " << s.container.str();
            break;
        }
        out << "\n";
      }
      out << "  }\n";
    }
    out << "}\n";
  }
  return out.str();
}

std::pair<std::string, Params> parse_task_expr(const std::string& expr) {
  auto open = expr.find('(');
  if (open == std::string::npos) return {expr, {}};
  if (expr.back() != ')') throw ParseError("bad task expression '" + expr + "'");
  std::string task = expr.substr(0, open);
  std::string body = expr.substr(open + 1, expr.size() - open - 2);
  Params params;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    std::string item =
        body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? body.size() : comma + 1;
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError("bad task parameter '" + item + "' in '" + expr + "'");
    std::string key = item.substr(0, eq);
    std::string val = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      double num = std::stod(val, &used);
      if (used == val.size()) {
        params[key] = num;
        continue;
      }
    } catch (const std::exception&) {
    }
    params[key] = val;
  }
  return {task, params};
}

}  // namespace autolab
