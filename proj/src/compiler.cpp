#include "autolab/compiler.hpp"

#include <algorithm>
#include <sstream>

#include "autolab/errors.hpp"
#include "autolab/text.hpp"

namespace autolab {

namespace {

constexpr const char* kDeck = "deck";

std::string station_for(const std::string& capability) {
  if (capability == cap::thermal_hold || capability == cap::thermal_cycle)
    return "station.thermal";
  if (capability == cap::optical_fluorescence) return "station.reader";
  if (capability == cap::optical_sequencing) return "station.sequencer";
  return kDeck;
}

ContainerAddr premix_source(char base) {
  int col = 0;
  switch (base) {
    case 'A': col = 0; break;
    case 'C': col = 1; break;
    case 'G': col = 2; break;
    case 'T': col = 3; break;
  }
  return ContainerAddr{"reservoir", 1, col};
}

ContainerAddr deblock_source() { return ContainerAddr{"reservoir", 1, 4}; }


/// Throws when no registry service with the tag accepts these params.
void validate_op(const Registry& reg, const std::string& capability, const Params& params,
                 int step_index) {
  auto services = reg.services_with_capability(capability);
  if (services.empty())
    throw NoCapableInstrumentError("step " + std::to_string(step_index) +
                                   ": no instrument offers capability '" + capability +
                                   "'");
  for (const auto* svc : services)
    if (service_accepts(*svc, params)) return;
  std::ostringstream msg;
  msg << "step " << step_index << ": params {";
  bool first = true;
  for (const auto& [k, v] : params) {
    if (!first) msg << ", ";
    first = false;
    msg << k << "=" << param_value_str(v);
  }
  msg << "} fit no service with capability '" << capability << "'";
  throw ParamOutOfRangeError(msg.str());
}

class Translator {
 public:
  Translator(const Procedure& proc, const Registry& reg) : proc_(proc), reg_(reg) {
    prog_.provenance = proc.procedure_id;
    prog_.params = proc.params;
  }

  Program run() {
    for (std::size_t i = 0; i < proc_.steps.size(); ++i) {
      step_index_ = static_cast<int>(i);
      translate(proc_.steps[i]);
    }
    return std::move(prog_);
  }

 private:
  int emit(const std::string& capability, Params params,
           std::vector<ContainerAddr> reads, std::vector<ContainerAddr> writes,
           bool deposits, bool requires_sealed) {
    validate_op(reg_, capability, params, step_index_);
    std::sort(reads.begin(), reads.end());
    reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
    std::sort(writes.begin(), writes.end());
    writes.erase(std::unique(writes.begin(), writes.end()), writes.end());

    Invocation inv;
    inv.id = static_cast<int>(prog_.invocations.size());
    inv.capability = capability;
    inv.params = std::move(params);
    inv.reads = std::move(reads);
    inv.writes = std::move(writes);
    inv.deposits = deposits;
    inv.requires_sealed = requires_sealed;
    inv.source_step = step_index_;

    for (const auto& c : inv.reads)
      if (auto it = last_writer_.find(c); it != last_writer_.end())
        inv.depends_on.insert(it->second);
    for (const auto& c : inv.writes) {
      if (auto it = last_writer_.find(c); it != last_writer_.end())
        inv.depends_on.insert(it->second);
      for (int r : readers_[c])
        if (r != inv.id) inv.depends_on.insert(r);
    }
    for (const auto& c : inv.reads) readers_[c].push_back(inv.id);
    for (const auto& c : inv.writes) {
      last_writer_[c] = inv.id;
      readers_[c].clear();
    }
    prog_.invocations.push_back(std::move(inv));
    return prog_.invocations.back().id;
  }

  const std::string& location(const ContainerAddr& c) {
    auto it = location_.find(c);
    if (it == location_.end()) it = location_.emplace(c, kDeck).first;
    return it->second;
  }

  void move_to(const ContainerAddr& c, const std::string& place) {
    if (location(c) == place) return;
    emit(cap::mechanical_move, Params{{"well", c.str()}}, {}, {c}, false, false);
    location_[c] = place;
  }

  void do_transfer(const std::string& reagent, double volume, const ContainerAddr& src,
                   const ContainerAddr& dst) {
    bool moved = false;
    if (location(src) != kDeck) {
      move_to(src, kDeck);
      moved = true;
    }
    if (location(dst) != kDeck) {
      move_to(dst, kDeck);
      moved = true;
    }
    if (!moved && src.zone != dst.zone) {
      // staging pass to line the carriage up across zones
      emit(cap::mechanical_move, Params{{"well", dst.str()}}, {}, {dst}, false, false);
    }
    emit(cap::liquid_transfer,
         Params{{"volume", volume},
                {"src", src.str()},
                {"dst", dst.str()},
                {"reagent", reagent}},
         {src}, {dst}, true, false);
  }

  void do_incubate(double temp, double minutes, const ContainerAddr& c, bool sealed) {
    move_to(c, "station.thermal");
    emit(cap::thermal_hold,
         Params{{"temperature", temp}, {"duration", minutes}, {"well", c.str()}}, {c},
         {c}, false, sealed);
  }

  void do_wash(const std::string& buffer, int repeats, const ContainerAddr& c) {
    move_to(c, kDeck);
    emit(cap::liquid_wash,
         Params{{"repeats", static_cast<double>(repeats)},
                {"well", c.str()},
                {"buffer", buffer}},
         {c}, {c}, true, false);
  }

  void translate(const Step& step) {
    switch (step.kind) {
      case StepKind::transfer:
        do_transfer(step.reagent, step.volume_ul, step.src, step.dst);
        break;
      case StepKind::incubate:
        do_incubate(step.temp_c, step.duration_min, step.container,
                    step.requires_sealed);
        break;
      case StepKind::measure: {
        bool fluor = step.modality == Modality::fluorescence;
        move_to(step.container, fluor ? "station.reader" : "station.sequencer");
        emit(fluor ? cap::optical_fluorescence : cap::optical_sequencing,
             Params{{"well", step.container.str()}, {"analysis_min", step.analysis_min}},
             {step.container}, {}, false, false);
        prog_.has_sequencing |= !fluor;
        break;
      }
      case StepKind::wash:
        do_wash(step.buffer, step.repeats, step.container);
        break;
      case StepKind::mix:
        move_to(step.container, kDeck);
        emit(cap::liquid_mix, Params{{"well", step.container.str()}}, {step.container},
             {step.container}, false, false);
        break;
      case StepKind::seal:
        move_to(step.container, kDeck);
        emit(cap::mechanical_cap, Params{{"well", step.container.str()}},
             {step.container}, {step.container}, false, false);
        break;
      case StepKind::unseal:
        move_to(step.container, kDeck);
        emit(cap::mechanical_uncap, Params{{"well", step.container.str()}},
             {step.container}, {step.container}, false, false);
        break;
      case StepKind::synthesis_cycle: {
        double cycle_time = param_num(proc_.params, "cycle_time", 20.0);
        std::string buffer = param_str(proc_.params, "buffer", "wash_buffer");
        do_transfer(std::string("premix_") + step.base, 10.0, premix_source(step.base),
                    step.container);
        do_incubate(37.0, cycle_time, step.container, false);
        do_transfer("deblock", 10.0, deblock_source(), step.container);
        do_incubate(37.0, 8.0, step.container, false);
        do_wash(buffer, 2, step.container);
        prog_.has_synthesis = true;
        prog_.sequence.push_back(step.base);
        break;
      }
    }
  }

  const Procedure& proc_;
  const Registry& reg_;
  Program prog_;
  std::map<ContainerAddr, std::string> location_;
  std::map<ContainerAddr, int> last_writer_;
  std::map<ContainerAddr, std::vector<int>> readers_;
  int step_index_ = 0;
};

}  // namespace

bool service_accepts(const AtomicService& svc, const Params& params) {
  for (const auto& spec : svc.params_schema) {
    auto it = params.find(spec.name);
    if (it == params.end()) return false;
    if (spec.type == ParamType::well) continue;
    if (!std::holds_alternative<double>(it->second)) return false;
    double v = std::get<double>(it->second);
    if (v < spec.min_value || v > spec.max_value) return false;
  }
  return true;
}

std::string Invocation::params_str() const {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ";";
    out += k + "=" + param_value_str(v);
  }
  return out;
}

bool Invocation::touches(const ContainerAddr& c) const {
  return std::binary_search(reads.begin(), reads.end(), c) ||
         std::binary_search(writes.begin(), writes.end(), c);
}

std::string Program::dump() const {
  std::ostringstream out;
  out << "program " << (program_id.empty() ? provenance : program_id) << " invocations "
      << invocations.size() << "\n";
  for (const auto& inv : invocations) {
    out << inv.id << " | " << inv.capability << " | " << inv.params_str() << " | ";
    if (inv.depends_on.empty()) {
      out << "-";
    } else {
      bool first = true;
      for (int d : inv.depends_on) {
        if (!first) out << ",";
        first = false;
        out << d;
      }
    }
    out << "\n";
  }
  return out.str();
}

bool LintReport::clean() const { return error_count() == 0; }

std::size_t LintReport::error_count() const {
  std::size_t n = 0;
  for (const auto& f : findings)
    if (f.severity == LintFinding::Severity::error) ++n;
  return n;
}

std::string LintReport::to_text() const {
  std::ostringstream out;
  for (const auto& f : findings) {
    out << (f.severity == LintFinding::Severity::error ? "error" : "warning") << " ["
        << f.rule << "] invocation " << f.invocation_id << ": " << f.message << "\n";
  }
  return out.str();
}

Program compile(const Procedure& proc, const Registry& reg) {
  if (proc.steps.empty())
    throw ParseError("procedure " + proc.procedure_id + " has no steps");
  return Translator(proc, reg).run();
}

Program lint_seal_inference(const Program& prog, const Registry& reg) {
  // Replay seal state in id order; deposits and mixes reopen a container.
  std::set<ContainerAddr> sealed;
  std::vector<int> cap_before;  // original ids needing a cap inserted
  for (const auto& inv : prog.invocations) {
    if (inv.capability == cap::mechanical_cap) {
      for (const auto& c : inv.writes) sealed.insert(c);
    } else if (inv.capability == cap::mechanical_uncap) {
      for (const auto& c : inv.writes) sealed.erase(c);
    } else if (inv.deposits || inv.capability == cap::liquid_mix) {
      for (const auto& c : inv.writes) sealed.erase(c);
    }
    if (inv.requires_sealed) {
      bool all_sealed = true;
      for (const auto& c : inv.writes) all_sealed &= sealed.count(c) != 0;
      if (!all_sealed) {
        cap_before.push_back(inv.id);
        for (const auto& c : inv.writes) sealed.insert(c);
      }
    }
  }
  if (cap_before.empty()) return prog;

  Program out;
  out.program_id = prog.program_id;
  out.request_id = prog.request_id;
  out.provenance = prog.provenance;
  out.params = prog.params;
  out.has_synthesis = prog.has_synthesis;
  out.has_sequencing = prog.has_sequencing;
  out.sequence = prog.sequence;
  out.release_time = prog.release_time;
  out.merge_notes = prog.merge_notes;

  std::vector<int> id_map(prog.invocations.size());
  std::size_t next_cap = 0;
  int next_id = 0;
  for (const auto& inv : prog.invocations) {
    bool insert = next_cap < cap_before.size() && cap_before[next_cap] == inv.id;
    if (insert) {
      ++next_cap;
      Invocation capper;
      capper.id = next_id++;
      capper.capability = cap::mechanical_cap;
      capper.params = Params{{"well", inv.params.count("well")
                                          ? inv.params.at("well")
                                          : ParamValue{inv.writes.empty()
                                                           ? std::string()
                                                           : inv.writes.front().str()}}};
      capper.writes = inv.writes;
      capper.deposits = false;
      capper.source_step = inv.source_step;
      for (int d : inv.depends_on) capper.depends_on.insert(id_map[d]);
      validate_op(reg, cap::mechanical_cap, capper.params, inv.source_step);
      int cap_id = capper.id;
      out.invocations.push_back(std::move(capper));

      Invocation moved = inv;
      moved.id = next_id++;
      moved.depends_on.clear();
      for (int d : inv.depends_on) moved.depends_on.insert(id_map[d]);
      moved.depends_on.insert(cap_id);
      id_map[inv.id] = moved.id;
      out.invocations.push_back(std::move(moved));
    } else {
      Invocation moved = inv;
      moved.id = next_id++;
      moved.depends_on.clear();
      for (int d : inv.depends_on) moved.depends_on.insert(id_map[d]);
      id_map[inv.id] = moved.id;
      out.invocations.push_back(std::move(moved));
    }
  }
  return out;
}

LintReport lint_transfer_before_activate(const Program& prog) {
  LintReport report;
  std::set<ContainerAddr> wetted;
  for (const auto& inv : prog.invocations) {
    bool activating = inv.capability.rfind("thermal.", 0) == 0 ||
                      inv.capability.rfind("optical.", 0) == 0;
    if (activating) {
      for (const auto& c : inv.reads) {
        if (c.shared_source()) continue;
        if (!wetted.count(c)) {
          report.findings.push_back(
              {LintFinding::Severity::error, "transfer-before-activate", inv.id,
               "container " + c.str() + " has no prior liquid deposit"});
          break;
        }
      }
    }
    if (inv.deposits)
      for (const auto& c : inv.writes) wetted.insert(c);
  }
  return report;
}

Program bind_and_estimate(const Program& prog, const Registry& reg) {
  Program out = prog;
  for (auto& inv : out.invocations) {
    auto services = reg.services_with_capability(inv.capability);
    if (services.empty())
      throw NoCapableInstrumentError("invocation " + std::to_string(inv.id) +
                                     ": no instrument offers capability '" +
                                     inv.capability + "'");
    const AtomicService* best = nullptr;
    double best_min = 0;
    for (const auto* svc : services) {
      if (!service_accepts(*svc, inv.params)) continue;
      double quantity = svc->duration.unit_param.empty()
                            ? 0.0
                            : param_num(inv.params, svc->duration.unit_param, 0.0);
      double minutes = svc->duration.minutes_for(quantity);
      if (!best || minutes < best_min ||
          (minutes == best_min && svc->service_id < best->service_id)) {
        best = svc;
        best_min = minutes;
      }
    }
    if (!best)
      throw ParamOutOfRangeError("invocation " + std::to_string(inv.id) +
                                 ": params fit no service with capability '" +
                                 inv.capability + "'");
    inv.bound_service = best->service_id;
    inv.est_ticks = minutes_to_ticks(best_min);
  }
  return out;
}

Tick critical_path(const Program& prog) {
  std::vector<Tick> dist(prog.invocations.size(), 0);
  Tick best = 0;
  for (const auto& inv : prog.invocations) {
    Tick start = 0;
    for (int d : inv.depends_on) start = std::max(start, dist[d]);
    dist[inv.id] = start + inv.est_ticks;
    best = std::max(best, dist[inv.id]);
  }
  return best;
}

}  // namespace autolab
