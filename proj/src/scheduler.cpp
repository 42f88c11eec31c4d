#include "autolab/scheduler.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "autolab/errors.hpp"
#include "autolab/text.hpp"

namespace autolab {

Policy policy_from_string(const std::string& s) {
  if (s == "serial") return Policy::serial_queue;
  if (s == "dynamic") return Policy::dynamic_policy;
  throw ConfigError("unknown policy '" + s + "' (want serial or dynamic)");
}

std::string policy_to_string(Policy p) {
  return p == Policy::serial_queue ? "serial" : "dynamic";
}

namespace {

Tick busy_at(const std::map<std::string, Tick>& busy, const std::string& instrument) {
  auto it = busy.find(instrument);
  return it == busy.end() ? 0 : it->second;
}

int transfer_channels(const Registry& reg) {
  int channels = 1;
  for (const auto* svc : reg.services_with_capability(cap::liquid_transfer))
    channels = std::max(channels, reg.instrument(svc->instrument_id).channels);
  return channels;
}

std::vector<ContainerAddr> operated_wells(const Invocation& inv) {
  std::vector<ContainerAddr> wells;
  for (const auto& c : inv.writes)
    if (!c.shared_source()) wells.push_back(c);
  for (const auto& c : inv.reads)
    if (!c.shared_source()) wells.push_back(c);
  std::sort(wells.begin(), wells.end());
  wells.erase(std::unique(wells.begin(), wells.end()), wells.end());
  return wells;
}

bool params_equal_ignoring_wells(const Params& a, const Params& b) {
  auto relevant = [](const Params& p) {
    std::vector<std::pair<std::string, ParamValue>> out;
    for (const auto& [k, v] : p)
      if (k != "well" && k != "src" && k != "dst") out.emplace_back(k, v);
    return out;
  };
  auto ra = relevant(a);
  auto rb = relevant(b);
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i)
    if (ra[i].first != rb[i].first || !param_value_eq(ra[i].second, rb[i].second))
      return false;
  return true;
}

std::string joined_wells(const std::vector<ContainerAddr>& wells) {
  std::string out;
  for (const auto& w : wells) {
    if (!out.empty()) out += ";";
    out += w.str();
  }
  return out;
}

}  // namespace

Binding reroute(const Invocation& inv, const Registry& reg,
                const std::map<std::string, Tick>& busy_until, Tick ready) {
  if (inv.bound_service.empty())
    throw UnschedulableError("invocation " + std::to_string(inv.id) + " is not bound");
  const AtomicService& preferred = reg.service(inv.bound_service);

  std::vector<const AtomicService*> candidates{&preferred};
  for (const auto* svc : reg.equivalents(inv.bound_service))
    if (service_accepts(*svc, inv.params)) candidates.push_back(svc);

  Binding best;
  bool have = false;
  for (const auto* svc : candidates) {
    double quantity = svc->duration.unit_param.empty()
                          ? 0.0
                          : param_num(inv.params, svc->duration.unit_param, 0.0);
    Tick dur = minutes_to_ticks(svc->duration.minutes_for(quantity));
    Tick start = std::max(ready, busy_at(busy_until, svc->instrument_id));
    bool is_pref = svc->service_id == preferred.service_id;
    auto key = std::make_tuple(start, is_pref ? 0 : 1, svc->service_id);
    auto best_key = std::make_tuple(best.start, best.service_id == preferred.service_id ? 0 : 1,
                                    best.service_id);
    if (!have || key < best_key) {
      best.instrument_id = svc->instrument_id;
      best.service_id = svc->service_id;
      best.start = start;
      best.duration = dur;
      have = true;
    }
  }
  best.preferred_service = preferred.service_id;
  best.rerouted = best.service_id != preferred.service_id;
  return best;
}

Program consolidate(const std::vector<Program>& programs, const Registry& reg) {
  if (programs.empty())
    throw IncompatibleProgramsError("cannot consolidate an empty batch");
  for (const auto& prog : programs)
    for (const auto& inv : prog.invocations)
      for (const auto& w : inv.writes)
        if (w.shared_source())
          throw IncompatibleProgramsError("program " + prog.program_id +
                                          " writes shared container " + w.str());

  // Column widths per zone so each source program gets a disjoint band.
  std::map<std::string, int> width;
  for (const auto& prog : programs)
    for (const auto& inv : prog.invocations) {
      auto span = [&](const std::vector<ContainerAddr>& cs) {
        for (const auto& c : cs)
          if (!c.shared_source()) width[c.zone] = std::max(width[c.zone], c.col + 1);
      };
      span(inv.reads);
      span(inv.writes);
    }

  auto remap = [&](const ContainerAddr& c, std::size_t prog_idx) {
    if (c.shared_source()) return c;
    ContainerAddr out = c;
    out.col += static_cast<int>(prog_idx) * width[c.zone];
    return out;
  };
  auto remap_params = [&](const Invocation& inv, std::size_t prog_idx) {
    Params p = inv.params;
    for (auto& [k, v] : p) {
      if (k != "well" && k != "src" && k != "dst") continue;
      if (!std::holds_alternative<std::string>(v)) continue;
      ContainerAddr addr = ContainerAddr::parse(std::get<std::string>(v));
      v = remap(addr, prog_idx).str();
    }
    return p;
  };

  const int channels = transfer_channels(reg);
  const std::size_t n = programs.size();

  Program out;
  out.program_id = programs.front().program_id + (n > 1 ? "+merged" : "");
  out.request_id = programs.front().request_id;
  out.provenance = programs.front().provenance + (n > 1 ? "+merged" : "");
  out.release_time = programs.front().release_time;
  for (const auto& prog : programs) {
    out.release_time = std::min(out.release_time, prog.release_time);
    out.has_synthesis |= prog.has_synthesis;
    out.has_sequencing |= prog.has_sequencing;
  }
  if (n == 1) {
    out.params = programs.front().params;
    out.sequence = programs.front().sequence;
  }

  struct Entry {
    std::size_t prog;
    int id;
  };
  std::vector<std::vector<int>> new_id(n);
  std::vector<std::vector<bool>> done(n);
  for (std::size_t i = 0; i < n; ++i) {
    new_id[i].assign(programs[i].invocations.size(), -1);
    done[i].assign(programs[i].invocations.size(), false);
  }

  auto deps_ready = [&](std::size_t i, const Invocation& inv) {
    for (int d : inv.depends_on)
      if (!done[i][d]) return false;
    return true;
  };

  std::size_t total = 0;
  for (const auto& prog : programs) total += prog.invocations.size();
  std::size_t emitted_total = 0;

  while (emitted_total < total) {
    std::vector<Entry> ready;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& inv : programs[i].invocations)
        if (!done[i][inv.id] && deps_ready(i, inv))
          ready.push_back({i, inv.id});
    if (ready.empty())
      throw UnschedulableError("dependency cycle while consolidating");

    std::vector<bool> used(ready.size(), false);
    std::vector<std::vector<Entry>> groups;
    for (std::size_t a = 0; a < ready.size(); ++a) {
      if (used[a]) continue;
      used[a] = true;
      std::vector<Entry> group{ready[a]};
      std::set<std::size_t> members{ready[a].prog};
      const Invocation& base = programs[ready[a].prog].invocations[ready[a].id];
      Params base_params = remap_params(base, ready[a].prog);
      for (std::size_t b = a + 1; b < ready.size(); ++b) {
        if (used[b] || members.count(ready[b].prog)) continue;
        const Invocation& cand = programs[ready[b].prog].invocations[ready[b].id];
        if (cand.capability != base.capability) continue;
        if (cand.deposits != base.deposits || cand.requires_sealed != base.requires_sealed)
          continue;
        Params cand_params = remap_params(cand, ready[b].prog);
        if (!params_equal_ignoring_wells(base_params, cand_params)) continue;
        if (base.capability == cap::liquid_transfer) {
          // same stock draw: identical reagent, source and volume
          if (param_str(base_params, "src", "") != param_str(cand_params, "src", ""))
            continue;
          ContainerAddr bd = ContainerAddr::parse(param_str(base_params, "dst", ""));
          ContainerAddr cd = ContainerAddr::parse(param_str(cand_params, "dst", ""));
          if (bd.zone != cd.zone || bd.row != cd.row) continue;
        } else {
          auto bw = operated_wells(base);
          auto cw = operated_wells(cand);
          bool colocatable = true;
          for (const auto& w : bw)
            for (const auto& v : cw)
              colocatable &= remap(w, ready[a].prog).zone == remap(v, ready[b].prog).zone &&
                             remap(w, ready[a].prog).row == remap(v, ready[b].prog).row;
          if (!colocatable || bw.empty() || cw.empty()) continue;
        }
        used[b] = true;
        members.insert(ready[b].prog);
        group.push_back(ready[b]);
      }
      groups.push_back(std::move(group));
    }

    for (auto& group : groups) {
      // transfers additionally split into runs of consecutive destination
      // columns, chunked to the pipette channel count
      std::vector<std::vector<Entry>> chunks;
      const Invocation& base = programs[group.front().prog].invocations[group.front().id];
      if (base.capability == cap::liquid_transfer && group.size() > 1) {
        std::sort(group.begin(), group.end(), [&](const Entry& x, const Entry& y) {
          ContainerAddr dx = remap(
              programs[x.prog].invocations[x.id].writes.front(), x.prog);
          ContainerAddr dy = remap(
              programs[y.prog].invocations[y.id].writes.front(), y.prog);
          return dx < dy;
        });
        std::vector<Entry> run;
        int prev_col = 0;
        for (const auto& e : group) {
          ContainerAddr d =
              remap(programs[e.prog].invocations[e.id].writes.front(), e.prog);
          bool contiguous = !run.empty() && d.col == prev_col + 1;
          if (!run.empty() &&
              (!contiguous || static_cast<int>(run.size()) >= channels)) {
            chunks.push_back(run);
            run.clear();
          }
          run.push_back(e);
          prev_col = d.col;
        }
        if (!run.empty()) chunks.push_back(run);
      } else {
        chunks.push_back(group);
      }

      for (const auto& chunk : chunks) {
        const Invocation& first = programs[chunk.front().prog].invocations[chunk.front().id];
        Invocation merged;
        merged.id = static_cast<int>(out.invocations.size());
        merged.capability = first.capability;
        merged.deposits = first.deposits;
        merged.requires_sealed = first.requires_sealed;
        merged.source_step = first.source_step;
        merged.params = remap_params(first, chunk.front().prog);
        for (const auto& e : chunk) {
          const Invocation& inv = programs[e.prog].invocations[e.id];
          for (const auto& c : inv.reads) merged.reads.push_back(remap(c, e.prog));
          for (const auto& c : inv.writes) merged.writes.push_back(remap(c, e.prog));
          for (int d : inv.depends_on) merged.depends_on.insert(new_id[e.prog][d]);
        }
        std::sort(merged.reads.begin(), merged.reads.end());
        merged.reads.erase(std::unique(merged.reads.begin(), merged.reads.end()),
                           merged.reads.end());
        std::sort(merged.writes.begin(), merged.writes.end());
        merged.writes.erase(std::unique(merged.writes.begin(), merged.writes.end()),
                            merged.writes.end());
        if (chunk.size() > 1) {
          if (merged.capability == cap::liquid_transfer) {
            std::vector<ContainerAddr> dsts;
            for (const auto& e : chunk)
              dsts.push_back(
                  remap(programs[e.prog].invocations[e.id].writes.front(), e.prog));
            std::sort(dsts.begin(), dsts.end());
            merged.params["dst"] = joined_wells(dsts);
          } else if (merged.params.count("well")) {
            merged.params["well"] = joined_wells(operated_wells(merged));
          }
          MergeNote note;
          note.invocation_id = merged.id;
          note.at = out.release_time;
          for (const auto& e : chunk)
            note.sources.emplace_back(programs[e.prog].program_id, e.id);
          out.merge_notes.push_back(std::move(note));
        }
        for (const auto& e : chunk) {
          new_id[e.prog][e.id] = merged.id;
          done[e.prog][e.id] = true;
          ++emitted_total;
        }
        out.invocations.push_back(std::move(merged));
      }
    }
  }
  for (auto& note : out.merge_notes) {
    note.program_id = out.program_id;
    note.request_id = out.request_id;
  }
  return out;
}

std::vector<Allocation> Dispatcher::dispatch(const std::vector<Program>& batch,
                                             Policy policy, Schedule& into) {
  std::vector<Allocation> added;
  const Registry& reg = *reg_;
  into.policy = policy;

  for (const auto& prog : batch) {
    for (const auto& inv : prog.invocations)
      if (inv.bound_service.empty())
        throw UnschedulableError("program " + prog.program_id + " invocation " +
                                 std::to_string(inv.id) + " is not bound");
    for (const auto& note : prog.merge_notes) into.merges.push_back(note);
  }

  if (policy == Policy::serial_queue) {
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return batch[a].release_time < batch[b].release_time;
    });
    for (std::size_t idx : order) {
      const Program& prog = batch[idx];
      Tick cursor = std::max(serial_cursor_, prog.release_time);
      std::vector<Tick> ends(prog.invocations.size(), 0);
      for (const auto& inv : prog.invocations) {
        const AtomicService& svc = reg.service(inv.bound_service);
        Tick ready = prog.release_time;
        for (int d : inv.depends_on) ready = std::max(ready, ends[d]);
        Tick start = std::max({cursor, ready, busy_at(busy_until_, svc.instrument_id)});
        Tick end = start + inv.est_ticks;
        Allocation a;
        a.program_id = prog.program_id;
        a.invocation_id = inv.id;
        a.request_id = prog.request_id;
        a.instrument_id = svc.instrument_id;
        a.service_id = svc.service_id;
        a.capability = inv.capability;
        a.start = start;
        a.end = end;
        a.ready = ready;
        added.push_back(a);
        busy_until_[svc.instrument_id] = end;
        ends[inv.id] = end;
        cursor = end;
      }
      serial_cursor_ = cursor;
    }
  } else {
    struct Pending {
      const Program* prog = nullptr;
      std::size_t prog_idx = 0;
      const Invocation* inv = nullptr;
      int remaining_deps = 0;
      Tick ready = 0;
    };
    std::vector<std::vector<Pending>> pending(batch.size());
    std::vector<std::vector<std::vector<int>>> successors(batch.size());
    std::vector<Pending*> ready_list;
    std::size_t remaining = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      pending[i].resize(batch[i].invocations.size());
      successors[i].resize(batch[i].invocations.size());
      for (const auto& inv : batch[i].invocations) {
        Pending& p = pending[i][inv.id];
        p.prog = &batch[i];
        p.prog_idx = i;
        p.inv = &inv;
        p.remaining_deps = static_cast<int>(inv.depends_on.size());
        p.ready = batch[i].release_time;
        for (int d : inv.depends_on) successors[i][d].push_back(inv.id);
        if (p.remaining_deps == 0) ready_list.push_back(&p);
        ++remaining;
      }
    }

    while (remaining > 0) {
      if (ready_list.empty()) throw UnschedulableError("dependency cycle in batch");
      std::size_t best_idx = 0;
      Binding best_binding;
      for (std::size_t k = 0; k < ready_list.size(); ++k) {
        const Pending& p = *ready_list[k];
        Binding b = reroute(*p.inv, reg, busy_until_, p.ready);
        if (k == 0) {
          best_binding = b;
          continue;
        }
        const Pending& cur = *ready_list[best_idx];
        auto key = std::make_tuple(b.start, p.prog->release_time, p.prog->program_id,
                                   p.inv->id);
        auto best_key = std::make_tuple(best_binding.start, cur.prog->release_time,
                                        cur.prog->program_id, cur.inv->id);
        if (key < best_key) {
          best_idx = k;
          best_binding = b;
        }
      }
      Pending* best = ready_list[best_idx];
      ready_list[best_idx] = ready_list.back();
      ready_list.pop_back();

      Tick end = best_binding.start + best_binding.duration;
      Allocation a;
      a.program_id = best->prog->program_id;
      a.invocation_id = best->inv->id;
      a.request_id = best->prog->request_id;
      a.instrument_id = best_binding.instrument_id;
      a.service_id = best_binding.service_id;
      a.capability = best->inv->capability;
      a.start = best_binding.start;
      a.end = end;
      a.ready = best->ready;
      added.push_back(a);
      busy_until_[best_binding.instrument_id] = end;
      if (best_binding.rerouted) {
        RerouteNote rr;
        rr.program_id = best->prog->program_id;
        rr.invocation_id = best->inv->id;
        rr.request_id = best->prog->request_id;
        rr.preferred_service = best_binding.preferred_service;
        rr.chosen_service = best_binding.service_id;
        rr.chosen_instrument = best_binding.instrument_id;
        rr.at = best_binding.start;
        into.reroutes.push_back(rr);
      }
      --remaining;
      for (int succ : successors[best->prog_idx][best->inv->id]) {
        Pending& p = pending[best->prog_idx][succ];
        p.ready = std::max(p.ready, end);
        if (--p.remaining_deps == 0) ready_list.push_back(&p);
      }
      serial_cursor_ = std::max(serial_cursor_, end);
    }
  }

  for (const auto& a : added) {
    into.allocations.push_back(a);
    into.makespan = std::max(into.makespan, a.end);
  }
  return added;
}

Schedule schedule(const std::vector<Program>& programs, const Registry& reg,
                  Policy policy) {
  Schedule s;
  s.policy = policy;
  Dispatcher d(reg);
  d.dispatch(programs, policy, s);
  return s;
}

std::string event_kind_str(Event::Kind k) {
  switch (k) {
    case Event::Kind::merge: return "merge";
    case Event::Kind::finish: return "finish";
    case Event::Kind::reroute: return "reroute";
    case Event::Kind::queue_wait: return "queue_wait";
    case Event::Kind::start: return "start";
  }
  return "?";
}

namespace {

int event_rank(Event::Kind k) {
  switch (k) {
    case Event::Kind::merge: return 0;
    case Event::Kind::finish: return 1;
    case Event::Kind::reroute: return 2;
    case Event::Kind::queue_wait: return 3;
    case Event::Kind::start: return 4;
  }
  return 5;
}

}  // namespace

EventTrace simulate(const Schedule& sched) {
  EventTrace trace;
  trace.makespan = sched.makespan;
  for (const auto& note : sched.merges) {
    Event e;
    e.time = note.at;
    e.kind = Event::Kind::merge;
    e.request_id = note.request_id;
    e.program_id = note.program_id;
    e.invocation_id = note.invocation_id;
    e.instrument_id = "-";
    e.service_id = "-";
    trace.events.push_back(e);
  }
  for (const auto& rr : sched.reroutes) {
    Event e;
    e.time = rr.at;
    e.kind = Event::Kind::reroute;
    e.request_id = rr.request_id;
    e.program_id = rr.program_id;
    e.invocation_id = rr.invocation_id;
    e.instrument_id = rr.chosen_instrument;
    e.service_id = rr.chosen_service;
    trace.events.push_back(e);
  }
  for (const auto& a : sched.allocations) {
    if (a.start > a.ready) {
      Event w;
      w.time = a.ready;
      w.kind = Event::Kind::queue_wait;
      w.request_id = a.request_id;
      w.program_id = a.program_id;
      w.invocation_id = a.invocation_id;
      w.instrument_id = a.instrument_id;
      w.service_id = a.service_id;
      trace.events.push_back(w);
    }
    Event s;
    s.time = a.start;
    s.kind = Event::Kind::start;
    s.request_id = a.request_id;
    s.program_id = a.program_id;
    s.invocation_id = a.invocation_id;
    s.instrument_id = a.instrument_id;
    s.service_id = a.service_id;
    trace.events.push_back(s);
    Event f = s;
    f.time = a.end;
    f.kind = Event::Kind::finish;
    trace.events.push_back(f);
    ++trace.step_count;
  }
  std::sort(trace.events.begin(), trace.events.end(), [](const Event& x, const Event& y) {
    return std::make_tuple(x.time, event_rank(x.kind), x.request_id, x.program_id,
                           x.invocation_id) <
           std::make_tuple(y.time, event_rank(y.kind), y.request_id, y.program_id,
                           y.invocation_id);
  });
  return trace;
}

std::string EventTrace::to_csv() const {
  std::ostringstream out;
  out << "time_tick,event_kind,request_id,invocation_id,instrument_id,service_id\n";
  for (const auto& e : events) {
    out << e.time << "," << event_kind_str(e.kind) << "," << e.request_id << ","
        << e.program_id << "/" << e.invocation_id << "," << e.instrument_id << ","
        << e.service_id << "\n";
  }
  return out.str();
}

UtilizationReport utilization(const EventTrace& trace, Tick makespan) {
  if (makespan <= 0)
    throw ZeroMakespanError("cannot compute utilization over an empty window");
  UtilizationReport report;
  report.makespan = makespan;
  std::map<std::pair<std::string, int>, Tick> started;
  std::map<std::pair<std::string, int>, Tick> waited_since;
  for (const auto& e : trace.events) {
    auto key = std::make_pair(e.program_id, e.invocation_id);
    switch (e.kind) {
      case Event::Kind::queue_wait:
        waited_since[key] = e.time;
        break;
      case Event::Kind::start: {
        started[key] = e.time;
        auto w = waited_since.find(key);
        if (w != waited_since.end()) {
          report.total_queue_wait += e.time - w->second;
          waited_since.erase(w);
        }
        if (!report.busy_ticks.count(e.instrument_id))
          report.busy_ticks[e.instrument_id] = 0;
        break;
      }
      case Event::Kind::finish: {
        auto s = started.find(key);
        if (s != started.end()) {
          report.busy_ticks[e.instrument_id] += e.time - s->second;
          started.erase(s);
        }
        break;
      }
      default:
        break;
    }
  }
  for (const auto& [instr, busy] : report.busy_ticks)
    report.busy_ratio[instr] = static_cast<double>(busy) / static_cast<double>(makespan);
  return report;
}

std::string UtilizationReport::to_csv() const {
  std::ostringstream out;
  out << "instrument_id,busy_ticks,makespan_ticks,busy_ratio\n";
  char buf[32];
  for (const auto& [instr, busy] : busy_ticks) {
    std::snprintf(buf, sizeof(buf), "%.6f",
                  static_cast<double>(busy) / static_cast<double>(makespan));
    out << instr << "," << busy << "," << makespan << "," << buf << "\n";
  }
  return out.str();
}

std::string UtilizationReport::to_text() const {
  std::ostringstream out;
  out << "makespan " << text::format_minutes(makespan) << " min, total queue wait "
      << text::format_minutes(total_queue_wait) << " min\n";
  char buf[32];
  for (const auto& [instr, busy] : busy_ticks) {
    std::snprintf(buf, sizeof(buf), "%6.2f%%",
                  100.0 * static_cast<double>(busy) / static_cast<double>(makespan));
    out << "  " << instr << "  busy " << text::format_minutes(busy) << " min  " << buf
        << "\n";
  }
  return out.str();
}

}  // namespace autolab
