#include "autolab/registry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "autolab/errors.hpp"
#include "autolab/text.hpp"

namespace autolab {

Tick minutes_to_ticks(double minutes) {
  if (minutes <= 0) return 0;
  Tick t = static_cast<Tick>(std::llround(minutes * 10.0));
  return t < 1 ? 1 : t;
}

ParamType param_type_from_string(const std::string& s) {
  if (s == "temperature") return ParamType::temperature;
  if (s == "duration") return ParamType::duration;
  if (s == "volume") return ParamType::volume;
  if (s == "well") return ParamType::well;
  if (s == "count") return ParamType::count;
  throw ParseError("unknown param type '" + s + "'");
}

std::string param_type_to_string(ParamType t) {
  switch (t) {
    case ParamType::temperature: return "temperature";
    case ParamType::duration: return "duration";
    case ParamType::volume: return "volume";
    case ParamType::well: return "well";
    case ParamType::count: return "count";
  }
  return "count";
}

const ParamSpec* AtomicService::find_param(const std::string& pname) const {
  for (const auto& p : params_schema)
    if (p.name == pname) return &p;
  return nullptr;
}

namespace {

AtomicService parse_service(const text::Node& node, const std::string& instrument_id) {
  AtomicService svc;
  svc.name = node.arg(0);
  svc.instrument_id = instrument_id;
  svc.service_id = instrument_id + "." + svc.name;
  for (const auto& child : node.children) {
    if (child.key == "description") {
      svc.description = child.arg(0);
    } else if (child.key == "tags") {
      for (const auto& t : child.args) svc.tags.insert(t);
    } else if (child.key == "param") {
      ParamSpec spec;
      spec.name = child.arg(0);
      spec.type = param_type_from_string(child.arg(1));
      spec.min_value = child.num(2);
      spec.max_value = child.num(3);
      if (spec.min_value > spec.max_value)
        throw ParseError("service " + svc.service_id + ": param '" + spec.name +
                         "' has an empty range");
      svc.params_schema.push_back(spec);
    } else if (child.key == "duration_model") {
      svc.duration.base_min = child.num(0);
      svc.duration.per_unit_min = child.num(1);
      svc.duration.unit_param = child.args.size() > 2 ? child.arg(2) : "";
    } else {
      throw ParseError("service " + svc.service_id + ": unknown entry '" + child.key +
                       "' at line " + std::to_string(child.line));
    }
  }
  if (svc.tags.empty())
    throw ParseError("service " + svc.service_id + " declares no capability tags");
  return svc;
}

}  // namespace

Registry Registry::load(const std::filesystem::path& path) {
  return parse(text::read_text_file(path), path.string());
}

Registry Registry::parse(const std::string& src, const std::string& origin) {
  Registry reg;
  auto nodes = text::parse_string(src, origin);
  for (const auto& node : nodes) {
    if (node.key != "instrument")
      throw ParseError(origin + ": unexpected top-level entry '" + node.key + "'");
    Instrument inst;
    inst.instrument_id = node.arg(0);
    for (const auto& child : node.children) {
      if (child.key == "kind") {
        inst.kind = child.arg(0);
      } else if (child.key == "channels") {
        inst.channels = static_cast<int>(child.integer(0));
        if (inst.channels < 1)
          throw ParseError("instrument " + inst.instrument_id + ": channels must be >= 1");
      } else if (child.key == "exclusive") {
        inst.exclusive = child.arg(0) == "true";
      } else if (child.key == "service") {
        inst.services.push_back(parse_service(child, inst.instrument_id));
      } else {
        throw ParseError("instrument " + inst.instrument_id + ": unknown entry '" +
                         child.key + "' at line " + std::to_string(child.line));
      }
    }
    reg.add_instrument(std::move(inst));
  }
  reg.validate();
  return reg;
}

void Registry::add_instrument(Instrument inst) {
  if (instruments_.count(inst.instrument_id))
    throw DuplicateIdError("instrument '" + inst.instrument_id + "'");
  for (std::size_t i = 0; i < inst.services.size(); ++i) {
    const auto& svc = inst.services[i];
    if (service_pos_.count(svc.service_id))
      throw DuplicateIdError("service '" + svc.service_id + "'");
    service_pos_[svc.service_id] = {inst.instrument_id, i};
    for (const auto& tag : svc.tags) tag_index_[tag].insert(svc.service_id);
  }
  instruments_[inst.instrument_id] = std::move(inst);
}

void Registry::validate() const {
  if (instruments_.empty()) throw EmptyRegistryError("registry has no instruments");
  bool any_service = false;
  for (const auto& [id, inst] : instruments_) any_service |= !inst.services.empty();
  if (!any_service) throw EmptyRegistryError("registry has no services");
}

bool Registry::has_instrument(const std::string& id) const {
  return instruments_.count(id) != 0;
}

const Instrument& Registry::instrument(const std::string& id) const {
  auto it = instruments_.find(id);
  if (it == instruments_.end()) throw UnknownServiceError("instrument '" + id + "'");
  return it->second;
}

bool Registry::has_service(const std::string& service_id) const {
  return service_pos_.count(service_id) != 0;
}

const AtomicService& Registry::service(const std::string& service_id) const {
  auto it = service_pos_.find(service_id);
  if (it == service_pos_.end()) throw UnknownServiceError("service '" + service_id + "'");
  return instruments_.at(it->second.first).services[it->second.second];
}

std::vector<const AtomicService*> Registry::services_with_capability(
    const std::string& tag) const {
  std::vector<const AtomicService*> out;
  auto it = tag_index_.find(tag);
  if (it == tag_index_.end()) return out;
  for (const auto& sid : it->second) out.push_back(&service(sid));
  return out;
}

std::vector<const AtomicService*> Registry::equivalents(
    const std::string& service_id) const {
  const AtomicService& base = service(service_id);
  std::vector<const AtomicService*> out;
  for (const auto& [sid, pos] : service_pos_) {
    if (sid == service_id) continue;
    const AtomicService& cand = service(sid);
    if (std::includes(cand.tags.begin(), cand.tags.end(), base.tags.begin(),
                      base.tags.end()))
      out.push_back(&cand);
  }
  return out;
}

std::map<std::string, std::set<std::string>> Registry::rebuild_tag_index() const {
  std::map<std::string, std::set<std::string>> index;
  for (const auto& [id, inst] : instruments_)
    for (const auto& svc : inst.services)
      for (const auto& tag : svc.tags) index[tag].insert(svc.service_id);
  return index;
}

std::string Registry::to_text() const {
  std::ostringstream out;
  for (const auto& [id, inst] : instruments_) {
    out << "instrument " << id << " {\n";
    out << "  kind " << inst.kind << "\n";
    out << "  channels " << inst.channels << "\n";
    out << "  exclusive " << (inst.exclusive ? "true" : "false") << "\n";
    for (const auto& svc : inst.services) {
      out << "  service " << svc.name << " {\n";
      if (!svc.description.empty())
        out << "    description \"" << svc.description << "\"\n";
      out << "    tags";
      for (const auto& t : svc.tags) out << " " << t;
      out << "\n";
      for (const auto& p : svc.params_schema)
        out << "    param " << p.name << " " << param_type_to_string(p.type) << " "
            << text::format_number(p.min_value) << " "
            << text::format_number(p.max_value) << "\n";
      out << "    duration_model " << text::format_number(svc.duration.base_min) << " "
          << text::format_number(svc.duration.per_unit_min);
      if (!svc.duration.unit_param.empty()) out << " " << svc.duration.unit_param;
      out << "\n  }\n";
    }
    out << "}\n";
  }
  return out.str();
}

}  // namespace autolab
