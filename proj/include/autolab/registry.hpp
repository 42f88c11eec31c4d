#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace autolab {

using Tick = std::int64_t;  // one tick = 0.1 minute

/// Converts wall minutes to ticks; any positive duration occupies at least
/// one tick so zero-length allocations cannot appear in a schedule.
Tick minutes_to_ticks(double minutes);

enum class ParamType { temperature, duration, volume, well, count };

ParamType param_type_from_string(const std::string& s);
std::string param_type_to_string(ParamType t);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::count;
  double min_value = 0;
  double max_value = 0;
};

/// Linear duration model: minutes = base + per_unit * quantity, where the
/// quantity is read from the invocation parameter named by unit_param.
struct DurationModel {
  double base_min = 1.0;
  double per_unit_min = 0.0;
  std::string unit_param;

  double minutes_for(double quantity) const {
    return base_min + per_unit_min * quantity;
  }
};

/// Smallest schedulable operation an instrument offers.
struct AtomicService {
  std::string service_id;  // "<instrument_id>.<name>"
  std::string instrument_id;
  std::string name;
  std::string description;
  std::vector<ParamSpec> params_schema;
  std::set<std::string> tags;
  DurationModel duration;

  const ParamSpec* find_param(const std::string& name) const;
};

struct Instrument {
  std::string instrument_id;
  std::string kind;
  int channels = 1;
  bool exclusive = true;
  std::vector<AtomicService> services;
};

/// Catalog of instruments and their services, indexed by capability tag.
///
/// Functional equivalence is directional: service B can substitute for
/// service A when B's tag set is a superset of A's.
class Registry {
 public:
  static Registry load(const std::filesystem::path& path);
  static Registry parse(const std::string& src, const std::string& origin);

  const std::map<std::string, Instrument>& instruments() const { return instruments_; }
  std::size_t instrument_count() const { return instruments_.size(); }

  bool has_instrument(const std::string& id) const;
  const Instrument& instrument(const std::string& id) const;
  bool has_service(const std::string& service_id) const;
  const AtomicService& service(const std::string& service_id) const;

  /// Services carrying the given tag, ordered by service id.
  std::vector<const AtomicService*> services_with_capability(const std::string& tag) const;

  /// Services other than `service_id` whose tag sets contain every tag of
  /// `service_id`, ordered by service id.
  std::vector<const AtomicService*> equivalents(const std::string& service_id) const;

  const std::map<std::string, std::set<std::string>>& tag_index() const {
    return tag_index_;
  }

  /// Recomputes the tag index from scratch (used to audit the cached one).
  std::map<std::string, std::set<std::string>> rebuild_tag_index() const;

  std::string to_text() const;

 private:
  void add_instrument(Instrument inst);
  void validate() const;

  std::map<std::string, Instrument> instruments_;
  std::map<std::string, std::pair<std::string, std::size_t>> service_pos_;
  std::map<std::string, std::set<std::string>> tag_index_;
};

}  // namespace autolab
