#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "autolab/registry.hpp"

namespace autolab {

/// Deck coordinate of a container: zone plus row/column within the zone.
/// Zones whose name starts with "reservoir" hold shared stock and are
/// treated as common sources rather than per-run workspace.
struct ContainerAddr {
  std::string zone;
  int row = 0;
  int col = 0;

  bool operator==(const ContainerAddr& o) const {
    return zone == o.zone && row == o.row && col == o.col;
  }
  bool operator<(const ContainerAddr& o) const {
    if (zone != o.zone) return zone < o.zone;
    if (row != o.row) return row < o.row;
    return col < o.col;
  }
  bool shared_source() const { return zone.rfind("reservoir", 0) == 0; }
  std::string str() const {
    return zone + ":" + std::to_string(row) + "," + std::to_string(col);
  }
  static ContainerAddr parse(const std::string& s);
};

/// Parameter values are numbers or short symbolic strings (buffer names,
/// sample ids).
using ParamValue = std::variant<double, std::string>;
using Params = std::map<std::string, ParamValue>;

std::string param_value_str(const ParamValue& v);
bool param_value_eq(const ParamValue& a, const ParamValue& b);
double param_num(const Params& p, const std::string& name, double fallback);
std::string param_str(const Params& p, const std::string& name,
                      const std::string& fallback);

enum class StepKind { transfer, incubate, measure, wash, mix, seal, unseal, synthesis_cycle };
enum class Modality { fluorescence, sequencing };

/// One chemistry-level step of a procedure.  Fields are interpreted per kind;
/// numeric fields may be bound to a procedure parameter via *_param names,
/// which instantiation resolves before compilation.
struct Step {
  StepKind kind = StepKind::transfer;

  std::string reagent;         // transfer
  double volume_ul = 0;        // transfer
  ContainerAddr src;           // transfer
  ContainerAddr dst;           // transfer
  ContainerAddr container;     // all other kinds

  double temp_c = 0;           // incubate
  double duration_min = 0;     // incubate
  std::string duration_param;  // incubate: parameter reference, overrides duration_min
  bool requires_sealed = false;

  Modality modality = Modality::fluorescence;  // measure
  double analysis_min = 0;                     // measure

  std::string buffer;        // wash: literal reagent or "$param" reference
  int repeats = 1;           // wash

  char base = 'A';           // synthesis_cycle
};

struct Goal {
  enum class Kind { threshold, minimize };
  Kind kind = Kind::minimize;
  std::string metric;  // "yield" or "time"
  double value = 0;    // threshold only
};

/// Ordered list of goals compared lexicographically, most important first.
struct Objective {
  std::vector<Goal> goals;
  bool empty() const { return goals.empty(); }
  std::string str() const;
  static Objective parse(const std::vector<std::string>& tokens);
};

/// Validated, parameterised recipe.  Steps are already resolved against
/// params (no dangling references).
struct Procedure {
  std::string procedure_id;
  std::string task;
  std::vector<Step> steps;
  Params params;
  Objective objective;
};

struct Request {
  std::string request_id;
  std::string user_id;
  std::string task;
  Params param_overrides;
  Objective objective;
  Tick submit_time = 0;
  std::vector<std::uint8_t> payload;  // storage tasks only
};

struct Shortfall {
  std::string reagent;
  double missing_ul = 0;
};

struct Feasibility {
  bool feasible = true;
  std::vector<Shortfall> missing;
};

/// Consumable stock keyed by reagent name, with per-request reservation
/// ledger so aborted requests can return what they claimed.
class ReagentInventory {
 public:
  static ReagentInventory load(const std::filesystem::path& path);
  static ReagentInventory parse(const std::string& src, const std::string& origin);

  void set_stock(const std::string& reagent, double ul);
  double quantity(const std::string& reagent) const;

  Feasibility screen(const Procedure& proc) const;
  void reserve(const Procedure& proc, const std::string& request_id);
  void release(const std::string& request_id);

  const std::map<std::string, double>& stock() const { return stock_; }
  const std::map<std::string, std::map<std::string, double>>& ledger() const {
    return ledger_;
  }
  std::string to_text() const;

 private:
  std::map<std::string, double> stock_;
  std::map<std::string, std::map<std::string, double>> ledger_;
};

/// Total reagent demand of a procedure: transfer volumes drawn from shared
/// reservoirs plus wash buffer consumption, summed per reagent.
std::map<std::string, double> reagent_demand(const Procedure& proc);

/// Template knowledge base: named tasks mapping to one or more candidate
/// procedures (alternative recipes for the same goal).
class TemplateKB {
 public:
  static TemplateKB load(const std::filesystem::path& path);
  static TemplateKB parse(const std::string& src, const std::string& origin);

  /// Candidate procedures for a task, instantiated with default params,
  /// in declaration order.  Unknown task -> empty vector.
  std::vector<Procedure> lookup(const std::string& task) const;

  /// Candidates with request overrides applied on top of defaults.
  std::vector<Procedure> instantiate(const std::string& task, const Params& overrides) const;

  std::vector<std::string> tasks() const;
  bool has_task(const std::string& task) const;
  std::string to_text() const;

 private:
  struct TemplateEntry {
    std::string task;
    std::vector<Procedure> candidates;
  };
  std::vector<TemplateEntry> entries_;
  const TemplateEntry* find(const std::string& task) const;
};

/// Parses "task(key=value,key=value)" into task name and params.
std::pair<std::string, Params> parse_task_expr(const std::string& expr);

/// Checks that every parameter referenced by a step exists, resolving
/// references; throws ParseError when validation fails.
void resolve_step_params(Procedure& proc);

double wash_volume_ul(int repeats);

}  // namespace autolab
