#pragma once

#include <filesystem>
#include <string>

#include "autolab/procedure.hpp"
#include "autolab/registry.hpp"

namespace testutil {

inline std::filesystem::path source_dir() { return AUTOLAB_SOURCE_DIR; }

inline std::filesystem::path scenario(const std::string& name) {
  return source_dir() / "scenarios" / name;
}

inline std::filesystem::path golden(const std::string& name) {
  return source_dir() / "tests" / "golden" / name;
}

/// Two interchangeable heaters (different speeds), a thermocycler that
/// subsumes them, and a reader with no substitute.
inline const char* kBenchRegistry = R"(
instrument h1 {
  kind heater
  channels 1
  exclusive true
  service hold {
    tags thermal.hold
    param temperature temperature 4 99
    param duration duration 1 600
    param well well 0 0
    duration_model 1 1 duration
  }
}
instrument h2 {
  kind heater
  channels 1
  exclusive true
  service hold {
    tags thermal.hold
    param temperature temperature 4 99
    param duration duration 1 600
    param well well 0 0
    duration_model 2 1 duration
  }
}
instrument tc {
  kind thermocycler
  channels 1
  exclusive true
  service set {
    tags thermal.hold thermal.cycle
    param temperature temperature 4 105
    param duration duration 1 600
    param well well 0 0
    duration_model 3 1 duration
  }
}
instrument rd {
  kind plate_reader
  channels 1
  exclusive true
  service read {
    tags optical.fluorescence
    param analysis_min duration 1 300
    param well well 0 0
    duration_model 1 1 analysis_min
  }
}
)";

inline autolab::Registry bench_registry() {
  return autolab::Registry::parse(kBenchRegistry, "bench");
}

}  // namespace testutil
