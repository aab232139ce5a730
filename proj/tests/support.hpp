#pragma once

#include "ubisim/ubisim.hpp"

#include <filesystem>
#include <string>

#ifndef UBISIM_SCENARIO_DIR
#define UBISIM_SCENARIO_DIR "scenarios"
#endif

namespace ubisim::testing {

inline const char* kFiveServices =
    "[services]\n"
    "name=Print capacity=34\n"
    "name=View capacity=123\n"
    "name=SendEmail capacity=10 label=Send_e-mail\n"
    "name=UpdateBDD capacity=50 label=Update_the_BDD\n"
    "name=Scanner capacity=8\n";

inline std::filesystem::path scenario_path(const std::string& rel) {
  return std::filesystem::path(UBISIM_SCENARIO_DIR) / rel;
}

inline Scenario bundled(const std::string& rel) { return parse_scenario(read_file(scenario_path(rel))); }

inline ServiceId sid(std::uint32_t v) { return ServiceId{v}; }

}  // namespace ubisim::testing
