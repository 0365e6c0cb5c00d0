#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "etl/simulation.hpp"

namespace etl::cli {

using Json = nlohmann::ordered_json;

/// Scenario file problem with a position for the diagnostic. `line` is 0 when
/// the offending entry could not be located in the source text.
class ScenarioFileError : public ConfigError {
 public:
  ScenarioFileError(std::string field, const std::string& message, long line)
      : ConfigError(std::move(field), message), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Every key is optional; absent keys keep the servo_study_scenario() value.
/// Unknown keys and wrongly typed values raise ConfigError naming the field path.
Scenario scenario_from_json(const Json& doc);
Json scenario_to_json(const Scenario& sc);

/// Parses and validates. Throws ScenarioFileError carrying the line of the
/// problem (syntax position, or the line where the offending key appears).
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace etl::cli
