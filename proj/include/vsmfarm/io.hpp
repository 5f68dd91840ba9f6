#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vsmfarm/control.hpp"
#include "vsmfarm/model.hpp"
#include "vsmfarm/sim.hpp"

namespace vsmfarm {

/// Malformed or inconsistent input file. The message names the offending key.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

// Unknown keys are rejected; missing keys keep their defaults.
Json to_json(const FarmConfig& cfg);
FarmConfig config_from_json(const Json& j);

Json to_json(const ControllerSet& set);
ControllerSet controllers_from_json(const Json& j);

Json to_json(const Scenario& sc);
Scenario scenario_from_json(const Json& j);

/// Parses text; wraps syntax errors in ParseError.
Json parse_json_text(const std::string& text, const std::string& origin);

FarmConfig load_config(const std::string& path);
ControllerSet load_controllers(const std::string& path);
Scenario load_scenario(const std::string& path);

/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

/// Whole file as bytes; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);

}  // namespace vsmfarm
