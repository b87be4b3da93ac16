#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mfgp/harness.hpp"

namespace mfgp {

/// Method list a config gets when it names none.
std::vector<MethodSpec> default_methods(const std::string& benchmark);

/// Fully defaulted configuration for a benchmark.
ExperimentConfig default_config(const std::string& benchmark);

/// Parses a JSON experiment description. Missing keys take their defaults; unknown keys, wrong
/// types and invalid values raise ValidationError naming the field.
ExperimentConfig parse_config_text(std::string_view json_text);

/// Reads and parses a config file. Throws IoError when the file cannot be read.
ExperimentConfig parse_config(const std::filesystem::path& path);

} // namespace mfgp
