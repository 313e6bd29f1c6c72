#pragma once

#include <string>

#include <json.hpp>

namespace kcl {

using json = nlohmann::ordered_json;

/// Rounds to `digits` significant digits so JSON output is stable.
double round_sig(double x, int digits = 12);

/// JSON number for a double at 12 significant digits; non-finite values
/// become strings ("inf", "-inf", "nan").
json num(double x);

/// Text form at 12 significant digits, for CSV and plain output.
std::string format_number(double x);

/// Compact single-line dump used for every machine-readable output.
std::string dump(const json& j);

} // namespace kcl
