#pragma once

// CSV formatting shared by every writer: a header row and numbers with 17 significant digits.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mfgp::detail {

std::string format_number(double x);

/// Writes one row, quoting fields that contain separators or quotes.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::string quote_field(std::string_view field);

} // namespace mfgp::detail
