#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlab::csv {

/// Locale-independent shortest-roundtrip-ish rendering ("%.15g").
std::string number(double v);
std::string number(const std::optional<double>& v);  // empty when absent

std::string join(const std::vector<std::string>& fields);

void write_file(const std::string& path, std::string_view contents);

}  // namespace nlab::csv
