// Copyright 2026 The e3p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace e3p::text {

std::string_view trim(std::string_view s);

/// Splits one CSV record on ','. Double-quoted fields may contain commas and
/// doubled quotes (""). Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_csv(std::string_view line);

/// Quotes a field only when it contains ',', '"' or leading/trailing blanks.
std::string csv_field(std::string_view field);

/// Strict decimal parse: the whole (trimmed) string must be consumed and the
/// value must be finite.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that round-trips to the same double.
std::string shortest(double v);

std::vector<std::string> split_whitespace(std::string_view s);

/// getline that also strips a trailing '\r'.
bool read_line(std::istream& in, std::string& line);

}  // namespace e3p::text
