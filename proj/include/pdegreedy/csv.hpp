// Copyright 2026 The pdegreedy Authors
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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pdegreedy::csv {

/// Shortest round-trip-safe rendering with 17 significant digits.
[[nodiscard]] std::string num(double v);

/// Writes fields joined by commas plus a newline. Fields are not quoted;
/// callers only emit numbers and bare identifiers.
void write_row(std::ostream& out, std::span<const std::string> fields);

[[nodiscard]] std::vector<std::string> split(std::string_view line);

/// Column names x_1..x_n (or the given prefix).
[[nodiscard]] std::vector<std::string> numbered(std::string_view prefix, int n);

}  // namespace pdegreedy::csv
