// Copyright 2026 The hwloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hwloop::text {

// Splits on '\n'. A trailing newline does not produce an empty last line.
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains(std::string_view s, std::string_view needle);
std::string collapse_space(std::string_view s);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
bool is_ident_char(char c);

// Whole-file helpers; write_file throws EnvironmentError on failure.
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& s);

}  // namespace hwloop::text
