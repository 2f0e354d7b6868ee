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

#include "text.hpp"

#ifndef HWLOOP_FIXTURES
#define HWLOOP_FIXTURES "tests/fixtures"
#endif
#ifndef HWLOOP_BUILD_DIR
#define HWLOOP_BUILD_DIR "build"
#endif

namespace hwloop::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(HWLOOP_FIXTURES) / rel; }
inline std::string fixture_text(const std::string& rel) { return text::read_file(fixture(rel)); }
inline std::filesystem::path build_dir() { return HWLOOP_BUILD_DIR; }

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "hwloop-test-XXXXXX").string();
    path = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace hwloop::testing
