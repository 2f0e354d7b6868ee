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

#include <string>
#include <vector>

#include "ast.hpp"
#include "machine.hpp"
#include "model.hpp"

namespace hwloop::sim {

// Builds the instance hierarchy, binds names and compiles processes.
// `tops` may be empty, in which case every module that is never
// instantiated becomes a root. Returns false when errors were reported.
bool elaborate(const ast::Design& design, const std::vector<std::string>& tops,
               Model& model, Machine& machine, DiagnosticSink& diags);

}  // namespace hwloop::sim
