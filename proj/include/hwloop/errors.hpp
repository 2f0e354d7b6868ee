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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hwloop {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed suite documents, run configs and pin maps. CLI exit 1.
struct ConfigError : Error {
  ConfigError(std::string msg, int line = 0, std::string field = {})
      : Error(std::move(msg)), line(line), field(std::move(field)) {}
  int line;
  std::string field;
};

struct ConstraintError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(std::string msg, std::size_t offset) : Error(std::move(msg)), offset(offset) {}
  std::size_t offset;
};

struct NotFoundError : Error {
  using Error::Error;
};

struct AssemblyError : Error {
  using Error::Error;
};

// Missing tools or an unusable scratch area. Never a benchmark FAIL. CLI exit 2.
struct EnvironmentError : Error {
  using Error::Error;
};

struct TimeoutError : Error {
  using Error::Error;
};

struct TransportError : Error {
  TransportError(std::string msg, bool retriable = true) : Error(std::move(msg)), retriable(retriable) {}
  bool retriable;
};

struct AuthError : TransportError {
  explicit AuthError(std::string msg) : TransportError(std::move(msg), false) {}
};

// A scripted transcript ran out of replies.
struct ReplayUnderrun : Error {
  using Error::Error;
};

// An event that the loop engine cannot accept in its current phase.
struct ProtocolError : Error {
  using Error::Error;
};

// A malformed conversation log record (1-based record number).
struct RecordError : Error {
  RecordError(std::string msg, std::size_t record) : Error(std::move(msg)), record(record) {}
  std::size_t record;
};

struct CapacityError : Error {
  using Error::Error;
};

struct PinmapError : Error {
  using Error::Error;
};

}  // namespace hwloop
