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

#include <stdexcept>
#include <string>
#include <string_view>

namespace e3p {

enum class ErrorKind {
  malformed_record,
  duplicate_name,
  domain,
  no_candidates,
  unparseable,
  configuration,
  protocol,
  insufficient_telemetry,
  spawn,
  session,
  mismatched_sets,
  empty_intersection,
  unsupported_format,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure surfaced by the library is an Error carrying a kind, so callers
/// (and the CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure for a single telemetry line; keeps the raw text for diagnostics.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(ErrorKind::unparseable, what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace e3p
