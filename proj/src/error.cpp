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

#include "e3p/error.hpp"

namespace e3p {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_record: return "malformed record";
    case ErrorKind::duplicate_name: return "duplicate name";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::no_candidates: return "no candidates";
    case ErrorKind::unparseable: return "unparseable input";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::protocol: return "protocol error";
    case ErrorKind::insufficient_telemetry: return "insufficient telemetry";
    case ErrorKind::spawn: return "spawn failure";
    case ErrorKind::session: return "session error";
    case ErrorKind::mismatched_sets: return "mismatched sets";
    case ErrorKind::empty_intersection: return "empty intersection";
    case ErrorKind::unsupported_format: return "unsupported format";
    case ErrorKind::io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace e3p
