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

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "e3p/measurement.hpp"
#include "e3p/telemetry.hpp"

namespace e3p {

/// Measurement session settings read from a `key = value` file.
///
/// Recognised keys: command, telemetry, telemetry_command, log, log_format,
/// interval_ms, rails, trials, window, cooldown_ms, idle_ms, timeout_ms,
/// model, device, dataset, registry, output. Values are bare words, quoted
/// strings, or (command keys only) TOML-style string arrays. '#' starts a
/// comment. Unset keys stay nullopt so command-line flags can fill them.
struct SessionConfig {
  std::optional<std::vector<std::string>> command;
  std::optional<TelemetrySource::Kind> telemetry;
  std::optional<std::vector<std::string>> telemetry_command;
  std::optional<std::filesystem::path> log;
  std::optional<LogFormat> log_format;
  std::optional<int> interval_ms;
  std::optional<RailSelection> rails;
  std::optional<int> trials;
  std::optional<WindowMode> window;
  std::optional<int> cooldown_ms;
  std::optional<int> idle_ms;
  std::optional<int> timeout_ms;
  std::optional<std::string> model;
  std::optional<std::string> device;
  std::optional<std::string> dataset;
  std::optional<std::filesystem::path> registry;
  std::optional<std::filesystem::path> output;
};

/// Throws Error(configuration) with the offending line number.
SessionConfig parse_session_config(std::istream& in, const std::string& source = "<config>");
SessionConfig load_session_config(const std::filesystem::path& path);

}  // namespace e3p
