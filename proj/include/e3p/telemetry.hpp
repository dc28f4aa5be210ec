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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace e3p {

/// One telemetry reading. Powers are always milliwatts.
struct PowerSample {
  std::int64_t t_ms = 0;
  std::map<std::string, double> rails;

  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Which rails make up "the power" of a sample.
class RailSelection {
 public:
  enum class Mode { single_rail, sum, total_board };

  static RailSelection single(std::string rail);
  static RailSelection sum(std::vector<std::string> rails);
  static RailSelection total_board(std::string rail);

  /// sum(VDD_SYS_GPU, VDD_SYS_CPU, VDD_SYS_SOC, VDD_SYS_DDR)
  static RailSelection tx2_compute();
  static RailSelection tx2_board();
  static RailSelection gpu();

  /// Parses `single:NAME`, `total:NAME` or `sum:A,B,...`.
  /// Throws Error(configuration).
  static RailSelection parse(std::string_view spec);

  Mode mode() const noexcept { return mode_; }
  const std::vector<std::string>& rails() const noexcept { return rails_; }

  /// Inverse of parse().
  std::string label() const;

  friend bool operator==(const RailSelection&, const RailSelection&) = default;

 private:
  RailSelection(Mode mode, std::vector<std::string> rails) : mode_(mode), rails_(std::move(rails)) {}

  Mode mode_;
  std::vector<std::string> rails_;
};

/// Throws Error(configuration) naming the first missing rail, or for an empty sum.
double select_power(const PowerSample& sample, const RailSelection& selection);

/// Extracts every `VDD_* <current>[mW]/<average>[mW]` pair and keeps the
/// current reading. Throws ParseError when no rail is present or a value is
/// malformed.
PowerSample parse_tegrastats_line(std::string_view line, std::int64_t t_ms);

struct SmiRow {
  enum class Kind { sample, header, missing };
  Kind kind = Kind::sample;
  std::optional<PowerSample> sample;
};

/// Parses one `power.draw` row such as `13.45 W` into rail `GPU` in mW.
/// The header row and `N/A`-style rows come back as signals, not errors.
/// Throws ParseError for anything else.
SmiRow parse_nvidia_smi_row(std::string_view row, std::int64_t t_ms);

enum class LogFormat { tegrastats, nvidia_smi, normalized_csv };

std::string_view to_string(LogFormat format);
/// Accepts tegrastats, nvidia-smi / nvidia_smi, normalized / csv.
std::optional<LogFormat> parse_log_format(std::string_view name);

struct TelemetrySource {
  enum class Kind { tegrastats, nvidia_smi, recorded_log };

  Kind kind = Kind::recorded_log;
  int sample_interval_ms = 1000;
  /// Live kinds: overrides the default tool invocation when nonempty.
  std::vector<std::string> command;
  /// recorded_log only.
  std::filesystem::path path;
  /// recorded_log only; detected from content when absent.
  std::optional<LogFormat> format;

  /// Throws Error(configuration): interval below 50 ms, missing path.
  void validate() const;

  /// The argv used to launch a live tool.
  std::vector<std::string> tool_command() const;

  /// Format used to parse this source's lines.
  LogFormat line_format() const;
};

std::string_view to_string(TelemetrySource::Kind kind);
std::optional<TelemetrySource::Kind> parse_source_kind(std::string_view name);

/// Header `t_ms,rail,mw`, otherwise a line mentioning `VDD_` means
/// tegrastats and anything else is treated as nvidia-smi output.
LogFormat detect_log_format(std::string_view first_line);

struct RecordedLog {
  std::vector<PowerSample> samples;
  std::size_t skipped = 0;  // headers and missing readings
  std::vector<std::string> errors;
};

/// Reads a whole recorded log. Raw tool output gets synthesized timestamps
/// (line k at k * interval_ms, counting every data line including missing
/// readings); normalized CSV carries its own. When `strict`, the first
/// unparseable line throws; otherwise it is recorded in `errors`.
RecordedLog read_recorded_log(std::istream& in, LogFormat format, int interval_ms, bool strict);

std::string to_normalized_csv(std::span<const PowerSample> samples);

/// Live or replayed sample stream with one producer thread and one consumer.
///
/// Construction starts the producer (spawning the tool for live kinds);
/// destruction stops it. All timestamps are milliseconds since construction,
/// and elapsed_ms() reads the same clock so callers can stamp their own events
/// on the sample timeline. Recorded logs are replayed without pacing on their
/// own (embedded or synthesized) timeline.
class TelemetryStream {
 public:
  /// Throws Error(configuration | io | spawn).
  explicit TelemetryStream(const TelemetrySource& source);
  ~TelemetryStream();

  TelemetryStream(const TelemetryStream&) = delete;
  TelemetryStream& operator=(const TelemetryStream&) = delete;

  std::int64_t elapsed_ms() const;

  /// Blocks up to `timeout` for the next sample; nullopt on timeout or once
  /// the stream has ended and been drained.
  std::optional<PowerSample> next(std::chrono::milliseconds timeout);

  /// Stops the producer (terminating a live tool) and returns every sample
  /// not yet consumed, in order. Idempotent.
  std::vector<PowerSample> close();

  /// True once the producer has finished on its own or after close().
  bool ended() const;

  /// Producer-side notices: end of stream, discarded partial lines, parse
  /// errors on live input.
  std::vector<std::string> notices() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience for callers that want a movable handle.
std::unique_ptr<TelemetryStream> open_stream(const TelemetrySource& source);

}  // namespace e3p
