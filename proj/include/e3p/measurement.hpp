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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "e3p/error.hpp"
#include "e3p/metrics.hpp"
#include "e3p/telemetry.hpp"

namespace e3p {

/// Handshake markers a workload prints on stdout around its inference region.
inline constexpr std::string_view kBeginMarker = "E3P_BEGIN";
inline constexpr std::string_view kEndMarker = "E3P_END";

enum class WindowMode { handshake, process };

std::string_view to_string(WindowMode mode);
std::optional<WindowMode> parse_window_mode(std::string_view name);

struct WorkloadSpec {
  std::vector<std::string> command;
  std::map<std::string, std::string> env;
  WindowMode window = WindowMode::handshake;
  /// Kill the workload and fail the trial after this long.
  std::optional<std::chrono::milliseconds> timeout;

  void validate() const;
};

struct MeasurementTrial {
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::vector<PowerSample> samples;  // only samples inside [t_start_ms, t_end_ms]
  std::optional<double> reported_acc_pct;
  int exit_status = 0;
  bool failed = false;
  std::string failure;
  std::string stderr_tail;
  std::optional<EnergyResult> energy;
};

enum class AccuracySource { workload, registry, none };

std::string_view to_string(AccuracySource source);

struct ReportLabels {
  std::string model;
  std::string device;
  std::string dataset;
};

struct MeasurementReport {
  std::string model_name;
  std::string device_label;
  std::string dataset_label;
  std::string rail_selection;
  std::string window_mode;
  std::string telemetry;
  std::vector<MeasurementTrial> trials;
  std::vector<std::size_t> failed_trials;
  bool degraded = false;
  double mean_time_s = 0.0;
  double mean_power_mw = 0.0;
  double mean_energy_j = 0.0;
  double mean_trapezoid_power_mw = 0.0;
  std::optional<double> acc_pct;
  AccuracySource acc_source = AccuracySource::none;
  std::optional<double> idle_power_mw;
  /// Free-form and excluded from determinism guarantees (wall-clock stamps).
  std::map<std::string, std::string> metadata;
};

/// Raised when every trial of a session fails; carries what was measured.
class SessionError : public Error {
 public:
  SessionError(const std::string& what, MeasurementReport partial)
      : Error(ErrorKind::session, what), partial_(std::move(partial)) {}

  const MeasurementReport& partial() const noexcept { return partial_; }

 private:
  MeasurementReport partial_;
};

/// Restricts `samples` to the window, computes its energy and fills a trial.
/// Throws Error(insufficient_telemetry) for an empty window.
MeasurementTrial trial_from_window(std::span<const PowerSample> samples, const RailSelection& selection,
                                   std::int64_t t_start_ms, std::int64_t t_end_ms,
                                   std::optional<double> reported_acc_pct = std::nullopt, int exit_status = 0);

/// Runs the workload once while sampling `source`.
///
/// A nonzero exit returns a trial marked failed with the stderr tail. Throws
/// Error(protocol) when the handshake is expected but incomplete,
/// Error(insufficient_telemetry) when no sample lands in the window, and
/// Error(spawn) when the workload cannot be started.
MeasurementTrial run_trial(const WorkloadSpec& workload, const TelemetrySource& source,
                           const RailSelection& selection);

struct SessionOptions {
  int trials = 3;
  std::chrono::milliseconds cooldown{0};
  ReportLabels labels;
  /// Used only when no trial reports an accuracy.
  std::optional<double> registry_acc_pct;
};

/// Folds trials into a report: arithmetic means over the successful trials.
/// Throws SessionError when none succeeded.
MeasurementReport aggregate(std::vector<MeasurementTrial> trials, const SessionOptions& options,
                            const RailSelection& selection, WindowMode window, std::string telemetry);

/// Sequential trials; a failed trial (nonzero exit or protocol/telemetry
/// error) is excluded from the means and marks the report degraded.
MeasurementReport run_session(const WorkloadSpec& workload, const TelemetrySource& source,
                              const RailSelection& selection, const SessionOptions& options);

/// Mean selected power over [0, duration_ms) of a fresh stream. Live sources
/// are sampled for the full duration. Throws Error(configuration) if the
/// duration is shorter than five sample intervals and
/// Error(insufficient_telemetry) when no sample arrives.
double calibrate_idle(const TelemetrySource& source, const RailSelection& selection, std::int64_t duration_ms);

/// Offline counterpart of run_session over recorded telemetry.
struct ReplayTrial {
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::optional<double> acc_pct;
  int exit_status = 0;
  /// Per-trial log; the plan's default log is used when empty.
  std::filesystem::path telemetry;
};

struct ReplayPlan {
  ReportLabels labels;
  std::optional<RailSelection> selection;
  std::vector<ReplayTrial> trials;
};

/// Reads the trial-window JSON file. Relative telemetry paths resolve
/// against the file's directory. Throws Error(malformed_record | io).
ReplayPlan load_replay_plan(const std::filesystem::path& path);

MeasurementReport replay_session(const ReplayPlan& plan, const std::filesystem::path& default_log,
                                 std::optional<LogFormat> format, int interval_ms, const RailSelection& selection,
                                 const SessionOptions& options);

std::string to_json(const MeasurementReport& report);
/// Throws Error(malformed_record).
MeasurementReport report_from_json(std::string_view json_text, const std::string& source = "<report>");
/// Accepts a single report object or an array of them.
std::vector<MeasurementReport> reports_from_json(std::string_view json_text, const std::string& source = "<report>");

}  // namespace e3p
