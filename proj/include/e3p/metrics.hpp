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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "e3p/telemetry.hpp"

namespace e3p {

/// Total inference time, average power and total energy for one window.
struct EnergyResult {
  double time_s = 0.0;
  double avg_power_mw = 0.0;
  double energy_j = 0.0;
  /// Time-weighted (trapezoidal) mean power; reported as a cross-check only.
  double trapezoid_power_mw = 0.0;
};

/// energy_j = avg_power_mw / 1000 * time_s, computed the same way everywhere.
double energy_joules(double avg_power_mw, double time_s);

/// Throws Error(domain) on an empty window, t_end <= t_start, or timestamps
/// that go backwards; Error(configuration) when a selected rail is missing.
EnergyResult energy_from_samples(std::span<const PowerSample> samples, const RailSelection& selection,
                                 std::int64_t t_start_ms, std::int64_t t_end_ms);

struct SamParams {
  std::string name;
  double a = 5.0;
  double b = 5.0;

  static SamParams sam1() { return {"SAM1", 1.0, 1.0}; }
  static SamParams sam5() { return {"SAM5", 5.0, 5.0}; }

  /// `samK` (case-insensitive) means a = b = K, e.g. sam1, sam5, sam2.5.
  /// Throws Error(configuration).
  static SamParams parse(std::string_view preset);

  void validate() const;
};

/// b * acc^a / log10(energy) with accuracy as a fraction in (0, 1] and
/// energy in joules. Throws Error(domain) for energy <= 1 J or accuracy out of
/// range.
double sam(double acc_frac, double energy_j, const SamParams& params);

/// Flat measurement summary that scoring consumes.
struct ScoreInput {
  std::string model_name;
  double acc_pct = 0.0;
  double time_s = 0.0;
  double avg_power_mw = 0.0;
  double energy_j = 0.0;
  std::optional<double> net_score;
};

struct ScoreRow {
  std::string model_name;
  double acc_pct = 0.0;
  double time_s = 0.0;
  double avg_power_mw = 0.0;
  double energy_j = 0.0;
  std::map<std::string, double> sam_values;  // preset name -> value
  std::optional<double> net_score;
  /// Set when a preset could not be evaluated; the row is kept but invalid.
  std::optional<std::string> error;

  bool valid() const noexcept { return !error.has_value(); }
};

/// One row per input, in input order. Domain errors mark the row invalid
/// instead of aborting the batch.
std::vector<ScoreRow> score_rows(std::span<const ScoreInput> inputs, std::span<const SamParams> presets);

struct MeasurementReport;
ScoreInput to_score_input(const MeasurementReport& report);
std::vector<ScoreRow> score_rows(std::span<const MeasurementReport> reports, std::span<const SamParams> presets);

/// Reads `model,acc_pct,time_s,avg_power_mw,energy_j` summaries (header
/// required, column order free). Throws Error(malformed_record).
std::vector<ScoreInput> load_score_inputs_csv(std::istream& in, const std::string& source = "<stream>");

}  // namespace e3p
