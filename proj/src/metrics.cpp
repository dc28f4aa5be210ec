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

#include "e3p/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "e3p/error.hpp"
#include "e3p/measurement.hpp"
#include "e3p/text.hpp"

namespace e3p {

double energy_joules(double avg_power_mw, double time_s) { return avg_power_mw / 1000.0 * time_s; }

EnergyResult energy_from_samples(std::span<const PowerSample> samples, const RailSelection& selection,
                                 std::int64_t t_start_ms, std::int64_t t_end_ms) {
  if (t_end_ms <= t_start_ms) {
    throw Error(ErrorKind::domain, fmt::format("window end {} ms is not after start {} ms", t_end_ms, t_start_ms));
  }

  std::vector<std::pair<std::int64_t, double>> points;
  std::int64_t previous = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : samples) {
    if (s.t_ms < previous) {
      throw Error(ErrorKind::domain, fmt::format("sample timestamps go backwards at t={} ms", s.t_ms));
    }
    previous = s.t_ms;
    if (s.t_ms >= t_start_ms && s.t_ms <= t_end_ms) {
      points.emplace_back(s.t_ms, select_power(s, selection));
    }
  }
  if (points.empty()) {
    throw Error(ErrorKind::insufficient_telemetry,
                fmt::format("no telemetry samples inside window [{}, {}] ms", t_start_ms, t_end_ms));
  }

  double sum = 0.0;
  for (const auto& [t, p] : points) {
    sum += p;
  }

  EnergyResult result;
  result.time_s = static_cast<double>(t_end_ms - t_start_ms) / 1000.0;
  result.avg_power_mw = sum / static_cast<double>(points.size());
  result.energy_j = energy_joules(result.avg_power_mw, result.time_s);

  const auto span_ms = points.back().first - points.front().first;
  if (points.size() < 2 || span_ms == 0) {
    result.trapezoid_power_mw = result.avg_power_mw;
  } else {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      const auto dt = static_cast<double>(points[i].first - points[i - 1].first);
      area += 0.5 * (points[i].second + points[i - 1].second) * dt;
    }
    result.trapezoid_power_mw = area / static_cast<double>(span_ms);
  }
  return result;
}

SamParams SamParams::parse(std::string_view preset) {
  std::string lower;
  for (char c : text::trim(preset)) {
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (!lower.starts_with("sam")) {
    throw Error(ErrorKind::configuration, fmt::format("unknown SAM preset '{}' (expected samK)", preset));
  }
  const auto k = text::parse_double(std::string_view(lower).substr(3));
  if (!k || !(*k > 0.0)) {
    throw Error(ErrorKind::configuration, fmt::format("SAM preset '{}' needs a positive exponent", preset));
  }
  return {"SAM" + lower.substr(3), *k, *k};
}

void SamParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorKind::configuration, fmt::format("SAM parameters must be finite and positive (a={}, b={})", a, b));
  }
}

double sam(double acc_frac, double energy_j, const SamParams& params) {
  params.validate();
  if (!(acc_frac > 0.0 && acc_frac <= 1.0)) {
    throw Error(ErrorKind::domain, fmt::format("SAM accuracy must be a fraction in (0, 1], got {}", acc_frac));
  }
  if (!(energy_j > 1.0) || !std::isfinite(energy_j)) {
    throw Error(ErrorKind::domain, fmt::format("SAM needs energy above 1 J, got {} J", energy_j));
  }
  // b multiplies last so results for different b are exact multiples.
  return params.b * (std::pow(acc_frac, params.a) / std::log10(energy_j));
}

std::vector<ScoreRow> score_rows(std::span<const ScoreInput> inputs, std::span<const SamParams> presets) {
  std::vector<ScoreRow> rows;
  rows.reserve(inputs.size());
  for (const auto& in : inputs) {
    ScoreRow row;
    row.model_name = in.model_name;
    row.acc_pct = in.acc_pct;
    row.time_s = in.time_s;
    row.avg_power_mw = in.avg_power_mw;
    row.energy_j = in.energy_j;
    row.net_score = in.net_score;
    for (const auto& preset : presets) {
      try {
        row.sam_values[preset.name] = sam(in.acc_pct / 100.0, in.energy_j, preset);
      } catch (const Error& e) {
        row.error = fmt::format("{}: {}", preset.name, e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ScoreInput to_score_input(const MeasurementReport& report) {
  return {report.model_name, report.acc_pct.value_or(0.0), report.mean_time_s, report.mean_power_mw,
          report.mean_energy_j, std::nullopt};
}

std::vector<ScoreRow> score_rows(std::span<const MeasurementReport> reports, std::span<const SamParams> presets) {
  std::vector<ScoreInput> inputs;
  inputs.reserve(reports.size());
  for (const auto& r : reports) {
    inputs.push_back(to_score_input(r));
  }
  return score_rows(std::span<const ScoreInput>(inputs), presets);
}

std::vector<ScoreInput> load_score_inputs_csv(std::istream& in, const std::string& source) {
  static const std::vector<std::string> required = {"model", "acc_pct", "time_s", "avg_power_mw", "energy_j"};
  std::map<std::string, std::size_t> column;
  std::vector<ScoreInput> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (text::read_line(in, line)) {
    ++line_no;
    if (text::trim(line).empty() || text::trim(line).front() == '#') {
      continue;
    }
    const auto fields = text::split_csv(line);
    if (!fields) {
      throw Error(ErrorKind::malformed_record, fmt::format("{}:{}: unterminated quote", source, line_no));
    }
    if (!header) {
      for (std::size_t i = 0; i < fields->size(); ++i) {
        column[std::string(text::trim((*fields)[i]))] = i;
      }
      for (const auto& name : required) {
        if (!column.contains(name)) {
          throw Error(ErrorKind::malformed_record, fmt::format("{}: header is missing column '{}'", source, name));
        }
      }
      header = true;
      continue;
    }
    const auto field = [&](const std::string& name) -> std::string_view {
      const auto idx = column.at(name);
      if (idx >= fields->size()) {
        throw Error(ErrorKind::malformed_record, fmt::format("{}:{}: field '{}' is missing", source, line_no, name));
      }
      return text::trim((*fields)[idx]);
    };
    const auto number = [&](const std::string& name) {
      const auto v = text::parse_double(field(name));
      if (!v) {
        throw Error(ErrorKind::malformed_record,
                    fmt::format("{}:{}: field '{}' is not a number", source, line_no, name));
      }
      return *v;
    };
    ScoreInput row;
    row.model_name = std::string(field("model"));
    row.acc_pct = number("acc_pct");
    row.time_s = number("time_s");
    row.avg_power_mw = number("avg_power_mw");
    row.energy_j = number("energy_j");
    out.push_back(std::move(row));
  }
  if (!header) {
    throw Error(ErrorKind::malformed_record, fmt::format("{}: no header row", source));
  }
  return out;
}

}  // namespace e3p
