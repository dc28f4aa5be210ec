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

#include "e3p/measurement.hpp"

#include <poll.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "e3p/subprocess.hpp"
#include "e3p/text.hpp"

namespace e3p {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kStderrTailBytes = 2048;

struct HandshakeState {
  std::optional<std::int64_t> begin_ms;
  std::optional<std::int64_t> end_ms;
  std::optional<double> acc_pct;
};

void handle_workload_line(const std::string& line, std::int64_t now_ms, HandshakeState& state) {
  const auto trimmed = text::trim(line);
  if (trimmed == kBeginMarker) {
    if (state.begin_ms) {
      throw Error(ErrorKind::protocol, fmt::format("{} printed twice", kBeginMarker));
    }
    state.begin_ms = now_ms;
    return;
  }
  if (trimmed.starts_with(kEndMarker) &&
      (trimmed.size() == kEndMarker.size() || trimmed[kEndMarker.size()] == ' ' ||
       trimmed[kEndMarker.size()] == '\t')) {
    if (state.end_ms) {
      throw Error(ErrorKind::protocol, fmt::format("{} printed twice", kEndMarker));
    }
    state.end_ms = now_ms;
    const auto rest = text::trim(trimmed.substr(kEndMarker.size()));
    if (!rest.empty()) {
      const auto acc = text::parse_double(rest);
      if (!acc || *acc < 0.0 || *acc > 100.0) {
        throw Error(ErrorKind::protocol, fmt::format("{} carries an invalid accuracy '{}'", kEndMarker, rest));
      }
      state.acc_pct = acc;
    }
    return;
  }
  spdlog::debug("workload: {}", line);
}

void append_tail(std::string& tail, const char* data, std::size_t n) {
  tail.append(data, n);
  if (tail.size() > kStderrTailBytes) {
    tail.erase(0, tail.size() - kStderrTailBytes);
  }
}

// Offsets from the first value keep the mean of identical inputs exact.
double mean(const std::vector<double>& values) {
  double offset = 0.0;
  for (double v : values) {
    offset += v - values.front();
  }
  return values.front() + offset / static_cast<double>(values.size());
}

ordered_json sample_to_json(const PowerSample& s) {
  ordered_json rails = ordered_json::object();
  for (const auto& [name, mw] : s.rails) {
    rails[name] = mw;
  }
  return ordered_json{{"t_ms", s.t_ms}, {"rails", rails}};
}

ordered_json energy_to_json(const EnergyResult& e) {
  return ordered_json{{"time_s", e.time_s},
                      {"avg_power_mw", e.avg_power_mw},
                      {"energy_j", e.energy_j},
                      {"trapezoid_power_mw", e.trapezoid_power_mw}};
}

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

std::string_view to_string(WindowMode mode) {
  return mode == WindowMode::handshake ? "handshake" : "process";
}

std::optional<WindowMode> parse_window_mode(std::string_view name) {
  if (name == "handshake") return WindowMode::handshake;
  if (name == "process") return WindowMode::process;
  return std::nullopt;
}

std::string_view to_string(AccuracySource source) {
  switch (source) {
    case AccuracySource::workload: return "workload";
    case AccuracySource::registry: return "registry";
    case AccuracySource::none: return "none";
  }
  return "none";
}

void WorkloadSpec::validate() const {
  if (command.empty() || command.front().empty()) {
    throw Error(ErrorKind::configuration, "workload command is empty");
  }
}

MeasurementTrial trial_from_window(std::span<const PowerSample> samples, const RailSelection& selection,
                                   std::int64_t t_start_ms, std::int64_t t_end_ms,
                                   std::optional<double> reported_acc_pct, int exit_status) {
  MeasurementTrial trial;
  trial.t_start_ms = t_start_ms;
  trial.t_end_ms = t_end_ms;
  trial.reported_acc_pct = reported_acc_pct;
  trial.exit_status = exit_status;
  for (const auto& s : samples) {
    if (s.t_ms >= t_start_ms && s.t_ms <= t_end_ms) {
      trial.samples.push_back(s);
    }
  }
  trial.energy = energy_from_samples(trial.samples, selection, t_start_ms, t_end_ms);
  return trial;
}

MeasurementTrial run_trial(const WorkloadSpec& workload, const TelemetrySource& source,
                           const RailSelection& selection) {
  workload.validate();
  TelemetryStream stream(source);

  HandshakeState handshake;
  std::string stderr_tail;
  const auto spawn_ms = stream.elapsed_ms();
  Subprocess proc(workload.command, workload.env);

  const auto deadline = workload.timeout ? std::optional(std::chrono::steady_clock::now() + *workload.timeout)
                                         : std::nullopt;
  LineSplitter out_lines;
  std::array<pollfd, 2> fds{pollfd{proc.stdout_fd(), POLLIN, 0}, pollfd{proc.stderr_fd(), POLLIN, 0}};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    if (deadline && std::chrono::steady_clock::now() > *deadline) {
      proc.terminate();
      throw Error(ErrorKind::protocol, fmt::format("workload timed out after {} ms", workload.timeout->count()));
    }
    const int r = ::poll(fds.data(), fds.size(), 100);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::io, fmt::format("poll on workload pipes failed: {}", std::strerror(errno)));
    }
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) {
        continue;
      }
      const ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
      if (n <= 0) {
        fds[i].fd = -1;
        --open_fds;
        continue;
      }
      if (i == 0) {
        const auto now = stream.elapsed_ms();
        for (const auto& line : out_lines.feed(buf, static_cast<std::size_t>(n))) {
          handle_workload_line(line, now, handshake);
        }
      } else {
        append_tail(stderr_tail, buf, static_cast<std::size_t>(n));
      }
    }
  }
  if (!out_lines.partial().empty()) {
    handle_workload_line(out_lines.partial(), stream.elapsed_ms(), handshake);
  }
  const int status = proc.wait();
  const auto exit_ms = stream.elapsed_ms();
  const auto samples = stream.close();

  if (status != 0) {
    MeasurementTrial failed;
    failed.t_start_ms = handshake.begin_ms.value_or(spawn_ms);
    failed.t_end_ms = handshake.end_ms.value_or(exit_ms);
    failed.exit_status = status;
    failed.failed = true;
    failed.failure = fmt::format("workload exited with status {}", status);
    failed.stderr_tail = std::move(stderr_tail);
    failed.reported_acc_pct = handshake.acc_pct;
    return failed;
  }

  std::int64_t t_start = spawn_ms;
  std::int64_t t_end = exit_ms;
  if (workload.window == WindowMode::handshake) {
    if (!handshake.begin_ms) {
      throw Error(ErrorKind::protocol, fmt::format("workload exited without printing {}", kBeginMarker));
    }
    if (!handshake.end_ms) {
      throw Error(ErrorKind::protocol, fmt::format("workload exited before printing {}", kEndMarker));
    }
    t_start = *handshake.begin_ms;
    t_end = *handshake.end_ms;
  }
  auto trial = trial_from_window(samples, selection, t_start, t_end, handshake.acc_pct, status);
  trial.stderr_tail = std::move(stderr_tail);
  return trial;
}

MeasurementReport aggregate(std::vector<MeasurementTrial> trials, const SessionOptions& options,
                            const RailSelection& selection, WindowMode window, std::string telemetry) {
  MeasurementReport report;
  report.model_name = options.labels.model;
  report.device_label = options.labels.device;
  report.dataset_label = options.labels.dataset;
  report.rail_selection = selection.label();
  report.window_mode = std::string(to_string(window));
  report.telemetry = std::move(telemetry);
  report.trials = std::move(trials);

  std::vector<double> times, powers, energies, trapezoids, accs;
  for (std::size_t i = 0; i < report.trials.size(); ++i) {
    const auto& t = report.trials[i];
    if (t.failed || !t.energy) {
      report.failed_trials.push_back(i);
      continue;
    }
    times.push_back(t.energy->time_s);
    powers.push_back(t.energy->avg_power_mw);
    energies.push_back(t.energy->energy_j);
    trapezoids.push_back(t.energy->trapezoid_power_mw);
    if (t.reported_acc_pct) {
      accs.push_back(*t.reported_acc_pct);
    }
  }
  report.degraded = !report.failed_trials.empty();

  if (energies.empty()) {
    auto message = fmt::format("all {} trial(s) failed", report.trials.size());
    throw SessionError(message, std::move(report));
  }
  report.mean_time_s = mean(times);
  report.mean_power_mw = mean(powers);
  report.mean_energy_j = mean(energies);
  report.mean_trapezoid_power_mw = mean(trapezoids);
  if (!accs.empty()) {
    report.acc_pct = mean(accs);
    report.acc_source = AccuracySource::workload;
  } else if (options.registry_acc_pct) {
    report.acc_pct = options.registry_acc_pct;
    report.acc_source = AccuracySource::registry;
  }
  return report;
}

MeasurementReport run_session(const WorkloadSpec& workload, const TelemetrySource& source,
                              const RailSelection& selection, const SessionOptions& options) {
  if (options.trials < 1) {
    throw Error(ErrorKind::configuration, fmt::format("trial count must be at least 1, got {}", options.trials));
  }
  workload.validate();
  source.validate();

  std::vector<MeasurementTrial> trials;
  for (int i = 0; i < options.trials; ++i) {
    if (i > 0 && options.cooldown.count() > 0) {
      std::this_thread::sleep_for(options.cooldown);
    }
    try {
      trials.push_back(run_trial(workload, source, selection));
      if (trials.back().failed) {
        spdlog::warn("trial {}: {}", i + 1, trials.back().failure);
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::spawn || e.kind() == ErrorKind::io) {
        throw;
      }
      spdlog::warn("trial {}: {}", i + 1, e.what());
      MeasurementTrial failed;
      failed.failed = true;
      failed.failure = fmt::format("{}: {}", to_string(e.kind()), e.what());
      trials.push_back(std::move(failed));
    }
  }
  return aggregate(std::move(trials), options, selection, workload.window, std::string(to_string(source.kind)));
}

double calibrate_idle(const TelemetrySource& source, const RailSelection& selection, std::int64_t duration_ms) {
  source.validate();
  if (duration_ms < 5LL * source.sample_interval_ms) {
    throw Error(ErrorKind::configuration,
                fmt::format("idle calibration needs at least 5 sample intervals ({} ms), got {} ms",
                            5LL * source.sample_interval_ms, duration_ms));
  }
  std::vector<PowerSample> samples;
  if (source.kind == TelemetrySource::Kind::recorded_log) {
    std::ifstream in(source.path);
    if (!in) {
      throw Error(ErrorKind::io, fmt::format("cannot open telemetry log '{}'", source.path.string()));
    }
    samples = read_recorded_log(in, source.line_format(), source.sample_interval_ms, true).samples;
  } else {
    TelemetryStream stream(source);
    std::this_thread::sleep_for(std::chrono::milliseconds(duration_ms));
    samples = stream.close();
  }
  std::vector<double> powers;
  for (const auto& s : samples) {
    if (s.t_ms >= 0 && s.t_ms < duration_ms) {
      powers.push_back(select_power(s, selection));
    }
  }
  if (powers.empty()) {
    throw Error(ErrorKind::insufficient_telemetry, "no telemetry samples during idle calibration");
  }
  return mean(powers);
}

ReplayPlan load_replay_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, fmt::format("cannot open trial window file '{}'", path.string()));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_record, fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::malformed_record, fmt::format("{}: {}", path.string(), why));
  };
  if (!doc.is_object() || !doc.contains("trials") || !doc["trials"].is_array()) {
    fail("expected an object with a 'trials' array");
  }

  ReplayPlan plan;
  const auto label = [&](const char* key) {
    return doc.contains(key) && doc[key].is_string() ? doc[key].get<std::string>() : std::string();
  };
  plan.labels = {label("model"), label("device"), label("dataset")};
  if (doc.contains("rails")) {
    if (!doc["rails"].is_string()) fail("'rails' must be a string");
    plan.selection = RailSelection::parse(doc["rails"].get<std::string>());
  }
  for (std::size_t i = 0; i < doc["trials"].size(); ++i) {
    const auto& t = doc["trials"][i];
    if (!t.is_object() || !t.contains("t_start_ms") || !t.contains("t_end_ms") ||
        !t["t_start_ms"].is_number_integer() || !t["t_end_ms"].is_number_integer()) {
      fail(fmt::format("trial {} needs integer 't_start_ms' and 't_end_ms'", i));
    }
    ReplayTrial trial;
    trial.t_start_ms = t["t_start_ms"].get<std::int64_t>();
    trial.t_end_ms = t["t_end_ms"].get<std::int64_t>();
    if (t.contains("acc_pct") && !t["acc_pct"].is_null()) {
      if (!t["acc_pct"].is_number()) fail(fmt::format("trial {}: 'acc_pct' must be a number", i));
      trial.acc_pct = t["acc_pct"].get<double>();
    }
    if (t.contains("exit_status")) {
      if (!t["exit_status"].is_number_integer()) fail(fmt::format("trial {}: 'exit_status' must be an integer", i));
      trial.exit_status = t["exit_status"].get<int>();
    }
    if (t.contains("telemetry")) {
      if (!t["telemetry"].is_string()) fail(fmt::format("trial {}: 'telemetry' must be a path", i));
      std::filesystem::path log = t["telemetry"].get<std::string>();
      trial.telemetry = log.is_relative() ? path.parent_path() / log : log;
    }
    plan.trials.push_back(std::move(trial));
  }
  if (plan.trials.empty()) {
    fail("no trials listed");
  }
  return plan;
}

MeasurementReport replay_session(const ReplayPlan& plan, const std::filesystem::path& default_log,
                                 std::optional<LogFormat> format, int interval_ms, const RailSelection& selection,
                                 const SessionOptions& options) {
  std::map<std::filesystem::path, std::vector<PowerSample>> logs;
  const auto load = [&](const std::filesystem::path& path) -> const std::vector<PowerSample>& {
    if (const auto it = logs.find(path); it != logs.end()) {
      return it->second;
    }
    TelemetrySource source;
    source.kind = TelemetrySource::Kind::recorded_log;
    source.path = path;
    source.sample_interval_ms = interval_ms;
    source.format = format;
    source.validate();
    std::ifstream in(path);
    if (!in) {
      throw Error(ErrorKind::io, fmt::format("cannot open telemetry log '{}'", path.string()));
    }
    auto log = read_recorded_log(in, source.line_format(), interval_ms, true);
    if (log.samples.empty()) {
      throw Error(ErrorKind::insufficient_telemetry, fmt::format("telemetry log '{}' holds no samples", path.string()));
    }
    return logs.emplace(path, std::move(log.samples)).first->second;
  };

  SessionOptions effective = options;
  if (effective.labels.model.empty()) effective.labels.model = plan.labels.model;
  if (effective.labels.device.empty()) effective.labels.device = plan.labels.device;
  if (effective.labels.dataset.empty()) effective.labels.dataset = plan.labels.dataset;

  std::vector<MeasurementTrial> trials;
  std::string telemetry_label = "recorded";
  for (std::size_t i = 0; i < plan.trials.size(); ++i) {
    const auto& spec = plan.trials[i];
    const auto& path = spec.telemetry.empty() ? default_log : spec.telemetry;
    if (path.empty()) {
      throw Error(ErrorKind::configuration, fmt::format("trial {} has no telemetry log", i));
    }
    const auto& samples = load(path);
    if (spec.exit_status != 0) {
      MeasurementTrial failed;
      failed.t_start_ms = spec.t_start_ms;
      failed.t_end_ms = spec.t_end_ms;
      failed.exit_status = spec.exit_status;
      failed.failed = true;
      failed.failure = fmt::format("workload exited with status {}", spec.exit_status);
      trials.push_back(std::move(failed));
      continue;
    }
    try {
      trials.push_back(
          trial_from_window(samples, selection, spec.t_start_ms, spec.t_end_ms, spec.acc_pct, spec.exit_status));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::configuration) {
        throw;
      }
      MeasurementTrial failed;
      failed.t_start_ms = spec.t_start_ms;
      failed.t_end_ms = spec.t_end_ms;
      failed.failed = true;
      failed.failure = fmt::format("{}: {}", to_string(e.kind()), e.what());
      trials.push_back(std::move(failed));
    }
  }
  return aggregate(std::move(trials), effective, selection, WindowMode::handshake, telemetry_label);
}

std::string to_json(const MeasurementReport& report) {
  ordered_json trials = ordered_json::array();
  for (const auto& t : report.trials) {
    ordered_json samples = ordered_json::array();
    for (const auto& s : t.samples) {
      samples.push_back(sample_to_json(s));
    }
    trials.push_back(ordered_json{{"t_start_ms", t.t_start_ms},
                                  {"t_end_ms", t.t_end_ms},
                                  {"exit_status", t.exit_status},
                                  {"failed", t.failed},
                                  {"failure", t.failure},
                                  {"reported_acc_pct", optional_json(t.reported_acc_pct)},
                                  {"energy", t.energy ? energy_to_json(*t.energy) : ordered_json(nullptr)},
                                  {"stderr_tail", t.stderr_tail},
                                  {"samples", samples}});
  }
  ordered_json doc{{"model", report.model_name},
                   {"device", report.device_label},
                   {"dataset", report.dataset_label},
                   {"telemetry", report.telemetry},
                   {"rail_selection", report.rail_selection},
                   {"window_mode", report.window_mode},
                   {"aggregate",
                    ordered_json{{"trials", report.trials.size()},
                                 {"failed_trials", report.failed_trials},
                                 {"degraded", report.degraded},
                                 {"mean_time_s", report.mean_time_s},
                                 {"mean_power_mw", report.mean_power_mw},
                                 {"mean_energy_j", report.mean_energy_j},
                                 {"mean_trapezoid_power_mw", report.mean_trapezoid_power_mw},
                                 {"acc_pct", optional_json(report.acc_pct)},
                                 {"acc_source", std::string(to_string(report.acc_source))},
                                 {"idle_power_mw", optional_json(report.idle_power_mw)}}},
                   {"trials", trials}};
  if (!report.metadata.empty()) {
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : report.metadata) {
      meta[k] = v;
    }
    doc["metadata"] = meta;
  }
  return doc.dump(2) + "\n";
}

namespace {

MeasurementReport report_from_node(const nlohmann::json& doc, const std::string& source) {
  const auto fail = [&](const std::string& why) -> void {
    throw Error(ErrorKind::malformed_record, fmt::format("{}: {}", source, why));
  };
  if (!doc.is_object() || !doc.contains("aggregate") || !doc["aggregate"].is_object()) {
    fail("report needs an 'aggregate' object");
  }
  MeasurementReport r;
  try {
    r.model_name = doc.value("model", "");
    r.device_label = doc.value("device", "");
    r.dataset_label = doc.value("dataset", "");
    r.telemetry = doc.value("telemetry", "");
    r.rail_selection = doc.value("rail_selection", "");
    r.window_mode = doc.value("window_mode", "");
    const auto& agg = doc["aggregate"];
    r.mean_time_s = agg.at("mean_time_s").get<double>();
    r.mean_power_mw = agg.at("mean_power_mw").get<double>();
    r.mean_energy_j = agg.at("mean_energy_j").get<double>();
    r.mean_trapezoid_power_mw = agg.value("mean_trapezoid_power_mw", 0.0);
    r.degraded = agg.value("degraded", false);
    if (agg.contains("failed_trials")) {
      r.failed_trials = agg["failed_trials"].get<std::vector<std::size_t>>();
    }
    if (agg.contains("acc_pct") && !agg["acc_pct"].is_null()) {
      r.acc_pct = agg["acc_pct"].get<double>();
    }
    const auto acc_source = agg.value("acc_source", "none");
    r.acc_source = acc_source == "workload"   ? AccuracySource::workload
                   : acc_source == "registry" ? AccuracySource::registry
                                              : AccuracySource::none;
    if (agg.contains("idle_power_mw") && !agg["idle_power_mw"].is_null()) {
      r.idle_power_mw = agg["idle_power_mw"].get<double>();
    }
    if (doc.contains("trials")) {
      for (const auto& t : doc["trials"]) {
        MeasurementTrial trial;
        trial.t_start_ms = t.at("t_start_ms").get<std::int64_t>();
        trial.t_end_ms = t.at("t_end_ms").get<std::int64_t>();
        trial.exit_status = t.value("exit_status", 0);
        trial.failed = t.value("failed", false);
        trial.failure = t.value("failure", "");
        trial.stderr_tail = t.value("stderr_tail", "");
        if (t.contains("reported_acc_pct") && !t["reported_acc_pct"].is_null()) {
          trial.reported_acc_pct = t["reported_acc_pct"].get<double>();
        }
        if (t.contains("energy") && !t["energy"].is_null()) {
          const auto& e = t["energy"];
          trial.energy = EnergyResult{e.at("time_s").get<double>(), e.at("avg_power_mw").get<double>(),
                                      e.at("energy_j").get<double>(), e.value("trapezoid_power_mw", 0.0)};
        }
        if (t.contains("samples")) {
          for (const auto& s : t["samples"]) {
            PowerSample sample;
            sample.t_ms = s.at("t_ms").get<std::int64_t>();
            for (const auto& [name, mw] : s.at("rails").items()) {
              sample.rails[name] = mw.get<double>();
            }
            trial.samples.push_back(std::move(sample));
          }
        }
        r.trials.push_back(std::move(trial));
      }
    }
    if (doc.contains("metadata")) {
      for (const auto& [k, v] : doc["metadata"].items()) {
        r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(fmt::format("bad report field: {}", e.what()));
  }
  return r;
}

nlohmann::json parse_json_text(std::string_view text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_record, fmt::format("{}: invalid JSON: {}", source, e.what()));
  }
}

}  // namespace

MeasurementReport report_from_json(std::string_view json_text, const std::string& source) {
  return report_from_node(parse_json_text(json_text, source), source);
}

std::vector<MeasurementReport> reports_from_json(std::string_view json_text, const std::string& source) {
  const auto doc = parse_json_text(json_text, source);
  std::vector<MeasurementReport> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(report_from_node(doc[i], fmt::format("{}[{}]", source, i)));
    }
  } else {
    out.push_back(report_from_node(doc, source));
  }
  return out;
}

}  // namespace e3p
