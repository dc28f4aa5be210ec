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

#include "e3p/telemetry.hpp"

#include <poll.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "e3p/channel.hpp"
#include "e3p/error.hpp"
#include "e3p/subprocess.hpp"
#include "e3p/text.hpp"

namespace e3p {

namespace {

bool is_rail_name(std::string_view token) {
  if (token.size() <= 4 || token.substr(0, 4) != "VDD_") {
    return false;
  }
  for (char c : token.substr(4)) {
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')) {
      return false;
    }
  }
  return true;
}

/// Plain unsigned decimal: digits with at most one '.', no sign or exponent.
bool is_plain_decimal(std::string_view s) {
  if (s.empty() || s == ".") {
    return false;
  }
  bool dot = false;
  for (char c : s) {
    if (c == '.') {
      if (dot) return false;
      dot = true;
    } else if (c < '0' || c > '9') {
      return false;
    }
  }
  return true;
}

std::optional<double> parse_milliwatts(std::string_view s) {
  if (s.size() > 2 && s.substr(s.size() - 2) == "mW") {
    s.remove_suffix(2);
  }
  if (!is_plain_decimal(s)) {
    return std::nullopt;
  }
  return text::parse_double(s);
}

/// Multiplies a plain decimal string by 10^3 by moving the point, so that
/// e.g. "13.45" becomes exactly 13450 instead of 13.45 * 1000.
std::optional<double> watts_to_milliwatts(std::string_view watts) {
  if (!is_plain_decimal(watts)) {
    return std::nullopt;
  }
  std::string digits(watts);
  auto dot = digits.find('.');
  if (dot == std::string::npos) {
    digits += ".";
    dot = digits.size() - 1;
  }
  digits.erase(dot, 1);
  std::size_t fraction = digits.size() - dot;
  while (fraction < 3) {
    digits.push_back('0');
    ++fraction;
  }
  digits.insert(dot + 3, ".");
  return text::parse_double(digits);
}

std::int64_t synthesized_time(std::size_t index, int interval_ms) {
  return static_cast<std::int64_t>(index) * interval_ms;
}

}  // namespace

// RailSelection ------------------------------------------------------------

RailSelection RailSelection::single(std::string rail) { return {Mode::single_rail, {std::move(rail)}}; }

RailSelection RailSelection::sum(std::vector<std::string> rails) { return {Mode::sum, std::move(rails)}; }

RailSelection RailSelection::total_board(std::string rail) { return {Mode::total_board, {std::move(rail)}}; }

RailSelection RailSelection::tx2_compute() {
  return sum({"VDD_SYS_GPU", "VDD_SYS_CPU", "VDD_SYS_SOC", "VDD_SYS_DDR"});
}

RailSelection RailSelection::tx2_board() { return total_board("VDD_IN"); }

RailSelection RailSelection::gpu() { return single("GPU"); }

RailSelection RailSelection::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorKind::configuration,
                fmt::format("rail selection '{}' must look like single:NAME, total:NAME or sum:A,B", spec));
  }
  const auto mode = text::trim(spec.substr(0, colon));
  const auto rest = spec.substr(colon + 1);
  std::vector<std::string> rails;
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto end = std::min(rest.find(',', start), rest.size());
    const auto name = text::trim(rest.substr(start, end - start));
    if (!name.empty()) {
      rails.emplace_back(name);
    }
    start = end + 1;
  }
  if (mode == "sum") {
    if (rails.empty()) {
      throw Error(ErrorKind::configuration, "rail sum over an empty list");
    }
    return sum(std::move(rails));
  }
  if (rails.size() != 1) {
    throw Error(ErrorKind::configuration, fmt::format("'{}' selection takes exactly one rail", mode));
  }
  if (mode == "single") {
    return single(std::move(rails.front()));
  }
  if (mode == "total") {
    return total_board(std::move(rails.front()));
  }
  throw Error(ErrorKind::configuration, fmt::format("unknown rail selection mode '{}'", mode));
}

std::string RailSelection::label() const {
  std::string out;
  switch (mode_) {
    case Mode::single_rail: out = "single:"; break;
    case Mode::sum: out = "sum:"; break;
    case Mode::total_board: out = "total:"; break;
  }
  for (std::size_t i = 0; i < rails_.size(); ++i) {
    out += (i ? "," : "") + rails_[i];
  }
  return out;
}

double select_power(const PowerSample& sample, const RailSelection& selection) {
  if (selection.rails().empty()) {
    throw Error(ErrorKind::configuration, "rail selection names no rails");
  }
  double total = 0.0;
  for (const auto& rail : selection.rails()) {
    const auto it = sample.rails.find(rail);
    if (it == sample.rails.end()) {
      throw Error(ErrorKind::configuration,
                  fmt::format("rail '{}' missing from sample at t={} ms", rail, sample.t_ms));
    }
    total += it->second;
  }
  return total;
}

// Line parsers ---------------------------------------------------------------

PowerSample parse_tegrastats_line(std::string_view line, std::int64_t t_ms) {
  const auto tokens = text::split_whitespace(line);
  PowerSample sample{t_ms, {}};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_rail_name(tokens[i])) {
      continue;
    }
    if (i + 1 >= tokens.size()) {
      throw ParseError(fmt::format("rail {} has no reading", tokens[i]), std::string(line));
    }
    std::string_view pair = tokens[i + 1];
    const auto slash = pair.find('/');
    if (slash == std::string_view::npos) {
      throw ParseError(fmt::format("rail {}: expected current/average, got '{}'", tokens[i], pair),
                       std::string(line));
    }
    const auto current = parse_milliwatts(pair.substr(0, slash));
    const auto average = parse_milliwatts(pair.substr(slash + 1));
    if (!current || !average) {
      throw ParseError(fmt::format("rail {}: malformed number in '{}'", tokens[i], pair), std::string(line));
    }
    if (!sample.rails.emplace(tokens[i], *current).second) {
      throw ParseError(fmt::format("rail {} appears twice", tokens[i]), std::string(line));
    }
    ++i;
  }
  if (sample.rails.empty()) {
    throw ParseError("no VDD_* rail in tegrastats line", std::string(line));
  }
  return sample;
}

SmiRow parse_nvidia_smi_row(std::string_view row, std::int64_t t_ms) {
  const auto trimmed = text::trim(row);
  if (trimmed.starts_with("power.draw")) {
    return {SmiRow::Kind::header, std::nullopt};
  }
  if (trimmed == "N/A" || trimmed == "[N/A]" || trimmed == "[Not Supported]" || trimmed == "[Unknown Error]") {
    return {SmiRow::Kind::missing, std::nullopt};
  }
  if (trimmed.empty() || trimmed.back() != 'W') {
    throw ParseError(fmt::format("expected '<watts> W', got '{}'", trimmed), std::string(row));
  }
  const auto number = text::trim(trimmed.substr(0, trimmed.size() - 1));
  const auto mw = watts_to_milliwatts(number);
  if (!mw) {
    throw ParseError(fmt::format("malformed power value '{}'", number), std::string(row));
  }
  return {SmiRow::Kind::sample, PowerSample{t_ms, {{"GPU", *mw}}}};
}

std::string_view to_string(LogFormat format) {
  switch (format) {
    case LogFormat::tegrastats: return "tegrastats";
    case LogFormat::nvidia_smi: return "nvidia-smi";
    case LogFormat::normalized_csv: return "normalized";
  }
  return "unknown";
}

std::optional<LogFormat> parse_log_format(std::string_view name) {
  if (name == "tegrastats") return LogFormat::tegrastats;
  if (name == "nvidia-smi" || name == "nvidia_smi") return LogFormat::nvidia_smi;
  if (name == "normalized" || name == "csv") return LogFormat::normalized_csv;
  return std::nullopt;
}

LogFormat detect_log_format(std::string_view first_line) {
  const auto line = text::trim(first_line);
  if (line == "t_ms,rail,mw") {
    return LogFormat::normalized_csv;
  }
  if (line.find("VDD_") != std::string_view::npos) {
    return LogFormat::tegrastats;
  }
  return LogFormat::nvidia_smi;
}

// TelemetrySource ------------------------------------------------------------

std::string_view to_string(TelemetrySource::Kind kind) {
  switch (kind) {
    case TelemetrySource::Kind::tegrastats: return "tegrastats";
    case TelemetrySource::Kind::nvidia_smi: return "nvidia-smi";
    case TelemetrySource::Kind::recorded_log: return "recorded";
  }
  return "unknown";
}

std::optional<TelemetrySource::Kind> parse_source_kind(std::string_view name) {
  if (name == "tegrastats") return TelemetrySource::Kind::tegrastats;
  if (name == "nvidia-smi" || name == "nvidia_smi") return TelemetrySource::Kind::nvidia_smi;
  if (name == "recorded" || name == "recorded_log") return TelemetrySource::Kind::recorded_log;
  return std::nullopt;
}

void TelemetrySource::validate() const {
  if (sample_interval_ms < 50) {
    throw Error(ErrorKind::configuration,
                fmt::format("sample interval must be at least 50 ms, got {}", sample_interval_ms));
  }
  if (kind == Kind::recorded_log && path.empty()) {
    throw Error(ErrorKind::configuration, "recorded telemetry source needs a log path");
  }
}

std::vector<std::string> TelemetrySource::tool_command() const {
  if (!command.empty()) {
    return command;
  }
  switch (kind) {
    case Kind::tegrastats:
      return {"tegrastats", "--interval", std::to_string(sample_interval_ms)};
    case Kind::nvidia_smi:
      return {"nvidia-smi", "--query-gpu=power.draw", "--format=csv,noheader",
              "--loop-ms=" + std::to_string(sample_interval_ms)};
    case Kind::recorded_log:
      break;
  }
  return {};
}

LogFormat TelemetrySource::line_format() const {
  if (format) {
    return *format;
  }
  switch (kind) {
    case Kind::tegrastats: return LogFormat::tegrastats;
    case Kind::nvidia_smi: return LogFormat::nvidia_smi;
    case Kind::recorded_log: break;
  }
  std::ifstream in(path);
  std::string line;
  while (text::read_line(in, line)) {
    if (!text::trim(line).empty()) {
      return detect_log_format(line);
    }
  }
  return LogFormat::tegrastats;
}

// Recorded logs --------------------------------------------------------------

namespace {

RecordedLog read_normalized(std::istream& in, bool strict) {
  RecordedLog log;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;

  const auto fail = [&](const std::string& why) {
    const auto msg = fmt::format("line {}: {}", line_no, why);
    if (strict) {
      throw ParseError(msg, line);
    }
    log.errors.push_back(msg);
  };

  while (text::read_line(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) {
      continue;
    }
    if (!header) {
      if (text::trim(line) != "t_ms,rail,mw") {
        fail("expected header 't_ms,rail,mw'");
        return log;
      }
      header = true;
      continue;
    }
    const auto fields = text::split_csv(line);
    if (!fields || fields->size() != 3) {
      fail("expected three fields t_ms,rail,mw");
      continue;
    }
    const auto t = text::parse_int((*fields)[0]);
    const auto rail = std::string(text::trim((*fields)[1]));
    const auto mw = text::parse_double((*fields)[2]);
    if (!t || rail.empty() || !mw || *mw < 0.0) {
      fail("malformed row");
      continue;
    }
    if (!log.samples.empty() && log.samples.back().t_ms == *t) {
      if (!log.samples.back().rails.emplace(rail, *mw).second) {
        fail(fmt::format("rail {} repeated at t={}", rail, *t));
      }
      continue;
    }
    if (!log.samples.empty() && *t < log.samples.back().t_ms) {
      fail(fmt::format("timestamp {} goes backwards", *t));
      continue;
    }
    log.samples.push_back(PowerSample{*t, {{rail, *mw}}});
  }
  return log;
}

}  // namespace

RecordedLog read_recorded_log(std::istream& in, LogFormat format, int interval_ms, bool strict) {
  if (format == LogFormat::normalized_csv) {
    return read_normalized(in, strict);
  }
  RecordedLog log;
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_lines = 0;
  while (text::read_line(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) {
      continue;
    }
    try {
      if (format == LogFormat::tegrastats) {
        const auto t = synthesized_time(data_lines++, interval_ms);
        log.samples.push_back(parse_tegrastats_line(line, t));
      } else {
        auto row = parse_nvidia_smi_row(line, synthesized_time(data_lines, interval_ms));
        if (row.kind == SmiRow::Kind::header) {
          ++log.skipped;
          continue;
        }
        ++data_lines;
        if (row.kind == SmiRow::Kind::missing) {
          ++log.skipped;
          continue;
        }
        log.samples.push_back(std::move(*row.sample));
      }
    } catch (const ParseError& e) {
      if (format == LogFormat::nvidia_smi) {
        ++data_lines;
      }
      const auto msg = fmt::format("line {}: {}", line_no, e.what());
      if (strict) {
        throw ParseError(msg, e.raw());
      }
      log.errors.push_back(msg);
    }
  }
  return log;
}

std::string to_normalized_csv(std::span<const PowerSample> samples) {
  std::ostringstream out;
  out << "t_ms,rail,mw\n";
  for (const auto& s : samples) {
    for (const auto& [rail, mw] : s.rails) {
      out << s.t_ms << ',' << text::csv_field(rail) << ',' << text::shortest(mw) << '\n';
    }
  }
  return out.str();
}

// TelemetryStream --------------------------------------------------------------

struct TelemetryStream::Impl {
  TelemetrySource source;
  LogFormat format = LogFormat::tegrastats;
  std::chrono::steady_clock::time_point origin = std::chrono::steady_clock::now();
  Channel<PowerSample> channel;
  std::unique_ptr<Subprocess> tool;
  std::thread producer;
  std::atomic<bool> stopping{false};
  std::atomic<bool> ended{false};
  mutable std::mutex notice_mutex;
  std::vector<std::string> notices;

  void notice(std::string text) {
    spdlog::debug("telemetry: {}", text);
    std::lock_guard lock(notice_mutex);
    notices.push_back(std::move(text));
  }

  std::int64_t now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - origin)
        .count();
  }

  void replay_file() {
    std::ifstream in(source.path);
    const auto log = read_recorded_log(in, format, source.sample_interval_ms, false);
    for (const auto& e : log.errors) {
      notice("skipped unparseable line: " + e);
    }
    for (const auto& s : log.samples) {
      if (stopping) {
        break;
      }
      channel.push(s);
    }
    notice(fmt::format("end of recorded log ({} samples)", log.samples.size()));
  }

  void handle_live_line(const std::string& line) {
    if (text::trim(line).empty()) {
      return;
    }
    const auto t = now_ms();
    try {
      if (format == LogFormat::tegrastats) {
        channel.push(parse_tegrastats_line(line, t));
      } else if (format == LogFormat::nvidia_smi) {
        auto row = parse_nvidia_smi_row(line, t);
        if (row.kind == SmiRow::Kind::sample) {
          channel.push(std::move(*row.sample));
        } else if (row.kind == SmiRow::Kind::missing) {
          notice(fmt::format("missing reading at t={} ms dropped", t));
        }
      } else {
        notice("normalized CSV is not a live format; line ignored");
      }
    } catch (const ParseError& e) {
      notice(fmt::format("unparseable telemetry line: {} [{}]", e.what(), e.raw()));
    }
  }

  void read_tool() {
    LineSplitter out_lines;
    std::array<pollfd, 2> fds{pollfd{tool->stdout_fd(), POLLIN, 0}, pollfd{tool->stderr_fd(), POLLIN, 0}};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
      const int r = ::poll(fds.data(), fds.size(), 200);
      if (r < 0) {
        if (errno == EINTR) continue;
        notice(fmt::format("poll failed: {}", std::strerror(errno)));
        break;
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
          for (const auto& line : out_lines.feed(buf, static_cast<std::size_t>(n))) {
            handle_live_line(line);
          }
        }
      }
    }
    if (!out_lines.partial().empty()) {
      notice(fmt::format("discarded partial line '{}'", out_lines.partial()));
    }
    if (!stopping) {
      // Reaping stays with close() so only one thread ever waits on the child.
      notice("telemetry tool ended before the stream was closed");
    }
  }
};

TelemetryStream::TelemetryStream(const TelemetrySource& source) : impl_(std::make_unique<Impl>()) {
  source.validate();
  impl_->source = source;
  if (source.kind == TelemetrySource::Kind::recorded_log && !std::filesystem::exists(source.path)) {
    throw Error(ErrorKind::io, fmt::format("telemetry log '{}' does not exist", source.path.string()));
  }
  impl_->format = source.line_format();
  if (source.kind != TelemetrySource::Kind::recorded_log) {
    impl_->tool = std::make_unique<Subprocess>(source.tool_command());
  }
  impl_->origin = std::chrono::steady_clock::now();
  impl_->producer = std::thread([impl = impl_.get()] {
    if (impl->tool) {
      impl->read_tool();
    } else {
      impl->replay_file();
    }
    impl->ended = true;
    impl->channel.close();
  });
}

TelemetryStream::~TelemetryStream() {
  if (impl_) {
    close();
  }
}

std::int64_t TelemetryStream::elapsed_ms() const { return impl_->now_ms(); }

std::optional<PowerSample> TelemetryStream::next(std::chrono::milliseconds timeout) {
  return impl_->channel.pop(timeout);
}

std::vector<PowerSample> TelemetryStream::close() {
  impl_->stopping = true;
  if (impl_->tool) {
    impl_->tool->terminate();
  }
  if (impl_->producer.joinable()) {
    impl_->producer.join();
  }
  impl_->channel.close();
  return impl_->channel.drain();
}

bool TelemetryStream::ended() const { return impl_->ended; }

std::vector<std::string> TelemetryStream::notices() const {
  std::lock_guard lock(impl_->notice_mutex);
  return impl_->notices;
}

std::unique_ptr<TelemetryStream> open_stream(const TelemetrySource& source) {
  return std::make_unique<TelemetryStream>(source);
}

}  // namespace e3p
