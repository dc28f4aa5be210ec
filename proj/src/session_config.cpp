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

#include "e3p/session_config.hpp"

#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "e3p/error.hpp"
#include "e3p/text.hpp"

namespace e3p {

namespace {

/// Parses a double-quoted string starting at s[0]; returns the unescaped text
/// and advances `pos` past the closing quote.
std::optional<std::string> quoted(std::string_view s, std::size_t& pos) {
  if (pos >= s.size() || s[pos] != '"') {
    return std::nullopt;
  }
  std::string out;
  for (++pos; pos < s.size(); ++pos) {
    const char c = s[pos];
    if (c == '\\' && pos + 1 < s.size()) {
      out.push_back(s[++pos]);
    } else if (c == '"') {
      ++pos;
      return out;
    } else {
      out.push_back(c);
    }
  }
  return std::nullopt;
}

std::string_view strip_comment(std::string_view line) {
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_quotes) {
      ++i;
    } else if (line[i] == '"') {
      in_quotes = !in_quotes;
    } else if (line[i] == '#' && !in_quotes) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

SessionConfig parse_session_config(std::istream& in, const std::string& source) {
  SessionConfig config;
  std::string raw;
  std::size_t line_no = 0;

  while (text::read_line(in, raw)) {
    ++line_no;
    const auto line = text::trim(strip_comment(raw));
    if (line.empty() || line.front() == '[') {
      continue;  // blank, comment or TOML table header
    }
    const auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::configuration, fmt::format("{}:{}: {}", source, line_no, why));
    };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail("expected 'key = value'");
    }
    const auto key = std::string(text::trim(line.substr(0, eq)));
    const auto value_text = text::trim(line.substr(eq + 1));

    const auto scalar = [&]() -> std::string {
      if (!value_text.empty() && value_text.front() == '"') {
        std::size_t pos = 0;
        auto s = quoted(value_text, pos);
        if (!s || !text::trim(value_text.substr(pos)).empty()) {
          fail(fmt::format("bad quoted value for '{}'", key));
        }
        return *s;
      }
      return std::string(value_text);
    };
    const auto argv = [&]() -> std::vector<std::string> {
      std::vector<std::string> out;
      if (!value_text.empty() && value_text.front() == '[') {
        std::size_t pos = 1;
        while (true) {
          while (pos < value_text.size() && (value_text[pos] == ' ' || value_text[pos] == ',')) ++pos;
          if (pos < value_text.size() && value_text[pos] == ']') {
            if (!text::trim(value_text.substr(pos + 1)).empty()) fail("trailing text after array");
            break;
          }
          auto item = quoted(value_text, pos);
          if (!item) fail(fmt::format("'{}' array items must be quoted strings", key));
          out.push_back(std::move(*item));
        }
      } else {
        out = text::split_whitespace(scalar());
      }
      if (out.empty()) fail(fmt::format("'{}' is empty", key));
      return out;
    };
    const auto integer = [&](int min) {
      const auto v = text::parse_int(scalar());
      if (!v || *v < min || *v > std::numeric_limits<int>::max()) {
        fail(fmt::format("'{}' must be an integer ≥ {}", key, min));
      }
      return static_cast<int>(*v);
    };

    try {
      if (key == "command") {
        config.command = argv();
      } else if (key == "telemetry") {
        const auto kind = parse_source_kind(scalar());
        if (!kind) fail(fmt::format("unknown telemetry kind '{}'", scalar()));
        config.telemetry = kind;
      } else if (key == "telemetry_command") {
        config.telemetry_command = argv();
      } else if (key == "log") {
        config.log = scalar();
      } else if (key == "log_format") {
        const auto format = parse_log_format(scalar());
        if (!format) fail(fmt::format("unknown log format '{}'", scalar()));
        config.log_format = format;
      } else if (key == "interval_ms") {
        config.interval_ms = integer(50);
      } else if (key == "rails") {
        config.rails = RailSelection::parse(scalar());
      } else if (key == "trials") {
        config.trials = integer(1);
      } else if (key == "window") {
        const auto mode = parse_window_mode(scalar());
        if (!mode) fail(fmt::format("window must be 'handshake' or 'process', got '{}'", scalar()));
        config.window = mode;
      } else if (key == "cooldown_ms") {
        config.cooldown_ms = integer(0);
      } else if (key == "idle_ms") {
        config.idle_ms = integer(0);
      } else if (key == "timeout_ms") {
        config.timeout_ms = integer(1);
      } else if (key == "model") {
        config.model = scalar();
      } else if (key == "device") {
        config.device = scalar();
      } else if (key == "dataset") {
        config.dataset = scalar();
      } else if (key == "registry") {
        config.registry = scalar();
      } else if (key == "output") {
        config.output = scalar();
      } else {
        fail(fmt::format("unknown key '{}'", key));
      }
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with(source)) {
        throw;
      }
      fail(e.what());
    }
  }
  return config;
}

SessionConfig load_session_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, fmt::format("cannot open session config '{}'", path.string()));
  }
  auto config = parse_session_config(in, path.string());
  // Input paths are relative to the config file, the output path to the caller.
  const auto base = path.parent_path();
  for (auto* p : {&config.log, &config.registry}) {
    if (*p && p->value().is_relative()) {
      *p = base / p->value();
    }
  }
  return config;
}

}  // namespace e3p
