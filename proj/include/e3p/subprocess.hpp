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

#include <sys/types.h>

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace e3p {

/// A child process started without a shell, in its own process group, with
/// stdout and stderr connected to pipes. Destruction kills and reaps it.
class Subprocess {
 public:
  /// Throws Error(spawn) when the program cannot be started.
  explicit Subprocess(const std::vector<std::string>& argv,
                      const std::map<std::string, std::string>& env_overrides = {});
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  pid_t pid() const noexcept { return pid_; }
  int stdout_fd() const noexcept { return out_fd_; }
  int stderr_fd() const noexcept { return err_fd_; }

  /// SIGTERM to the process group, SIGKILL after `grace`. Reaps the child.
  void terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(500));

  /// Blocks until exit. Returns the exit code, or 128 + signal number.
  int wait();

  /// Non-blocking; nullopt while the child runs.
  std::optional<int> poll_exit();

 private:
  void close_pipes();

  pid_t pid_ = -1;
  int out_fd_ = -1;
  int err_fd_ = -1;
  std::optional<int> status_;
};

/// Splits a byte stream from a file descriptor into lines.
class LineSplitter {
 public:
  /// Appends bytes; complete lines (without '\n' or trailing '\r') are returned.
  std::vector<std::string> feed(const char* data, std::size_t size);
  /// Bytes after the last newline.
  const std::string& partial() const noexcept { return partial_; }
  void clear_partial() { partial_.clear(); }

 private:
  std::string partial_;
};

}  // namespace e3p
