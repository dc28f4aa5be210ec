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

#include "e3p/subprocess.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include <fmt/format.h>

#include "e3p/error.hpp"

extern char** environ;

namespace e3p {

namespace {

int decode_status(int status) {
  if (WIFEXITED(status)) {
    return WEXITSTATUS(status);
  }
  if (WIFSIGNALED(status)) {
    return 128 + WTERMSIG(status);
  }
  return -1;
}

struct SpawnActions {
  posix_spawn_file_actions_t actions;
  posix_spawnattr_t attr;
  SpawnActions() {
    posix_spawn_file_actions_init(&actions);
    posix_spawnattr_init(&attr);
  }
  ~SpawnActions() {
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
  }
};

}  // namespace

Subprocess::Subprocess(const std::vector<std::string>& argv,
                       const std::map<std::string, std::string>& env_overrides) {
  if (argv.empty() || argv.front().empty()) {
    throw Error(ErrorKind::spawn, "empty command");
  }

  int out_pipe[2];
  int err_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorKind::spawn, fmt::format("pipe: {}", std::strerror(errno)));
  }
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw Error(ErrorKind::spawn, fmt::format("pipe: {}", std::strerror(errno)));
  }

  SpawnActions sa;
  posix_spawn_file_actions_adddup2(&sa.actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&sa.actions, err_pipe[1], STDERR_FILENO);
  posix_spawnattr_setflags(&sa.attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&sa.attr, 0);

  std::vector<char*> args;
  for (const auto& a : argv) {
    args.push_back(const_cast<char*>(a.c_str()));
  }
  args.push_back(nullptr);

  std::vector<std::string> env_storage;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    const auto key = entry.substr(0, entry.find('='));
    if (!env_overrides.contains(std::string(key))) {
      env_storage.emplace_back(entry);
    }
  }
  for (const auto& [key, value] : env_overrides) {
    env_storage.push_back(key + "=" + value);
  }
  std::vector<char*> envp;
  for (auto& e : env_storage) {
    envp.push_back(e.data());
  }
  envp.push_back(nullptr);

  const int rc = posix_spawnp(&pid_, args[0], &sa.actions, &sa.attr, args.data(), envp.data());
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  if (rc != 0) {
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    pid_ = -1;
    throw Error(ErrorKind::spawn, fmt::format("cannot start '{}': {}", argv.front(), std::strerror(rc)));
  }
  out_fd_ = out_pipe[0];
  err_fd_ = err_pipe[0];
}

Subprocess::~Subprocess() {
  if (pid_ > 0 && !status_) {
    terminate(std::chrono::milliseconds(100));
  }
  close_pipes();
}

void Subprocess::close_pipes() {
  if (out_fd_ >= 0) {
    ::close(out_fd_);
    out_fd_ = -1;
  }
  if (err_fd_ >= 0) {
    ::close(err_fd_);
    err_fd_ = -1;
  }
}

std::optional<int> Subprocess::poll_exit() {
  if (status_ || pid_ <= 0) {
    return status_;
  }
  int status = 0;
  const pid_t r = waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    status_ = decode_status(status);
  }
  return status_;
}

int Subprocess::wait() {
  if (status_) {
    return *status_;
  }
  int status = 0;
  pid_t r;
  do {
    r = waitpid(pid_, &status, 0);
  } while (r < 0 && errno == EINTR);
  status_ = r == pid_ ? decode_status(status) : -1;
  return *status_;
}

void Subprocess::terminate(std::chrono::milliseconds grace) {
  if (pid_ <= 0 || poll_exit()) {
    // The leader is gone; stragglers in its group still hold our pipes.
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);
    }
    return;
  }
  ::kill(-pid_, SIGTERM);
  const auto deadline = std::chrono::steady_clock::now() + grace;
  while (std::chrono::steady_clock::now() < deadline) {
    if (poll_exit()) {
      ::kill(-pid_, SIGKILL);
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::kill(-pid_, SIGKILL);
  wait();
}

std::vector<std::string> LineSplitter::feed(const char* data, std::size_t size) {
  std::vector<std::string> lines;
  partial_.append(data, size);
  std::size_t start = 0;
  for (std::size_t nl = partial_.find('\n'); nl != std::string::npos; nl = partial_.find('\n', start)) {
    std::string line = partial_.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(std::move(line));
    start = nl + 1;
  }
  partial_.erase(0, start);
  return lines;
}

}  // namespace e3p
