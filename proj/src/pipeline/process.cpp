// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "vaelfa/errors.hpp"

namespace vaelfa {

std::filesystem::path temp_root() {
  if (const char* env = std::getenv("VAELFA_TMPDIR"); env && *env) {
    return env;
  }
  return std::filesystem::temp_directory_path();
}

TempDir::TempDir(const std::string& prefix) {
  std::random_device rd;
  const auto root = temp_root();
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::ostringstream name;
    name << prefix << '-' << ::getpid() << '-' << std::hex << rd();
    auto candidate = root / name.str();
    std::error_code ec;
    if (std::filesystem::create_directory(candidate, ec)) {
      path_ = candidate;
      return;
    }
  }
  throw IoError("cannot create temporary directory under " + root.string());
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  out += '\'';
  return out;
}

std::string stderr_digest(const std::string& text, std::size_t max_chars) {
  if (text.empty()) return "<no stderr>";
  std::string tail = text.size() > max_chars
                         ? "..." + text.substr(text.size() - max_chars)
                         : text;
  while (!tail.empty() && (tail.back() == '\n' || tail.back() == '\r')) {
    tail.pop_back();
  }
  return tail;
}

ProcessResult run_shell(const std::string& command, double timeout_seconds,
                        const std::filesystem::path& workdir) {
  TempDir scratch("vaelfa-proc");
  const auto err_path = scratch.path() / "stderr.txt";

  const pid_t pid = ::fork();
  if (pid < 0) throw IoError("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    const int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    const int null_fd = ::open("/dev/null", O_RDWR);
    if (err_fd >= 0) ::dup2(err_fd, STDERR_FILENO);
    if (null_fd >= 0) {
      ::dup2(null_fd, STDOUT_FILENO);
      ::dup2(null_fd, STDIN_FILENO);
    }
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) ::_exit(127);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }

  ProcessResult result;
  const auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(timeout_seconds));
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw IoError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!result.timed_out && WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  }
  std::ifstream err(err_path);
  std::ostringstream buf;
  buf << err.rdbuf();
  result.stderr_text = buf.str();
  return result;
}

}  // namespace vaelfa
