// Copyright 2026 The semimark Authors.
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


#include "semimark/process.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include "semimark/errors.hpp"

extern char** environ;

namespace semimark {

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::mutex slot_mutex;
std::condition_variable slot_cv;
int slot_limit = 4;
int slot_used = 0;

}  // namespace

void ProcessSlots::set_limit(int n) {
  std::lock_guard lock(slot_mutex);
  slot_limit = std::max(1, n);
  slot_cv.notify_all();
}

int ProcessSlots::limit() {
  std::lock_guard lock(slot_mutex);
  return slot_limit;
}

ProcessSlots::Guard::Guard() {
  std::unique_lock lock(slot_mutex);
  slot_cv.wait(lock, [] { return slot_used < slot_limit; });
  ++slot_used;
}

ProcessSlots::Guard::~Guard() {
  std::lock_guard lock(slot_mutex);
  --slot_used;
  slot_cv.notify_one();
}

TempDir::TempDir() {
  auto templ = (std::filesystem::temp_directory_path() / "semimark-XXXXXX").string();
  if (::mkdtemp(templ.data()) == nullptr)
    throw EnvironmentError("cannot create temporary directory under " +
                           std::filesystem::temp_directory_path().string());
  path_ = templ;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

bool executable_available(const std::string& name) {
  if (name.empty()) return false;
  if (name.find('/') != std::string::npos) return ::access(name.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    auto candidate = std::filesystem::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return true;
  }
  return false;
}

std::vector<std::string> expand_template(const std::vector<std::string>& templ,
                                         const std::map<std::string, std::string>& vars) {
  std::vector<std::string> out;
  out.reserve(templ.size());
  for (const auto& arg : templ) {
    std::string s;
    for (size_t i = 0; i < arg.size();) {
      if (arg[i] == '{') {
        const auto close = arg.find('}', i);
        if (close == std::string::npos) throw ConfigError("unterminated placeholder in \"" + arg + "\"");
        const auto key = arg.substr(i + 1, close - i - 1);
        const auto it = vars.find(key);
        if (it == vars.end()) throw ConfigError("unknown placeholder {" + key + "} in \"" + arg + "\"");
        s += it->second;
        i = close + 1;
      } else {
        s += arg[i++];
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

ProcessResult run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ConfigError("empty command");
  if (!executable_available(argv[0]))
    throw EnvironmentError("executable \"" + argv[0] + "\" not found on PATH");
  ProcessSlots::Guard slot;
  TempDir io;
  const auto out_path = io.path() / "stdout";
  const auto err_path = io.path() / "stderr";

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0600);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0600);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, argv[0].c_str(), &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw EnvironmentError("failed to start \"" + argv[0] + "\"");
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw EnvironmentError("waitpid failed for \"" + argv[0] + "\"");
  }
  ProcessResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  r.stdout_text = slurp(out_path);
  r.stderr_text = slurp(err_path);
  return r;
}

}  // namespace semimark
