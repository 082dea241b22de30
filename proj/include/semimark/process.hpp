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


#ifndef SEMIMARK_PROCESS_HPP
#define SEMIMARK_PROCESS_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace semimark {

struct ProcessResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

// Runs argv[0] (PATH lookup) without a shell and waits for it.
// Throws EnvironmentError when the executable cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv);

// Replaces every "{key}" in each argument by vars.at(key). Unknown
// placeholders raise ConfigError.
std::vector<std::string> expand_template(const std::vector<std::string>& templ,
                                         const std::map<std::string, std::string>& vars);

// True when `name` resolves to an executable file (directly or via PATH).
bool executable_available(const std::string& name);

// Bounds how many external tools run at once across the process.
class ProcessSlots {
 public:
  static void set_limit(int n);
  static int limit();

  class Guard {
   public:
    Guard();
    ~Guard();
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;
  };
};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace semimark

#endif  // SEMIMARK_PROCESS_HPP
