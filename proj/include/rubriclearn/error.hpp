// Copyright 2026 The rubriclearn Authors.
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

#ifndef RUBRICLEARN_ERROR_HPP
#define RUBRICLEARN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rubriclearn {

enum class ErrorKind {
  input,        // malformed caller input, bad dataset or config values
  config,       // unusable configuration, auth rejected by a remote
  numerical,    // factorization failure
  generation,   // model output missing the required tagged block
  judgment,     // unparseable verdict
  structuring,  // Theme-Tips output violates cardinality/format
  transport,    // network failure or exhausted retries
  protocol,     // remote answered with a body we cannot interpret
  checkpoint,   // corrupt or version-mismatched checkpoint
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input error";
    case ErrorKind::config: return "config error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::generation: return "generation error";
    case ErrorKind::judgment: return "judgment error";
    case ErrorKind::structuring: return "structuring error";
    case ErrorKind::transport: return "transport error";
    case ErrorKind::protocol: return "protocol error";
    case ErrorKind::checkpoint: return "checkpoint error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

/// Process exit code for an error: 2 for validation problems, 1 otherwise.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::config:
    case ErrorKind::checkpoint:
      return 2;
    default:
      return 1;
  }
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_ERROR_HPP
