// Copyright 2026 The CID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CID_ERROR_H_
#define CID_ERROR_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cid {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied value violates a documented precondition.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Two distributions (or a distribution and a backend) disagree on |V|.
class VocabMismatchError : public Error {
 public:
  VocabMismatchError(std::size_t expected, std::size_t actual)
      : Error("vocabulary size mismatch: " + std::to_string(expected) +
              " vs " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// Every token that survived top-K truncation has probability zero.
class EmptySupportError : public Error {
 public:
  using Error::Error;
};

// Failure talking to (or inside) a model or similarity backend. `status` is
// the HTTP status for remote services and 0 for transport failures.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status, bool retriable)
      : Error(what), status_(status), retriable_(retriable) {}

  int status() const { return status_; }
  bool retriable() const { return retriable_; }

 private:
  int status_;
  bool retriable_;
};

// Input plus generated suffix does not fit the backend's context window.
class ContextOverflowError : public BackendError {
 public:
  ContextOverflowError(std::size_t length, std::size_t limit)
      : BackendError("context length " + std::to_string(length) +
                         " exceeds limit " + std::to_string(limit),
                     413, false) {}
  explicit ContextOverflowError(const std::string& what)
      : BackendError(what, 413, false) {}
};

// A perturbation has no eligible site in the given text.
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

// biased_fraction() was asked to score continuations nobody labeled.
class UnlabeledContinuationError : public Error {
 public:
  explicit UnlabeledContinuationError(std::vector<std::string> missing)
      : Error(BuildMessage(missing)), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing() const { return missing_; }

 private:
  static std::string BuildMessage(const std::vector<std::string>& missing) {
    std::string msg = "unlabeled continuations:";
    for (const auto& m : missing) msg += "\n  " + m;
    return msg;
  }

  std::vector<std::string> missing_;
};

}  // namespace cid

#endif  // CID_ERROR_H_
