// Copyright 2026 The COSMic Toolkit Authors.
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

#ifndef COSMIC_ERROR_HPP
#define COSMIC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cosmic {

// Bad input data: malformed files, missing keys, violated invariants.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller misuse of an API or command line (bad arguments, unknown selectors).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace cosmic

#endif  // COSMIC_ERROR_HPP
