// Copyright 2026 the mglmm authors
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

#ifndef MGLMM_CORE_ERRORS_HPP_
#define MGLMM_CORE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mglmm {

// Bad user-supplied data or configuration (maps to exit code 2).
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: divergence, singular matrix, series blow-up
// (maps to exit code 3).
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Operation invoked on an object in the wrong state (e.g. a
// non-converged fit).
class state_error : public std::runtime_error {
public:
  explicit state_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mglmm

#endif  // MGLMM_CORE_ERRORS_HPP_
