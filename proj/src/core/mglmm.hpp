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

#ifndef MGLMM_CORE_MGLMM_HPP_
#define MGLMM_CORE_MGLMM_HPP_

#include <map>
#include <string>
#include <vector>

#include "glmm.hpp"
#include "re_matrix.hpp"
#include "tweedie_index.hpp"

namespace mglmm {

// Joint result of all marginal fits plus the assembled prediction matrix.
// Marginals are stored in declared response order; the matrix columns follow
// the same order.
struct MglmmFit {
  std::vector<FittedGLMM> marginals;
  RandomEffectsMatrix re_matrix;
  std::map<std::string, PowerGridResult> power_results;  // compound-Poisson responses only

  const FittedGLMM& marginal(const std::string& response) const;
};

struct MglmmOptions {
  std::vector<double> power_grid;  // empty -> default grid
  FitOptions fit_options;
  int workers = 1;
};

// Raised when a marginal fit fails; carries the responses that had already
// finished so callers can report partial progress.
class marginal_fit_error : public numeric_error {
public:
  marginal_fit_error(const std::string& response, const std::string& cause,
                     std::vector<std::string> completed);
  const std::string& response() const { return response_; }
  const std::vector<std::string>& completed() const { return completed_; }

private:
  std::string response_;
  std::vector<std::string> completed_;
};

// Runs the power-index grid for every compound-Poisson response, fits each
// marginal model (concurrently up to the worker count) and assembles the
// groups x responses prediction matrix. The result is independent of the
// worker count and of table row order.
MglmmFit fit_all(const ObservationTable& table, const std::vector<ResponseSpec>& specs,
                 const MglmmOptions& options = {});

}  // namespace mglmm

#endif  // MGLMM_CORE_MGLMM_HPP_
