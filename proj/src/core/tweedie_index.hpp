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

#ifndef MGLMM_CORE_TWEEDIE_INDEX_HPP_
#define MGLMM_CORE_TWEEDIE_INDEX_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glmm.hpp"
#include "table.hpp"

namespace mglmm {

// Outcome of the zero-count grid search for the compound-Poisson power
// index: one fit per grid value, expected zero counts per time level, and
// the index minimizing the Euclidean distance to the observed zero counts.
struct PowerGridResult {
  std::vector<double> grid;
  std::vector<std::optional<double>> distances;  // missing where the fit failed
  double chosen = 0.0;
  bool tie = false;
  std::map<std::string, int> observed_zeros;                     // per time level
  std::vector<std::map<std::string, double>> expected_zeros;     // per grid value
};

// Default grid 1.05 .. 1.95 in steps of 0.05.
std::vector<double> default_power_grid();

// For each candidate power index, fits the GLMM, sums each observation's
// zero probability within its time level, and compares the expected counts
// with the observed ones. Ties break toward the smaller index.
PowerGridResult select_power_index(const ObservationTable& table, const ResponseSpec& spec,
                                   const std::vector<double>& grid,
                                   const FitOptions& options = {});

}  // namespace mglmm

#endif  // MGLMM_CORE_TWEEDIE_INDEX_HPP_
