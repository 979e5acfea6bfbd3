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

#include "tweedie_index.hpp"

#include <algorithm>
#include <cmath>

namespace mglmm {

std::vector<double> default_power_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(1.0 + 0.05 * i);
  return grid;
}

PowerGridResult select_power_index(const ObservationTable& table, const ResponseSpec& spec,
                                   const std::vector<double>& grid, const FitOptions& options) {
  if (spec.family.kind != FamilyKind::CompoundPoisson)
    throw input_error("power-index selection applies to compound-Poisson responses only");
  if (grid.empty()) throw input_error("power-index grid must not be empty");
  for (double p : grid)
    if (!(p > 1.0 && p < 2.0))
      throw input_error("power-index grid value " + std::to_string(p) + " outside (1,2)");

  const int col = table.response_index(spec.name);
  if (col < 0) throw input_error("response column '" + spec.name + "' not present in table");

  PowerGridResult result;
  result.grid = grid;
  // Ascending order makes the tie-break toward the smaller index a plain
  // first-strict-minimum scan.
  std::sort(result.grid.begin(), result.grid.end());

  for (const auto& row : table.rows) {
    if (!row.values[col]) continue;
    auto [it, inserted] = result.observed_zeros.try_emplace(row.time, 0);
    if (*row.values[col] == 0.0) it->second += 1;
  }

  std::string last_error;
  for (double p : result.grid) {
    ResponseSpec candidate = spec;
    candidate.family = Family::compound_poisson(p);
    std::map<std::string, double> expected;
    std::optional<double> distance;
    try {
      const FittedGLMM f = fit(table, candidate, options);
      const std::vector<double> means = fitted_means(f, table);
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (!row.values[col]) continue;
        expected[row.time] +=
            zero_probability(candidate.family, {means[i], f.dispersion});
      }
      double d2 = 0.0;
      for (const auto& [level, observed] : result.observed_zeros) {
        const double diff = observed - expected[level];
        d2 += diff * diff;
      }
      distance = std::sqrt(d2);
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    result.distances.push_back(distance);
    result.expected_zeros.push_back(std::move(expected));
  }

  bool any = false;
  double best = 0.0;
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    if (!result.distances[i]) continue;
    if (!any || *result.distances[i] < best) {
      best = *result.distances[i];
      result.chosen = result.grid[i];
      any = true;
    } else if (*result.distances[i] == best) {
      result.tie = true;  // kept the smaller index, scanned in ascending order
    }
  }
  if (!any)
    throw numeric_error("every power-index fit failed; last error: " + last_error);
  return result;
}

}  // namespace mglmm
