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

#ifndef MGLMM_TESTS_HELPERS_FIXTURES_HPP_
#define MGLMM_TESTS_HELPERS_FIXTURES_HPP_

#include <cstdio>
#include <string>
#include <vector>

#include "core/glmm.hpp"
#include "core/rng.hpp"
#include "core/table.hpp"

namespace testutil {

inline std::string group_label(int g) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "g%02d", g + 1);
  return buf;
}

// Single-response table simulated from the univariate GLMM: per-group normal
// intercept with variance sigma2, one observation per (group, level).
struct SimulatedGLMM {
  mglmm::ObservationTable table;
  std::vector<double> true_effects;  // per group
};

inline SimulatedGLMM simulate_glmm(const mglmm::ResponseSpec& spec,
                                   const std::vector<double>& theta_per_level, double dispersion,
                                   double sigma2, int n_groups, mglmm::RngStream rng) {
  SimulatedGLMM out;
  out.table.response_names = {spec.name};
  const int n_levels = static_cast<int>(theta_per_level.size());
  for (int g = 0; g < n_groups; ++g) {
    mglmm::RngStream gs = rng.child({static_cast<std::uint64_t>(g)});
    const double u = sigma2 > 0.0 ? std::sqrt(sigma2) * gs.normal() : 0.0;
    out.true_effects.push_back(u);
    for (int t = 0; t < n_levels; ++t) {
      mglmm::RngStream cs = gs.child({static_cast<std::uint64_t>(t) + 1});
      const double mu = mglmm::inverse_link(spec, theta_per_level[t] + u);
      const double y = mglmm::sample(spec.family, {mu, dispersion}, cs);
      char week[16];
      std::snprintf(week, sizeof week, "w%02d", t + 1);
      out.table.rows.push_back({group_label(g), week, {y}});
    }
  }
  return out;
}

}  // namespace testutil

#endif  // MGLMM_TESTS_HELPERS_FIXTURES_HPP_
