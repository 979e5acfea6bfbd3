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

#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace mglmm {

namespace {

int response_column(const FittedGLMM& fit, const ObservationTable& table) {
  if (!fit.converged) throw state_error("diagnostics need a converged fit");
  const int col = table.response_index(fit.spec.name);
  if (col < 0)
    throw input_error("response column '" + fit.spec.name + "' not present in table");
  return col;
}

}  // namespace

std::vector<double> pearson_residuals(const FittedGLMM& fit, const ObservationTable& table) {
  const int col = response_column(fit, table);
  const std::vector<double> means = fitted_means(fit, table);
  std::vector<double> residuals;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& value = table.rows[i].values[col];
    if (!value) continue;
    const double mu = means[i];
    residuals.push_back((*value - mu) /
                        std::sqrt(fit.dispersion * variance_function(fit.spec.family, mu)));
  }
  return residuals;
}

ResidualReport pit_uniformity(const FittedGLMM& fit, const ObservationTable& table,
                              const RngStream& stream) {
  const int col = response_column(fit, table);
  const std::vector<double> means = fitted_means(fit, table);
  RngStream rng = stream;

  ResidualReport report;
  report.response = fit.spec.name;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& value = table.rows[i].values[col];
    if (!value) continue;
    const double mu = means[i];
    const DispersionParams params{mu, fit.dispersion};
    const double hi = cdf(fit.spec.family, params, *value);
    const double lo = cdf_left_limit(fit.spec.family, params, *value);
    const double pit = hi > lo ? lo + rng.uniform() * (hi - lo) : hi;
    const double pearson =
        (*value - mu) / std::sqrt(fit.dispersion * variance_function(fit.spec.family, mu));
    report.per_observation.push_back({table.rows[i].group, table.rows[i].time, mu, pearson, pit});
  }
  if (report.per_observation.empty()) throw input_error("no observations to diagnose");

  std::vector<double> u;
  for (const auto& obs : report.per_observation) u.push_back(obs.pit);
  std::sort(u.begin(), u.end());
  const int n = static_cast<int>(u.size());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, u[i] - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - u[i]);
  }
  report.ks_statistic = d;
  report.ks_p_value = ks_p_value(d, n);
  return report;
}

double ks_p_value(double d, int n) {
  if (!(d > 0.0)) return 1.0;
  if (d >= 1.0) return 0.0;
  const double x = std::sqrt(static_cast<double>(n)) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-10) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace mglmm
