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

#ifndef MGLMM_CORE_DIAGNOSTICS_HPP_
#define MGLMM_CORE_DIAGNOSTICS_HPP_

#include <string>
#include <vector>

#include "glmm.hpp"
#include "rng.hpp"
#include "table.hpp"

namespace mglmm {

struct ObservationDiagnostic {
  std::string group;
  std::string time;
  double fitted_mean = 0.0;
  double pearson = 0.0;
  double pit = 0.0;
};

struct ResidualReport {
  std::string response;
  std::vector<ObservationDiagnostic> per_observation;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
};

// (y - mu) / sqrt(dispersion * V(mu)) per non-missing observation of the
// fitted response, in table row order.
std::vector<double> pearson_residuals(const FittedGLMM& fit, const ObservationTable& table);

// Probability integral transform per observation plus a one-sample
// Kolmogorov-Smirnov test against Uniform(0,1). Families with atoms get the
// randomized transform: one uniform draw on [F(y-), F(y)] per atom-carrying
// observation, consumed sequentially from the stream; continuous
// observations consume nothing.
ResidualReport pit_uniformity(const FittedGLMM& fit, const ObservationTable& table,
                              const RngStream& stream);

// Asymptotic Kolmogorov-Smirnov p-value for statistic d at sample size n.
double ks_p_value(double d, int n);

}  // namespace mglmm

#endif  // MGLMM_CORE_DIAGNOSTICS_HPP_
