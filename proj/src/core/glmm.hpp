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

#ifndef MGLMM_CORE_GLMM_HPP_
#define MGLMM_CORE_GLMM_HPP_

#include <string>
#include <utility>
#include <vector>

#include "families.hpp"
#include "table.hpp"

namespace mglmm {

enum class Link { Log, Logit };

// Per-response model configuration. Gamma and CompoundPoisson pair with the
// log link, Binomial with logit; other pairings are rejected.
struct ResponseSpec {
  std::string name;
  Family family;
  Link link = Link::Log;

  static ResponseSpec make(std::string name, Family family, Link link);
};

struct FitOptions {
  bool pin_re_variance_zero = false;  // degenerate prior: plain GLM
  int max_outer_iterations = 500;     // per optimizer restart
  double param_tol = 1e-7;
  double objective_tol = 1e-9;
};

// Result of a univariate Laplace fit: categorical fixed effect per time
// level, dispersion, random-intercept variance, and the empirical-Bayes
// modes per group. Levels and groups are kept in sorted label order so the
// fit is invariant to input row order.
struct FittedGLMM {
  ResponseSpec spec;
  std::vector<std::string> time_levels;
  std::vector<double> fixed_effects;
  double dispersion = 1.0;
  double re_variance = 0.0;
  std::vector<std::string> group_ids;
  std::vector<double> re_predictions;
  double log_likelihood = 0.0;
  bool converged = false;
  double pearson_dispersion = 1.0;  // moment estimate, reported as a diagnostic

  double fixed_effect(const std::string& level) const;
  double prediction(const std::string& group) const;
};

// Maximizes the Laplace-approximate marginal likelihood: one-dimensional
// Newton over each group's random intercept inside, derivative-free search
// over (fixed effects, log dispersion, log variance) outside.
FittedGLMM fit(const ObservationTable& table, const ResponseSpec& spec,
               const FitOptions& options = {});

// Empirical-Bayes predictions in stable (sorted) group order.
std::vector<std::pair<std::string, double>> predict_random_effects(const FittedGLMM& fit);

// Conditional fitted mean per table row: inverse link of (fixed effect +
// group prediction), on the count scale for Binomial.
std::vector<double> fitted_means(const FittedGLMM& fit, const ObservationTable& table);

// Laplace-approximate marginal log-likelihood of the table under the given
// (already fitted) parameters; used for recomputation and consistency checks.
double laplace_log_likelihood(const ObservationTable& table, const FittedGLMM& fit);

double inverse_link(const ResponseSpec& spec, double eta);

}  // namespace mglmm

#endif  // MGLMM_CORE_GLMM_HPP_
