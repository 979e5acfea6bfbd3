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

#ifndef MGLMM_CORE_FAMILIES_HPP_
#define MGLMM_CORE_FAMILIES_HPP_

#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace mglmm {

enum class FamilyKind { Gamma, Binomial, CompoundPoisson };

// One member of the exponential-dispersion families used by the model:
// Gamma, Binomial(size) on the count scale, or Gamma-compound-Poisson with
// power index strictly inside (1,2).
struct Family {
  FamilyKind kind = FamilyKind::Gamma;
  int size = 0;        // Binomial only
  double power = 0.0;  // CompoundPoisson only

  static Family gamma() { return Family{FamilyKind::Gamma, 0, 0.0}; }

  static Family binomial(int size) {
    if (size < 1) throw input_error("binomial size must be >= 1, got " + std::to_string(size));
    return Family{FamilyKind::Binomial, size, 0.0};
  }

  static Family compound_poisson(double power) {
    if (!(power > 1.0 && power < 2.0))
      throw input_error("compound-Poisson power index must lie strictly in (1,2), got " +
                        std::to_string(power));
    return Family{FamilyKind::CompoundPoisson, 0, power};
  }

  std::string name() const;
};

// Mean/dispersion pair. For Binomial the mean lives on the count scale
// (size * probability) and the dispersion is fixed at 1.
struct DispersionParams {
  double mean = 1.0;
  double dispersion = 1.0;
};

// Unit variance function V(mean): Gamma mean^2, CompoundPoisson mean^power,
// Binomial mean*(1 - mean/size).
double variance_function(const Family& family, double mean);

// P(Y = 0). Zero for Gamma; (1 - mean/size)^size for Binomial;
// exp(-mean^(2-p) / (dispersion*(2-p))) for CompoundPoisson.
double zero_probability(const Family& family, const DispersionParams& params);

// Log density (or log probability mass; for CompoundPoisson at y=0, log of
// the atom). The CompoundPoisson positive part is evaluated by series
// expansion around the dominant term.
double log_density(const Family& family, const DispersionParams& params, double y);

// P(Y <= y). The CompoundPoisson CDF includes the atom at zero.
double cdf(const Family& family, const DispersionParams& params, double y);

// P(Y < y): left limit of the CDF, used by the randomized PIT.
double cdf_left_limit(const Family& family, const DispersionParams& params, double y);

// One draw; deterministic given the stream state.
double sample(const Family& family, const DispersionParams& params, RngStream& rng);

// True if y lies in the family's support.
bool in_support(const Family& family, double y);

namespace detail {
// log of the mean-free series factor c(y, dispersion) of the compound-Poisson
// density, so that log f(y) = log c + (y*theta - kappa(theta))/dispersion.
double tweedie_log_series(double y, double dispersion, double power);
}  // namespace detail

}  // namespace mglmm

#endif  // MGLMM_CORE_FAMILIES_HPP_
