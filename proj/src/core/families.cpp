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

#include "families.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <sstream>

namespace mglmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate(const Family& family, const DispersionParams& params) {
  if (!(params.mean > 0.0)) throw input_error("mean must be positive");
  if (!(params.dispersion > 0.0)) throw input_error("dispersion must be positive");
  // The closed upper endpoint (probability one) is admitted so degenerate
  // simulation settings remain expressible.
  if (family.kind == FamilyKind::Binomial && !(params.mean <= family.size))
    throw input_error("binomial mean must not exceed the size");
}

double log_binomial_pmf(int size, double prob, int y) {
  if (prob >= 1.0) return y == size ? 0.0 : kNegInf;
  if (prob <= 0.0) return y == 0 ? 0.0 : kNegInf;
  return std::lgamma(size + 1.0) - std::lgamma(y + 1.0) - std::lgamma(size - y + 1.0) +
         y * std::log(prob) + (size - y) * std::log1p(-prob);
}

// Poisson rate of the compound representation: N ~ Poisson(rate), Y | N=j ~
// Gamma(shape j*alpha, scale).
double compound_rate(double mean, double dispersion, double power) {
  return std::pow(mean, 2.0 - power) / (dispersion * (2.0 - power));
}

}  // namespace

std::string Family::name() const {
  switch (kind) {
    case FamilyKind::Gamma: return "gamma";
    case FamilyKind::Binomial: return "binomial";
    case FamilyKind::CompoundPoisson: return "compound-poisson";
  }
  return "?";
}

double variance_function(const Family& family, double mean) {
  switch (family.kind) {
    case FamilyKind::Gamma:
      if (!(mean > 0.0)) throw input_error("gamma mean must be positive");
      return mean * mean;
    case FamilyKind::CompoundPoisson:
      if (!(mean > 0.0)) throw input_error("compound-Poisson mean must be positive");
      return std::pow(mean, family.power);
    case FamilyKind::Binomial:
      if (!(mean > 0.0 && mean < family.size))
        throw input_error("binomial mean must lie in (0, size)");
      return mean * (1.0 - mean / family.size);
  }
  throw input_error("unknown family");
}

double zero_probability(const Family& family, const DispersionParams& params) {
  validate(family, params);
  switch (family.kind) {
    case FamilyKind::Gamma:
      return 0.0;
    case FamilyKind::Binomial:
      return std::pow(1.0 - params.mean / family.size, family.size);
    case FamilyKind::CompoundPoisson:
      return std::exp(-compound_rate(params.mean, params.dispersion, family.power));
  }
  throw input_error("unknown family");
}

namespace detail {

double tweedie_log_series(double y, double dispersion, double power) {
  const double alpha = (2.0 - power) / (power - 1.0);
  // log r with r = rate * scale^-alpha; the mean cancels out.
  const double log_r = -alpha * std::log(power - 1.0) - (1.0 + alpha) * std::log(dispersion) -
                       std::log(2.0 - power);
  const double log_y = std::log(y);
  auto log_term = [&](double j) {
    return j * log_r + (j * alpha - 1.0) * log_y - std::lgamma(j + 1.0) - std::lgamma(j * alpha);
  };
  // Dominant index of the series.
  const long j_top =
      std::max(1L, std::lround(std::pow(y, 2.0 - power) / (dispersion * (2.0 - power))));
  const double t_max = log_term(static_cast<double>(j_top));
  double sum = 1.0;  // j_top term, scaled by exp(-t_max)
  constexpr double kRelTol = 1e-12;
  constexpr long kMaxTerms = 200000;
  long terms = 1;
  for (long j = j_top - 1; j >= 1; --j) {
    const double t = std::exp(log_term(static_cast<double>(j)) - t_max);
    sum += t;
    if (++terms > kMaxTerms) break;
    if (t < kRelTol * sum) break;
  }
  for (long j = j_top + 1;; ++j) {
    const double t = std::exp(log_term(static_cast<double>(j)) - t_max);
    sum += t;
    if (++terms > kMaxTerms) {
      std::ostringstream msg;
      msg << "compound-Poisson series did not converge after " << kMaxTerms
          << " terms (y=" << y << ", dispersion=" << dispersion << ", power=" << power
          << ", dominant index " << j_top << ")";
      throw numeric_error(msg.str());
    }
    if (t < kRelTol * sum) break;
  }
  return t_max + std::log(sum);
}

}  // namespace detail

double log_density(const Family& family, const DispersionParams& params, double y) {
  validate(family, params);
  const double mu = params.mean;
  const double phi = params.dispersion;
  switch (family.kind) {
    case FamilyKind::Gamma: {
      if (!(y > 0.0)) throw input_error("gamma support is y > 0");
      const double shape = 1.0 / phi;
      const double scale = mu * phi;
      return (shape - 1.0) * std::log(y) - y / scale - std::lgamma(shape) -
             shape * std::log(scale);
    }
    case FamilyKind::Binomial: {
      const int n = family.size;
      if (y < 0.0 || y > n || y != std::floor(y))
        throw input_error("binomial support is integers in [0, size]");
      return log_binomial_pmf(n, mu / n, static_cast<int>(y));
    }
    case FamilyKind::CompoundPoisson: {
      if (y < 0.0) throw input_error("compound-Poisson support is y >= 0");
      const double p = family.power;
      if (y == 0.0) return -compound_rate(mu, phi, p);
      const double exponent =
          (y * std::pow(mu, 1.0 - p) / (1.0 - p) - std::pow(mu, 2.0 - p) / (2.0 - p)) / phi;
      return detail::tweedie_log_series(y, phi, p) + exponent;
    }
  }
  throw input_error("unknown family");
}

double cdf(const Family& family, const DispersionParams& params, double y) {
  validate(family, params);
  const double mu = params.mean;
  const double phi = params.dispersion;
  switch (family.kind) {
    case FamilyKind::Gamma: {
      if (y <= 0.0) return 0.0;
      return boost::math::gamma_p(1.0 / phi, y / (mu * phi));
    }
    case FamilyKind::Binomial: {
      if (y < 0.0) return 0.0;
      const int n = family.size;
      const int top = std::min(n, static_cast<int>(std::floor(y)));
      double acc = 0.0;
      for (int k = 0; k <= top; ++k) acc += std::exp(log_binomial_pmf(n, mu / n, k));
      return std::min(acc, 1.0);
    }
    case FamilyKind::CompoundPoisson: {
      if (y < 0.0) return 0.0;
      const double p = family.power;
      const double rate = compound_rate(mu, phi, p);
      const double alpha = (2.0 - p) / (p - 1.0);
      const double scale = phi * (p - 1.0) * std::pow(mu, p - 1.0);
      double acc = std::exp(-rate);  // atom at zero
      if (y == 0.0) return acc;
      double log_pois = -rate;
      double weight_used = std::exp(-rate);
      for (long j = 1; weight_used < 1.0 - 1e-13; ++j) {
        log_pois += std::log(rate) - std::log(static_cast<double>(j));
        const double w = std::exp(log_pois);
        weight_used += w;
        if (w > 1e-16) acc += w * boost::math::gamma_p(j * alpha, y / scale);
        if (j > 10 * rate + 1000)
          throw numeric_error("compound-Poisson CDF series failed to converge");
      }
      return std::min(acc, 1.0);
    }
  }
  throw input_error("unknown family");
}

double cdf_left_limit(const Family& family, const DispersionParams& params, double y) {
  switch (family.kind) {
    case FamilyKind::Gamma:
      return cdf(family, params, y);
    case FamilyKind::CompoundPoisson:
      if (y <= 0.0) return 0.0;
      return cdf(family, params, y);  // continuous above the atom
    case FamilyKind::Binomial: {
      const double below = std::ceil(y) - 1.0;  // largest support point < y
      if (below < 0.0) return 0.0;
      return cdf(family, params, below);
    }
  }
  throw input_error("unknown family");
}

double sample(const Family& family, const DispersionParams& params, RngStream& rng) {
  validate(family, params);
  const double mu = params.mean;
  const double phi = params.dispersion;
  switch (family.kind) {
    case FamilyKind::Gamma:
      return rng.gamma(1.0 / phi, mu * phi);
    case FamilyKind::Binomial:
      return rng.binomial(family.size, mu / family.size);
    case FamilyKind::CompoundPoisson: {
      const double p = family.power;
      const long count = rng.poisson(compound_rate(mu, phi, p));
      if (count == 0) return 0.0;
      const double alpha = (2.0 - p) / (p - 1.0);
      const double scale = phi * (p - 1.0) * std::pow(mu, p - 1.0);
      return rng.gamma(count * alpha, scale);
    }
  }
  throw input_error("unknown family");
}

bool in_support(const Family& family, double y) {
  if (!std::isfinite(y)) return false;
  switch (family.kind) {
    case FamilyKind::Gamma:
      return y > 0.0;
    case FamilyKind::Binomial:
      return y >= 0.0 && y <= family.size && y == std::floor(y);
    case FamilyKind::CompoundPoisson:
      return y >= 0.0;
  }
  return false;
}

}  // namespace mglmm
