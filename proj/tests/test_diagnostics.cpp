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

#include <cmath>

#include "core/diagnostics.hpp"
#include "doctest.h"
#include "helpers/fixtures.hpp"

using namespace mglmm;
using testutil::simulate_glmm;

namespace {

// A hand-built fit with known parameters: one level, listed groups, all
// predictions supplied directly.
FittedGLMM crafted_fit(const ResponseSpec& spec, double theta, double dispersion,
                       const std::vector<std::string>& groups,
                       const std::vector<double>& predictions) {
  FittedGLMM fit;
  fit.spec = spec;
  fit.time_levels = {"w01"};
  fit.fixed_effects = {theta};
  fit.dispersion = dispersion;
  fit.group_ids = groups;
  fit.re_predictions = predictions;
  fit.converged = true;
  return fit;
}

ObservationTable one_column(const std::string& name,
                            const std::vector<std::pair<std::string, double>>& cells) {
  ObservationTable t;
  t.response_names = {name};
  for (const auto& [group, y] : cells) t.rows.push_back({group, "w01", {y}});
  return t;
}

}  // namespace

TEST_CASE("pearson residual closed forms") {
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  const auto fit = crafted_fit(spec, 0.0, 1.0, {"g01"}, {0.0});  // mu = 1
  const auto table = one_column("area", {{"g01", 1.0}, {"g01", 2.0}});
  const auto res = pearson_residuals(fit, table);
  REQUIRE(res.size() == 2);
  CHECK(res[0] == doctest::Approx(0.0));
  CHECK(res[1] == doctest::Approx(1.0));  // (2-1)/sqrt(1*1^2)
}

TEST_CASE("diagnostics require a converged fit") {
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  auto fit = crafted_fit(spec, 0.0, 1.0, {"g01"}, {0.0});
  fit.converged = false;
  const auto table = one_column("area", {{"g01", 1.0}});
  CHECK_THROWS_AS(pearson_residuals(fit, table), state_error);
  CHECK_THROWS_AS(pit_uniformity(fit, table, RngStream(1)), state_error);
}

TEST_CASE("correctly specified gamma fit has unit-scale residuals") {
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  auto sim = simulate_glmm(spec, {0.5, 1.0, 1.5}, 0.3, 0.4, 50, RngStream(31));
  const auto fitted = fit(sim.table, spec);
  REQUIRE(fitted.converged);
  const auto res = pearson_residuals(fitted, sim.table);
  REQUIRE(res.size() == 150);
  double mean = 0.0, var = 0.0;
  for (double r : res) mean += r;
  mean /= res.size();
  for (double r : res) var += (r - mean) * (r - mean);
  var /= res.size() - 1;
  CHECK(var > 0.7);
  CHECK(var < 1.3);
}

TEST_CASE("continuous PIT is deterministic and uniform under the truth") {
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  auto sim = simulate_glmm(spec, {0.5, 1.0, 1.5}, 0.3, 0.4, 50, RngStream(37));
  const auto fitted = fit(sim.table, spec);
  const auto a = pit_uniformity(fitted, sim.table, RngStream(1));
  const auto b = pit_uniformity(fitted, sim.table, RngStream(999));
  REQUIRE(a.per_observation.size() == b.per_observation.size());
  for (std::size_t i = 0; i < a.per_observation.size(); ++i) {
    CHECK(a.per_observation[i].pit == b.per_observation[i].pit);  // no stream use
    CHECK(a.per_observation[i].pit >= 0.0);
    CHECK(a.per_observation[i].pit <= 1.0);
  }
  CHECK(a.ks_p_value > 0.10);
  CHECK(a.ks_statistic >= 0.0);
  CHECK(a.ks_statistic <= 1.0);
}

TEST_CASE("randomized PIT is seed-reproducible for atom families") {
  const auto spec = ResponseSpec::make("infected", Family::binomial(9), Link::Logit);
  auto sim = simulate_glmm(spec, {-0.5, 0.0, 0.5}, 1.0, 0.3, 50, RngStream(41));
  const auto fitted = fit(sim.table, spec);
  const auto a = pit_uniformity(fitted, sim.table, RngStream(7));
  const auto b = pit_uniformity(fitted, sim.table, RngStream(7));
  const auto c = pit_uniformity(fitted, sim.table, RngStream(8));
  bool any_diff = false;
  for (std::size_t i = 0; i < a.per_observation.size(); ++i) {
    CHECK(a.per_observation[i].pit == b.per_observation[i].pit);
    any_diff |= (a.per_observation[i].pit != c.per_observation[i].pit);
  }
  CHECK(any_diff);  // every binomial observation carries an atom
  CHECK(a.ks_p_value > 0.10);
}

TEST_CASE("one uniform consumed per atom-carrying observation") {
  const auto spec = ResponseSpec::make("lesion", Family::compound_poisson(1.5), Link::Log);
  auto sim = simulate_glmm(spec, {0.0, 0.3, 0.6}, 1.0, 0.3, 20, RngStream(43));
  const auto fitted = fit(sim.table, spec);
  const auto report = pit_uniformity(fitted, sim.table, RngStream(11));

  // Replay the documented consumption discipline by hand.
  RngStream replay(11);
  const auto means = fitted_means(fitted, sim.table);
  std::size_t k = 0;
  int atoms = 0;
  for (std::size_t i = 0; i < sim.table.rows.size(); ++i) {
    const double y = *sim.table.rows[i].values[0];
    const DispersionParams params{means[i], fitted.dispersion};
    const double hi = cdf(spec.family, params, y);
    const double lo = cdf_left_limit(spec.family, params, y);
    double expected = hi;
    if (hi > lo) {
      expected = lo + replay.uniform() * (hi - lo);
      ++atoms;
      CHECK(y == 0.0);  // only the zero atom is discrete here
    }
    CHECK(report.per_observation[k].pit == expected);
    ++k;
  }
  CHECK(atoms > 0);
}

TEST_CASE("misspecified dispersion is flagged") {
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  auto sim = simulate_glmm(spec, {0.5, 1.0, 1.5}, 2.0, 0.4, 50, RngStream(47));
  auto fitted = fit(sim.table, spec);
  fitted.dispersion = 0.1;  // gross misspecification of the scale
  const auto report = pit_uniformity(fitted, sim.table, RngStream(3));
  CHECK(report.ks_p_value < 0.01);
}

TEST_CASE("single observation statistic") {
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  const auto fit = crafted_fit(spec, 0.0, 1.0, {"g01"}, {0.0});
  const auto table = one_column("area", {{"g01", 2.5}});
  const auto report = pit_uniformity(fit, table, RngStream(1));
  REQUIRE(report.per_observation.size() == 1);
  const double u = report.per_observation[0].pit;
  CHECK(report.ks_statistic == doctest::Approx(std::max(u, 1.0 - u)).epsilon(1e-15));
}

TEST_CASE("ks p-value basics") {
  CHECK(ks_p_value(0.0, 10) == 1.0);
  CHECK(ks_p_value(1.0, 10) == 0.0);
  const double p = ks_p_value(0.1, 100);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  CHECK(ks_p_value(0.2, 100) < p);  // monotone in the statistic
}

TEST_CASE("ks test is calibrated under exact uniformity") {
  // PITs computed under the true generating parameters are exactly uniform;
  // check the rejection rate of the asymptotic test at level 0.05.
  const auto spec = ResponseSpec::make("area", Family::gamma(), Link::Log);
  int rejected = 0;
  const int replicates = 200;
  for (int rep = 0; rep < replicates; ++rep) {
    auto sim = simulate_glmm(spec, {0.8}, 0.5, 0.3, 150, RngStream(1000 + rep));
    std::vector<std::string> groups;
    std::vector<double> predictions;
    for (int g = 0; g < 150; ++g) {
      groups.push_back(testutil::group_label(g));
      predictions.push_back(sim.true_effects[g]);
    }
    std::sort(groups.begin(), groups.end());
    auto truth = crafted_fit(spec, 0.8, 0.5, groups, {});
    truth.re_predictions.resize(150);
    for (int g = 0; g < 150; ++g) {
      const auto it = std::find(groups.begin(), groups.end(), testutil::group_label(g));
      truth.re_predictions[it - groups.begin()] = sim.true_effects[g];
    }
    const auto report = pit_uniformity(truth, sim.table, RngStream(5));
    if (report.ks_p_value < 0.05) ++rejected;
  }
  const double fraction = double(rejected) / replicates;
  CHECK(fraction >= 0.01);
  CHECK(fraction <= 0.10);
}
