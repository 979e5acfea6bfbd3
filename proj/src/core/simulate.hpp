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

#ifndef MGLMM_CORE_SIMULATE_HPP_
#define MGLMM_CORE_SIMULATE_HPP_

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "glmm.hpp"
#include "graph.hpp"
#include "re_matrix.hpp"
#include "rng.hpp"
#include "table.hpp"

namespace mglmm {

// Full generative description of a multivariate dataset: marginal response
// models, fixed effects per time level, dispersions, and the covariance of
// the per-group random components.
struct MglmmSpec {
  std::vector<ResponseSpec> response_specs;
  std::vector<std::map<std::string, double>> fixed_effects;  // per response: level -> value
  std::vector<double> dispersions;                           // per response
  Eigen::MatrixXd sigma;                                     // responses x responses
  int groups = 0;
  std::vector<std::string> time_levels;

  void validate() const;  // throws input_error on any inconsistency
};

struct SimulatedDataset {
  ObservationTable table;            // one row per (group, time level)
  std::vector<std::string> group_ids;
  Eigen::MatrixXd true_components;   // groups x responses, the drawn B matrix
};

// Draws B_g ~ N(0, sigma) per group, then one observation per cell from the
// marginal family at mean inverse-link(fixed effect + component). Cells use
// deterministic child streams, so results are identical across thread counts.
SimulatedDataset simulate_dataset(const MglmmSpec& spec, const RngStream& stream);

// Rows drawn directly from N(0, sigma): a synthetic random-effects matrix
// without the intervening response layer.
RandomEffectsMatrix simulate_pseudo_groups(const Eigen::MatrixXd& sigma,
                                           const std::vector<std::string>& response_names,
                                           int n_groups, const RngStream& stream);

// Covariance whose precision matrix has unit diagonal, -partial_correlation
// at edge positions and exact zeros elsewhere. When the raw construction is
// not positive definite the whole precision matrix is shrunk toward the
// identity (uniformly, preserving the zero pattern) until the smallest
// eigenvalue clears a fixed margin.
Eigen::MatrixXd graph_to_sigma(const LabeledGraph& graph, double partial_correlation);

// The 16-component dependence topology used by the shipped fixtures: two
// infection responses, four adjacent volatile compounds and ten peripheral
// ones.
LabeledGraph fixture_topology();

// Paper-shaped generative spec over that topology: one binomial response,
// one compound-Poisson response, fourteen gamma responses, ten groups,
// three time levels.
MglmmSpec fixture_spec();

}  // namespace mglmm

#endif  // MGLMM_CORE_SIMULATE_HPP_
