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

#include "simulate.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace mglmm {

namespace {

std::string padded_group_label(int g, int total) {
  int width = 2;
  for (int t = total; t >= 100; t /= 10) ++width;
  char buf[24];
  std::snprintf(buf, sizeof buf, "g%0*d", width, g + 1);
  return buf;
}

// Symmetric square root with eigenvalues clamped at zero, so positive
// semidefinite covariances (including the zero matrix) are accepted.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw numeric_error("covariance eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-10)
      throw input_error("covariance matrix is not positive semidefinite");
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXd draw_components(const Eigen::MatrixXd& root, const RngStream& stream, int group) {
  RngStream gs = stream.child({0, static_cast<std::uint64_t>(group)});
  Eigen::VectorXd z(root.cols());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = gs.normal();
  return root * z;
}

}  // namespace

void MglmmSpec::validate() const {
  const std::size_t p = response_specs.size();
  if (p == 0) throw input_error("spec needs at least one response");
  if (fixed_effects.size() != p || dispersions.size() != p)
    throw input_error("fixed effects and dispersions must match the response count");
  if (sigma.rows() != static_cast<Eigen::Index>(p) || sigma.cols() != static_cast<Eigen::Index>(p))
    throw input_error("covariance dimension must match the response count");
  if (!sigma.isApprox(sigma.transpose(), 1e-10))
    throw input_error("covariance matrix must be symmetric");
  if (groups < 1) throw input_error("group count must be positive");
  if (time_levels.empty()) throw input_error("time levels must not be empty");
  std::set<std::string> level_set(time_levels.begin(), time_levels.end());
  if (level_set.size() != time_levels.size()) throw input_error("duplicate time levels");
  std::set<std::string> names;
  for (std::size_t r = 0; r < p; ++r) {
    if (!names.insert(response_specs[r].name).second)
      throw input_error("duplicate response name '" + response_specs[r].name + "'");
    if (!(dispersions[r] > 0.0))
      throw input_error("dispersion for '" + response_specs[r].name + "' must be positive");
    for (const auto& level : time_levels)
      if (!fixed_effects[r].count(level))
        throw input_error("response '" + response_specs[r].name +
                          "' lacks a fixed effect for level '" + level + "'");
  }
  psd_sqrt(sigma);  // throws if not PSD within tolerance
}

SimulatedDataset simulate_dataset(const MglmmSpec& spec, const RngStream& stream) {
  spec.validate();
  const int p = static_cast<int>(spec.response_specs.size());
  const Eigen::MatrixXd root = psd_sqrt(spec.sigma);

  SimulatedDataset out;
  out.true_components.resize(spec.groups, p);
  for (const auto& rs : spec.response_specs) out.table.response_names.push_back(rs.name);

  for (int g = 0; g < spec.groups; ++g) {
    out.group_ids.push_back(padded_group_label(g, spec.groups));
    out.true_components.row(g) = draw_components(root, stream, g).transpose();
    for (std::size_t t = 0; t < spec.time_levels.size(); ++t) {
      ObservationRow row;
      row.group = out.group_ids.back();
      row.time = spec.time_levels[t];
      for (int r = 0; r < p; ++r) {
        RngStream cs = stream.child({1, static_cast<std::uint64_t>(g),
                                     static_cast<std::uint64_t>(r),
                                     static_cast<std::uint64_t>(t)});
        const double eta =
            spec.fixed_effects[r].at(spec.time_levels[t]) + out.true_components(g, r);
        const double mu = inverse_link(spec.response_specs[r], eta);
        row.values.push_back(sample(spec.response_specs[r].family, {mu, spec.dispersions[r]}, cs));
      }
      out.table.rows.push_back(std::move(row));
    }
  }
  return out;
}

RandomEffectsMatrix simulate_pseudo_groups(const Eigen::MatrixXd& sigma,
                                           const std::vector<std::string>& response_names,
                                           int n_groups, const RngStream& stream) {
  if (sigma.rows() != static_cast<Eigen::Index>(response_names.size()))
    throw input_error("covariance dimension must match the response labels");
  if (n_groups < 1) throw input_error("group count must be positive");
  const Eigen::MatrixXd root = psd_sqrt(sigma);
  Eigen::MatrixXd values(n_groups, sigma.cols());
  std::vector<std::string> groups;
  for (int g = 0; g < n_groups; ++g) {
    groups.push_back(padded_group_label(g, n_groups));
    values.row(g) = draw_components(root, stream, g).transpose();
  }
  return RandomEffectsMatrix::from_values(std::move(groups), response_names, std::move(values));
}

Eigen::MatrixXd graph_to_sigma(const LabeledGraph& graph, double partial_correlation) {
  if (!(partial_correlation > 0.0 && partial_correlation < 1.0))
    throw input_error("partial correlation must lie strictly in (0,1)");
  const int p = static_cast<int>(graph.vertices.size());
  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(p, p);
  for (const auto& [a, b] : graph.edges) {
    precision(a, b) = -partial_correlation;
    precision(b, a) = -partial_correlation;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(precision);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double margin = 0.05;
  if (min_eig < margin) {
    // Uniform shrinkage toward the identity keeps the zero pattern intact
    // while making the precision matrix safely positive definite; edge
    // entries end up at -partial_correlation / (1 + c).
    const double c = margin - min_eig;
    precision = (precision + c * Eigen::MatrixXd::Identity(p, p)) / (1.0 + c);
  }
  return precision.inverse();
}

LabeledGraph fixture_topology() {
  auto g = LabeledGraph::with_vertices(
      {"infection proportion", "lesion area", "anisole", "3-pentanone", "ethanol", "acetone",
       "2-phenylethanol", "2-methyl-1-propanol", "1-propanol", "pentane", "3-methylfuran",
       "ethyl 2-methylbutanoate", "styrene", "unknown", "1-ethyl-4-methoxybenzene",
       "3-methyl-1-butanol"});
  const std::vector<std::pair<std::string, std::string>> edges = {
      {"infection proportion", "lesion area"},
      {"infection proportion", "anisole"},
      {"infection proportion", "3-pentanone"},
      {"infection proportion", "2-phenylethanol"},
      {"infection proportion", "2-methyl-1-propanol"},
      {"lesion area", "anisole"},
      {"lesion area", "3-pentanone"},
      {"anisole", "3-pentanone"},
      {"anisole", "ethanol"},
      {"anisole", "acetone"},
      {"anisole", "2-phenylethanol"},
      {"anisole", "2-methyl-1-propanol"},
      {"3-pentanone", "ethanol"},
      {"3-pentanone", "acetone"},
      {"3-pentanone", "1-propanol"},
      {"3-pentanone", "pentane"},
      {"3-pentanone", "3-methylfuran"},
      {"ethanol", "acetone"},
      {"acetone", "1-propanol"},
      {"acetone", "pentane"},
      {"acetone", "3-methylfuran"},
      {"1-propanol", "pentane"},
      {"1-propanol", "3-methylfuran"},
      {"pentane", "3-methylfuran"},
      {"2-phenylethanol", "2-methyl-1-propanol"},
      {"2-phenylethanol", "ethyl 2-methylbutanoate"},
      {"ethyl 2-methylbutanoate", "styrene"},
      {"ethyl 2-methylbutanoate", "unknown"},
      {"ethyl 2-methylbutanoate", "1-ethyl-4-methoxybenzene"},
      {"ethyl 2-methylbutanoate", "3-methyl-1-butanol"},
      {"styrene", "unknown"},
      {"styrene", "1-ethyl-4-methoxybenzene"},
      {"styrene", "3-methyl-1-butanol"},
      {"unknown", "1-ethyl-4-methoxybenzene"},
      {"unknown", "3-methyl-1-butanol"},
      {"1-ethyl-4-methoxybenzene", "3-methyl-1-butanol"}};
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

MglmmSpec fixture_spec() {
  const LabeledGraph topology = fixture_topology();
  MglmmSpec spec;
  spec.groups = 10;
  spec.time_levels = {"6", "12", "18"};
  spec.sigma = graph_to_sigma(topology, 0.35);
  for (std::size_t r = 0; r < topology.vertices.size(); ++r) {
    const std::string& name = topology.vertices[r];
    if (name == "infection proportion") {
      spec.response_specs.push_back(
          ResponseSpec::make(name, Family::binomial(9), Link::Logit));
      spec.fixed_effects.push_back({{"6", -1.6}, {"12", -0.6}, {"18", 0.3}});
      spec.dispersions.push_back(1.0);
    } else if (name == "lesion area") {
      spec.response_specs.push_back(
          ResponseSpec::make(name, Family::compound_poisson(1.5), Link::Log));
      spec.fixed_effects.push_back({{"6", 0.2}, {"12", 0.9}, {"18", 1.5}});
      spec.dispersions.push_back(0.8);
    } else {
      spec.response_specs.push_back(ResponseSpec::make(name, Family::gamma(), Link::Log));
      const double shift = 0.05 * static_cast<double>(r);
      spec.fixed_effects.push_back(
          {{"6", 0.8 + shift}, {"12", 1.2 + shift}, {"18", 1.6 + shift}});
      spec.dispersions.push_back(0.3);
    }
  }
  return spec;
}

}  // namespace mglmm
