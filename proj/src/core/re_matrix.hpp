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

#ifndef MGLMM_CORE_RE_MATRIX_HPP_
#define MGLMM_CORE_RE_MATRIX_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mglmm {

// Groups x responses matrix of predicted random components, the empirical
// stand-in for the latent multivariate Gaussian vector per group.
struct RandomEffectsMatrix {
  std::vector<std::string> group_ids;
  std::vector<std::string> response_names;
  Eigen::MatrixXd values;                // groups x responses
  Eigen::MatrixXd empirical_covariance;  // responses x responses, denominator groups-1

  static RandomEffectsMatrix from_values(std::vector<std::string> group_ids,
                                         std::vector<std::string> response_names,
                                         Eigen::MatrixXd values) {
    if (values.rows() != static_cast<Eigen::Index>(group_ids.size()) ||
        values.cols() != static_cast<Eigen::Index>(response_names.size()))
      throw input_error("random-effects matrix shape does not match its labels");
    if (!values.allFinite())
      throw input_error("random-effects matrix contains non-finite entries");
    RandomEffectsMatrix m;
    m.group_ids = std::move(group_ids);
    m.response_names = std::move(response_names);
    m.values = std::move(values);
    const Eigen::Index n = m.values.rows();
    const Eigen::MatrixXd centered = m.values.rowwise() - m.values.colwise().mean();
    m.empirical_covariance =
        n > 1 ? Eigen::MatrixXd((centered.transpose() * centered) / double(n - 1))
              : Eigen::MatrixXd::Zero(m.values.cols(), m.values.cols());
    return m;
  }

  // Columns rescaled to unit sample variance (constant columns untouched).
  RandomEffectsMatrix standardized() const {
    Eigen::MatrixXd scaled = values;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
      const double sd = std::sqrt(empirical_covariance(j, j));
      if (sd > 0.0) scaled.col(j) /= sd;
    }
    return from_values(group_ids, response_names, std::move(scaled));
  }
};

}  // namespace mglmm

#endif  // MGLMM_CORE_RE_MATRIX_HPP_
