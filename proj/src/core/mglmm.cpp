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

#include "mglmm.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <set>
#include <thread>

namespace mglmm {

const FittedGLMM& MglmmFit::marginal(const std::string& response) const {
  for (const auto& m : marginals)
    if (m.spec.name == response) return m;
  throw input_error("no marginal fit for response '" + response + "'");
}

marginal_fit_error::marginal_fit_error(const std::string& response, const std::string& cause,
                                       std::vector<std::string> completed)
    : numeric_error("marginal fit for response '" + response + "' failed: " + cause),
      response_(response),
      completed_(std::move(completed)) {}

namespace {

struct MarginalOutcome {
  std::optional<FittedGLMM> fitted;
  std::optional<PowerGridResult> power;
  std::string error;
};

MarginalOutcome fit_one(const ObservationTable& table, ResponseSpec spec,
                        const MglmmOptions& options) {
  MarginalOutcome out;
  try {
    if (spec.family.kind == FamilyKind::CompoundPoisson) {
      const std::vector<double> grid =
          options.power_grid.empty() ? default_power_grid() : options.power_grid;
      out.power = select_power_index(table, spec, grid, options.fit_options);
      spec.family = Family::compound_poisson(out.power->chosen);
    }
    out.fitted = fit(table, spec, options.fit_options);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

MglmmFit fit_all(const ObservationTable& table, const std::vector<ResponseSpec>& specs,
                 const MglmmOptions& options) {
  if (specs.empty()) throw input_error("fit_all needs at least one response spec");
  std::set<std::string> names;
  for (const auto& spec : specs) {
    if (!names.insert(spec.name).second)
      throw input_error("duplicate response spec '" + spec.name + "'");
    if (table.response_index(spec.name) < 0)
      throw input_error("response column '" + spec.name + "' not present in table");
  }

  const int n_tasks = static_cast<int>(specs.size());
  std::vector<MarginalOutcome> outcomes(n_tasks);
  const int workers = std::max(1, std::min(options.workers, n_tasks));
  if (workers == 1) {
    for (int i = 0; i < n_tasks; ++i) outcomes[i] = fit_one(table, specs[i], options);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1))
          outcomes[i] = fit_one(table, specs[i], options);
      });
    for (auto& t : pool) t.join();
  }

  for (int i = 0; i < n_tasks; ++i) {
    if (outcomes[i].error.empty()) continue;
    std::vector<std::string> completed;
    for (int j = 0; j < n_tasks; ++j)
      if (outcomes[j].error.empty() && outcomes[j].fitted) completed.push_back(specs[j].name);
    throw marginal_fit_error(specs[i].name, outcomes[i].error, std::move(completed));
  }

  MglmmFit result;
  std::vector<std::string> response_names;
  for (int i = 0; i < n_tasks; ++i) {
    result.marginals.push_back(std::move(*outcomes[i].fitted));
    response_names.push_back(specs[i].name);
    if (outcomes[i].power) result.power_results.emplace(specs[i].name, std::move(*outcomes[i].power));
  }

  // Every marginal must cover the same groups or the matrix has holes.
  const std::vector<std::string>& groups = result.marginals.front().group_ids;
  for (const auto& m : result.marginals)
    if (m.group_ids != groups)
      throw input_error("response '" + m.spec.name +
                        "' covers a different group set than '" +
                        result.marginals.front().spec.name + "'");

  Eigen::MatrixXd values(groups.size(), n_tasks);
  for (int r = 0; r < n_tasks; ++r)
    for (std::size_t g = 0; g < groups.size(); ++g)
      values(g, r) = result.marginals[r].re_predictions[g];
  result.re_matrix = RandomEffectsMatrix::from_values(groups, response_names, std::move(values));
  return result;
}

}  // namespace mglmm
