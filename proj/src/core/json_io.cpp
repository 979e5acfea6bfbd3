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

#include "json_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace mglmm {

namespace {

void check_fields(const Json& j, const std::set<std::string>& allowed,
                  const std::string& context) {
  if (!j.is_object()) throw input_error(context + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw input_error(context + ": unknown field '" + key + "'");
}

const Json& require(const Json& j, const std::string& key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) throw input_error(context + ": missing field '" + key + "'");
  return *it;
}

void check_version(const Json& j, const std::string& context) {
  const Json& v = require(j, "formatVersion", context);
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
    throw input_error(context + ": unsupported formatVersion");
}

Json family_to_json(const Family& family) {
  Json j;
  switch (family.kind) {
    case FamilyKind::Gamma:
      j["kind"] = "gamma";
      break;
    case FamilyKind::Binomial:
      j["kind"] = "binomial";
      j["size"] = family.size;
      break;
    case FamilyKind::CompoundPoisson:
      j["kind"] = "compoundPoisson";
      j["power"] = family.power;
      break;
  }
  return j;
}

Family family_from_json(const Json& j, const std::string& context) {
  check_fields(j, {"kind", "size", "power"}, context);
  const std::string kind = require(j, "kind", context).get<std::string>();
  if (kind == "gamma") return Family::gamma();
  if (kind == "binomial") return Family::binomial(require(j, "size", context).get<int>());
  if (kind == "compoundPoisson")
    return Family::compound_poisson(require(j, "power", context).get<double>());
  throw input_error(context + ": unknown family kind '" + kind + "'");
}

Link link_for(const Family& family) {
  return family.kind == FamilyKind::Binomial ? Link::Logit : Link::Log;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& context) {
  if (!j.is_array() || j.empty()) throw input_error(context + ": expected a non-empty array");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw input_error(context + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace

Json fit_to_json(const MglmmFit& fit) {
  Json j;
  j["formatVersion"] = kFormatVersion;
  Json marginals = Json::array();
  for (const auto& m : fit.marginals) {
    Json entry;
    entry["response"] = m.spec.name;
    entry["family"] = family_to_json(m.spec.family);
    entry["link"] = m.spec.link == Link::Log ? "log" : "logit";
    entry["timeLevels"] = m.time_levels;
    entry["fixedEffects"] = m.fixed_effects;
    entry["dispersion"] = m.dispersion;
    entry["reVariance"] = m.re_variance;
    entry["logLikelihood"] = m.log_likelihood;
    entry["pearsonDispersion"] = m.pearson_dispersion;
    entry["converged"] = m.converged;
    entry["groups"] = m.group_ids;
    entry["predictions"] = m.re_predictions;
    marginals.push_back(std::move(entry));
  }
  j["marginals"] = std::move(marginals);

  Json re;
  re["groupIds"] = fit.re_matrix.group_ids;
  re["responseNames"] = fit.re_matrix.response_names;
  re["values"] = matrix_to_json(fit.re_matrix.values);
  re["empiricalCovariance"] = matrix_to_json(fit.re_matrix.empirical_covariance);
  j["reMatrix"] = std::move(re);

  Json grids = Json::array();
  for (const auto& [response, result] : fit.power_results) {
    Json g;
    g["response"] = response;
    g["grid"] = result.grid;
    Json distances = Json::array();
    for (const auto& d : result.distances)
      distances.push_back(d ? Json(*d) : Json(nullptr));
    g["distances"] = std::move(distances);
    g["chosen"] = result.chosen;
    g["tie"] = result.tie;
    g["observedZeros"] = result.observed_zeros;
    g["expectedZeros"] = result.expected_zeros;
    grids.push_back(std::move(g));
  }
  j["powerGrids"] = std::move(grids);
  return j;
}

MglmmFit fit_from_json(const Json& j) {
  const std::string context = "fit";
  check_fields(j, {"formatVersion", "marginals", "reMatrix", "powerGrids"}, context);
  check_version(j, context);

  MglmmFit fit;
  for (const auto& entry : require(j, "marginals", context)) {
    check_fields(entry,
                 {"response", "family", "link", "timeLevels", "fixedEffects", "dispersion",
                  "reVariance", "logLikelihood", "pearsonDispersion", "converged", "groups",
                  "predictions"},
                 context + " marginal");
    FittedGLMM m;
    const Family family = family_from_json(require(entry, "family", context), context);
    const std::string link = require(entry, "link", context).get<std::string>();
    if (link != "log" && link != "logit")
      throw input_error(context + ": unknown link '" + link + "'");
    m.spec = ResponseSpec::make(require(entry, "response", context).get<std::string>(), family,
                                link == "log" ? Link::Log : Link::Logit);
    m.time_levels = require(entry, "timeLevels", context).get<std::vector<std::string>>();
    m.fixed_effects = require(entry, "fixedEffects", context).get<std::vector<double>>();
    m.dispersion = require(entry, "dispersion", context).get<double>();
    m.re_variance = require(entry, "reVariance", context).get<double>();
    m.log_likelihood = require(entry, "logLikelihood", context).get<double>();
    m.pearson_dispersion = require(entry, "pearsonDispersion", context).get<double>();
    m.converged = require(entry, "converged", context).get<bool>();
    m.group_ids = require(entry, "groups", context).get<std::vector<std::string>>();
    m.re_predictions = require(entry, "predictions", context).get<std::vector<double>>();
    if (m.fixed_effects.size() != m.time_levels.size() ||
        m.re_predictions.size() != m.group_ids.size())
      throw input_error(context + ": marginal '" + m.spec.name + "' has inconsistent lengths");
    fit.marginals.push_back(std::move(m));
  }

  const Json& re = require(j, "reMatrix", context);
  check_fields(re, {"groupIds", "responseNames", "values", "empiricalCovariance"},
               context + " reMatrix");
  fit.re_matrix = RandomEffectsMatrix::from_values(
      require(re, "groupIds", context).get<std::vector<std::string>>(),
      require(re, "responseNames", context).get<std::vector<std::string>>(),
      matrix_from_json(require(re, "values", context), context + " reMatrix values"));

  for (const auto& g : require(j, "powerGrids", context)) {
    check_fields(g,
                 {"response", "grid", "distances", "chosen", "tie", "observedZeros",
                  "expectedZeros"},
                 context + " power grid");
    PowerGridResult result;
    result.grid = require(g, "grid", context).get<std::vector<double>>();
    for (const auto& d : require(g, "distances", context))
      result.distances.push_back(d.is_null() ? std::nullopt
                                             : std::optional<double>(d.get<double>()));
    result.chosen = require(g, "chosen", context).get<double>();
    result.tie = require(g, "tie", context).get<bool>();
    result.observed_zeros =
        require(g, "observedZeros", context).get<std::map<std::string, int>>();
    result.expected_zeros = require(g, "expectedZeros", context)
                                .get<std::vector<std::map<std::string, double>>>();
    fit.power_results.emplace(require(g, "response", context).get<std::string>(),
                              std::move(result));
  }
  return fit;
}

Json graph_to_json(const LabeledGraph& graph) {
  Json j;
  j["vertices"] = graph.vertices;
  Json edges = Json::array();
  for (const auto& [a, b] : graph.edges)
    edges.push_back(Json::array({graph.vertices[a], graph.vertices[b]}));
  j["edges"] = std::move(edges);
  return j;
}

LabeledGraph graph_from_json(const Json& j) {
  const std::string context = "graph";
  check_fields(j, {"vertices", "edges", "formatVersion"}, context);
  if (j.contains("formatVersion")) check_version(j, context);
  auto graph = LabeledGraph::with_vertices(
      require(j, "vertices", context).get<std::vector<std::string>>());
  for (const auto& edge : require(j, "edges", context)) {
    if (!edge.is_array() || edge.size() != 2)
      throw input_error(context + ": each edge must be a pair of labels");
    graph.add_edge(edge[0].get<std::string>(), edge[1].get<std::string>());
  }
  return graph;
}

Json graph_result_to_json(const GraphSearchResult& result) {
  Json j;
  j["formatVersion"] = kFormatVersion;
  j["modelClass"] = result.model_class == GraphModelClass::Forest ? "forest" : "decomposable";
  j["bic"] = result.bic;
  j["graph"] = graph_to_json(result.graph);
  Json trace = Json::array();
  for (const auto& t : result.trace) {
    Json entry;
    entry["edge"] = Json::array(
        {result.graph.vertices[t.edge.first], result.graph.vertices[t.edge.second]});
    entry["deltaBic"] = t.delta_bic;
    entry["accepted"] = t.accepted;
    trace.push_back(std::move(entry));
  }
  j["searchTrace"] = std::move(trace);
  return j;
}

GraphSearchResult graph_result_from_json(const Json& j) {
  const std::string context = "graph result";
  check_fields(j, {"formatVersion", "modelClass", "bic", "graph", "searchTrace"}, context);
  check_version(j, context);
  GraphSearchResult result;
  const std::string model_class = require(j, "modelClass", context).get<std::string>();
  if (model_class == "forest")
    result.model_class = GraphModelClass::Forest;
  else if (model_class == "decomposable")
    result.model_class = GraphModelClass::Decomposable;
  else
    throw input_error(context + ": unknown modelClass '" + model_class + "'");
  result.bic = require(j, "bic", context).get<double>();
  result.graph = graph_from_json(require(j, "graph", context));
  for (const auto& entry : require(j, "searchTrace", context)) {
    check_fields(entry, {"edge", "deltaBic", "accepted"}, context + " trace entry");
    const Json& edge = require(entry, "edge", context);
    const int a = result.graph.vertex_index(edge[0].get<std::string>());
    const int b = result.graph.vertex_index(edge[1].get<std::string>());
    result.trace.push_back({{std::min(a, b), std::max(a, b)},
                            require(entry, "deltaBic", context).get<double>(),
                            require(entry, "accepted", context).get<bool>()});
  }
  return result;
}

Json spec_to_json(const MglmmSpec& spec) {
  Json j;
  j["formatVersion"] = kFormatVersion;
  j["groups"] = spec.groups;
  j["timeLevels"] = spec.time_levels;
  Json responses = Json::array();
  for (std::size_t r = 0; r < spec.response_specs.size(); ++r) {
    Json entry;
    entry["name"] = spec.response_specs[r].name;
    entry["family"] = family_to_json(spec.response_specs[r].family);
    entry["dispersion"] = spec.dispersions[r];
    entry["fixedEffects"] = spec.fixed_effects[r];
    responses.push_back(std::move(entry));
  }
  j["responses"] = std::move(responses);
  j["sigma"] = matrix_to_json(spec.sigma);
  return j;
}

MglmmSpec spec_from_json(const Json& j) {
  const std::string context = "simulation spec";
  check_fields(j, {"formatVersion", "groups", "timeLevels", "responses", "sigma"}, context);
  check_version(j, context);
  MglmmSpec spec;
  spec.groups = require(j, "groups", context).get<int>();
  spec.time_levels = require(j, "timeLevels", context).get<std::vector<std::string>>();
  for (const auto& entry : require(j, "responses", context)) {
    check_fields(entry, {"name", "family", "dispersion", "fixedEffects"}, context + " response");
    const Family family = family_from_json(require(entry, "family", context), context);
    spec.response_specs.push_back(ResponseSpec::make(
        require(entry, "name", context).get<std::string>(), family, link_for(family)));
    spec.dispersions.push_back(require(entry, "dispersion", context).get<double>());
    spec.fixed_effects.push_back(
        require(entry, "fixedEffects", context).get<std::map<std::string, double>>());
  }
  spec.sigma = matrix_from_json(require(j, "sigma", context), context + " sigma");
  spec.validate();
  return spec;
}

Json report_to_json(const ResidualReport& report) {
  Json j;
  j["formatVersion"] = kFormatVersion;
  j["response"] = report.response;
  j["ksStatistic"] = report.ks_statistic;
  j["ksPValue"] = report.ks_p_value;
  Json observations = Json::array();
  for (const auto& obs : report.per_observation) {
    Json entry;
    entry["group"] = obs.group;
    entry["week"] = obs.time;
    entry["fittedMean"] = obs.fitted_mean;
    entry["pearson"] = obs.pearson;
    entry["pit"] = obs.pit;
    observations.push_back(std::move(entry));
  }
  j["observations"] = std::move(observations);
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw input_error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error("invalid JSON in '" + path + "': " + e.what());
  }
}

std::string residual_report_csv(const ResidualReport& report) {
  std::string out = "glass,week,fittedMean,pearson,pit\n";
  char buf[128];
  for (const auto& obs : report.per_observation) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", obs.fitted_mean, obs.pearson, obs.pit);
    out += obs.group + "," + obs.time + "," + buf;
  }
  return out;
}

void write_residual_csv(const ResidualReport& report, const std::string& path) {
  write_text_file(path, residual_report_csv(report));
}

}  // namespace mglmm
