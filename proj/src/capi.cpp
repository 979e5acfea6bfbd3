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

#include "mglmm.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>

#include "core/json_io.hpp"

using namespace mglmm;

struct mglmm_table {
  ObservationTable table;
};
struct mglmm_fit {
  MglmmFit fit;
};
struct mglmm_graph_result {
  GraphSearchResult result;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
int guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MGLMM_OK;
  } catch (const input_error& e) {
    g_last_error = e.what();
    return MGLMM_ERR_INPUT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MGLMM_ERR_NUMERIC;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_pointer(const void* p, const char* what) {
  if (!p) throw input_error(std::string("null ") + what + " argument");
}

std::set<std::string> split_labels(const char* csv) {
  std::set<std::string> out;
  if (!csv) return out;
  std::string current;
  for (const char* p = csv;; ++p) {
    if (*p == ',' || *p == '\0') {
      // Trim surrounding spaces.
      std::size_t b = current.find_first_not_of(' ');
      std::size_t e = current.find_last_not_of(' ');
      if (b != std::string::npos) out.insert(current.substr(b, e - b + 1));
      current.clear();
      if (*p == '\0') break;
    } else {
      current += *p;
    }
  }
  return out;
}

// Parsed run configuration shared by the fitting entry points.
struct RunConfig {
  std::vector<ResponseSpec> schema;
  std::vector<Family> families;  // parallel to schema
  std::optional<std::vector<double>> power_grid;
  GraphModelClass model_class = GraphModelClass::Decomposable;
  int workers = 1;
  FitOptions fit_options;
};

void check_fields(const Json& j, const std::set<std::string>& allowed,
                  const std::string& context) {
  if (!j.is_object()) throw input_error(context + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw input_error(context + ": unknown field '" + key + "'");
}

const Json& require_field(const Json& j, const std::string& key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) throw input_error(context + ": missing field '" + key + "'");
  return *it;
}

Family family_from_config(const Json& j, const std::string& context) {
  check_fields(j, {"kind", "size", "power"}, context);
  const std::string kind = require_field(j, "kind", context).get<std::string>();
  if (kind == "gamma") return Family::gamma();
  if (kind == "binomial") return Family::binomial(require_field(j, "size", context).get<int>());
  if (kind == "compoundPoisson")
    return Family::compound_poisson(require_field(j, "power", context).get<double>());
  throw input_error(context + ": unknown family kind '" + kind + "'");
}

RunConfig parse_config(const char* config_json) {
  require_pointer(config_json, "config");
  Json j;
  try {
    j = Json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error(std::string("invalid config JSON: ") + e.what());
  }
  const std::string context = "config";
  check_fields(j,
               {"formatVersion", "schema", "powerGrid", "modelClass", "seed", "workerCount",
                "tolerances"},
               context);
  const Json& version = require_field(j, "formatVersion", context);
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion)
    throw input_error(context + ": unsupported formatVersion");

  RunConfig config;
  for (const auto& entry : require_field(j, "schema", context)) {
    check_fields(entry, {"name", "family", "link"}, context + " schema entry");
    const Family family = family_from_config(require_field(entry, "family", context),
                                             context + " schema family");
    Link link = family.kind == FamilyKind::Binomial ? Link::Logit : Link::Log;
    if (entry.contains("link")) {
      const std::string name = entry["link"].get<std::string>();
      if (name == "log")
        link = Link::Log;
      else if (name == "logit")
        link = Link::Logit;
      else
        throw input_error(context + ": unknown link '" + name + "'");
    }
    config.schema.push_back(ResponseSpec::make(
        require_field(entry, "name", context).get<std::string>(), family, link));
    config.families.push_back(family);
  }
  if (config.schema.empty()) throw input_error(context + ": schema must not be empty");

  if (j.contains("powerGrid"))
    config.power_grid = j["powerGrid"].get<std::vector<double>>();
  if (j.contains("modelClass")) {
    const std::string mc = j["modelClass"].get<std::string>();
    if (mc == "forest")
      config.model_class = GraphModelClass::Forest;
    else if (mc == "decomposable")
      config.model_class = GraphModelClass::Decomposable;
    else
      throw input_error(context + ": unknown modelClass '" + mc + "'");
  }
  if (j.contains("workerCount")) {
    config.workers = j["workerCount"].get<int>();
    if (config.workers < 1) throw input_error(context + ": workerCount must be >= 1");
  }
  if (j.contains("seed") && !j["seed"].is_number_unsigned())
    throw input_error(context + ": seed must be a non-negative integer");
  if (j.contains("tolerances")) {
    const Json& tol = j["tolerances"];
    check_fields(tol, {"paramTol", "objectiveTol"}, context + " tolerances");
    if (tol.contains("paramTol")) config.fit_options.param_tol = tol["paramTol"].get<double>();
    if (tol.contains("objectiveTol"))
      config.fit_options.objective_tol = tol["objectiveTol"].get<double>();
  }
  return config;
}

std::vector<double> grid_for(const RunConfig& config) {
  if (!config.power_grid) return default_power_grid();
  if (config.power_grid->empty())
    throw input_error("grid required: powerGrid is empty but a compound-Poisson response "
                      "needs a power-index search");
  return *config.power_grid;
}

LabeledGraph graph_from_document(const char* graph_json) {
  require_pointer(graph_json, "graph");
  Json j;
  try {
    j = Json::parse(graph_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error(std::string("invalid graph JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("graph")) return graph_result_from_json(j).graph;
  return graph_from_json(j);
}

}  // namespace

extern "C" {

const char* mglmm_last_error(void) { return g_last_error.c_str(); }

void mglmm_string_free(char* s) { std::free(s); }

int mglmm_table_read(const char* csv_path, const char* config_json, mglmm_table** out) {
  return guarded([&] {
    require_pointer(csv_path, "path");
    require_pointer(out, "output");
    const RunConfig config = parse_config(config_json);
    TableSchema schema;
    for (std::size_t i = 0; i < config.schema.size(); ++i)
      schema.push_back({config.schema[i].name, config.families[i]});
    *out = new mglmm_table{read_table(csv_path, schema)};
  });
}

int mglmm_table_free(mglmm_table* table) {
  delete table;
  return MGLMM_OK;
}

int mglmm_fit_run(const mglmm_table* table, const char* config_json, mglmm_fit** out) {
  return guarded([&] {
    require_pointer(table, "table");
    require_pointer(out, "output");
    const RunConfig config = parse_config(config_json);
    MglmmOptions options;
    options.fit_options = config.fit_options;
    options.workers = config.workers;
    const bool any_cp = std::any_of(config.schema.begin(), config.schema.end(), [](const auto& s) {
      return s.family.kind == FamilyKind::CompoundPoisson;
    });
    if (any_cp) options.power_grid = grid_for(config);
    *out = new mglmm_fit{fit_all(table->table, config.schema, options)};
  });
}

int mglmm_fit_to_json(const mglmm_fit* fit, char** out_json) {
  return guarded([&] {
    require_pointer(fit, "fit");
    require_pointer(out_json, "output");
    *out_json = dup_string(dump_json(fit_to_json(fit->fit)));
  });
}

int mglmm_fit_from_json(const char* json, mglmm_fit** out) {
  return guarded([&] {
    require_pointer(json, "json");
    require_pointer(out, "output");
    Json j;
    try {
      j = Json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      throw input_error(std::string("invalid fit JSON: ") + e.what());
    }
    *out = new mglmm_fit{fit_from_json(j)};
  });
}

int mglmm_fit_free(mglmm_fit* fit) {
  delete fit;
  return MGLMM_OK;
}

int mglmm_graph_search(const mglmm_fit* fit, const char* model_class, int standardize,
                       mglmm_graph_result** out) {
  return guarded([&] {
    require_pointer(fit, "fit");
    require_pointer(model_class, "model class");
    require_pointer(out, "output");
    if (fit->fit.re_matrix.response_names.size() < 3)
      throw input_error("need >=3 responses for a graph search, got " +
                        std::to_string(fit->fit.re_matrix.response_names.size()));
    GraphModelClass mc;
    if (std::string(model_class) == "forest")
      mc = GraphModelClass::Forest;
    else if (std::string(model_class) == "decomposable")
      mc = GraphModelClass::Decomposable;
    else
      throw input_error(std::string("unknown model class '") + model_class + "'");
    GraphSearchOptions options;
    options.standardize = standardize != 0;
    *out = new mglmm_graph_result{search_min_bic(fit->fit.re_matrix, mc, options)};
  });
}

int mglmm_graph_result_to_json(const mglmm_graph_result* result, char** out_json) {
  return guarded([&] {
    require_pointer(result, "result");
    require_pointer(out_json, "output");
    *out_json = dup_string(dump_json(graph_result_to_json(result->result)));
  });
}

int mglmm_graph_result_to_dot(const mglmm_graph_result* result, const char* targets_csv,
                              char** out_dot) {
  return guarded([&] {
    require_pointer(result, "result");
    require_pointer(out_dot, "output");
    *out_dot = dup_string(to_dot(result->result.graph, split_labels(targets_csv)));
  });
}

int mglmm_graph_result_free(mglmm_graph_result* result) {
  delete result;
  return MGLMM_OK;
}

int mglmm_separate(const char* graph_json, const char* targets_csv, const char* given_csv,
                   int* separated, char** statement) {
  return guarded([&] {
    require_pointer(separated, "output");
    const LabeledGraph graph = graph_from_document(graph_json);
    const std::set<std::string> targets = split_labels(targets_csv);
    const std::set<std::string> given = split_labels(given_csv);
    std::set<std::string> rest;
    for (const auto& v : graph.vertices)
      if (!targets.count(v) && !given.count(v)) rest.insert(v);
    if (rest.empty())
      throw input_error("no vertices left outside the targets and the separating set");
    *separated = is_separator(graph, targets, rest, given) ? 1 : 0;
    if (statement) *statement = dup_string(minimal_markov_blanket(graph, targets).statement);
  });
}

int mglmm_markov_blanket(const char* graph_json, const char* targets_csv, char** blanket_csv,
                         char** statement) {
  return guarded([&] {
    require_pointer(blanket_csv, "output");
    const LabeledGraph graph = graph_from_document(graph_json);
    const MarkovBlanket mb = minimal_markov_blanket(graph, split_labels(targets_csv));
    std::string joined;
    for (const auto& label : mb.blanket) {
      if (!joined.empty()) joined += ",";
      joined += label;
    }
    *blanket_csv = dup_string(joined);
    if (statement) *statement = dup_string(mb.statement);
  });
}

int mglmm_simulate(const char* spec_json, uint64_t seed, char** csv_out, char** truth_json_out) {
  return guarded([&] {
    require_pointer(spec_json, "spec");
    require_pointer(csv_out, "output");
    Json j;
    try {
      j = Json::parse(spec_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw input_error(std::string("invalid spec JSON: ") + e.what());
    }
    const MglmmSpec spec = spec_from_json(j);
    const SimulatedDataset sim = simulate_dataset(spec, RngStream(seed));
    *csv_out = dup_string(table_to_csv(sim.table));
    if (truth_json_out) {
      Json truth;
      truth["formatVersion"] = kFormatVersion;
      truth["seed"] = seed;
      truth["groupIds"] = sim.group_ids;
      truth["responseNames"] = sim.table.response_names;
      Json components = Json::array();
      for (Eigen::Index g = 0; g < sim.true_components.rows(); ++g) {
        Json row = Json::array();
        for (Eigen::Index r = 0; r < sim.true_components.cols(); ++r)
          row.push_back(sim.true_components(g, r));
        components.push_back(std::move(row));
      }
      truth["components"] = std::move(components);
      truth["spec"] = spec_to_json(spec);
      *truth_json_out = dup_string(dump_json(truth));
    }
  });
}

int mglmm_diagnose(const mglmm_fit* fit, const mglmm_table* table, const char* response,
                   uint64_t seed, char** report_json, char** residual_csv) {
  return guarded([&] {
    require_pointer(fit, "fit");
    require_pointer(table, "table");
    require_pointer(response, "response");
    const FittedGLMM& marginal = fit->fit.marginal(response);
    const ResidualReport report = pit_uniformity(marginal, table->table, RngStream(seed));
    if (report_json) *report_json = dup_string(dump_json(report_to_json(report)));
    if (residual_csv) *residual_csv = dup_string(residual_report_csv(report));
  });
}

int mglmm_power_index(const mglmm_table* table, const char* config_json, const char* response,
                      char** result_json) {
  return guarded([&] {
    require_pointer(table, "table");
    require_pointer(response, "response");
    require_pointer(result_json, "output");
    const RunConfig config = parse_config(config_json);
    const auto it = std::find_if(config.schema.begin(), config.schema.end(),
                                 [&](const auto& s) { return s.name == response; });
    if (it == config.schema.end())
      throw input_error(std::string("response '") + response + "' not in the config schema");
    const PowerGridResult result =
        select_power_index(table->table, *it, grid_for(config), config.fit_options);
    Json j;
    j["formatVersion"] = kFormatVersion;
    j["response"] = it->name;
    j["grid"] = result.grid;
    Json distances = Json::array();
    for (const auto& d : result.distances) distances.push_back(d ? Json(*d) : Json(nullptr));
    j["distances"] = std::move(distances);
    j["chosen"] = result.chosen;
    j["tie"] = result.tie;
    j["observedZeros"] = result.observed_zeros;
    j["expectedZeros"] = result.expected_zeros;
    *result_json = dup_string(dump_json(j));
  });
}

}  // extern "C"
