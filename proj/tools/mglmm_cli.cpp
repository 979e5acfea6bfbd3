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

// Command-line front end. All modeling goes through the C interface in
// mglmm.h; this file only handles argument parsing, config plumbing and
// file I/O.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mglmm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

using Json = nlohmann::ordered_json;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CliError{code, message}; }

[[noreturn]] void fail_api(int code) {
  throw CliError{code == MGLMM_ERR_NUMERIC ? kExitNumeric : kExitInput, mglmm_last_error()};
}

void check(int rc) {
  if (rc != MGLMM_OK) fail_api(rc);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(kExitInput, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kExitInput, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) fail(kExitInput, "write to '" + path + "' failed");
}

// RAII wrappers for strings and handles from the C interface.
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { mglmm_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct TableHandle {
  mglmm_table* ptr = nullptr;
  ~TableHandle() { mglmm_table_free(ptr); }
};

struct FitHandle {
  mglmm_fit* ptr = nullptr;
  ~FitHandle() { mglmm_fit_free(ptr); }
};

struct GraphHandle {
  mglmm_graph_result* ptr = nullptr;
  ~GraphHandle() { mglmm_graph_result_free(ptr); }
};

// Options shared across subcommands; flags override config fields which
// override defaults.
struct CommonOptions {
  std::string input;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string grid;         // comma-separated power grid
  std::string model_class;  // forest | decomposable
  std::string targets;
  std::string given;
  std::string fit_path;
  std::string response;
  bool standardize = false;
};

// Loads the config file (or starts from an empty skeleton) and applies the
// flag overrides, returning the JSON string handed to the C interface.
std::string effective_config(const CommonOptions& options, bool need_schema) {
  Json config;
  if (!options.config_path.empty()) {
    try {
      config = Json::parse(read_file(options.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(kExitInput, "invalid config JSON in '" + options.config_path + "': " + e.what());
    }
  } else {
    if (need_schema) fail(kExitInput, "--config with a response schema is required");
    config["formatVersion"] = 1;
    config["schema"] = Json::array();
  }
  if (options.workers) config["workerCount"] = *options.workers;
  if (options.seed) config["seed"] = *options.seed;
  if (!options.model_class.empty()) config["modelClass"] = options.model_class;
  if (!options.grid.empty()) {
    Json grid = Json::array();
    std::istringstream in(options.grid);
    std::string token;
    while (std::getline(in, token, ',')) {
      try {
        grid.push_back(std::stod(token));
      } catch (const std::exception&) {
        fail(kExitInput, "non-numeric grid value '" + token + "'");
      }
    }
    config["powerGrid"] = std::move(grid);
  }
  return config.dump();
}

std::uint64_t require_seed(const CommonOptions& options) {
  if (options.seed) return *options.seed;
  if (!options.config_path.empty()) {
    const Json config = Json::parse(read_file(options.config_path));
    if (config.contains("seed")) return config["seed"].get<std::uint64_t>();
  }
  fail(kExitInput, "--seed is required for this command");
}

std::string out_path(const CommonOptions& options, const std::string& name) {
  std::filesystem::create_directories(options.out_dir);
  return (std::filesystem::path(options.out_dir) / name).string();
}

std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

int model_workers(const CommonOptions& options) { return options.workers.value_or(1); }

void cmd_fit(const CommonOptions& options) {
  const std::string config = effective_config(options, true);
  TableHandle table;
  check(mglmm_table_read(options.input.c_str(), config.c_str(), &table.ptr));
  FitHandle fit;
  check(mglmm_fit_run(table.ptr, config.c_str(), &fit.ptr));
  OwnedString json;
  check(mglmm_fit_to_json(fit.ptr, &json.ptr));
  const std::string path = out_path(options, "fit.json");
  write_file(path, json.str());
  std::cout << "wrote " << path << "\n";
}

void cmd_graph(const CommonOptions& options) {
  const std::string fit_doc = read_file(options.input);
  FitHandle fit;
  check(mglmm_fit_from_json(fit_doc.c_str(), &fit.ptr));
  std::string model_class = options.model_class;
  if (model_class.empty() && !options.config_path.empty()) {
    const Json config = Json::parse(read_file(options.config_path));
    if (config.contains("modelClass")) model_class = config["modelClass"].get<std::string>();
  }
  if (model_class.empty()) model_class = "decomposable";
  GraphHandle graph;
  check(mglmm_graph_search(fit.ptr, model_class.c_str(), options.standardize ? 1 : 0,
                           &graph.ptr));
  OwnedString json, dot;
  check(mglmm_graph_result_to_json(graph.ptr, &json.ptr));
  check(mglmm_graph_result_to_dot(graph.ptr, options.targets.c_str(), &dot.ptr));
  const std::string json_path = out_path(options, "graph.json");
  const std::string dot_path = out_path(options, "graph.dot");
  write_file(json_path, json.str());
  write_file(dot_path, dot.str());
  std::cout << "wrote " << json_path << "\n" << "wrote " << dot_path << "\n";
}

void cmd_separate(const CommonOptions& options) {
  const std::string graph_doc = read_file(options.input);
  if (options.targets.empty()) fail(kExitInput, "--targets is required");
  int separated = 0;
  OwnedString statement;
  check(mglmm_separate(graph_doc.c_str(), options.targets.c_str(), options.given.c_str(),
                       &separated, &statement.ptr));
  OwnedString blanket;
  check(mglmm_markov_blanket(graph_doc.c_str(), options.targets.c_str(), &blanket.ptr, nullptr));
  std::ostringstream report;
  report << "separated: " << (separated ? "true" : "false") << "\n"
         << "targets: " << options.targets << "\n"
         << "given: " << options.given << "\n"
         << "markov blanket: " << blanket.str() << "\n"
         << statement.str() << "\n";
  std::cout << report.str();
  write_file(out_path(options, "separation.txt"), report.str());
}

void cmd_simulate(const CommonOptions& options) {
  const std::string spec_doc = read_file(options.input);
  const std::uint64_t seed = require_seed(options);
  OwnedString csv, truth;
  check(mglmm_simulate(spec_doc.c_str(), seed, &csv.ptr, &truth.ptr));
  const std::string csv_path = out_path(options, "simulated.csv");
  const std::string truth_path = out_path(options, "truth.json");
  write_file(csv_path, csv.str());
  write_file(truth_path, truth.str());
  std::cout << "wrote " << csv_path << "\n" << "wrote " << truth_path << "\n";
}

void cmd_diagnose(const CommonOptions& options) {
  const std::string config = effective_config(options, true);
  const std::uint64_t seed = require_seed(options);
  TableHandle table;
  check(mglmm_table_read(options.input.c_str(), config.c_str(), &table.ptr));
  const std::string fit_doc = read_file(options.fit_path);
  FitHandle fit;
  check(mglmm_fit_from_json(fit_doc.c_str(), &fit.ptr));

  std::vector<std::string> responses;
  if (!options.response.empty()) {
    responses.push_back(options.response);
  } else {
    const Json fit_json = Json::parse(fit_doc);
    for (const auto& marginal : fit_json.at("marginals"))
      responses.push_back(marginal.at("response").get<std::string>());
  }
  for (std::size_t i = 0; i < responses.size(); ++i) {
    OwnedString report, residuals;
    // Distinct child seed per response, stable in declared order.
    check(mglmm_diagnose(fit.ptr, table.ptr, responses[i].c_str(), seed + i, &report.ptr,
                         &residuals.ptr));
    const std::string base = slug(responses[i]);
    write_file(out_path(options, "diagnostics_" + base + ".json"), report.str());
    write_file(out_path(options, "residuals_" + base + ".csv"), residuals.str());
    const Json parsed = Json::parse(report.str());
    std::cout << responses[i] << ": ks statistic " << parsed.at("ksStatistic").get<double>()
              << ", p-value " << parsed.at("ksPValue").get<double>() << "\n";
  }
}

void cmd_power_index(const CommonOptions& options) {
  const std::string config = effective_config(options, true);
  if (options.response.empty()) fail(kExitInput, "--response is required");
  TableHandle table;
  check(mglmm_table_read(options.input.c_str(), config.c_str(), &table.ptr));
  OwnedString result;
  check(mglmm_power_index(table.ptr, config.c_str(), options.response.c_str(), &result.ptr));
  const std::string path = out_path(options, "power_index.json");
  write_file(path, result.str());
  const Json parsed = Json::parse(result.str());
  std::cout << "chosen power index: " << parsed.at("chosen").get<double>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal GLMM fitting, graphical model selection and diagnostics"};
  app.require_subcommand(1);

  CommonOptions options;

  auto add_common = [&](CLI::App* cmd, bool with_input) {
    if (with_input) cmd->add_option("--input", options.input, "input file")->required();
    cmd->add_option("--config", options.config_path, "config JSON file");
    cmd->add_option("--out-dir", options.out_dir, "output directory")
        ->envname("MGLMM_OUT_DIR");
    cmd->add_option("--seed", options.seed, "random seed")->envname("MGLMM_SEED");
    cmd->add_option("--workers", options.workers, "worker thread count")
        ->envname("MGLMM_WORKERS");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit all marginal models from a CSV");
  add_common(fit, true);
  fit->add_option("--grid", options.grid, "comma-separated power-index grid");

  CLI::App* graph = app.add_subcommand("graph", "select a graphical model from a fit JSON");
  add_common(graph, true);
  graph->add_option("--model-class", options.model_class, "forest or decomposable")
      ->envname("MGLMM_MODEL_CLASS");
  graph->add_option("--targets", options.targets, "comma-separated target labels for DOT");
  graph->add_flag("--standardize", options.standardize,
                  "standardize prediction columns before the search");

  CLI::App* separate = app.add_subcommand("separate", "separation query on a graph JSON");
  add_common(separate, true);
  separate->add_option("--targets", options.targets, "comma-separated target labels");
  separate->add_option("--given", options.given, "comma-separated separating labels");

  CLI::App* simulate = app.add_subcommand("simulate", "generate a dataset from a spec JSON");
  add_common(simulate, true);

  CLI::App* diagnose = app.add_subcommand("diagnose", "residual diagnostics for a fitted model");
  add_common(diagnose, true);
  diagnose->add_option("--fit", options.fit_path, "fit JSON file")->required();
  diagnose->add_option("--response", options.response, "single response to diagnose");

  CLI::App* power = app.add_subcommand("power-index", "power-index grid selection");
  add_common(power, true);
  power->add_option("--grid", options.grid, "comma-separated power-index grid");
  power->add_option("--response", options.response, "compound-Poisson response name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (fit->parsed()) cmd_fit(options);
    if (graph->parsed()) cmd_graph(options);
    if (separate->parsed()) cmd_separate(options);
    if (simulate->parsed()) cmd_simulate(options);
    if (diagnose->parsed()) cmd_diagnose(options);
    if (power->parsed()) cmd_power_index(options);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
