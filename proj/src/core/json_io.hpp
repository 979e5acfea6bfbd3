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

#ifndef MGLMM_CORE_JSON_IO_HPP_
#define MGLMM_CORE_JSON_IO_HPP_

#include <string>

#include "json.hpp"

#include "diagnostics.hpp"
#include "graph.hpp"
#include "mglmm.hpp"
#include "simulate.hpp"

namespace mglmm {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// All readers use strict schemas: unknown fields, missing required fields and
// wrong format versions are input errors naming the offending key.

Json fit_to_json(const MglmmFit& fit);
MglmmFit fit_from_json(const Json& j);

Json graph_to_json(const LabeledGraph& graph);
LabeledGraph graph_from_json(const Json& j);

Json graph_result_to_json(const GraphSearchResult& result);
GraphSearchResult graph_result_from_json(const Json& j);

Json spec_to_json(const MglmmSpec& spec);
MglmmSpec spec_from_json(const Json& j);

Json report_to_json(const ResidualReport& report);

// Canonical byte representation: two-space indent, trailing newline. Writing
// the same value twice yields identical bytes.
std::string dump_json(const Json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
Json read_json_file(const std::string& path);

// Per-observation diagnostics as CSV (group, week, fittedMean, pearson, pit).
std::string residual_report_csv(const ResidualReport& report);
void write_residual_csv(const ResidualReport& report, const std::string& path);

}  // namespace mglmm

#endif  // MGLMM_CORE_JSON_IO_HPP_
