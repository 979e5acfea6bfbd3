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

#ifndef MGLMM_CORE_GRAPH_HPP_
#define MGLMM_CORE_GRAPH_HPP_

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "re_matrix.hpp"

namespace mglmm {

// Undirected graph over response labels; an edge encodes conditional
// dependence of the corresponding random components.
struct LabeledGraph {
  std::vector<std::string> vertices;
  std::set<std::pair<int, int>> edges;  // (i, j) with i < j

  static LabeledGraph with_vertices(std::vector<std::string> labels);

  int vertex_index(const std::string& label) const;  // throws on unknown label
  void add_edge(int a, int b);
  void add_edge(const std::string& a, const std::string& b);
  bool has_edge(int a, int b) const;
  std::vector<std::vector<int>> adjacency() const;
  std::size_t edge_count() const { return edges.size(); }
};

// Maximum-cardinality-search chordality check.
bool is_chordal(const LabeledGraph& graph);

// Maximal cliques of a chordal graph (vertex index sets, each sorted).
std::vector<std::vector<int>> chordal_cliques(const LabeledGraph& graph);

enum class GraphModelClass { Forest, Decomposable };

struct SearchTraceEntry {
  std::pair<int, int> edge;
  double delta_bic;
  bool accepted;
};

struct GraphSearchResult {
  LabeledGraph graph;
  double bic = 0.0;
  std::vector<SearchTraceEntry> trace;
  GraphModelClass model_class = GraphModelClass::Forest;
};

struct GraphSearchOptions {
  bool standardize = false;  // rescale columns to unit variance first
};

// BIC of the decomposable Gaussian model encoded by the graph:
// -2 * maximized log-likelihood + k * log(rows), where the likelihood
// factorizes over cliques and separators and k counts means, variances and
// edges.
double gaussian_bic(const RandomEffectsMatrix& matrix, const LabeledGraph& graph);

// Forest: exact minimum-BIC forest by maximum-weight spanning forest over
// per-edge BIC gains. Decomposable: greedy chordality-preserving forward
// additions starting from that forest.
GraphSearchResult search_min_bic(const RandomEffectsMatrix& matrix, GraphModelClass model_class,
                                 const GraphSearchOptions& options = {});

// True iff removing S disconnects every path from A to B.
bool is_separator(const LabeledGraph& graph, const std::set<std::string>& set_a,
                  const std::set<std::string>& set_b, const std::set<std::string>& set_s);

struct MarkovBlanket {
  std::set<std::string> blanket;
  std::string statement;  // induced-separation reading for the responses
};

// Neighbor set of the targets (excluding the targets), which separates them
// from every remaining non-adjacent vertex.
MarkovBlanket minimal_markov_blanket(const LabeledGraph& graph,
                                     const std::set<std::string>& targets);

// Graphviz export; every vertex carries a class attribute
// (target / blanket / peripheral) relative to the given target set.
std::string to_dot(const LabeledGraph& graph, const std::set<std::string>& targets = {});

}  // namespace mglmm

#endif  // MGLMM_CORE_GRAPH_HPP_
