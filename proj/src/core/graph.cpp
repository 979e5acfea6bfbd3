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

#include "graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace mglmm {

namespace {

// Union-find for the spanning-forest stage.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// Maximum-cardinality search; returns the visit order.
std::vector<int> mcs_order(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> weight(n, 0), order;
  std::vector<bool> visited(n, false);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!visited[v] && (best < 0 || weight[v] > weight[best])) best = v;
    visited[best] = true;
    order.push_back(best);
    for (int u : adj[best])
      if (!visited[u]) ++weight[u];
  }
  return order;
}

std::string label_set(const LabeledGraph& graph, const std::vector<int>& members) {
  std::string out = "{";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += ", ";
    out += graph.vertices[members[i]];
  }
  return out + "}";
}

std::string label_set(const std::set<std::string>& labels) {
  std::string out = "{";
  bool first = true;
  for (const auto& l : labels) {
    if (!first) out += ", ";
    out += l;
    first = false;
  }
  return out + "}";
}

// Maximized Gaussian log-likelihood contribution of a dense block, with the
// MLE covariance (denominator n).
double block_loglik(const Eigen::MatrixXd& scatter_over_n, const std::vector<int>& members,
                    int n_rows, const LabeledGraph& graph) {
  const int k = static_cast<int>(members.size());
  Eigen::MatrixXd block(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) block(i, j) = scatter_over_n(members[i], members[j]);
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success)
    throw numeric_error("singular covariance block for clique " + label_set(graph, members));
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = llt.matrixL()(i, i);
    if (!(d > 0.0) || !std::isfinite(d))
      throw numeric_error("singular covariance block for clique " + label_set(graph, members));
    logdet += 2.0 * std::log(d);
  }
  return -0.5 * n_rows * (logdet + k * (std::log(2.0 * M_PI) + 1.0));
}

void check_vertices_match(const RandomEffectsMatrix& matrix, const LabeledGraph& graph) {
  if (graph.vertices != matrix.response_names)
    throw input_error("graph vertices do not match the matrix response labels");
}

}  // namespace

LabeledGraph LabeledGraph::with_vertices(std::vector<std::string> labels) {
  std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() != labels.size()) throw input_error("duplicate vertex labels");
  LabeledGraph g;
  g.vertices = std::move(labels);
  return g;
}

int LabeledGraph::vertex_index(const std::string& label) const {
  const auto it = std::find(vertices.begin(), vertices.end(), label);
  if (it == vertices.end()) throw input_error("unknown vertex label '" + label + "'");
  return static_cast<int>(it - vertices.begin());
}

void LabeledGraph::add_edge(int a, int b) {
  if (a == b) throw input_error("self-loops are not allowed");
  if (a < 0 || b < 0 || a >= static_cast<int>(vertices.size()) ||
      b >= static_cast<int>(vertices.size()))
    throw input_error("edge endpoint out of range");
  edges.insert({std::min(a, b), std::max(a, b)});
}

void LabeledGraph::add_edge(const std::string& a, const std::string& b) {
  add_edge(vertex_index(a), vertex_index(b));
}

bool LabeledGraph::has_edge(int a, int b) const {
  return edges.count({std::min(a, b), std::max(a, b)}) > 0;
}

std::vector<std::vector<int>> LabeledGraph::adjacency() const {
  std::vector<std::vector<int>> adj(vertices.size());
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

bool is_chordal(const LabeledGraph& graph) {
  const auto adj = graph.adjacency();
  const auto order = mcs_order(adj);
  const int n = static_cast<int>(order.size());
  std::vector<int> position(n);
  for (int i = 0; i < n; ++i) position[order[i]] = i;
  // Tarjan-Yannakakis: earlier-visited neighbors minus the most recent one
  // must all be adjacent to that most recent one.
  for (int i = 0; i < n; ++i) {
    const int v = order[i];
    int latest = -1;
    for (int u : adj[v])
      if (position[u] < i && (latest < 0 || position[u] > position[latest])) latest = u;
    if (latest < 0) continue;
    for (int u : adj[v]) {
      if (position[u] >= i || u == latest) continue;
      if (!graph.has_edge(u, latest)) return false;
    }
  }
  return true;
}

std::vector<std::vector<int>> chordal_cliques(const LabeledGraph& graph) {
  const auto adj = graph.adjacency();
  const auto order = mcs_order(adj);
  const int n = static_cast<int>(order.size());
  std::vector<int> position(n);
  for (int i = 0; i < n; ++i) position[order[i]] = i;
  std::vector<std::vector<int>> candidates;
  for (int i = 0; i < n; ++i) {
    const int v = order[i];
    std::vector<int> clique = {v};
    for (int u : adj[v])
      if (position[u] < i) clique.push_back(u);
    std::sort(clique.begin(), clique.end());
    candidates.push_back(std::move(clique));
  }
  std::vector<std::vector<int>> cliques;
  for (const auto& c : candidates) {
    bool maximal = true;
    for (const auto& other : candidates) {
      if (&other == &c || other.size() <= c.size()) continue;
      if (std::includes(other.begin(), other.end(), c.begin(), c.end())) {
        maximal = false;
        break;
      }
    }
    if (maximal &&
        std::find(cliques.begin(), cliques.end(), c) == cliques.end())
      cliques.push_back(c);
  }
  return cliques;
}

double gaussian_bic(const RandomEffectsMatrix& matrix, const LabeledGraph& graph) {
  check_vertices_match(matrix, graph);
  const int n = static_cast<int>(matrix.values.rows());
  if (n < 2) throw input_error("BIC needs at least 2 rows");
  if (!is_chordal(graph))
    throw input_error("non-chordal graphs are outside the supported model class");

  const Eigen::MatrixXd centered = matrix.values.rowwise() - matrix.values.colwise().mean();
  const Eigen::MatrixXd scatter_over_n = (centered.transpose() * centered) / double(n);

  const auto cliques = chordal_cliques(graph);
  double loglik = 0.0;
  for (const auto& c : cliques) loglik += block_loglik(scatter_over_n, c, n, graph);

  // Junction forest: maximum-weight spanning forest of the clique graph;
  // edge intersections are the separators.
  struct CliqueEdge {
    int weight, a, b;
  };
  std::vector<CliqueEdge> clique_edges;
  for (std::size_t a = 0; a < cliques.size(); ++a)
    for (std::size_t b = a + 1; b < cliques.size(); ++b) {
      std::vector<int> inter;
      std::set_intersection(cliques[a].begin(), cliques[a].end(), cliques[b].begin(),
                            cliques[b].end(), std::back_inserter(inter));
      if (!inter.empty())
        clique_edges.push_back({static_cast<int>(inter.size()), static_cast<int>(a),
                                static_cast<int>(b)});
    }
  std::stable_sort(clique_edges.begin(), clique_edges.end(),
                   [](const CliqueEdge& x, const CliqueEdge& y) { return x.weight > y.weight; });
  DisjointSets ds(static_cast<int>(cliques.size()));
  for (const auto& e : clique_edges) {
    if (!ds.unite(e.a, e.b)) continue;
    std::vector<int> separator;
    std::set_intersection(cliques[e.a].begin(), cliques[e.a].end(), cliques[e.b].begin(),
                          cliques[e.b].end(), std::back_inserter(separator));
    loglik -= block_loglik(scatter_over_n, separator, n, graph);
  }

  const double k = 2.0 * static_cast<double>(graph.vertices.size()) +
                   static_cast<double>(graph.edge_count());
  return -2.0 * loglik + k * std::log(static_cast<double>(n));
}

GraphSearchResult search_min_bic(const RandomEffectsMatrix& matrix_in,
                                 GraphModelClass model_class, const GraphSearchOptions& options) {
  const RandomEffectsMatrix matrix = options.standardize ? matrix_in.standardized() : matrix_in;
  const int n = static_cast<int>(matrix.values.rows());
  const int p = static_cast<int>(matrix.response_names.size());
  if (n < 3) throw input_error("graph search needs at least 3 rows");

  GraphSearchResult result;
  result.model_class = model_class;
  result.graph = LabeledGraph::with_vertices(matrix.response_names);

  // Stage 1: exact minimum-BIC forest. The forest BIC is additive over
  // edges, each contributing n*log(1-r^2) + log n.
  const Eigen::MatrixXd& cov = matrix.empirical_covariance;
  struct Candidate {
    double delta;
    int a, b;
  };
  std::vector<Candidate> candidates;
  const double log_n = std::log(static_cast<double>(n));
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      const double denom = cov(a, a) * cov(b, b);
      if (!(denom > 0.0)) continue;
      const double r2 = std::min(cov(a, b) * cov(a, b) / denom, 1.0 - 1e-12);
      const double delta = n * std::log1p(-r2) + log_n;
      if (delta < 0.0) candidates.push_back({delta, a, b});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.delta != y.delta) return x.delta < y.delta;
    return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
  });
  DisjointSets ds(p);
  for (const auto& c : candidates) {
    const bool accepted = ds.unite(c.a, c.b);
    if (accepted) result.graph.add_edge(c.a, c.b);
    result.trace.push_back({{c.a, c.b}, c.delta, accepted});
  }

  double current_bic = gaussian_bic(matrix, result.graph);

  // Stage 2 (decomposable only): greedy chordality-preserving additions.
  if (model_class == GraphModelClass::Decomposable) {
    for (;;) {
      bool have_best = false;
      Candidate best{0.0, -1, -1};
      for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b) {
          if (result.graph.has_edge(a, b)) continue;
          LabeledGraph trial = result.graph;
          trial.add_edge(a, b);
          if (!is_chordal(trial)) continue;
          // Keep every clique MLE nonsingular.
          std::size_t largest = 0;
          for (const auto& c : chordal_cliques(trial)) largest = std::max(largest, c.size());
          if (static_cast<int>(largest) >= n) continue;
          double trial_bic;
          try {
            trial_bic = gaussian_bic(matrix, trial);
          } catch (const numeric_error&) {
            continue;
          }
          const double delta = trial_bic - current_bic;
          if (!have_best || delta < best.delta) {
            best = {delta, a, b};
            have_best = true;
          }
        }
      if (!have_best) break;
      if (best.delta < 0.0) {
        result.graph.add_edge(best.a, best.b);
        current_bic += best.delta;
        result.trace.push_back({{best.a, best.b}, best.delta, true});
      } else {
        result.trace.push_back({{best.a, best.b}, best.delta, false});
        break;
      }
    }
  }

  result.bic = gaussian_bic(matrix, result.graph);
  return result;
}

bool is_separator(const LabeledGraph& graph, const std::set<std::string>& set_a,
                  const std::set<std::string>& set_b, const std::set<std::string>& set_s) {
  if (set_a.empty() || set_b.empty()) throw input_error("separation sets A and B must be non-empty");
  auto to_indices = [&](const std::set<std::string>& labels) {
    std::set<int> out;
    for (const auto& l : labels) out.insert(graph.vertex_index(l));
    return out;
  };
  const std::set<int> a = to_indices(set_a), b = to_indices(set_b), s = to_indices(set_s);
  for (int v : a)
    if (b.count(v) || s.count(v)) throw input_error("separation sets must be pairwise disjoint");
  for (int v : b)
    if (s.count(v)) throw input_error("separation sets must be pairwise disjoint");

  const auto adj = graph.adjacency();
  std::vector<char> blocked(graph.vertices.size(), 0), seen(graph.vertices.size(), 0);
  for (int v : s) blocked[v] = 1;
  std::deque<int> queue;
  for (int v : a) {
    queue.push_back(v);
    seen[v] = 1;
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (b.count(v)) return false;
    for (int u : adj[v])
      if (!seen[u] && !blocked[u]) {
        seen[u] = 1;
        queue.push_back(u);
      }
  }
  return true;
}

MarkovBlanket minimal_markov_blanket(const LabeledGraph& graph,
                                     const std::set<std::string>& targets) {
  if (targets.empty()) throw input_error("target set must be non-empty");
  std::set<int> target_idx;
  for (const auto& l : targets) target_idx.insert(graph.vertex_index(l));

  const auto adj = graph.adjacency();
  MarkovBlanket result;
  for (int t : target_idx)
    for (int u : adj[t])
      if (!target_idx.count(u)) result.blanket.insert(graph.vertices[u]);

  std::set<std::string> remaining;
  for (const auto& v : graph.vertices)
    if (!targets.count(v) && !result.blanket.count(v)) remaining.insert(v);

  std::ostringstream text;
  text << "Given the random components " << label_set(result.blanket)
       << ", the responses associated with " << label_set(remaining)
       << " are conditionally independent of the responses associated with "
       << label_set(targets) << ".";
  result.statement = text.str();
  return result;
}

std::string to_dot(const LabeledGraph& graph, const std::set<std::string>& targets) {
  std::set<std::string> blanket;
  if (!targets.empty()) blanket = minimal_markov_blanket(graph, targets).blanket;
  std::ostringstream out;
  out << "graph components {\n";
  for (const auto& v : graph.vertices) {
    const char* cls = targets.count(v) ? "target" : blanket.count(v) ? "blanket" : "peripheral";
    out << "  \"" << v << "\" [class=\"" << cls << "\"];\n";
  }
  for (const auto& [a, b] : graph.edges)
    out << "  \"" << graph.vertices[a] << "\" -- \"" << graph.vertices[b] << "\";\n";
  out << "}\n";
  return out.str();
}

}  // namespace mglmm
