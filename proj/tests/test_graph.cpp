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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "core/graph.hpp"
#include "doctest.h"

using namespace mglmm;

namespace {

std::vector<std::string> letters(int p) {
  std::vector<std::string> out;
  for (int i = 0; i < p; ++i) out.push_back(std::string(1, char('a' + i)));
  return out;
}

RandomEffectsMatrix matrix_from(const Eigen::MatrixXd& values) {
  std::vector<std::string> groups;
  for (int i = 0; i < values.rows(); ++i) groups.push_back("g" + std::to_string(i));
  return RandomEffectsMatrix::from_values(groups, letters(int(values.cols())), values);
}

Eigen::MatrixXd gaussian_sample(int n, int p, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = nd(rng);
  // Mild cross-column mixing so correlations are generic.
  for (int j = 1; j < p; ++j) x.col(j) += 0.3 * x.col(j - 1);
  return x;
}

// Oracle: maximal cliques by direct subset enumeration (small graphs only).
std::vector<std::vector<int>> brute_cliques(const LabeledGraph& g) {
  const int p = int(g.vertices.size());
  std::vector<std::vector<int>> complete;
  for (int mask = 1; mask < (1 << p); ++mask) {
    std::vector<int> members;
    for (int v = 0; v < p; ++v)
      if (mask & (1 << v)) members.push_back(v);
    bool ok = true;
    for (std::size_t i = 0; i < members.size() && ok; ++i)
      for (std::size_t j = i + 1; j < members.size() && ok; ++j)
        ok = g.has_edge(members[i], members[j]);
    if (ok) complete.push_back(members);
  }
  std::vector<std::vector<int>> maximal;
  for (const auto& c : complete) {
    bool is_max = true;
    for (const auto& other : complete)
      if (other.size() > c.size() &&
          std::includes(other.begin(), other.end(), c.begin(), c.end())) {
        is_max = false;
        break;
      }
    if (is_max) maximal.push_back(c);
  }
  return maximal;
}

// Oracle: model BIC through the constrained covariance MLE computed with
// iterative proportional scaling on the precision matrix.
double ips_bic(const RandomEffectsMatrix& matrix, const LabeledGraph& g) {
  const int n = int(matrix.values.rows());
  const int p = int(matrix.values.cols());
  const Eigen::MatrixXd centered = matrix.values.rowwise() - matrix.values.colwise().mean();
  const Eigen::MatrixXd s = (centered.transpose() * centered) / double(n);

  const auto cliques = brute_cliques(g);
  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(p, p);
  for (int sweep = 0; sweep < 400; ++sweep) {
    for (const auto& c : cliques) {
      const int k = int(c.size());
      const Eigen::MatrixXd sigma = precision.inverse();
      Eigen::MatrixXd s_cc(k, k), sigma_cc(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          s_cc(i, j) = s(c[i], c[j]);
          sigma_cc(i, j) = sigma(c[i], c[j]);
        }
      const Eigen::MatrixXd update = s_cc.inverse() - sigma_cc.inverse();
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) precision(c[i], c[j]) += update(i, j);
    }
  }
  const Eigen::MatrixXd sigma_hat = precision.inverse();
  const double loglik = -0.5 * n *
                        (std::log(sigma_hat.determinant()) + p * std::log(2.0 * M_PI) +
                         (sigma_hat.inverse() * s).trace());
  const double k_params = 2.0 * p + double(g.edge_count());
  return -2.0 * loglik + k_params * std::log(double(n));
}

// Oracle: forest BIC from the additive per-edge closed form.
double forest_bic_closed_form(const RandomEffectsMatrix& matrix, const LabeledGraph& g) {
  const int n = int(matrix.values.rows());
  const int p = int(matrix.values.cols());
  const Eigen::MatrixXd centered = matrix.values.rowwise() - matrix.values.colwise().mean();
  const Eigen::MatrixXd s = (centered.transpose() * centered) / double(n);
  double bic = 2.0 * p * std::log(double(n));
  for (int j = 0; j < p; ++j)
    bic += n * (std::log(s(j, j)) + std::log(2.0 * M_PI) + 1.0);
  for (const auto& [a, b] : g.edges) {
    const double r2 = s(a, b) * s(a, b) / (s(a, a) * s(b, b));
    bic += n * std::log1p(-r2) + std::log(double(n));
  }
  return bic;
}

bool edge_mask_is_forest(int p, const std::vector<std::pair<int, int>>& pairs, unsigned mask) {
  std::vector<int> parent(p);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (!(mask & (1u << e))) continue;
    const int ra = find(pairs[e].first), rb = find(pairs[e].second);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

// Oracle: does any simple path from a to b avoid s entirely?
bool path_avoiding(const LabeledGraph& g, int a, int b, const std::set<int>& s,
                   std::vector<char>& on_path) {
  if (a == b) return true;
  on_path[a] = 1;
  const auto adj = g.adjacency();
  for (int u : adj[a]) {
    if (on_path[u] || s.count(u)) continue;
    if (path_avoiding(g, u, b, s, on_path)) {
      on_path[a] = 0;
      return true;
    }
  }
  on_path[a] = 0;
  return false;
}

bool separated_by_paths(const LabeledGraph& g, const std::set<int>& a, const std::set<int>& b,
                        const std::set<int>& s) {
  std::vector<char> on_path(g.vertices.size(), 0);
  for (int x : a)
    for (int y : b)
      if (path_avoiding(g, x, y, s, on_path)) return false;
  return true;
}

LabeledGraph random_graph(int p, double density, unsigned seed) {
  auto g = LabeledGraph::with_vertices(letters(p));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (u(rng) < density) g.add_edge(a, b);
  return g;
}

// The 16-component dependence structure used in the larger fixtures.
LabeledGraph fixture_graph() {
  auto g = LabeledGraph::with_vertices(
      {"infection proportion", "lesion area", "anisole", "3-pentanone", "ethanol", "acetone",
       "2-phenylethanol", "2-methyl-1-propanol", "1-propanol", "pentane", "3-methylfuran",
       "ethyl 2-methylbutanoate", "styrene", "unknown", "1-ethyl-4-methoxybenzene",
       "3-methyl-1-butanol"});
  const std::vector<std::pair<std::string, std::string>> edges = {
      {"infection proportion", "lesion area"},
      {"anisole", "3-pentanone"},
      {"ethanol", "acetone"},
      {"infection proportion", "anisole"},
      {"anisole", "ethanol"},
      {"lesion area", "3-pentanone"},
      {"3-pentanone", "acetone"},
      {"infection proportion", "3-pentanone"},
      {"lesion area", "anisole"},
      {"anisole", "acetone"},
      {"ethanol", "3-pentanone"},
      {"2-methyl-1-propanol", "anisole"},
      {"2-methyl-1-propanol", "2-phenylethanol"},
      {"2-phenylethanol", "infection proportion"},
      {"2-methyl-1-propanol", "infection proportion"},
      {"2-phenylethanol", "anisole"},
      {"acetone", "pentane"},
      {"acetone", "3-methylfuran"},
      {"acetone", "1-propanol"},
      {"pentane", "3-methylfuran"},
      {"pentane", "1-propanol"},
      {"pentane", "3-pentanone"},
      {"3-methylfuran", "1-propanol"},
      {"3-methylfuran", "3-pentanone"},
      {"1-propanol", "3-pentanone"},
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

}  // namespace

TEST_CASE("labeled graph basics") {
  CHECK_THROWS_AS(LabeledGraph::with_vertices({"a", "a"}), input_error);
  auto g = LabeledGraph::with_vertices({"a", "b", "c"});
  CHECK_THROWS_AS(g.vertex_index("d"), input_error);
  CHECK_THROWS_AS(g.add_edge(0, 0), input_error);
  CHECK_THROWS_AS(g.add_edge(0, 3), input_error);
  g.add_edge("a", "c");
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(2, 0));
  CHECK(!g.has_edge(0, 1));
  g.add_edge(2, 0);  // duplicate collapses
  CHECK(g.edge_count() == 1);
}

TEST_CASE("chordality check") {
  auto path = LabeledGraph::with_vertices(letters(4));
  path.add_edge(0, 1);
  path.add_edge(1, 2);
  path.add_edge(2, 3);
  CHECK(is_chordal(path));

  auto cycle = path;
  cycle.add_edge(0, 3);
  CHECK(!is_chordal(cycle));

  auto chorded = cycle;
  chorded.add_edge(0, 2);
  CHECK(is_chordal(chorded));

  auto empty = LabeledGraph::with_vertices(letters(5));
  CHECK(is_chordal(empty));

  auto complete = LabeledGraph::with_vertices(letters(5));
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b) complete.add_edge(a, b);
  CHECK(is_chordal(complete));

  CHECK(is_chordal(fixture_graph()));
}

TEST_CASE("chordal cliques match subset enumeration") {
  for (unsigned seed = 1; seed <= 30; ++seed) {
    auto g = random_graph(6, 0.45, seed);
    if (!is_chordal(g)) continue;
    auto got = chordal_cliques(g);
    auto want = brute_cliques(g);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }
  auto tri = LabeledGraph::with_vertices(letters(3));
  tri.add_edge(0, 1);
  tri.add_edge(1, 2);
  tri.add_edge(0, 2);
  CHECK(chordal_cliques(tri) == std::vector<std::vector<int>>{{0, 1, 2}});
}

TEST_CASE("bic closed forms for the empty and saturated graphs") {
  const auto matrix = matrix_from(gaussian_sample(40, 4, 7));
  const int n = 40, p = 4;
  const Eigen::MatrixXd centered = matrix.values.rowwise() - matrix.values.colwise().mean();
  const Eigen::MatrixXd s = (centered.transpose() * centered) / double(n);

  auto empty = LabeledGraph::with_vertices(matrix.response_names);
  double want = 2.0 * p * std::log(double(n));
  for (int j = 0; j < p; ++j) want += n * (std::log(s(j, j)) + std::log(2.0 * M_PI) + 1.0);
  CHECK(gaussian_bic(matrix, empty) == doctest::Approx(want).epsilon(1e-10));

  auto full = LabeledGraph::with_vertices(matrix.response_names);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) full.add_edge(a, b);
  const double dense_ll =
      -0.5 * n * (std::log(s.determinant()) + p * (std::log(2.0 * M_PI) + 1.0));
  const double k_full = 2.0 * p + p * (p - 1) / 2.0;
  CHECK(gaussian_bic(matrix, full) ==
        doctest::Approx(-2.0 * dense_ll + k_full * std::log(double(n))).epsilon(1e-10));
}

TEST_CASE("an exactly uncorrelated edge costs log n") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;  // orthogonal centered columns
  const auto matrix = matrix_from(x);
  auto empty = LabeledGraph::with_vertices(matrix.response_names);
  auto joined = empty;
  joined.add_edge(0, 1);
  CHECK(gaussian_bic(matrix, joined) - gaussian_bic(matrix, empty) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("bic agrees with iterative proportional scaling") {
  const auto matrix = matrix_from(gaussian_sample(50, 5, 11));
  int checked = 0;
  for (unsigned seed = 1; checked < 12 && seed <= 200; ++seed) {
    auto g = random_graph(5, 0.4, seed);
    if (!is_chordal(g)) continue;
    CHECK(gaussian_bic(matrix, g) == doctest::Approx(ips_bic(matrix, g)).epsilon(1e-7));
    ++checked;
  }
  CHECK(checked == 12);
}

TEST_CASE("non-chordal graph is rejected") {
  const auto matrix = matrix_from(gaussian_sample(30, 4, 13));
  auto cycle = LabeledGraph::with_vertices(matrix.response_names);
  cycle.add_edge(0, 1);
  cycle.add_edge(1, 2);
  cycle.add_edge(2, 3);
  cycle.add_edge(0, 3);
  CHECK_THROWS_AS(gaussian_bic(matrix, cycle), input_error);
}

TEST_CASE("forest search equals exhaustive forest enumeration") {
  for (int p : {4, 5}) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b) pairs.push_back({a, b});
    for (unsigned seed = 20; seed < 30; ++seed) {
      const auto matrix = matrix_from(gaussian_sample(35, p, seed));
      double best_bic = 0.0;
      std::set<std::pair<int, int>> best_edges;
      bool first = true;
      for (unsigned mask = 0; mask < (1u << pairs.size()); ++mask) {
        if (!edge_mask_is_forest(p, pairs, mask)) continue;
        auto g = LabeledGraph::with_vertices(matrix.response_names);
        for (std::size_t e = 0; e < pairs.size(); ++e)
          if (mask & (1u << e)) g.add_edge(pairs[e].first, pairs[e].second);
        const double bic = forest_bic_closed_form(matrix, g);
        if (first || bic < best_bic) {
          best_bic = bic;
          best_edges = g.edges;
          first = false;
        }
      }
      const auto result = search_min_bic(matrix, GraphModelClass::Forest);
      CHECK(result.graph.edges == best_edges);
      CHECK(result.bic == doctest::Approx(best_bic).epsilon(1e-8));
      CHECK(result.bic == doctest::Approx(gaussian_bic(matrix, result.graph)).epsilon(1e-10));
    }
  }
}

TEST_CASE("forest search recovers a chain dependence") {
  const int n = 200, p = 5;
  std::mt19937 rng(31);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    for (int j = 1; j < p; ++j) x(i, j) = 0.7 * x(i, j - 1) + 0.5 * nd(rng);
  }
  const auto result = search_min_bic(matrix_from(x), GraphModelClass::Forest);
  std::set<std::pair<int, int>> chain = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  CHECK(result.graph.edges == chain);
}

TEST_CASE("decomposable search refines the forest") {
  // Common-factor construction: all partial correlations nonzero, so the
  // decomposable stage should close the triangle the forest cannot express.
  const int n = 300;
  std::mt19937 rng(37);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) {
    const double f = nd(rng);
    for (int j = 0; j < 3; ++j) x(i, j) = f + 0.4 * nd(rng);
  }
  const auto matrix = matrix_from(x);
  const auto forest = search_min_bic(matrix, GraphModelClass::Forest);
  const auto decomp = search_min_bic(matrix, GraphModelClass::Decomposable);
  CHECK(decomp.graph.edge_count() == 3);
  CHECK(decomp.bic < forest.bic);
  CHECK(is_chordal(decomp.graph));
  CHECK(decomp.bic == doctest::Approx(gaussian_bic(matrix, decomp.graph)).epsilon(1e-10));
  // Accepted trace entries are exactly the selected edges.
  std::set<std::pair<int, int>> accepted;
  for (const auto& t : decomp.trace)
    if (t.accepted) accepted.insert(t.edge);
  CHECK(accepted == decomp.graph.edges);
  for (const auto& t : decomp.trace)
    if (t.accepted) CHECK(t.delta_bic < 0.0);
}

TEST_CASE("decomposable search never does worse than the forest") {
  for (unsigned seed = 40; seed < 46; ++seed) {
    const auto matrix = matrix_from(gaussian_sample(60, 6, seed));
    const auto forest = search_min_bic(matrix, GraphModelClass::Forest);
    const auto decomp = search_min_bic(matrix, GraphModelClass::Decomposable);
    CHECK(decomp.bic <= forest.bic + 1e-10);
    CHECK(is_chordal(decomp.graph));
    for (const auto& e : forest.graph.edges) CHECK(decomp.graph.edges.count(e) == 1);
  }
}

TEST_CASE("standardizing changes the scale but not the selected graph") {
  Eigen::MatrixXd x = gaussian_sample(80, 4, 47);
  x.col(2) *= 40.0;  // wildly different scales
  x.col(0) *= 0.01;
  const auto matrix = matrix_from(x);
  GraphSearchOptions standardize;
  standardize.standardize = true;
  const auto plain = search_min_bic(matrix, GraphModelClass::Decomposable);
  const auto scaled = search_min_bic(matrix, GraphModelClass::Decomposable, standardize);
  CHECK(plain.graph.edges == scaled.graph.edges);
}

TEST_CASE("label permutation maps the selected graph") {
  const auto matrix = matrix_from(gaussian_sample(50, 5, 53));
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  std::vector<std::string> names(5);
  Eigen::MatrixXd values(matrix.values.rows(), 5);
  for (int j = 0; j < 5; ++j) {
    names[j] = matrix.response_names[perm[j]];
    values.col(j) = matrix.values.col(perm[j]);
  }
  const auto permuted =
      RandomEffectsMatrix::from_values(matrix.group_ids, names, std::move(values));
  const auto base = search_min_bic(matrix, GraphModelClass::Decomposable);
  const auto moved = search_min_bic(permuted, GraphModelClass::Decomposable);
  auto label_edges = [](const LabeledGraph& g) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& [a, b] : g.edges) {
      const std::string& la = g.vertices[a];
      const std::string& lbl = g.vertices[b];
      out.insert({std::min(la, lbl), std::max(la, lbl)});
    }
    return out;
  };
  const auto base_labels = label_edges(base.graph);
  const auto moved_labels = label_edges(moved.graph);
  CHECK(base_labels == moved_labels);
  CHECK(base.bic == doctest::Approx(moved.bic).epsilon(1e-10));
}

TEST_CASE("separation agrees with simple-path enumeration") {
  std::mt19937 rng(59);
  int queries = 0;
  for (unsigned seed = 60; seed < 75; ++seed) {
    const auto g = random_graph(7, 0.35, seed);
    for (int q = 0; q < 60; ++q) {
      // Random disjoint A, B, S.
      std::vector<int> verts(7);
      std::iota(verts.begin(), verts.end(), 0);
      std::shuffle(verts.begin(), verts.end(), rng);
      std::uniform_int_distribution<int> size_a(1, 2), size_s(0, 3);
      const int na = size_a(rng), nb = size_a(rng), ns = size_s(rng);
      if (na + nb + ns > 7) continue;
      std::set<int> ia(verts.begin(), verts.begin() + na);
      std::set<int> ib(verts.begin() + na, verts.begin() + na + nb);
      std::set<int> is(verts.begin() + na + nb, verts.begin() + na + nb + ns);
      std::set<std::string> a, b, s;
      for (int v : ia) a.insert(g.vertices[v]);
      for (int v : ib) b.insert(g.vertices[v]);
      for (int v : is) s.insert(g.vertices[v]);
      CHECK(is_separator(g, a, b, s) == separated_by_paths(g, ia, ib, is));
      ++queries;
    }
  }
  CHECK(queries > 500);
}

TEST_CASE("separation input validation") {
  auto g = LabeledGraph::with_vertices(letters(4));
  g.add_edge(0, 1);
  CHECK_THROWS_AS(is_separator(g, {}, {"b"}, {}), input_error);
  CHECK_THROWS_AS(is_separator(g, {"a"}, {"a"}, {}), input_error);
  CHECK_THROWS_AS(is_separator(g, {"a"}, {"b"}, {"a"}), input_error);
  CHECK_THROWS_AS(is_separator(g, {"a"}, {"z"}, {}), input_error);
  CHECK(is_separator(g, {"a"}, {"c"}, {}));
  CHECK(!is_separator(g, {"a"}, {"b"}, {"c"}));
}

TEST_CASE("markov blanket separates the targets from everything else") {
  const auto g = fixture_graph();
  const std::set<std::string> targets = {"infection proportion", "lesion area"};
  const auto mb = minimal_markov_blanket(g, targets);
  const std::set<std::string> want = {"anisole", "3-pentanone", "2-phenylethanol",
                                      "2-methyl-1-propanol"};
  CHECK(mb.blanket == want);

  std::set<std::string> remaining;
  for (const auto& v : g.vertices)
    if (!targets.count(v) && !mb.blanket.count(v)) remaining.insert(v);
  CHECK(is_separator(g, targets, remaining, mb.blanket));
  // No proper subset of the blanket separates.
  for (const auto& drop : mb.blanket) {
    std::set<std::string> smaller = mb.blanket;
    smaller.erase(drop);
    std::set<std::string> rest = remaining;
    rest.insert(drop);
    CHECK(!is_separator(g, targets, rest, smaller));
  }
  for (const auto& v : want) CHECK(mb.statement.find(v) != std::string::npos);
  CHECK(mb.statement.find("conditionally independent") != std::string::npos);
  CHECK_THROWS_AS(minimal_markov_blanket(g, {}), input_error);
}

TEST_CASE("dot export is deterministic and classifies vertices") {
  const auto g = fixture_graph();
  const std::set<std::string> targets = {"infection proportion", "lesion area"};
  const std::string dot = to_dot(g, targets);
  CHECK(dot == to_dot(g, targets));
  CHECK(dot.find("\"infection proportion\" [class=\"target\"]") != std::string::npos);
  CHECK(dot.find("\"anisole\" [class=\"blanket\"]") != std::string::npos);
  CHECK(dot.find("\"styrene\" [class=\"peripheral\"]") != std::string::npos);
  std::size_t edge_lines = 0, pos = 0;
  while ((pos = dot.find(" -- ", pos)) != std::string::npos) {
    ++edge_lines;
    pos += 4;
  }
  CHECK(edge_lines == 36);
  const std::string plain = to_dot(g);
  CHECK(plain.find("[class=\"peripheral\"]") != std::string::npos);
  CHECK(plain.find("[class=\"target\"]") == std::string::npos);
}
