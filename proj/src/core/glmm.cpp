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

#include "glmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace mglmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

struct Obs {
  int group;
  int level;
  double y;
};

struct Prepared {
  std::vector<std::string> groups;  // sorted
  std::vector<std::string> levels;  // sorted
  std::vector<std::vector<Obs>> by_group;
  std::size_t n_obs = 0;
};

Prepared prepare(const ObservationTable& table, const ResponseSpec& spec) {
  const int col = table.response_index(spec.name);
  if (col < 0) throw input_error("response column '" + spec.name + "' not present in table");
  std::set<std::string> groups, levels;
  for (const auto& row : table.rows) {
    if (!row.values[col]) continue;
    groups.insert(row.group);
    levels.insert(row.time);
  }
  if (groups.empty()) throw input_error("no observations for response '" + spec.name + "'");
  if (groups.size() < 2)
    throw input_error("response '" + spec.name + "' needs at least 2 groups");

  Prepared prep;
  prep.groups.assign(groups.begin(), groups.end());
  prep.levels.assign(levels.begin(), levels.end());
  prep.by_group.resize(prep.groups.size());
  auto gidx = [&](const std::string& g) {
    return static_cast<int>(std::lower_bound(prep.groups.begin(), prep.groups.end(), g) -
                            prep.groups.begin());
  };
  auto lidx = [&](const std::string& t) {
    return static_cast<int>(std::lower_bound(prep.levels.begin(), prep.levels.end(), t) -
                            prep.levels.begin());
  };
  for (const auto& row : table.rows) {
    if (!row.values[col]) continue;
    const double y = *row.values[col];
    if (!in_support(spec.family, y))
      throw input_error("value " + std::to_string(y) + " for response '" + spec.name +
                        "' at (" + row.group + ", " + row.time + ") is outside the " +
                        spec.family.name() + " support");
    prep.by_group[gidx(row.group)].push_back({gidx(row.group), lidx(row.time), y});
    ++prep.n_obs;
  }
  // Canonical observation order inside each group.
  for (auto& v : prep.by_group)
    std::sort(v.begin(), v.end(), [](const Obs& a, const Obs& b) { return a.level < b.level; });

  if (spec.family.kind == FamilyKind::Gamma) {
    double first = prep.by_group[0][0].y;
    bool constant = true;
    for (const auto& g : prep.by_group)
      for (const auto& o : g)
        if (o.y != first) constant = false;
    if (constant)
      throw input_error("response '" + spec.name + "' is constant; gamma dispersion degenerate");
  }
  return prep;
}

// Laplace-approximate marginal log-likelihood as a function of
// (fixed effects, log dispersion, log re-variance). The y-dependent
// normalization of the density is folded in once per evaluation; the inner
// Newton works on the mean-dependent part only.
class LaplaceObjective {
public:
  LaplaceObjective(const Prepared& prep, const ResponseSpec& spec, bool pin_zero)
      : prep_(prep), spec_(spec), pin_zero_(pin_zero) {
    has_dispersion_ = spec.family.kind != FamilyKind::Binomial;
    modes_.assign(prep.groups.size(), 0.0);
  }

  int dim() const {
    return static_cast<int>(prep_.levels.size()) + (has_dispersion_ ? 1 : 0) +
           (pin_zero_ ? 0 : 1);
  }

  double log_dispersion_of(const std::vector<double>& x) const {
    return has_dispersion_ ? x[prep_.levels.size()] : 0.0;
  }
  double log_re_variance_of(const std::vector<double>& x) const {
    return pin_zero_ ? kNegInf : x.back();
  }

  // Evaluates the objective; `strict` turns numerical trouble into thrown
  // errors instead of -inf (used at the accepted optimum).
  double eval(const std::vector<double>& x, bool strict = false) {
    const int n_levels = static_cast<int>(prep_.levels.size());
    const double phi = std::exp(std::clamp(log_dispersion_of(x), -30.0, 30.0));
    const double sigma2 =
        pin_zero_ ? 0.0 : std::exp(std::clamp(log_re_variance_of(x), -30.0, 30.0));
    const double* theta = x.data();

    double normalization = 0.0;
    try {
      for (const auto& g : prep_.by_group)
        for (const auto& o : g) normalization += log_norm_term(o.y, phi);
    } catch (const numeric_error&) {
      if (strict) throw;
      return kNegInf;
    }
    if (!std::isfinite(normalization)) return strict_fail(strict, "density normalization");

    double total = normalization;
    for (std::size_t gi = 0; gi < prep_.by_group.size(); ++gi) {
      const auto& obs = prep_.by_group[gi];
      auto hq = [&](double u) {
        double acc = 0.0;
        for (const auto& o : obs) acc += edm_part(o.y, theta[o.level] + u, phi);
        if (!pin_zero_) acc -= u * u / (2.0 * sigma2);
        return acc;
      };
      if (pin_zero_) {
        const double v = hq(0.0);
        if (!std::isfinite(v)) return strict_fail(strict, "degenerate-prior likelihood");
        modes_[gi] = 0.0;
        total += v;
        continue;
      }
      // Inner Newton on the group's random intercept.
      double u = modes_[gi];
      double hu = hq(u);
      if (!std::isfinite(hu)) {
        u = 0.0;
        hu = hq(0.0);
      }
      bool ok = std::isfinite(hu);
      double curv = 0.0;
      for (int iter = 0; ok && iter < 50; ++iter) {
        double grad = -u / sigma2;
        curv = -1.0 / sigma2;
        for (const auto& o : obs) {
          const double eta = theta[o.level] + u;
          grad += score(o.y, eta, phi);
          curv += curvature(o.y, eta, phi);
        }
        if (!std::isfinite(grad) || !(curv < 0.0)) {
          ok = false;
          break;
        }
        double step = -grad / curv;
        double candidate = u + step;
        double hc = hq(candidate);
        int halvings = 0;
        while ((!std::isfinite(hc) || hc < hu) && halvings < 40) {
          step *= 0.5;
          candidate = u + step;
          hc = hq(candidate);
          ++halvings;
        }
        if (!std::isfinite(hc)) {
          ok = false;
          break;
        }
        u = candidate;
        hu = hc;
        if (std::abs(step) < 1e-10) break;
      }
      if (ok) {
        curv = -1.0 / sigma2;
        for (const auto& o : obs) curv += curvature(o.y, theta[o.level] + u, phi);
        ok = std::isfinite(hu) && curv < 0.0;
      }
      if (!ok) {
        if (strict)
          throw numeric_error("inner Newton diverged for group '" + prep_.groups[gi] + "'");
        return kNegInf;
      }
      modes_[gi] = u;
      total += hu - 0.5 * std::log(sigma2) - 0.5 * std::log(-curv);
    }
    return total;
  }

  const std::vector<double>& modes() const { return modes_; }

private:
  double strict_fail(bool strict, const std::string& what) {
    if (strict) throw numeric_error("non-finite " + what + " for response '" + spec_.name + "'");
    return kNegInf;
  }

  // Mean-free part of the log density (depends on y and dispersion only).
  double log_norm_term(double y, double phi) const {
    switch (spec_.family.kind) {
      case FamilyKind::Gamma: {
        const double shape = 1.0 / phi;
        return (shape - 1.0) * std::log(y) - std::lgamma(shape) - shape * std::log(phi);
      }
      case FamilyKind::Binomial: {
        const int n = spec_.family.size;
        return std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
      }
      case FamilyKind::CompoundPoisson:
        if (y == 0.0) return 0.0;
        return detail::tweedie_log_series(y, phi, spec_.family.power);
    }
    return kNegInf;
  }

  // (y*theta - kappa(theta)) / dispersion as a function of the linear
  // predictor.
  double edm_part(double y, double eta, double phi) const {
    switch (spec_.family.kind) {
      case FamilyKind::Gamma:
        return (-y * std::exp(-eta) - eta) / phi;
      case FamilyKind::Binomial:
        return y * eta - spec_.family.size * softplus(eta);
      case FamilyKind::CompoundPoisson: {
        const double p = spec_.family.power;
        return (y * std::exp((1.0 - p) * eta) / (1.0 - p) +
                -std::exp((2.0 - p) * eta) / (2.0 - p)) /
               phi;
      }
    }
    return kNegInf;
  }

  double score(double y, double eta, double phi) const {
    switch (spec_.family.kind) {
      case FamilyKind::Gamma:
        return (y * std::exp(-eta) - 1.0) / phi;
      case FamilyKind::Binomial:
        return y - spec_.family.size * sigmoid(eta);
      case FamilyKind::CompoundPoisson: {
        const double p = spec_.family.power;
        return (y - std::exp(eta)) * std::exp((1.0 - p) * eta) / phi;
      }
    }
    return 0.0;
  }

  double curvature(double y, double eta, double phi) const {
    switch (spec_.family.kind) {
      case FamilyKind::Gamma:
        return -y * std::exp(-eta) / phi;
      case FamilyKind::Binomial: {
        const double q = sigmoid(eta);
        return -spec_.family.size * q * (1.0 - q);
      }
      case FamilyKind::CompoundPoisson: {
        const double p = spec_.family.power;
        const double mu = std::exp(eta);
        return std::exp((1.0 - p) * eta) * ((1.0 - p) * y + (p - 2.0) * mu) / phi;
      }
    }
    return 0.0;
  }

  const Prepared& prep_;
  const ResponseSpec& spec_;
  bool pin_zero_;
  bool has_dispersion_ = true;
  std::vector<double> modes_;
};

struct NmResult {
  std::vector<double> x;
  double value = kNegInf;
  bool converged = false;
  int iterations = 0;
};

// Nelder-Mead maximization; the best vertex improves monotonically.
template <typename Fn>
NmResult nelder_mead_max(Fn&& f, const std::vector<double>& x0, double step, int max_iter,
                         double param_tol, double objective_tol) {
  const int d = static_cast<int>(x0.size());
  std::vector<std::vector<double>> verts(d + 1, x0);
  std::vector<double> vals(d + 1);
  for (int i = 0; i < d; ++i) verts[i + 1][i] += step;
  for (int i = 0; i <= d; ++i) vals[i] = f(verts[i]);

  auto order = [&] {
    std::vector<int> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] > vals[b]; });
    std::vector<std::vector<double>> v2(d + 1);
    std::vector<double> f2(d + 1);
    for (int i = 0; i <= d; ++i) {
      v2[i] = verts[idx[i]];
      f2[i] = vals[idx[i]];
    }
    verts.swap(v2);
    vals.swap(f2);
  };

  NmResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    order();
    double spread = vals[0] - vals[d];
    double width = 0.0;
    for (int i = 1; i <= d; ++i)
      for (int j = 0; j < d; ++j) width = std::max(width, std::abs(verts[i][j] - verts[0][j]));
    if (spread < objective_tol && width < param_tol) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) centroid[j] += verts[i][j] / d;
    auto blend = [&](double coef) {
      std::vector<double> x(d);
      for (int j = 0; j < d; ++j) x[j] = centroid[j] + coef * (verts[d][j] - centroid[j]);
      return x;
    };
    const auto xr = blend(-1.0);
    const double fr = f(xr);
    if (fr > vals[0]) {
      const auto xe = blend(-2.0);
      const double fe = f(xe);
      if (fe > fr) {
        verts[d] = xe;
        vals[d] = fe;
      } else {
        verts[d] = xr;
        vals[d] = fr;
      }
    } else if (fr > vals[d - 1]) {
      verts[d] = xr;
      vals[d] = fr;
    } else {
      const auto xc = blend(fr > vals[d] ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc > std::max(fr, vals[d])) {
        verts[d] = xc;
        vals[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          for (int j = 0; j < d; ++j) verts[i][j] = 0.5 * (verts[i][j] + verts[0][j]);
          vals[i] = f(verts[i]);
        }
      }
    }
  }
  order();
  res.x = verts[0];
  res.value = vals[0];
  res.iterations = iter;
  return res;
}

}  // namespace

ResponseSpec ResponseSpec::make(std::string name, Family family, Link link) {
  const bool wants_logit = family.kind == FamilyKind::Binomial;
  if (wants_logit != (link == Link::Logit))
    throw input_error("response '" + name + "': " + family.name() + " must use the " +
                      (wants_logit ? "logit" : "log") + " link");
  return ResponseSpec{std::move(name), family, link};
}

double FittedGLMM::fixed_effect(const std::string& level) const {
  const auto it = std::find(time_levels.begin(), time_levels.end(), level);
  if (it == time_levels.end()) throw input_error("unknown time level '" + level + "'");
  return fixed_effects[it - time_levels.begin()];
}

double FittedGLMM::prediction(const std::string& group) const {
  const auto it = std::find(group_ids.begin(), group_ids.end(), group);
  if (it == group_ids.end()) throw input_error("unknown group '" + group + "'");
  return re_predictions[it - group_ids.begin()];
}

double inverse_link(const ResponseSpec& spec, double eta) {
  if (spec.link == Link::Log) return std::exp(eta);
  return spec.family.size * sigmoid(eta);
}

FittedGLMM fit(const ObservationTable& table, const ResponseSpec& spec,
               const FitOptions& options) {
  const Prepared prep = prepare(table, spec);
  const int n_levels = static_cast<int>(prep.levels.size());
  const bool has_dispersion = spec.family.kind != FamilyKind::Binomial;
  const int n = static_cast<int>(prep.n_obs);

  // Closed-form GLM start: link of the per-level means (clamped into the
  // mean domain), which is the exact no-random-effect MLE for a saturated
  // time factor under these links.
  std::vector<double> level_sum(n_levels, 0.0);
  std::vector<int> level_count(n_levels, 0);
  for (const auto& g : prep.by_group)
    for (const auto& o : g) {
      level_sum[o.level] += o.y;
      level_count[o.level] += 1;
    }
  std::vector<double> theta0(n_levels);
  double grand_mean = 0.0;
  for (int t = 0; t < n_levels; ++t) grand_mean += level_sum[t];
  grand_mean /= n;
  for (int t = 0; t < n_levels; ++t) {
    double m = level_sum[t] / level_count[t];
    if (spec.family.kind == FamilyKind::Binomial) {
      const double q = std::clamp(m / spec.family.size, 1e-3, 1.0 - 1e-3);
      theta0[t] = std::log(q / (1.0 - q));
    } else {
      m = std::max(m, std::max(grand_mean, 1e-8) * 1e-3);
      theta0[t] = std::log(m);
    }
  }

  // Pearson moment start for the dispersion.
  double pearson = 0.0;
  if (has_dispersion) {
    for (const auto& g : prep.by_group)
      for (const auto& o : g) {
        const double mu = inverse_link(spec, theta0[o.level]);
        pearson += (o.y - mu) * (o.y - mu) / variance_function(spec.family, mu);
      }
    pearson /= std::max(1, n - n_levels);
    pearson = std::clamp(pearson, 1e-6, 1e6);
  }

  std::vector<double> x0 = theta0;
  if (has_dispersion) x0.push_back(std::log(pearson));
  if (!options.pin_re_variance_zero) x0.push_back(std::log(0.1));

  LaplaceObjective objective(prep, spec, options.pin_re_variance_zero);
  auto fn = [&](const std::vector<double>& x) { return objective.eval(x, false); };

  NmResult best;
  best.x = x0;
  best.value = fn(x0);
  if (!std::isfinite(best.value))
    throw numeric_error("initial likelihood for response '" + spec.name + "' is not finite");
  bool converged = false;
  double step = 0.4;
  double prev_gain = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 6; ++restart) {
    NmResult r = nelder_mead_max(fn, best.x, step, options.max_outer_iterations,
                                 options.param_tol, options.objective_tol);
    const double gain = std::max(0.0, r.value - best.value);
    if (r.value >= best.value) best = r;
    // Converged once a restarted simplex no longer improves the objective.
    if (restart > 0 && gain < 1e-8 && (r.converged || prev_gain < 1e-8)) {
      converged = true;
      break;
    }
    prev_gain = gain;
    step *= 0.2;
  }

  // Strict re-evaluation at the accepted optimum refreshes the modes and
  // surfaces any numerical failure as an error.
  const double logl = objective.eval(best.x, true);

  FittedGLMM result;
  result.spec = spec;
  result.time_levels = prep.levels;
  result.fixed_effects.assign(best.x.begin(), best.x.begin() + n_levels);
  result.dispersion = has_dispersion ? std::exp(objective.log_dispersion_of(best.x)) : 1.0;
  result.re_variance =
      options.pin_re_variance_zero ? 0.0 : std::exp(objective.log_re_variance_of(best.x));
  result.group_ids = prep.groups;
  result.re_predictions = objective.modes();
  result.log_likelihood = logl;
  result.converged = converged;

  // Pearson moment estimate at the final conditional means (diagnostic).
  double pd = 0.0;
  for (std::size_t gi = 0; gi < prep.by_group.size(); ++gi)
    for (const auto& o : prep.by_group[gi]) {
      const double mu =
          inverse_link(spec, result.fixed_effects[o.level] + result.re_predictions[gi]);
      pd += (o.y - mu) * (o.y - mu) / variance_function(spec.family, mu);
    }
  result.pearson_dispersion = pd / std::max(1, n - n_levels);
  return result;
}

std::vector<std::pair<std::string, double>> predict_random_effects(const FittedGLMM& fit) {
  if (!fit.converged)
    throw state_error("random-effect prediction requested from a non-converged fit of '" +
                      fit.spec.name + "'");
  std::vector<std::pair<std::string, double>> out;
  out.reserve(fit.group_ids.size());
  for (std::size_t i = 0; i < fit.group_ids.size(); ++i)
    out.emplace_back(fit.group_ids[i], fit.re_predictions[i]);
  return out;
}

std::vector<double> fitted_means(const FittedGLMM& fit, const ObservationTable& table) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const double eta = fit.fixed_effect(row.time) + fit.prediction(row.group);
    out.push_back(inverse_link(fit.spec, eta));
  }
  return out;
}

double laplace_log_likelihood(const ObservationTable& table, const FittedGLMM& fit) {
  const Prepared prep = prepare(table, fit.spec);
  const bool pinned = fit.re_variance == 0.0;
  LaplaceObjective objective(prep, fit.spec, pinned);
  std::vector<double> x;
  for (const auto& level : prep.levels) x.push_back(fit.fixed_effect(level));
  if (fit.spec.family.kind != FamilyKind::Binomial) x.push_back(std::log(fit.dispersion));
  if (!pinned) x.push_back(std::log(fit.re_variance));
  return objective.eval(x, true);
}

}  // namespace mglmm
