#include "bubble/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "bubble/io.hpp"

namespace bubble {

namespace {
constexpr double kZ975 = 1.959963984540054;
}

void DataFrame::add_column(const std::string& name, std::vector<double> values) {
  if (!columns_.empty() && values.size() != rows_)
    throw std::invalid_argument("column '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                                std::to_string(rows_));
  rows_ = values.size();
  columns_[name] = std::move(values);
}

const std::vector<double>& DataFrame::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw InputError("no column named '" + name + "'");
  return it->second;
}

std::vector<std::string> DataFrame::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : columns_) out.push_back(k);
  return out;
}

std::optional<std::size_t> FitResult::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

double FitResult::coef(const std::string& name) const {
  auto i = index_of(name);
  if (!i) throw InputError("no coefficient named '" + name + "'");
  return coefficients[static_cast<Eigen::Index>(*i)];
}

namespace {

// log(1 + exp(x)) without overflow
double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Greedy in-order selection of linearly independent columns via incremental Cholesky of X'X.
std::vector<Eigen::Index> independent_columns(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::Index p = gram.cols();
  std::vector<Eigen::Index> kept;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double gjj = gram(j, j);
    if (!(gjj > 0.0)) continue;
    const auto k = static_cast<Eigen::Index>(kept.size());
    Eigen::VectorXd w(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      double s = gram(kept[r], j);
      for (Eigen::Index c = 0; c < r; ++c) s -= l(r, c) * w[c];
      w[r] = s / l(r, r);
    }
    const double resid = gjj - w.squaredNorm();
    if (resid <= 1e-9 * gjj) continue;
    l.row(k).head(k) = w.transpose();
    l(k, k) = std::sqrt(resid);
    kept.push_back(j);
  }
  return kept;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(cols[i]);
  return out;
}

struct NewtonOutcome {
  Eigen::VectorXd beta;
  int iterations = 0;
  bool converged = false;
  std::optional<Eigen::Index> diverging;
};

NewtonOutcome newton(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ModelSpec& opt,
                     std::optional<Eigen::Index> intercept_col) {
  NewtonOutcome out;
  out.beta = Eigen::VectorXd::Zero(x.cols());
  if (intercept_col) {
    const double ybar = y.mean();
    out.beta[*intercept_col] = std::log(ybar / (1.0 - ybar));
  }
  double ll = logit_log_likelihood(x, y, out.beta);
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd eta = x * out.beta;
    Eigen::VectorXd resid(y.size()), w(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double p = sigmoid(eta[i]);
      resid[i] = y[i] - p;
      w[i] = p * (1.0 - p);
    }
    const Eigen::VectorXd grad = x.transpose() * resid;
    if (grad.lpNorm<Eigen::Infinity>() < opt.tol) {
      out.converged = true;
      return out;
    }
    const Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd delta = ldlt.solve(grad);
    if (!delta.allFinite()) break;
    double step = 1.0;
    Eigen::VectorXd next;
    double ll_next = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 40; ++halving) {
      next = out.beta + step * delta;
      ll_next = logit_log_likelihood(x, y, next);
      if (ll_next >= ll - 1e-12 * (1.0 + std::abs(ll))) break;
      step *= 0.5;
    }
    if (!(ll_next >= ll - 1e-12 * (1.0 + std::abs(ll)))) break;  // no ascent direction left
    out.beta = next;
    ll = ll_next;
    for (Eigen::Index j = 0; j < out.beta.size(); ++j) {
      if (intercept_col && j == *intercept_col) continue;
      if (std::abs(out.beta[j]) > opt.separation_threshold) {
        if (!out.diverging || std::abs(out.beta[j]) > std::abs(out.beta[*out.diverging])) out.diverging = j;
      }
    }
    if (out.diverging) return out;
  }
  // Final check after the last update.
  const Eigen::VectorXd g = logit_gradient(x, y, out.beta);
  out.converged = g.lpNorm<Eigen::Infinity>() < opt.tol;
  return out;
}

}  // namespace

double logit_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
  return ll;
}

Eigen::VectorXd logit_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd resid(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) resid[i] = y[i] - sigmoid(eta[i]);
  return x.transpose() * resid;
}

FitResult fit_logit(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y, std::vector<std::string> names,
                    const ModelSpec& options) {
  if (y.size() == 0) throw InputError("empty estimation sample");
  if (x_in.rows() != y.size() || static_cast<std::size_t>(x_in.cols()) != names.size())
    throw std::invalid_argument("fit_logit: design dimensions disagree");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0) throw InputError("response must be binary (0/1)");
  const double ysum = y.sum();
  if (ysum == 0.0 || ysum == static_cast<double>(y.size()))
    throw NumericalError("response is constant (all " + std::string(ysum == 0.0 ? "0" : "1") + ")");

  FitResult fit;
  std::vector<Eigen::Index> cols = independent_columns(x_in);
  {
    std::set<Eigen::Index> keep(cols.begin(), cols.end());
    for (Eigen::Index j = 0; j < x_in.cols(); ++j)
      if (!keep.contains(j)) fit.dropped_columns.push_back({names[static_cast<std::size_t>(j)], "collinear"});
  }

  while (true) {
    if (cols.empty()) throw NumericalError("no estimable columns remain in the design");
    const Eigen::MatrixXd x = select_columns(x_in, cols);
    std::optional<Eigen::Index> intercept_col;
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (names[static_cast<std::size_t>(cols[k])] == "(Intercept)") intercept_col = static_cast<Eigen::Index>(k);

    auto res = newton(x, y, options, intercept_col);
    if (res.diverging) {
      const auto j = cols[static_cast<std::size_t>(*res.diverging)];
      fit.dropped_columns.push_back({names[static_cast<std::size_t>(j)], "separation"});
      cols.erase(cols.begin() + *res.diverging);
      continue;
    }
    if (!res.converged)
      throw NumericalError("logit did not converge within " + std::to_string(options.max_iterations) + " iterations");

    const Eigen::VectorXd eta = x * res.beta;
    Eigen::VectorXd resid(y.size()), w(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double p = sigmoid(eta[i]);
      resid[i] = y[i] - p;
      w[i] = p * (1.0 - p);
    }
    const Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalError("information matrix is not positive definite at the optimum");
    fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
    // A separated column can meet the gradient tolerance before crossing the |beta| bound;
    // its standard error gives it away.
    std::optional<Eigen::Index> flat;
    for (Eigen::Index j = 0; j < res.beta.size(); ++j) {
      if (intercept_col && j == *intercept_col) continue;
      if (std::sqrt(fit.covariance(j, j)) > options.separation_max_se &&
          (!flat || std::abs(res.beta[j]) > std::abs(res.beta[*flat])))
        flat = j;
    }
    if (flat) {
      const auto j = cols[static_cast<std::size_t>(*flat)];
      fit.dropped_columns.push_back({names[static_cast<std::size_t>(j)], "separation"});
      cols.erase(cols.begin() + *flat);
      continue;
    }
    fit.coefficients = res.beta;
    fit.scores = x.array().colwise() * resid.array();
    fit.log_likelihood = logit_log_likelihood(x, y, res.beta);
    fit.gradient_max_norm = (x.transpose() * resid).lpNorm<Eigen::Infinity>();
    fit.iterations = res.iterations;
    fit.converged = true;
    fit.n_obs = static_cast<std::size_t>(y.size());
    for (auto j : cols) fit.names.push_back(names[static_cast<std::size_t>(j)]);
    fit.rows.resize(fit.n_obs);
    for (std::size_t i = 0; i < fit.n_obs; ++i) fit.rows[i] = i;
    return fit;
  }
}

FitResult fit_logit(const DataFrame& data, const ModelSpec& spec) {
  const auto& yc = data.column(spec.response);
  std::vector<const std::vector<double>*> covs, fes;
  for (const auto& c : spec.covariates) covs.push_back(&data.column(c));
  for (const auto& c : spec.fixed_effects) fes.push_back(&data.column(c));

  std::vector<std::size_t> rows;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    bool ok = std::isfinite(yc[i]);
    for (auto* c : covs) ok = ok && std::isfinite((*c)[i]);
    for (auto* c : fes) ok = ok && std::isfinite((*c)[i]);
    if (ok) rows.push_back(i);
    else ++missing;
  }
  if (rows.empty()) throw InputError("empty estimation sample");

  // Fixed-effect levels whose rows all share one outcome have an infinite MLE; their rows
  // carry no information about the remaining coefficients and are removed. Repeat until
  // no such level is left, since removal can create new ones in another factor.
  std::vector<DroppedColumn> perfect;
  std::size_t perfect_rows = 0;
  bool changed = !fes.empty();
  while (changed) {
    changed = false;
    for (std::size_t f = 0; f < fes.size(); ++f) {
      std::map<double, std::pair<std::size_t, std::size_t>> level_counts;  // level -> (n, events)
      for (auto i : rows) {
        auto& lc = level_counts[(*fes[f])[i]];
        ++lc.first;
        lc.second += yc[i] == 1.0;
      }
      std::set<double> bad;
      for (const auto& [lvl, lc] : level_counts)
        if (lc.second == 0 || lc.second == lc.first) bad.insert(lvl);
      if (bad.empty() || bad.size() == level_counts.size()) continue;
      for (double lvl : bad) perfect.push_back({spec.fixed_effects[f] + "[" + format_double(lvl) + "]", "perfect prediction"});
      const auto before = rows.size();
      std::erase_if(rows, [&](std::size_t i) { return bad.contains((*fes[f])[i]); });
      perfect_rows += before - rows.size();
      changed = true;
    }
  }

  std::vector<std::string> names;
  if (spec.intercept) names.push_back("(Intercept)");
  for (const auto& c : spec.covariates) names.push_back(c);
  std::vector<std::vector<double>> levels(fes.size());
  for (std::size_t f = 0; f < fes.size(); ++f) {
    std::set<double> lv;
    for (auto i : rows) lv.insert((*fes[f])[i]);
    levels[f].assign(lv.begin(), lv.end());
    for (std::size_t k = 1; k < levels[f].size(); ++k)
      names.push_back(spec.fixed_effects[f] + "[" + format_double(levels[f][k]) + "]");
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    y[r] = yc[i];
    Eigen::Index c = 0;
    if (spec.intercept) x(r, c++) = 1.0;
    for (auto* cov : covs) x(r, c++) = (*cov)[i];
    for (std::size_t f = 0; f < fes.size(); ++f) {
      const auto& lv = levels[f];
      const auto pos = std::lower_bound(lv.begin(), lv.end(), (*fes[f])[i]) - lv.begin();
      if (pos > 0) x(r, c + pos - 1) = 1.0;
      c += static_cast<Eigen::Index>(lv.size()) - 1;
    }
  }

  FitResult fit = fit_logit(x, y, std::move(names), spec);
  fit.rows = std::move(rows);
  fit.rows_missing = missing;
  fit.rows_perfect_prediction = perfect_rows;
  fit.dropped_columns.insert(fit.dropped_columns.begin(), perfect.begin(), perfect.end());
  return fit;
}

std::vector<std::int64_t> estimation_clusters(const FitResult& fit, const std::vector<double>& column) {
  std::vector<std::int64_t> out;
  out.reserve(fit.rows.size());
  for (auto i : fit.rows) out.push_back(static_cast<std::int64_t>(column.at(i)));
  return out;
}

namespace {

Eigen::MatrixXd meat(const Eigen::MatrixXd& scores, std::span<const std::int64_t> clusters, std::size_t& n_groups) {
  std::unordered_map<std::int64_t, Eigen::Index> slot;
  for (auto c : clusters) slot.emplace(c, static_cast<Eigen::Index>(slot.size()));
  n_groups = slot.size();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(slot.size()), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) sums.row(slot.at(clusters[static_cast<std::size_t>(i)])) += scores.row(i);
  return sums.transpose() * sums;
}

Eigen::MatrixXd sandwich(const FitResult& fit, std::span<const std::int64_t> clusters, const ClusterOptions& opts,
                         std::vector<std::string>& warnings, const char* label) {
  if (clusters.size() != fit.n_obs)
    throw std::invalid_argument("cluster vector length does not match the estimation sample");
  std::size_t g = 0;
  const Eigen::MatrixXd m = meat(fit.scores, clusters, g);
  double factor = 1.0;
  if (g < 2) warnings.push_back(std::string("fewer than 2 clusters in dimension ") + label);
  else if (opts.small_sample_correction) factor = static_cast<double>(g) / static_cast<double>(g - 1);
  return factor * fit.covariance * m * fit.covariance;
}

}  // namespace

ClusteredCovariance cluster_robust_cov(const FitResult& fit, std::span<const std::int64_t> clusters,
                                       ClusterOptions opts) {
  ClusteredCovariance out;
  out.covariance = sandwich(fit, clusters, opts, out.warnings, "A");
  return out;
}

ClusteredCovariance robust_sandwich(const FitResult& fit, ClusterOptions opts) {
  std::vector<std::int64_t> ids(fit.n_obs);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  return cluster_robust_cov(fit, ids, opts);
}

ClusteredCovariance two_way_clustered_cov(const FitResult& fit, std::span<const std::int64_t> cluster_a,
                                          std::span<const std::int64_t> cluster_b, ClusterOptions opts) {
  if (cluster_a.size() != cluster_b.size()) throw std::invalid_argument("cluster vectors differ in length");
  ClusteredCovariance out;
  std::vector<std::int64_t> inter(cluster_a.size());
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> pair_id;
  for (std::size_t i = 0; i < inter.size(); ++i)
    inter[i] = pair_id.emplace(std::make_pair(cluster_a[i], cluster_b[i]), static_cast<std::int64_t>(pair_id.size()))
                   .first->second;
  const Eigen::MatrixXd va = sandwich(fit, cluster_a, opts, out.warnings, "A");
  const Eigen::MatrixXd vb = sandwich(fit, cluster_b, opts, out.warnings, "B");
  const Eigen::MatrixXd vab = sandwich(fit, inter, opts, out.warnings, "A x B");
  Eigen::MatrixXd v = va + vb - vab;
  v = 0.5 * (v + v.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  if (es.eigenvalues().minCoeff() < 0.0) {
    const Eigen::VectorXd floored = es.eigenvalues().cwiseMax(0.0);
    v = es.eigenvectors() * floored.asDiagonal() * es.eigenvectors().transpose();
    v = 0.5 * (v + v.transpose()).eval();
    out.eigenvalues_floored = true;
  }
  out.covariance = v;
  return out;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::vector<CoefficientRow> coefficient_table(const FitResult& fit, const Eigen::MatrixXd& covariance) {
  std::vector<CoefficientRow> rows;
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    const double est = fit.coefficients[j];
    const double se = std::sqrt(std::max(0.0, covariance(j, j)));
    const double z = se > 0.0 ? est / se : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({fit.names[k], est, se, z, se > 0.0 ? normal_two_sided_p(z) : std::numeric_limits<double>::quiet_NaN(),
                    est - kZ975 * se, est + kZ975 * se});
  }
  return rows;
}

double odds_change(double coef, double delta) { return std::expm1(coef * delta) * 100.0; }

std::pair<double, double> odds_change_ci(double coef_lower, double coef_upper, double delta) {
  const double a = odds_change(coef_lower, delta);
  const double b = odds_change(coef_upper, delta);
  return {std::min(a, b), std::max(a, b)};
}

double KmCurve::survival_at(double t) const {
  double s = 1.0;
  for (const auto& st : steps) {
    if (st.time > t) break;
    s = st.survival;
  }
  return s;
}

std::vector<KmCurve> kaplan_meier(std::span<const double> durations, std::span<const int> events,
                                  std::span<const std::string> groups, std::span<const double> entries) {
  if (durations.size() != events.size() || durations.size() != groups.size() ||
      (!entries.empty() && entries.size() != durations.size()))
    throw std::invalid_argument("kaplan_meier: input lengths differ");
  std::map<std::string, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 0.0) throw InputError("kaplan_meier: negative duration");
    by_group[groups[i]].push_back(i);
  }
  std::vector<KmCurve> curves;
  for (const auto& [name, idx] : by_group) {
    KmCurve curve{name, {}};
    std::map<double, std::size_t> event_counts;
    for (auto i : idx)
      if (events[i]) ++event_counts[durations[i]];
    double s = 1.0, greenwood = 0.0;
    for (const auto& [t, d] : event_counts) {
      std::size_t at_risk = 0;
      for (auto i : idx)
        if (durations[i] >= t && (entries.empty() || entries[i] <= t)) ++at_risk;
      s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      if (at_risk > d) greenwood += static_cast<double>(d) / (static_cast<double>(at_risk) * static_cast<double>(at_risk - d));
      KmStep step{t, at_risk, d, s, 0.0, s, s};
      if (s > 0.0 && s < 1.0) {
        step.std_error = s * std::sqrt(greenwood);
        const double se_ll = std::sqrt(greenwood) / std::abs(std::log(s));
        step.lower = std::pow(s, std::exp(kZ975 * se_ll));
        step.upper = std::pow(s, std::exp(-kZ975 * se_ll));
      }
      step.lower = std::clamp(step.lower, 0.0, 1.0);
      step.upper = std::clamp(step.upper, 0.0, 1.0);
      curve.steps.push_back(step);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

PairedTTest paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("paired_t_test: samples differ in length");
  if (x.size() < 2) throw InputError("paired_t_test: need at least 2 pairs");
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += x[i] - y[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i] - mean) * (x[i] - y[i] - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw NumericalError("paired_t_test: differences have zero variance");
  const double se = sd / std::sqrt(n);
  PairedTTest r{x.size(), mean, sd, mean / se, n - 1.0, 0.0, 0.0, 0.0};
  boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.ci_lower = mean - q * se;
  r.ci_upper = mean + q * se;
  return r;
}

QuadraticFit quadratic_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("quadratic_fit: x and y differ in length");
  std::set<double> distinct(x.begin(), x.end());
  if (distinct.size() < 3) throw NumericalError("quadratic_fit: need at least 3 distinct x values");
  const auto n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] - m;
    const Eigen::Vector3d row(1.0, u, u * u);
    a += row * row.transpose();
    b += row * y[i];
  }
  Eigen::LDLT<Eigen::Matrix3d> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericalError("quadratic_fit: rank-deficient design");
  const Eigen::Vector3d c = ldlt.solve(b);
  QuadraticFit fit;
  fit.c = c[2];
  fit.b = c[1] - 2.0 * c[2] * m;
  fit.a = c[0] - c[1] * m + c[2] * m * m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] - m;
    const double f = c[0] + c[1] * u + c[2] * u * u;
    fit.fitted.push_back(f);
    fit.residuals.push_back(y[i] - f);
  }
  return fit;
}

FitResult clustered_logit_simple(std::span<const double> y, std::span<const double> x,
                                 std::span<const std::int64_t> cluster) {
  if (y.size() != x.size() || y.size() != cluster.size())
    throw InputError("clustered_logit_simple: inputs differ in length");
  DataFrame df;
  df.add_column("y", std::vector<double>(y.begin(), y.end()));
  df.add_column("x", std::vector<double>(x.begin(), x.end()));
  std::vector<double> cl(cluster.size());
  for (std::size_t i = 0; i < cl.size(); ++i) cl[i] = static_cast<double>(cluster[i]);
  df.add_column("cluster", cl);
  ModelSpec spec;
  spec.response = "y";
  spec.covariates = {"x"};
  FitResult fit = fit_logit(df, spec);
  const auto ids = estimation_clusters(fit, df.column("cluster"));
  fit.covariance = cluster_robust_cov(fit, ids).covariance;
  return fit;
}

}  // namespace bubble
