#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "bubble/io.hpp"
#include "bubble/stats.hpp"

using namespace bubble;

namespace {

struct Simulated {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

// Bernoulli-logit rows with an intercept column and standard normal covariates.
Simulated simulate(std::size_t n, const Eigen::VectorXd& beta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  Simulated s{Eigen::MatrixXd(static_cast<Eigen::Index>(n), beta.size()), Eigen::VectorXd(static_cast<Eigen::Index>(n))};
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    s.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < beta.size(); ++j) s.x(i, j) = nd(rng);
    const double eta = s.x.row(i).dot(beta);
    s.y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return s;
}

std::vector<std::string> names(Eigen::Index p) {
  std::vector<std::string> out = {"(Intercept)"};
  for (Eigen::Index j = 1; j < p; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

// Direct summation of the clustered sandwich, written without the library's helpers.
Eigen::MatrixXd oracle_cluster_cov(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                   const std::vector<std::int64_t>& cluster) {
  const auto n = x.rows(), p = x.cols();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
  std::map<std::int64_t, Eigen::VectorXd> sums;
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) eta += x(i, j) * beta(j);
    const double pr = 1.0 / (1.0 + std::exp(-eta));
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) info(a, b) += pr * (1.0 - pr) * x(i, a) * x(i, b);
    auto& s = sums.try_emplace(cluster[static_cast<std::size_t>(i)], Eigen::VectorXd::Zero(p)).first->second;
    for (Eigen::Index j = 0; j < p; ++j) s(j) += x(i, j) * (y(i) - pr);
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [_, s] : sums)
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) meat(a, b) += s(a) * s(b);
  const double g = static_cast<double>(sums.size());
  const Eigen::MatrixXd bread = info.inverse();
  return g / (g - 1.0) * bread * meat * bread;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("intercept-only fit equals the log odds of the event rate") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(400, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(400);
  for (int i = 0; i < 100; ++i) y(i * 4) = 1.0;
  const auto fit = fit_logit(x, y, {"(Intercept)"});
  CHECK(std::abs(fit.coefficients(0) - std::log(1.0 / 3.0)) < 1e-10);
  CHECK(fit.converged);
}

TEST_CASE("analytic gradient matches finite differences") {
  Eigen::VectorXd beta(3);
  beta << -0.5, 0.8, -1.2;
  const auto s = simulate(500, beta, 1);
  Eigen::VectorXd at(3);
  at << 0.1, -0.3, 0.7;
  const auto g = logit_gradient(s.x, s.y, at);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double h = 1e-5;
    Eigen::VectorXd up = at, down = at;
    up(j) += h;
    down(j) -= h;
    const double fd = (logit_log_likelihood(s.x, s.y, up) - logit_log_likelihood(s.x, s.y, down)) / (2.0 * h);
    CHECK(std::abs(fd - g(j)) / std::abs(g(j)) < 1e-6);
  }
}

TEST_CASE("planted coefficients are recovered") {
  Eigen::VectorXd beta(3);
  beta << -1.0, -0.2, -0.28;
  const auto s = simulate(100'000, beta, 2);
  const auto fit = fit_logit(s.x, s.y, names(3));
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(fit.coefficients(j) - beta(j)) < 3.0 * std::sqrt(fit.covariance(j, j)));
  CHECK(fit.gradient_max_norm < 1e-8);
}

TEST_CASE("null covariate stays within noise") {
  Eigen::VectorXd beta(2);
  beta << 0.3, 0.0;
  const auto s = simulate(10'000, beta, 3);
  const auto fit = fit_logit(s.x, s.y, names(2));
  CHECK(std::abs(fit.coefficients(1)) < 3.0 * std::sqrt(fit.covariance(1, 1)));
}

TEST_CASE("degenerate responses") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 1);
  CHECK_THROWS_AS(fit_logit(x, Eigen::VectorXd::Zero(5), {"(Intercept)"}), NumericalError);
  CHECK_THROWS_AS(fit_logit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), {"(Intercept)"}), InputError);
  Eigen::VectorXd y(5);
  y << 0, 1, 2, 0, 1;
  CHECK_THROWS_AS(fit_logit(x, y, {"(Intercept)"}), InputError);
}

TEST_CASE("collinear and separating columns are dropped") {
  Eigen::VectorXd beta(2);
  beta << 0.0, 1.0;
  auto s = simulate(300, beta, 4);
  SUBCASE("collinear") {
    Eigen::MatrixXd x(s.x.rows(), 3);
    x << s.x, 2.0 * s.x.col(1);
    const auto fit = fit_logit(x, s.y, {"(Intercept)", "a", "twice_a"});
    REQUIRE(fit.dropped_columns.size() == 1);
    CHECK(fit.dropped_columns[0].name == "twice_a");
    CHECK(fit.dropped_columns[0].reason == "collinear");
    CHECK_FALSE(fit.index_of("twice_a").has_value());
  }
  SUBCASE("separation") {
    Eigen::MatrixXd x(s.x.rows(), 3);
    Eigen::VectorXd sep = 2.0 * s.y.array() - 1.0;
    x << s.x, sep;
    const auto fit = fit_logit(x, s.y, {"(Intercept)", "a", "sep"});
    REQUIRE(fit.dropped_columns.size() == 1);
    CHECK(fit.dropped_columns[0].name == "sep");
    CHECK(fit.dropped_columns[0].reason == "separation");
    CHECK(fit.converged);
  }
}

TEST_CASE("data frame fits expand fixed effects and screen perfect prediction") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  std::vector<double> y, x, g, miss;
  for (int i = 0; i < 600; ++i) {
    const int level = i % 4;
    const double xi = nd(rng);
    double yi = u(rng) < 1.0 / (1.0 + std::exp(-(0.5 * xi - 0.3 * level))) ? 1.0 : 0.0;
    if (level == 3) yi = 0.0;  // never an event
    y.push_back(yi);
    x.push_back(i == 5 ? std::nan("") : xi);
    g.push_back(static_cast<double>(level));
  }
  DataFrame df;
  df.add_column("y", y);
  df.add_column("x", x);
  df.add_column("g", g);
  ModelSpec spec;
  spec.response = "y";
  spec.covariates = {"x"};
  spec.fixed_effects = {"g"};
  const auto fit = fit_logit(df, spec);
  CHECK(fit.rows_missing == 1);
  CHECK(fit.rows_perfect_prediction == 150);
  CHECK(fit.n_obs == 449);
  CHECK(fit.index_of("g[1]").has_value());
  CHECK(fit.index_of("g[2]").has_value());
  CHECK_FALSE(fit.index_of("g[0]").has_value());
  CHECK_FALSE(fit.index_of("g[3]").has_value());
  CHECK(fit.coef("x") > 0.0);
  CHECK(fit.rows.size() == fit.n_obs);
  spec.covariates = {"nope"};
  CHECK_THROWS_AS(fit_logit(df, spec), InputError);
}

TEST_CASE("clustered covariance identities") {
  Eigen::VectorXd beta(3);
  beta << -0.4, 0.9, -0.6;
  const auto s = simulate(200, beta, 7);
  const auto fit = fit_logit(s.x, s.y, names(3));
  std::vector<std::int64_t> singletons(200), a(200);
  for (std::size_t i = 0; i < 200; ++i) {
    singletons[i] = static_cast<std::int64_t>(i);
    a[i] = static_cast<std::int64_t>(i % 9);
  }
  SUBCASE("singleton clusters reduce to the robust sandwich") {
    const auto v = two_way_clustered_cov(fit, singletons, singletons).covariance;
    const auto r = robust_sandwich(fit).covariance;
    CHECK((v - r).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("identical dimensions reduce to one-way") {
    const auto v = two_way_clustered_cov(fit, a, a).covariance;
    const auto va = cluster_robust_cov(fit, a).covariance;
    CHECK((v - va).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("one-way matches direct summation") {
    const auto va = cluster_robust_cov(fit, a).covariance;
    CHECK((va - oracle_cluster_cov(s.x, s.y, fit.coefficients, a)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("a single cluster warns") {
    const std::vector<std::int64_t> one(200, 1);
    CHECK_FALSE(cluster_robust_cov(fit, one).warnings.empty());
  }
}

TEST_CASE("twelve-observation two-way toy against direct summation") {
  Eigen::MatrixXd x(12, 2);
  Eigen::VectorXd y(12);
  const double xs[12] = {0.1, -0.1, 0.6, 0.1, -0.5, 0.4, 1.3, 0.9, -0.7, -1.3, -0.6, 0.0};
  const double ys[12] = {0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0, 0};
  std::vector<std::int64_t> a(12), b(12), ab(12);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = xs[i];
    y(i) = ys[i];
    a[static_cast<std::size_t>(i)] = i % 3;
    b[static_cast<std::size_t>(i)] = (i / 2) % 4;
    ab[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] * 10 + b[static_cast<std::size_t>(i)];
  }
  const auto fit = fit_logit(x, y, names(2));
  const Eigen::MatrixXd expected = oracle_cluster_cov(x, y, fit.coefficients, a) +
                                   oracle_cluster_cov(x, y, fit.coefficients, b) -
                                   oracle_cluster_cov(x, y, fit.coefficients, ab);
  const auto v = two_way_clustered_cov(fit, a, b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(expected);
  REQUIRE(es.eigenvalues().minCoeff() > 0.0);  // the toy needs no eigenvalue floor
  CHECK_FALSE(v.eigenvalues_floored);
  CHECK((v.covariance - expected).cwiseAbs().maxCoeff() < 1e-10);
  // independently computed reference fit for this toy
  CHECK(fit.coefficients(0) == doctest::Approx(0.33551018).epsilon(1e-7));
  CHECK(fit.coefficients(1) == doctest::Approx(0.34469715).epsilon(1e-7));
}

TEST_CASE("an indefinite two-way difference is floored") {
  Eigen::MatrixXd x(12, 2);
  Eigen::VectorXd y(12);
  const double xs[12] = {-1.2, 0.4, 0.9, -0.3, 1.5, -0.8, 0.1, 2.0, -1.7, 0.6, -0.2, 1.1};
  const double ys[12] = {0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1};
  std::vector<std::int64_t> a(12), b(12);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = xs[i];
    y(i) = ys[i];
    a[static_cast<std::size_t>(i)] = i % 3;
    b[static_cast<std::size_t>(i)] = (i / 2) % 4;
  }
  const auto v = two_way_clustered_cov(fit_logit(x, y, names(2)), a, b);
  CHECK(v.eigenvalues_floored);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v.covariance);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  CHECK((v.covariance - v.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("odds change transform") {
  CHECK(odds_change(-0.277, -2.0) == doctest::Approx(74.02).epsilon(0.0005 / 74.02));
  CHECK(odds_change(0.0, 5.0) == 0.0);
  const auto [lo, hi] = odds_change_ci(-0.373, -0.181, -2.0);
  CHECK(std::abs(lo - 43.61) < 0.05);
  CHECK(std::abs(hi - 110.85) < 0.05);
}

TEST_CASE("coefficient table") {
  CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
  FitResult fit;
  fit.names = {"b"};
  fit.coefficients = Eigen::VectorXd::Constant(1, -0.5);
  const auto t = coefficient_table(fit, Eigen::MatrixXd::Constant(1, 1, 0.04));
  CHECK(t[0].std_error == doctest::Approx(0.2));
  CHECK(t[0].z == doctest::Approx(-2.5));
  CHECK(t[0].ci_lower == doctest::Approx(-0.5 - 1.959963984540054 * 0.2));
}

TEST_CASE("kaplan-meier") {
  auto run = [](std::vector<double> t, std::vector<int> e) {
    std::vector<std::string> g(t.size(), "all");
    return kaplan_meier(t, e, g).at(0);
  };
  SUBCASE("no events") {
    const auto c = run({1, 2, 3}, {0, 0, 0});
    CHECK(c.survival_at(10.0) == 1.0);
  }
  SUBCASE("no censoring gives the empirical survival") {
    const auto c = run({1, 2, 3}, {1, 1, 1});
    CHECK(c.survival_at(1) == doctest::Approx(2.0 / 3.0));
    CHECK(c.survival_at(2) == doctest::Approx(1.0 / 3.0));
    CHECK(c.survival_at(3) == 0.0);
    CHECK(c.survival_at(0.5) == 1.0);
  }
  SUBCASE("one censored subject") {
    const auto c = run({1, 2, 3}, {1, 0, 1});
    REQUIRE(c.steps.size() == 2);
    CHECK(std::abs(c.steps[0].survival - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(c.steps[0].std_error - (2.0 / 3.0) * std::sqrt(1.0 / 6.0)) < 1e-12);
    CHECK(c.steps[1].survival == 0.0);
    CHECK(c.steps[1].at_risk == 1);
  }
  SUBCASE("left truncation shrinks the risk set") {
    const std::vector<double> t = {2, 3, 3}, entry = {0, 2.5, 0};
    const std::vector<int> e = {1, 1, 0};
    const std::vector<std::string> g(3, "all");
    const auto c = kaplan_meier(t, e, g, entry).at(0);
    CHECK(c.steps[0].at_risk == 2);
    CHECK(c.steps[1].at_risk == 2);
  }
  SUBCASE("bands stay in the unit interval and matches 1 - ecdf") {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> d(1, 20);
    std::vector<double> t(300);
    for (auto& v : t) v = d(rng);
    const auto c = run(t, std::vector<int>(300, 1));
    for (const auto& s : c.steps) {
      CHECK(s.lower >= 0.0);
      CHECK(s.upper <= 1.0);
      CHECK(s.lower <= s.survival);
      CHECK(s.survival <= s.upper);
      const double ecdf = static_cast<double>(std::count_if(t.begin(), t.end(), [&](double v) { return v <= s.time; })) / 300.0;
      CHECK(s.survival == doctest::Approx(1.0 - ecdf).epsilon(1e-12));
    }
  }
  SUBCASE("negative duration") { CHECK_THROWS_AS(run({-1.0}, {1}), InputError); }
}

TEST_CASE("paired t-test") {
  const std::vector<double> x = {2.0, 4.0, 6.0}, y = {1.0, 2.0, 3.0};
  const auto t = paired_t_test(x, y);
  CHECK(t.mean_difference == doctest::Approx(2.0));
  CHECK(t.sd_difference == doctest::Approx(1.0));
  CHECK(t.t == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(t.df == 2.0);
  // two degrees of freedom: two-sided p = 1 - t / sqrt(2 + t^2)
  CHECK(t.p_value == doctest::Approx(1.0 - t.t / std::sqrt(2.0 + t.t * t.t)).epsilon(1e-10));
  CHECK_THROWS_AS(paired_t_test(x, x), NumericalError);
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{0.0}), InputError);
}

TEST_CASE("quadratic fit") {
  SUBCASE("exact quadratic") {
    std::vector<double> x, y;
    for (int i = -5; i <= 3; ++i) {
      x.push_back(i);
      y.push_back(1.5 - 0.5 * i + 0.25 * i * i);
    }
    const auto f = quadratic_fit(x, y);
    for (double r : f.residuals) CHECK(std::abs(r) < 1e-9);
    CHECK(f.c == doctest::Approx(0.25));
  }
  SUBCASE("constant") {
    const std::vector<double> x = {0, 1, 2, 3}, y(4, 2.0);
    const auto f = quadratic_fit(x, y);
    CHECK(f.a == doctest::Approx(2.0));
    CHECK(std::abs(f.b) < 1e-12);
    CHECK(std::abs(f.c) < 1e-12);
  }
  SUBCASE("pseudoinverse oracle") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(30), y(30);
      Eigen::MatrixXd v(30, 3);
      Eigen::VectorXd yy(30);
      for (int i = 0; i < 30; ++i) {
        x[static_cast<std::size_t>(i)] = -15 + i;
        y[static_cast<std::size_t>(i)] = nd(rng) * 5.0 + 0.1 * i * i;
        v(i, 0) = 1.0;
        v(i, 1) = x[static_cast<std::size_t>(i)];
        v(i, 2) = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        yy(i) = y[static_cast<std::size_t>(i)];
      }
      const Eigen::VectorXd coef = v.completeOrthogonalDecomposition().pseudoInverse() * yy;
      const auto f = quadratic_fit(x, y);
      CHECK(std::abs(f.a - coef(0)) < 1e-8);
      CHECK(std::abs(f.b - coef(1)) < 1e-8);
      CHECK(std::abs(f.c - coef(2)) < 1e-8);
    }
  }
  SUBCASE("too few distinct points") {
    CHECK_THROWS_AS(quadratic_fit(std::vector<double>{1, 1, 2}, std::vector<double>{0, 1, 2}), NumericalError);
  }
}

TEST_CASE("simple clustered logit") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u;
  std::vector<double> y, x;
  std::vector<std::int64_t> cl;
  for (int i = 0; i < 400; ++i) {
    const double xi = u(rng);
    x.push_back(xi);
    y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-(-1.8 + 2.0 * xi))) ? 1.0 : 0.0);
    cl.push_back(i / 5);
  }
  SUBCASE("slope follows the generating mechanism") {
    const auto fit = clustered_logit_simple(y, x, cl);
    CHECK(fit.coefficients.size() == 2);
    CHECK(fit.coefficients(1) > 0.0);
  }
  SUBCASE("constant covariate leaves the intercept-only model") {
    const std::vector<double> c(x.size(), 0.5);
    const auto fit = clustered_logit_simple(y, c, cl);
    CHECK(fit.coefficients.size() == 1);
    REQUIRE(fit.dropped_columns.size() == 1);
  }
}

}  // TEST_SUITE
