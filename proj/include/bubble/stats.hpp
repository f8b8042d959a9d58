#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bubble {

// Named numeric columns of equal length. NaN marks a missing value.
class DataFrame {
 public:
  std::size_t rows() const { return rows_; }
  void add_column(const std::string& name, std::vector<double> values);
  bool has(const std::string& name) const { return columns_.contains(name); }
  const std::vector<double>& column(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::size_t rows_ = 0;
  std::map<std::string, std::vector<double>> columns_;
};

struct ModelSpec {
  std::string response;
  std::vector<std::string> covariates;
  std::vector<std::string> fixed_effects;  // categorical columns expanded to dummies, first level dropped
  bool intercept = true;
  double tol = 1e-10;                      // on the max-norm of the log-likelihood gradient
  int max_iterations = 200;
  double separation_threshold = 30.0;      // |beta| beyond this marks a diverging column
  double separation_max_se = 1e4;          // so does a standard error beyond this at convergence
};

struct DroppedColumn {
  std::string name;
  std::string reason;  // "collinear", "separation", "perfect prediction"
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;   // inverse observed information (model-based)
  Eigen::MatrixXd scores;       // n_obs x p, rows x_i (y_i - p_i)
  double log_likelihood = 0.0;
  std::size_t n_obs = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  std::vector<DroppedColumn> dropped_columns;
  std::size_t rows_missing = 0;          // dropped for missing values
  std::size_t rows_perfect_prediction = 0;
  std::vector<std::size_t> rows;         // input row index of each estimation row

  std::optional<std::size_t> index_of(const std::string& name) const;
  double coef(const std::string& name) const;
};

// Newton-Raphson (IRLS) with step halving. Throws InputError for an empty sample and
// NumericalError for a constant response or non-convergence.
FitResult fit_logit(const DataFrame& data, const ModelSpec& spec);
FitResult fit_logit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                    const ModelSpec& options = {});

// Log-likelihood and gradient of the Bernoulli-logit model at beta.
double logit_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::VectorXd logit_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

// Values of a column at the fit's estimation rows.
std::vector<std::int64_t> estimation_clusters(const FitResult& fit, const std::vector<double>& column);

struct ClusterOptions {
  bool small_sample_correction = true;  // G/(G-1) per clustering dimension
};

struct ClusteredCovariance {
  Eigen::MatrixXd covariance;
  std::vector<std::string> warnings;
  bool eigenvalues_floored = false;
};

// One-way cluster-robust sandwich B (sum_g s_g s_g') B.
ClusteredCovariance cluster_robust_cov(const FitResult& fit, std::span<const std::int64_t> clusters,
                                       ClusterOptions opts = {});
// Every observation its own cluster.
ClusteredCovariance robust_sandwich(const FitResult& fit, ClusterOptions opts = {});
// V_A + V_B - V_{A,B}, negative eigenvalues floored at zero.
ClusteredCovariance two_way_clustered_cov(const FitResult& fit, std::span<const std::int64_t> cluster_a,
                                          std::span<const std::int64_t> cluster_b, ClusterOptions opts = {});

struct CoefficientRow {
  std::string name;
  double estimate;
  double std_error;
  double z;
  double p_value;
  double ci_lower;
  double ci_upper;
};
// Wald inference with normal reference distribution, 95% intervals.
std::vector<CoefficientRow> coefficient_table(const FitResult& fit, const Eigen::MatrixXd& covariance);

// Percent change in odds for a change of delta in the covariate: (exp(coef*delta)-1)*100.
double odds_change(double coef, double delta);
// Interval endpoints mapped through odds_change, returned in ascending order.
std::pair<double, double> odds_change_ci(double coef_lower, double coef_upper, double delta);

struct KmStep {
  double time;
  std::size_t at_risk;
  std::size_t events;
  double survival;
  double std_error;  // Greenwood
  double lower;
  double upper;
};

struct KmCurve {
  std::string group;
  std::vector<KmStep> steps;  // one per distinct event time
  double survival_at(double t) const;
};

// Product-limit estimate per group with Greenwood variance and log-log 95% bands.
// With entries, a subject is at risk at t when entry <= t <= duration (left truncation).
std::vector<KmCurve> kaplan_meier(std::span<const double> durations, std::span<const int> events,
                                  std::span<const std::string> groups, std::span<const double> entries = {});

struct PairedTTest {
  std::size_t n;
  double mean_difference;
  double sd_difference;
  double t;
  double df;
  double p_value;
  double ci_lower;
  double ci_upper;
};
PairedTTest paired_t_test(std::span<const double> x, std::span<const double> y);

struct QuadraticFit {
  double a = 0.0, b = 0.0, c = 0.0;  // y = a + b x + c x^2
  std::vector<double> fitted;
  std::vector<double> residuals;
  double operator()(double x) const { return a + b * x + c * x * x; }
};
QuadraticFit quadratic_fit(std::span<const double> x, std::span<const double> y);

// Intercept + slope logit with one-way cluster-robust covariance (stored in the returned
// fit's covariance). A constant x is dropped, leaving the intercept-only model.
FitResult clustered_logit_simple(std::span<const double> y, std::span<const double> x,
                                 std::span<const std::int64_t> cluster);

double normal_two_sided_p(double z);

}  // namespace bubble
