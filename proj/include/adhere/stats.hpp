#pragma once

#include <span>
#include <string>
#include <vector>

namespace adhere::stats {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// evaluated with a Lentz continued fraction.
double incomplete_beta(double x, double a, double b);

/// P(T > t) for Student's t with `df` degrees of freedom. Throws
/// Error(domain) when df <= 0 or t is not finite.
double student_t_sf(double t, double df);

struct SampleMoments {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
};

/// Throws Error(insufficient_data) for fewer than two values.
SampleMoments moments(std::span<const double> values);

struct WelchResult {
  SampleMoments a;
  SampleMoments b;
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
};

inline constexpr const char* kWelchTestName = "Welch two-sample t-test (unequal variances, two-sided)";

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
/// Two constant samples with equal means give t = 0, p = 1; with different
/// means the test is undefined and Error(degenerate_data) is thrown.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct LogisticRow {
  double covariate = 0.0;
  int outcome = 0;  // 0 or 1
};

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double odds_ratio = 1.0;
  double ci95_low = 1.0;
  double ci95_high = 1.0;
  bool converged = false;
  int iterations = 0;
  double score_max_norm = 0.0;  // at the returned estimate
};

inline constexpr double kScoreTolerance = 1e-8;
inline constexpr int kMaxIrlsIterations = 50;
inline constexpr double kSeparationSlope = 30.0;
inline constexpr double kWaldZ = 1.96;
inline constexpr const char* kLogisticModelName =
    "univariate logistic regression (IRLS), Wald 95% CI";

/// Maximum-likelihood logistic regression of outcome on one covariate by
/// iteratively reweighted least squares with step halving.
/// Throws Error(degenerate_data) for a single outcome class, a constant
/// covariate or fewer than two rows, and Error(separation) when the classes
/// are separable by the covariate or the slope diverges.
LogisticFit fit_logistic(std::span<const LogisticRow> rows);

/// Mid-ranks (1-based, ties share their average rank).
std::vector<double> midranks(std::span<const double> values);

/// Throws Error(domain) on length mismatch or fewer than three points and
/// Error(undefined_correlation) when either side has zero variance.
double pearson_correlation(std::span<const double> x, std::span<const double> y);
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace adhere::stats
