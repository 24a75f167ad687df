#include "adhere/stats.hpp"

#include "adhere/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace adhere::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz. Converges fast for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

double log_beta_prefactor(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
         b * std::log1p(-x);
}

double softplus(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

struct IrlsState {
  double loglik = 0.0;
  double g0 = 0.0, g1 = 0.0;              // score
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;  // observed information
};

IrlsState evaluate(std::span<const LogisticRow> rows, double b0, double b1) {
  IrlsState s;
  for (const auto& r : rows) {
    const double eta = b0 + b1 * r.covariate;
    const double p = sigmoid(eta);
    const double resid = r.outcome - p;
    const double w = p * (1.0 - p);
    s.loglik += r.outcome * eta - softplus(eta);
    s.g0 += resid;
    s.g1 += resid * r.covariate;
    s.h00 += w;
    s.h01 += w * r.covariate;
    s.h11 += w * r.covariate * r.covariate;
  }
  return s;
}

void require_correlation_input(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::domain, "correlation inputs differ in length");
  if (x.size() < 3) throw Error(ErrorCode::domain, "correlation needs at least 3 points");
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::domain, "incomplete_beta arguments out of domain");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_beta_prefactor(x, a, b)) * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(log_beta_prefactor(x, a, b)) * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0) || !std::isfinite(df)) throw Error(ErrorCode::domain, "t distribution needs df > 0");
  if (!std::isfinite(t)) throw Error(ErrorCode::domain, "t statistic must be finite");
  if (t == 0.0) return 0.5;
  // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
  const double tail = 0.5 * incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
  return t > 0 ? tail : 1.0 - tail;
}

SampleMoments moments(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorCode::insufficient_data, "need at least 2 values");
  SampleMoments m;
  m.n = static_cast<int>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / m.n;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.sd = std::sqrt(ss / (m.n - 1));
  return m;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  WelchResult r{.a = moments(a), .b = moments(b)};
  const double va = r.a.sd * r.a.sd / r.a.n;
  const double vb = r.b.sd * r.b.sd / r.b.n;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (r.a.mean != r.b.mean) {
      throw Error(ErrorCode::degenerate_data, "both samples constant with different means");
    }
    r.t = 0.0;
    r.df = r.a.n + r.b.n - 2;
    r.p_value = 1.0;
    return r;
  }
  r.t = (r.a.mean - r.b.mean) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (r.a.n - 1) + vb * vb / (r.b.n - 1));
  r.p_value = std::min(1.0, 2.0 * student_t_sf(std::fabs(r.t), r.df));
  return r;
}

LogisticFit fit_logistic(std::span<const LogisticRow> rows) {
  if (rows.size() < 2) throw Error(ErrorCode::degenerate_data, "logistic fit needs at least 2 rows");
  double min_x[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double max_x[2] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  int positives = 0;
  for (const auto& r : rows) {
    if (r.outcome != 0 && r.outcome != 1) throw Error(ErrorCode::domain, "outcome must be 0 or 1");
    if (!std::isfinite(r.covariate)) throw Error(ErrorCode::domain, "covariate must be finite");
    positives += r.outcome;
    min_x[r.outcome] = std::min(min_x[r.outcome], r.covariate);
    max_x[r.outcome] = std::max(max_x[r.outcome], r.covariate);
  }
  const int n = static_cast<int>(rows.size());
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::degenerate_data, "outcome has a single class");
  }
  if (std::min(min_x[0], min_x[1]) == std::max(max_x[0], max_x[1])) {
    throw Error(ErrorCode::degenerate_data, "covariate is constant");
  }
  // With one covariate, (quasi-)complete separation means the class ranges
  // do not overlap; the MLE does not exist.
  if (max_x[0] <= min_x[1] || max_x[1] <= min_x[0]) {
    throw Error(ErrorCode::separation, "outcome classes are separated by the covariate");
  }

  const double ybar = static_cast<double>(positives) / n;
  double b0 = std::log(ybar / (1.0 - ybar));
  double b1 = 0.0;
  LogisticFit fit;
  IrlsState s = evaluate(rows, b0, b1);
  for (int it = 0; it < kMaxIrlsIterations; ++it) {
    if (std::max(std::fabs(s.g0), std::fabs(s.g1)) < kScoreTolerance) {
      fit.converged = true;
      break;
    }
    const double det = s.h00 * s.h11 - s.h01 * s.h01;
    if (!(det > 0.0)) throw Error(ErrorCode::separation, "information matrix is singular");
    const double d0 = (s.h11 * s.g0 - s.h01 * s.g1) / det;
    const double d1 = (s.h00 * s.g1 - s.h01 * s.g0) / det;
    double step = 1.0;
    IrlsState trial = evaluate(rows, b0 + d0, b1 + d1);
    // Near the optimum the log-likelihood changes less than its rounding error.
    const double slack = 1e-12 * (1.0 + std::fabs(s.loglik));
    for (int halving = 0; halving < 40 && trial.loglik < s.loglik - slack; ++halving) {
      step *= 0.5;
      trial = evaluate(rows, b0 + step * d0, b1 + step * d1);
    }
    b0 += step * d0;
    b1 += step * d1;
    s = trial;
    fit.iterations = it + 1;
    if (std::fabs(b1) > kSeparationSlope) {
      throw Error(ErrorCode::separation, "slope diverged; data are (nearly) separated");
    }
  }
  if (!fit.converged && std::max(std::fabs(s.g0), std::fabs(s.g1)) < kScoreTolerance) {
    fit.converged = true;
  }

  const double det = s.h00 * s.h11 - s.h01 * s.h01;
  fit.intercept = b0;
  fit.slope = b1;
  fit.slope_se = std::sqrt(s.h00 / det);
  fit.odds_ratio = std::exp(b1);
  fit.ci95_low = std::exp(b1 - kWaldZ * fit.slope_se);
  fit.ci95_high = std::exp(b1 + kWaldZ * fit.slope_se);
  fit.score_max_norm = std::max(std::fabs(s.g0), std::fabs(s.g1));
  return fit;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  require_correlation_input(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::undefined_correlation, "correlation undefined for zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  require_correlation_input(x, y);
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson_correlation(rx, ry);
}

}  // namespace adhere::stats
