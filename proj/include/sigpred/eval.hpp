#ifndef SIGPRED_EVAL_HPP
#define SIGPRED_EVAL_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigpred/core.hpp"

namespace sigpred {

enum class Method { FP, MC, SIGNN };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::FP: return "FP";
    case Method::MC: return "MC";
    case Method::SIGNN: return "SIGNN";
  }
  return "?";
}

/// One evaluated window for one method: per-step predicted mean and 2x2
/// position covariance against the true position.
struct PredictionOutcome {
  Method method = Method::FP;
  int window_id = 0;
  struct Step {
    Vec2 mean{0.0, 0.0};
    Eigen::Matrix2d cov2 = Eigen::Matrix2d::Zero();
    Vec2 truth{0.0, 0.0};
  };
  std::vector<Step> steps;
};

inline constexpr double kCovRegularization = 1e-9;  // m^2, epsilon * I before inversion

/// sqrt(e^T Sigma^-1 e) with epsilon-regularized Sigma.
inline double mahalanobis(const Vec2& error, const Eigen::Matrix2d& cov2) {
  const Eigen::Matrix2d reg =
      cov2 + kCovRegularization * Eigen::Matrix2d::Identity();
  const Eigen::VectorXd x = solve_spd(reg, error);
  const double q = error.dot(x);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

enum class CoverageMode { Mahalanobis, PerAxis };

/// Expected coverage of a calibrated 2D Gaussian at k sigma, per mode.
inline double expected_coverage(CoverageMode mode, double k) {
  if (mode == CoverageMode::Mahalanobis) {
    return 100.0 * (1.0 - std::exp(-0.5 * k * k));  // chi with 2 dof
  }
  const double axis = std::erf(k / std::sqrt(2.0));
  return 100.0 * axis * axis;
}

inline bool inside_sigma(const Vec2& error, const Eigen::Matrix2d& cov2, double k,
                         CoverageMode mode) {
  if (mode == CoverageMode::Mahalanobis) {
    return mahalanobis(error, cov2) <= k;
  }
  const double sx = std::sqrt(cov2(0, 0) + kCovRegularization);
  const double sy = std::sqrt(cov2(1, 1) + kCovRegularization);
  return std::abs(error.x()) <= k * sx && std::abs(error.y()) <= k * sy;
}

/// Percent of outcomes at the given horizon step (1-based) inside the
/// k-sigma region.
inline double sigma_coverage(const std::vector<PredictionOutcome>& outcomes,
                             int horizon_step, double k,
                             CoverageMode mode = CoverageMode::Mahalanobis) {
  int n = 0, inside = 0;
  for (const auto& o : outcomes) {
    if (horizon_step < 1 || horizon_step > static_cast<int>(o.steps.size())) continue;
    const auto& s = o.steps[static_cast<size_t>(horizon_step) - 1];
    ++n;
    if (inside_sigma(s.mean - s.truth, s.cov2, k, mode)) ++inside;
  }
  if (n == 0) throw std::invalid_argument("sigma_coverage: empty selection");
  return 100.0 * static_cast<double>(inside) / static_cast<double>(n);
}

/// Type-7 empirical quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Quartiles {
  double p25 = 0.0, median = 0.0, p75 = 0.0;
  int n = 0;
};

inline Quartiles mahalanobis_quantiles(const std::vector<PredictionOutcome>& outcomes,
                                       int horizon_step) {
  std::vector<double> d;
  for (const auto& o : outcomes) {
    if (horizon_step < 1 || horizon_step > static_cast<int>(o.steps.size())) continue;
    const auto& s = o.steps[static_cast<size_t>(horizon_step) - 1];
    d.push_back(mahalanobis(s.mean - s.truth, s.cov2));
  }
  if (d.empty()) throw std::invalid_argument("mahalanobis_quantiles: empty selection");
  return Quartiles{quantile(d, 0.25), quantile(d, 0.5), quantile(d, 0.75),
                   static_cast<int>(d.size())};
}

struct DisplacementErrors {
  double ade = 0.0;
  double fde = 0.0;
};

inline DisplacementErrors displacement_errors(
    const std::vector<PredictionOutcome>& outcomes) {
  double sum = 0.0, final_sum = 0.0;
  long n = 0, n_final = 0;
  for (const auto& o : outcomes) {
    if (o.steps.empty()) continue;
    for (const auto& s : o.steps) {
      sum += (s.mean - s.truth).norm();
      ++n;
    }
    final_sum += (o.steps.back().mean - o.steps.back().truth).norm();
    ++n_final;
  }
  if (n == 0) throw std::invalid_argument("displacement_errors: empty input");
  return DisplacementErrors{sum / static_cast<double>(n),
                            final_sum / static_cast<double>(n_final)};
}

struct CoverageRow {
  Method method = Method::FP;
  double horizon = 0.0;  // s; 0 marks the aggregate row
  bool aggregate = false;
  double pct_1sigma = 0.0;
  double pct_3sigma = 0.0;
  int n = 0;
};

/// Per-(method, horizon) coverage plus one aggregate row per method, over
/// every step present in the outcomes.
inline std::vector<CoverageRow> coverage_table(
    const std::vector<PredictionOutcome>& outcomes,
    CoverageMode mode = CoverageMode::Mahalanobis) {
  std::map<Method, std::vector<const PredictionOutcome*>> by_method;
  size_t max_steps = 0;
  for (const auto& o : outcomes) {
    by_method[o.method].push_back(&o);
    max_steps = std::max(max_steps, o.steps.size());
  }
  if (by_method.empty()) throw std::invalid_argument("coverage_table: no outcomes");

  std::vector<CoverageRow> rows;
  for (const auto& [method, list] : by_method) {
    long agg_n = 0, agg_in1 = 0, agg_in3 = 0;
    for (size_t h = 1; h <= max_steps; ++h) {
      int n = 0, in1 = 0, in3 = 0;
      for (const auto* o : list) {
        if (h > o->steps.size()) continue;
        const auto& s = o->steps[h - 1];
        const Vec2 e = s.mean - s.truth;
        ++n;
        if (inside_sigma(e, s.cov2, 1.0, mode)) ++in1;
        if (inside_sigma(e, s.cov2, 3.0, mode)) ++in3;
      }
      if (n == 0) continue;
      rows.push_back(CoverageRow{method, static_cast<double>(h) * 0.2, false,
                                 100.0 * in1 / n, 100.0 * in3 / n, n});
      agg_n += n;
      agg_in1 += in1;
      agg_in3 += in3;
    }
    rows.push_back(CoverageRow{method, 0.0, true,
                               100.0 * static_cast<double>(agg_in1) / static_cast<double>(agg_n),
                               100.0 * static_cast<double>(agg_in3) / static_cast<double>(agg_n),
                               static_cast<int>(agg_n)});
  }
  return rows;
}

namespace detail {

/// Decimal with 6 significant digits, stable across runs.
inline std::string fmt6(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace detail

inline void write_coverage_csv(const std::vector<CoverageRow>& rows, std::ostream& os) {
  os << "method,horizon_s,pct_1sigma,pct_3sigma,n\n";
  for (const auto& r : rows) {
    os << method_name(r.method) << ","
       << (r.aggregate ? std::string("all") : detail::fmt6(r.horizon)) << ","
       << detail::fmt6(r.pct_1sigma) << "," << detail::fmt6(r.pct_3sigma) << ","
       << r.n << "\n";
  }
}

inline void render_coverage_table(const std::vector<CoverageRow>& rows,
                                  CoverageMode mode, std::ostream& os) {
  const double exp1 = expected_coverage(mode, 1.0);
  const double exp3 = expected_coverage(mode, 3.0);
  os << std::left << std::setw(8) << "method" << std::setw(10) << "horizon"
     << std::setw(22) << "inside 1s (delta)" << std::setw(22)
     << "inside 3s (delta)" << "n\n";
  for (const auto& r : rows) {
    std::ostringstream h;
    if (r.aggregate) h << "all";
    else h << detail::fmt6(r.horizon) << "s";
    std::ostringstream c1, c3;
    c1 << detail::fmt6(r.pct_1sigma) << " (" << detail::fmt6(r.pct_1sigma - exp1) << ")";
    c3 << detail::fmt6(r.pct_3sigma) << " (" << detail::fmt6(r.pct_3sigma - exp3) << ")";
    os << std::left << std::setw(8) << method_name(r.method) << std::setw(10)
       << h.str() << std::setw(22) << c1.str() << std::setw(22) << c3.str()
       << r.n << "\n";
  }
}

inline void write_mahalanobis_csv(const std::vector<PredictionOutcome>& outcomes,
                                  std::ostream& os) {
  std::map<Method, std::vector<const PredictionOutcome*>> by_method;
  size_t max_steps = 0;
  for (const auto& o : outcomes) {
    by_method[o.method].push_back(&o);
    max_steps = std::max(max_steps, o.steps.size());
  }
  os << "method,horizon_s,p25,median,p75,n\n";
  for (const auto& [method, list] : by_method) {
    for (size_t h = 1; h <= max_steps; ++h) {
      std::vector<double> d;
      for (const auto* o : list) {
        if (h > o->steps.size()) continue;
        const auto& s = o->steps[h - 1];
        d.push_back(mahalanobis(s.mean - s.truth, s.cov2));
      }
      if (d.empty()) continue;
      os << method_name(method) << "," << detail::fmt6(static_cast<double>(h) * 0.2)
         << "," << detail::fmt6(quantile(d, 0.25)) << ","
         << detail::fmt6(quantile(d, 0.5)) << "," << detail::fmt6(quantile(d, 0.75))
         << "," << d.size() << "\n";
    }
  }
}

inline void write_errors_csv(const std::vector<PredictionOutcome>& outcomes,
                             std::ostream& os) {
  std::map<Method, std::vector<PredictionOutcome>> by_method;
  for (const auto& o : outcomes) by_method[o.method].push_back(o);
  os << "method,ade,fde\n";
  for (const auto& [method, list] : by_method) {
    const auto e = displacement_errors(list);
    os << method_name(method) << "," << detail::fmt6(e.ade) << ","
       << detail::fmt6(e.fde) << "\n";
  }
}

}  // namespace sigpred

#endif  // SIGPRED_EVAL_HPP
