#ifndef SIGPRED_CORE_HPP
#define SIGPRED_CORE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sigpred {

using Vec2 = Eigen::Vector2d;
using Mat = Eigen::MatrixXd;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

inline constexpr int kStateDim = 6;  // x, y, vx, vy, theta, omega

/// Malformed or missing input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure (lost positive definiteness, non-finite results).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool is_finite(const Mat& m) { return m.allFinite(); }

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

/// Normalizes an angle into (-pi, pi].
inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// One pedestrian's kinematic state in the world frame.
/// Units: position m, velocity m/s, heading rad in (-pi, pi], angular_rate rad/s.
struct AgentState {
  Vec2 position{0.0, 0.0};
  Vec2 velocity{0.0, 0.0};
  double heading = 0.0;
  double angular_rate = 0.0;

  AgentState() = default;
  AgentState(const Vec2& p, const Vec2& v, double th, double om)
      : position(p), velocity(v), heading(normalize_angle(th)), angular_rate(om) {
    if (!position.allFinite() || !velocity.allFinite() ||
        !std::isfinite(heading) || !std::isfinite(angular_rate)) {
      throw std::invalid_argument("AgentState: non-finite field");
    }
  }
};

/// Component order of the flattened state vector: x, y, vx, vy, theta, omega.
inline Vector6d flatten_state(const AgentState& s) {
  Vector6d v;
  v << s.position.x(), s.position.y(), s.velocity.x(), s.velocity.y(),
      s.heading, s.angular_rate;
  return v;
}

inline AgentState unflatten_state(const Eigen::VectorXd& v) {
  if (v.size() != kStateDim) {
    throw std::invalid_argument("unflatten_state: expected length 6, got " +
                                std::to_string(v.size()));
  }
  return AgentState(Vec2(v[0], v[1]), Vec2(v[2], v[3]), v[4], v[5]);
}

/// Checked matrix product.
inline Mat mat_mul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream os;
    os << "mat_mul: dimension mismatch " << a.rows() << "x" << a.cols()
       << " * " << b.rows() << "x" << b.cols();
    throw std::invalid_argument(os.str());
  }
  return a * b;
}

/// Returns (m + m^T)/2.
inline Mat symmetrize(const Mat& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("symmetrize: matrix is not square");
  }
  return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  return es.eigenvalues().minCoeff();
}

inline bool is_psd(const Mat& m, double tol = 1e-9) {
  return min_eigenvalue(m) >= -tol;
}

/// Solves sigma * x = v for symmetric positive definite sigma via Cholesky.
inline Eigen::VectorXd solve_spd(const Mat& sigma, const Eigen::VectorXd& v) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != v.size()) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "solve_spd: matrix not positive definite (smallest eigenvalue "
       << min_eigenvalue(sigma) << ")";
    throw NumericalError(os.str());
  }
  return llt.solve(v);
}

/// x_t ~ N(mean, covariance) over the flattened 6-dim state.
struct GaussianBelief {
  AgentState mean;
  Matrix6d covariance = Matrix6d::Zero();

  GaussianBelief() = default;
  GaussianBelief(const AgentState& m, const Matrix6d& cov)
      : mean(m), covariance(cov) {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
      throw std::invalid_argument("GaussianBelief: covariance not symmetric");
    }
    if (!is_psd(cov, 1e-9)) {
      throw std::invalid_argument("GaussianBelief: covariance not PSD");
    }
  }
};

}  // namespace sigpred

#endif  // SIGPRED_CORE_HPP
