#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "expfilt/error.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using MatrixFn = std::function<Matrix(double)>;

// Lower bound enforced on the smallest eigenvalue of sigma*sigma^T at
// every grid node.
inline constexpr double kSigmaMinEig = 1e-10;

/// Linear-Gaussian system
///   dX = a(t) X dt + b(t) dV,   X_0 ~ N(x0_mean, x0_cov)
///   dY = c(t) X dt + sigma(t) dW,  Y_0 = 0
/// with X in R^d1, Y in R^d2, V in R^m1, W in R^m2.
///
/// Coefficients are supplied as evaluators and materialized on the grid
/// at construction; every downstream solver consumes the node arrays.
class LinearGaussianModel {
 public:
  LinearGaussianModel(int dim_x, int dim_y, int dim_v, int dim_w,
                      const MatrixFn& a, const MatrixFn& b, const MatrixFn& c,
                      const MatrixFn& sigma, Vector x0_mean, Matrix x0_cov,
                      const TimeGrid& grid)
      : d1_(dim_x),
        d2_(dim_y),
        m1_(dim_v),
        m2_(dim_w),
        x0_mean_(std::move(x0_mean)),
        x0_cov_(std::move(x0_cov)),
        grid_(grid) {
    const std::size_t n = grid.n_nodes();
    a_.reserve(n);
    b_.reserve(n);
    c_.reserve(n);
    sigma_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = grid.node(i);
      a_.push_back(checked(a(t), d1_, d1_, "a", t));
      b_.push_back(checked(b(t), d1_, m1_, "b", t));
      c_.push_back(checked(c(t), d2_, d1_, "c", t));
      sigma_.push_back(checked(sigma(t), d2_, m2_, "sigma", t));
    }
    if (x0_mean_.size() != d1_)
      throw ContractError("LinearGaussianModel: x0_mean has wrong dimension");
    if (x0_cov_.rows() != d1_ || x0_cov_.cols() != d1_)
      throw ContractError("LinearGaussianModel: x0_cov has wrong dimension");
  }

  /// Scalar constant-coefficient convenience constructor.
  static LinearGaussianModel scalar(double a, double b, double c, double sigma,
                                    double x0_mean, double x0_var,
                                    const TimeGrid& grid) {
    auto cm = [](double v) {
      return [v](double) { return Matrix::Constant(1, 1, v); };
    };
    return LinearGaussianModel(1, 1, 1, 1, cm(a), cm(b), cm(c), cm(sigma),
                               Vector::Constant(1, x0_mean),
                               Matrix::Constant(1, 1, x0_var), grid);
  }

  int dim_x() const { return d1_; }
  int dim_y() const { return d2_; }
  int dim_v() const { return m1_; }
  int dim_w() const { return m2_; }
  const TimeGrid& grid() const { return grid_; }
  const Vector& x0_mean() const { return x0_mean_; }
  const Matrix& x0_cov() const { return x0_cov_; }

  const Matrix& a(std::size_t i) const { return a_[i]; }
  const Matrix& b(std::size_t i) const { return b_[i]; }
  const Matrix& c(std::size_t i) const { return c_[i]; }
  const Matrix& sigma(std::size_t i) const { return sigma_[i]; }

  /// sigma(t_i) sigma(t_i)^T
  Matrix sigma_sq(std::size_t i) const {
    return sigma_[i] * sigma_[i].transpose();
  }

  // Coefficient at the midpoint of step [i, i+1], as the node average.
  Matrix a_mid(std::size_t i) const { return 0.5 * (a_[i] + a_[i + 1]); }
  Matrix b_mid(std::size_t i) const { return 0.5 * (b_[i] + b_[i + 1]); }
  Matrix c_mid(std::size_t i) const { return 0.5 * (c_[i] + c_[i + 1]); }
  Matrix sigma_mid(std::size_t i) const {
    return 0.5 * (sigma_[i] + sigma_[i + 1]);
  }

 private:
  static Matrix checked(Matrix m, int rows, int cols, const char* name,
                        double t) {
    if (m.rows() != rows || m.cols() != cols)
      throw ContractError(std::string("LinearGaussianModel: coefficient ") +
                          name + " has wrong shape at t=" + std::to_string(t));
    return m;
  }

  int d1_, d2_, m1_, m2_;
  std::vector<Matrix> a_, b_, c_, sigma_;
  Vector x0_mean_;
  Matrix x0_cov_;
  TimeGrid grid_;
};

/// Univariate polynomial g, coefficients in ascending degree order.
class PolySpec {
 public:
  static constexpr int kDefaultDegreeCap = 5;

  explicit PolySpec(std::vector<double> coeffs, int degree_cap = kDefaultDegreeCap)
      : coeffs_(std::move(coeffs)) {
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    if (coeffs_.empty()) coeffs_.push_back(0.0);
    if (degree() > degree_cap)
      throw ConfigError("PolySpec: degree " + std::to_string(degree()) +
                        " exceeds cap " + std::to_string(degree_cap));
  }

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
  double coeff(int k) const {
    return k >= 0 && k < static_cast<int>(coeffs_.size()) ? coeffs_[k] : 0.0;
  }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double operator()(double x) const {
    double v = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) v = v * x + coeffs_[k];
    return v;
  }

 private:
  std::vector<double> coeffs_;
};

/// Scalar perturbed-linear system
///   dX = a X dt + b dV,            X_0 = 0
///   dY = (c X + eps g(X)) dt + sigma dW,  Y_0 = 0.
/// eps = 0 is allowed and switches the perturbation off.
struct PerturbedLinearModel {
  double a = 0.0, b = 0.0, c = 0.0, sigma = 1.0;
  double epsilon = 0.0;
  PolySpec g{{0.0}};

  PerturbedLinearModel(double a_, double b_, double c_, double sigma_,
                       double epsilon_, PolySpec g_)
      : a(a_), b(b_), c(c_), sigma(sigma_), epsilon(epsilon_), g(std::move(g_)) {
    if (!(sigma > 0.0))
      throw ConfigError("PerturbedLinearModel: sigma must be > 0");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
      throw ConfigError("PerturbedLinearModel: epsilon must be in [0,1)");
  }

  LinearGaussianModel linear_part(const TimeGrid& grid) const {
    return LinearGaussianModel::scalar(a, b, c, sigma, 0.0, 0.0, grid);
  }
};

/// Scalar smooth function with first and second derivative evaluators.
struct SmoothFn {
  std::function<double(double)> f, df, d2f;
};

/// Scalar nonlinear system
///   dX = alpha(X) dt + eps beta(X) dV,  X_0 = 0
///   dY = h(X) dt + sigma dW,            Y_0 = 0.
struct NonlinearModel {
  SmoothFn alpha, beta, h;
  double epsilon = 0.0, sigma = 1.0;

  NonlinearModel(SmoothFn alpha_, SmoothFn beta_, SmoothFn h_, double epsilon_,
                 double sigma_)
      : alpha(std::move(alpha_)),
        beta(std::move(beta_)),
        h(std::move(h_)),
        epsilon(epsilon_),
        sigma(sigma_) {
    if (!(sigma > 0.0)) throw ConfigError("NonlinearModel: sigma must be > 0");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
      throw ConfigError("NonlinearModel: epsilon must be in [0,1)");
    check_derivatives();
  }

 private:
  // Derivative evaluators must agree with a central difference of the
  // base function at sample points, 1e-5 relative.
  void check_derivatives() const {
    static const double pts[] = {-1.7, -0.5, 0.0, 0.3, 1.1, 2.4};
    for (const auto& [name, fn] :
         {std::pair<const char*, const SmoothFn*>{"alpha", &alpha},
          {"beta", &beta},
          {"h", &h}}) {
      for (double x : pts) {
        const double hstep = 1e-6 * (1.0 + std::abs(x));
        const double fd = (fn->f(x + hstep) - fn->f(x - hstep)) / (2.0 * hstep);
        const double scale = std::max({1.0, std::abs(fd), std::abs(fn->df(x))});
        if (std::abs(fd - fn->df(x)) > 1e-5 * scale)
          throw ConfigError(std::string("NonlinearModel: derivative of ") +
                            name + " inconsistent with finite difference at x=" +
                            std::to_string(x));
      }
    }
  }
};

/// Numerical diagnostics for a linear-Gaussian model on a grid.
/// Empty result means every node check passed.
inline std::vector<std::string> validate(const LinearGaussianModel& model,
                                         const TimeGrid& grid) {
  std::vector<std::string> violations;
  if (grid != model.grid())
    violations.push_back("grid mismatch: model was materialized on a different grid");

  Eigen::SelfAdjointEigenSolver<Matrix> es(model.x0_cov());
  if ((model.x0_cov() - model.x0_cov().transpose()).norm() >
      1e-12 * (1.0 + model.x0_cov().norm()))
    violations.push_back("x0_cov not symmetric");
  else if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + model.x0_cov().norm()))
    violations.push_back("x0_cov not PSD");

  for (std::size_t i = 0; i < model.grid().n_nodes(); ++i) {
    const double t = model.grid().node(i);
    if (!model.a(i).allFinite() || !model.b(i).allFinite() ||
        !model.c(i).allFinite() || !model.sigma(i).allFinite()) {
      violations.push_back("non-finite coefficient at t=" + std::to_string(t));
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> ss(model.sigma_sq(i));
    if (ss.eigenvalues().minCoeff() <= kSigmaMinEig) {
      violations.push_back("sigma lower bound violated at t=" + std::to_string(t));
      break;  // one report is enough; the bound fails on a whole band
    }
  }
  return violations;
}

/// First-order small-noise reformulation of a nonlinear model around the
/// deterministic flow X0 started at the origin.
struct Linearization {
  std::vector<double> x0_path;   // X0 on the grid nodes
  LinearGaussianModel linear;    // a(t)=alpha'(X0), b(t)=beta(X0), c(t)=h'(X0)
  std::vector<double> obs_offset;  // h(X0_t), for innovation centering
};

/// Solves dX0 = alpha(X0) dt with X0(0)=0 by classical RK4 on the grid
/// and materializes the tangent linear-Gaussian model.
inline Linearization linearize_first_order(const NonlinearModel& model,
                                           const TimeGrid& grid) {
  const std::size_t n = grid.n_nodes();
  std::vector<double> x0(n);
  x0[0] = 0.0;
  const double dt = grid.dt();
  const auto& f = model.alpha.f;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x = x0[i];
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * dt * k1);
    const double k3 = f(x + 0.5 * dt * k2);
    const double k4 = f(x + dt * k3);
    x0[i + 1] = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(x0[i + 1]))
      throw NumericalError(
          "linearize_first_order: drift blow-up, first bad node " +
          std::to_string(i + 1));
  }

  // Interpolate X0 linearly when an evaluator is queried off-node.
  auto x0_at = [x0, grid](double t) {
    const double u = (t - grid.t0()) / grid.dt();
    const auto i = static_cast<std::size_t>(
        std::clamp(u, 0.0, static_cast<double>(x0.size() - 1)));
    if (i + 1 >= x0.size()) return x0.back();
    const double w = u - static_cast<double>(i);
    return (1.0 - w) * x0[i] + w * x0[i + 1];
  };

  auto make = [&](std::function<double(double)> g) {
    return [g = std::move(g), x0_at](double t) {
      return Matrix::Constant(1, 1, g(x0_at(t)));
    };
  };

  LinearGaussianModel lin(
      1, 1, 1, 1, make(model.alpha.df), make(model.beta.f), make(model.h.df),
      [s = model.sigma](double) { return Matrix::Constant(1, 1, s); },
      Vector::Zero(1), Matrix::Zero(1, 1), grid);

  std::vector<double> offset(n);
  for (std::size_t i = 0; i < n; ++i) offset[i] = model.h.f(x0[i]);
  return Linearization{std::move(x0), std::move(lin), std::move(offset)};
}

}  // namespace expfilt
