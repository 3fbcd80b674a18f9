#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "expfilt/models.hpp"
#include "expfilt/kalman.hpp"
#include "expfilt/riccati.hpp"

using namespace expfilt;

namespace {

// positive stationary root of the scalar Riccati
double gamma_star(double a, double b, double c, double sigma) {
  const double s2 = sigma * sigma;
  return (a * s2 + sigma * std::sqrt(a * a * s2 + b * b * c * c)) / (c * c);
}

}  // namespace

TEST_CASE("forward Riccati reaches the stationary root") {
  TimeGrid grid(0.0, 0.01, 1000);  // T = 10
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.0, 0.0, grid);
  auto ric = solve_gamma(model);
  const double gs = gamma_star(-0.4, 0.5, 1.0, 0.3);
  REQUIRE(gs == Catch::Approx(0.118259).margin(1e-6));
  REQUIRE(ric.at(1000)(0, 0) == Catch::Approx(gs).margin(1e-6));
}

TEST_CASE("forward Riccati with no noise and zero prior stays at zero") {
  TimeGrid grid(0.0, 0.01, 200);
  auto model = LinearGaussianModel::scalar(-0.4, 0.0, 1.0, 0.3, 1.0, 0.0, grid);
  auto ric = solve_gamma(model);
  for (std::size_t i = 0; i <= 200; ++i) REQUIRE(ric.at(i)(0, 0) == 0.0);
}

TEST_CASE("forward Riccati without observations is the prior flow") {
  // c = 0: gamma(t) = b^2 (e^{2at} - 1) / (2a) for Sigma = 0
  const double a = -0.4, b = 0.5;
  TimeGrid grid(0.0, 0.01, 500);
  auto model = LinearGaussianModel::scalar(a, b, 0.0, 0.3, 0.0, 0.0, grid);
  auto ric = solve_gamma(model);
  for (std::size_t i = 0; i <= 500; i += 50) {
    const double t = grid.node(i);
    const double exact = b * b * (std::exp(2 * a * t) - 1.0) / (2 * a);
    REQUIRE(ric.at(i)(0, 0) == Catch::Approx(exact).margin(1e-9));
  }
}

TEST_CASE("scalar fast path matches the generic solver") {
  TimeGrid grid(0.0, 0.01, 300);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.0, 0.2, grid);
  auto ric = solve_gamma(model);
  auto fast = solve_gamma_scalar(-0.4, 0.5, 1.0, 0.3, grid, 0.2);
  for (std::size_t i = 0; i <= 300; ++i)
    REQUIRE(fast[i] == Catch::Approx(ric.at(i)(0, 0)).margin(1e-14));
}

TEST_CASE("backward Riccati boundary and zero-source cases") {
  TimeGrid grid(0.0, 0.01, 100);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.0, 0.0, grid);
  auto phi = solve_phi(model, 100);
  REQUIRE(phi.at(100).norm() == 0.0);
  REQUIRE(phi.at(0)(0, 0) < 0.0);  // NSD, strictly negative with c != 0

  auto model0 = LinearGaussianModel::scalar(-0.4, 0.5, 0.0, 0.3, 0.0, 0.0, grid);
  auto phi0 = solve_phi(model0, 100);
  for (std::size_t i = 0; i <= 100; ++i) REQUIRE(phi0.at(i).norm() == 0.0);
}

TEST_CASE("backward Riccati equals the reflected forward equation") {
  // phi(s;t) = -gtilde(t-s) where gtilde solves the forward Riccati with
  // time-reversed coefficients and zero initial condition.
  TimeGrid grid(0.0, 0.01, 100);  // t = 1
  const double a = -0.4, b = 0.5, c = 1.0, sigma = 0.3;
  auto model = LinearGaussianModel::scalar(a, b, c, sigma, 0.0, 0.0, grid);
  auto phi = solve_phi(model, 100);

  // constant coefficients: time reversal leaves them unchanged; the
  // reflected solution gtilde solves the information-form Riccati
  //   dg/du = -b^2 g^2 + 2 a g + c^2/sigma^2,  g(0) = 0
  const std::size_t n = 100;
  const double dt = 0.01;
  const double s2 = sigma * sigma;
  std::vector<double> gt(n + 1, 0.0);
  auto f = [&](double v) {
    return -b * b * v * v + 2.0 * a * v + c * c / s2;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double k1 = f(gt[i]);
    const double k2 = f(gt[i] + 0.5 * dt * k1);
    const double k3 = f(gt[i] + 0.5 * dt * k2);
    const double k4 = f(gt[i] + dt * k3);
    gt[i + 1] = gt[i] + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  for (std::size_t s = 0; s <= 100; s += 10)
    REQUIRE(phi.at(s)(0, 0) == Catch::Approx(-gt[100 - s]).margin(1e-10));
}

TEST_CASE("riccati solvers work on a 2-d time-varying model") {
  TimeGrid grid(0.0, 0.01, 200);
  auto a = [](double t) {
    Matrix m(2, 2);
    m << -0.5 + 0.1 * std::sin(t), 0.2, -0.1, -0.8;
    return m;
  };
  auto b = [](double t) {
    Matrix m(2, 2);
    m << 0.4, 0.0, 0.1, 0.3 + 0.05 * std::cos(t);
    return m;
  };
  auto c = [](double) {
    Matrix m(1, 2);
    m << 1.0, 0.5;
    return m;
  };
  auto sg = [](double) { return Matrix::Constant(1, 1, 0.3); };
  Matrix p0(2, 2);
  p0 << 0.2, 0.05, 0.05, 0.1;
  LinearGaussianModel model(2, 1, 2, 1, a, b, c, sg, Vector::Zero(2), p0, grid);
  REQUIRE(validate(model, grid).empty());

  auto ric = solve_gamma(model);
  for (std::size_t i = 0; i <= 200; i += 40) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(ric.at(i));
    REQUIRE(es.eigenvalues().minCoeff() > -1e-12);
    REQUIRE((ric.at(i) - ric.at(i).transpose()).norm() < 1e-14);
  }
  auto phi = solve_phi(model, 200);
  for (std::size_t i = 0; i <= 200; i += 40) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(phi.at(i));
    REQUIRE(es.eigenvalues().maxCoeff() < 1e-12);
  }
}
