#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "expfilt/kalman.hpp"
#include "expfilt/models.hpp"
#include "expfilt/rng.hpp"
#include "expfilt/sde.hpp"
#include "expfilt/smoothing.hpp"

using namespace expfilt;

namespace {

// Test-only oracle: standard discrete-time Kalman recursion on the
// observation increments z_k = dY_k, with transition I + a dt, process
// noise b b^T dt, measurement matrix c dt and noise sigma sigma^T dt.
struct DiscreteKalman {
  std::vector<Vector> mu;

  DiscreteKalman(const LinearGaussianModel& model,
                 const Eigen::MatrixXd& y_path) {
    const TimeGrid& grid = model.grid();
    const double dt = grid.dt();
    const int d = model.dim_x();
    Vector x = model.x0_mean();
    Matrix P = model.x0_cov();
    mu.push_back(x);
    for (std::size_t i = 0; i + 1 < grid.n_nodes(); ++i) {
      const Matrix Phi = Matrix::Identity(d, d) + model.a(i) * dt;
      const Matrix Q = model.b(i) * model.b(i).transpose() * dt;
      const Matrix H = model.c(i) * dt;
      const Matrix R = model.sigma_sq(i) * dt;
      // predict
      x = Phi * x;
      P = Phi * P * Phi.transpose() + Q;
      // update with the increment observation
      const Vector z = (y_path.row(i + 1) - y_path.row(i)).transpose();
      const Matrix S = H * P * H.transpose() + R;
      const Matrix K = P * H.transpose() * S.inverse();
      x = x + K * (z - H * x);
      P = (Matrix::Identity(d, d) - K * H) * P;
      mu.push_back(x);
    }
  }
};

LinearGaussianModel random_model(CounterRng& rng, std::uint64_t tag, int dim,
                                 const TimeGrid& grid) {
  auto u = [&](std::uint32_t ch, double lo, double hi) {
    return lo + (hi - lo) * rng.uniform(tag, ch);
  };
  if (dim == 1) {
    return LinearGaussianModel::scalar(u(0, -1.2, -0.1), u(1, 0.2, 0.8),
                                       u(2, 0.5, 1.5), u(3, 0.2, 0.6),
                                       u(4, -1.0, 1.0), u(5, 0.0, 0.4), grid);
  }
  Matrix A(2, 2), B(2, 2), C(2, 2), S0(2, 2);
  A << u(0, -1.5, -0.3), u(1, -0.3, 0.3), u(2, -0.3, 0.3), u(3, -1.5, -0.3);
  B << u(4, 0.2, 0.6), 0.0, u(5, -0.2, 0.2), u(6, 0.2, 0.6);
  C << u(7, 0.5, 1.5), u(8, -0.5, 0.5), u(9, -0.5, 0.5), u(10, 0.5, 1.5);
  const double s1 = u(11, 0.2, 0.6), s2 = u(12, 0.2, 0.6);
  Vector m0(2);
  m0 << u(13, -1.0, 1.0), u(14, -1.0, 1.0);
  const double v1 = u(15, 0.05, 0.4), v2 = u(16, 0.05, 0.4);
  S0 << v1, 0.0, 0.0, v2;
  auto cm = [](Matrix m) { return [m](double) { return m; }; };
  Matrix Sg(2, 2);
  Sg << s1, 0.0, 0.0, s2;
  return LinearGaussianModel(2, 2, 2, 2, cm(A), cm(B), cm(C), cm(Sg), m0, S0,
                             grid);
}

double rms_diff(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]).squaredNorm();
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

TEST_CASE("filter with no observation gain keeps the prior mean") {
  TimeGrid grid(0.0, 0.01, 300);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 0.0, 0.3, 0.0, 0.2, grid);
  auto path = simulate_linear(model, grid, NoiseSeed{11, 0});
  auto fp = kalman_bucy(model, path.y);
  for (const auto& m : fp.mu) REQUIRE(m(0) == 0.0);
}

TEST_CASE("huge observation noise recovers the prior flow") {
  TimeGrid grid(0.0, 0.01, 500);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 1e3, 1.0, 0.0, grid);
  auto path = simulate_linear(model, grid, NoiseSeed{12, 0});
  auto fp = kalman_bucy(model, path.y);
  double sup = 0.0;
  for (std::size_t i = 0; i <= 500; ++i) {
    const double prior = std::exp(-0.4 * grid.node(i));
    sup = std::max(sup, std::abs(fp.mu[i](0) - prior));
  }
  REQUIRE(sup < 1e-2);
}

TEST_CASE("continuous filter matches the discrete Kalman oracle at O(dt)") {
  CounterRng rng(4242, 0);
  int idx = 0;
  for (int dim : {1, 2}) {
    for (int rep = 0; rep < 3; ++rep, ++idx) {
      TimeGrid fine(0.0, 0.005, 400);   // dt/2 grid, T = 2
      TimeGrid coarse(0.0, 0.01, 200);  // dt grid
      auto mf = random_model(rng, static_cast<std::uint64_t>(idx), dim, fine);
      auto mc = random_model(rng, static_cast<std::uint64_t>(idx), dim, coarse);
      auto path = simulate_linear(mf, fine, NoiseSeed{55, static_cast<std::uint64_t>(idx)});
      // subsample the fine observation path onto the coarse grid
      Eigen::MatrixXd y_coarse(coarse.n_nodes(), path.y.cols());
      for (std::size_t i = 0; i < coarse.n_nodes(); ++i)
        y_coarse.row(i) = path.y.row(2 * i);

      auto kb_f = kalman_bucy(mf, path.y);
      auto kb_c = kalman_bucy(mc, y_coarse);
      DiscreteKalman dk_f(mf, path.y);
      DiscreteKalman dk_c(mc, y_coarse);

      const double scale =
          1.0 + rms_diff(dk_c.mu, std::vector<Vector>(dk_c.mu.size(),
                                                      Vector::Zero(dim)));
      const double err_c = rms_diff(kb_c.mu, dk_c.mu);
      REQUIRE(err_c <= 5 * 0.01 * scale);

      // compare at matching times for the refinement ratio
      std::vector<Vector> kb_sub, dk_sub;
      for (std::size_t i = 0; i < coarse.n_nodes(); ++i) {
        kb_sub.push_back(kb_f.mu[2 * i]);
        dk_sub.push_back(dk_f.mu[2 * i]);
      }
      const double err_f = rms_diff(kb_sub, dk_sub);
      const double ratio = err_c / err_f;
      REQUIRE(ratio > 1.5);
      REQUIRE(ratio < 2.5);
    }
  }
}

TEST_CASE("smoother boundary equals the filter") {
  TimeGrid grid(0.0, 0.01, 200);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.2, 0.3, grid);
  auto path = simulate_linear(model, grid, NoiseSeed{21, 0});
  auto fp = kalman_bucy(model, path.y);
  auto sm = rts_smooth(model, fp, path.y, 200);
  REQUIRE((sm.mu_s_t[200] - fp.mu[200]).norm() == 0.0);
  REQUIRE((sm.k_row[200] - fp.gamma.at(200)).norm() == 0.0);
}

TEST_CASE("smoother with b=0 follows the homogeneous backward flow") {
  // b = 0: mu_{s;t} = e^{-a(t-s)} mu_{t;t} in the scalar case
  const double a = -0.6;
  TimeGrid grid(0.0, 0.005, 400);  // t = 2
  auto model = LinearGaussianModel::scalar(a, 0.0, 1.0, 0.4, 0.5, 0.3, grid);
  auto path = simulate_linear(model, grid, NoiseSeed{22, 0});
  auto fp = kalman_bucy(model, path.y);
  auto sm = rts_smooth(model, fp, path.y, 400);
  const double mu_t = fp.mu[400](0);
  double sup = 0.0;
  for (std::size_t s = 0; s <= 400; s += 40) {
    const double exact = std::exp(-a * (grid.node(400) - grid.node(s))) * mu_t;
    sup = std::max(sup, std::abs(sm.mu_s_t[s](0) - exact));
  }
  REQUIRE(sup < 0.02);  // first-order-in-dt agreement with the exact flow
}

TEST_CASE("fixed-point smoother initialization and zero-gain cases") {
  TimeGrid grid(0.0, 0.01, 150);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.1, 0.2, grid);
  auto path = simulate_linear(model, grid, NoiseSeed{23, 0});
  auto fp = kalman_bucy(model, path.y);
  auto fps = fixed_point_smoother(model, fp, path.y, 60);
  REQUIRE(fps[0](0) == fp.mu[60](0));  // t = s boundary

  auto model0 = LinearGaussianModel::scalar(-0.4, 0.5, 0.0, 0.3, 0.7, 0.2, grid);
  auto path0 = simulate_linear(model0, grid, NoiseSeed{23, 1});
  auto fp0 = kalman_bucy(model0, path0.y);
  auto fps0 = fixed_point_smoother(model0, fp0, path0.y, 60);
  for (const auto& v : fps0) REQUIRE(v(0) == fps0[0](0));  // constant in t
}

TEST_CASE("RTS and fixed-point smoothers agree at every pair") {
  TimeGrid grid(0.0, 0.01, 200);
  const double eps_reg = 1e-8;
  auto model =
      LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.0, eps_reg, grid);
  auto path = simulate_linear(model, grid, NoiseSeed{24, 0});
  auto fp = kalman_bucy(model, path.y);

  // fixed-point paths for a batch of s nodes
  for (std::size_t s = 0; s <= 200; s += 25) {
    auto fps = fixed_point_smoother(model, fp, path.y, s);
    for (std::size_t t = s; t <= 200; t += 25) {
      auto sm = rts_smooth(model, fp, path.y, t);
      const double a = sm.mu_s_t[s](0);
      const double b = fps[t - s](0);
      REQUIRE(a == Catch::Approx(b).epsilon(1e-9).margin(1e-12));
    }
  }
}

TEST_CASE("innovation increments are empirically uncorrelated") {
  TimeGrid grid(0.0, 0.01, 200);
  auto model = LinearGaussianModel::scalar(-0.4, 0.5, 1.0, 0.3, 0.0, 0.0, grid);
  const int n_paths = 4000;
  // correlation between innovation increments over two disjoint blocks
  double s_ab = 0, s_a = 0, s_b = 0, s_aa = 0, s_bb = 0;
  for (int k = 0; k < n_paths; ++k) {
    auto path = simulate_linear(model, grid, NoiseSeed{606, static_cast<std::uint64_t>(k)});
    auto fp = kalman_bucy(model, path.y);
    auto block = [&](std::size_t lo, std::size_t hi) {
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i)
        acc += (path.y(i + 1, 0) - path.y(i, 0)) -
               model.c(i)(0, 0) * fp.mu[i](0) * grid.dt();
      return acc;
    };
    const double a = block(20, 100), b = block(100, 180);
    s_a += a;
    s_b += b;
    s_aa += a * a;
    s_bb += b * b;
    s_ab += a * b;
  }
  const double n = n_paths;
  const double cov = s_ab / n - (s_a / n) * (s_b / n);
  const double va = s_aa / n - (s_a / n) * (s_a / n);
  const double vb = s_bb / n - (s_b / n) * (s_b / n);
  const double corr = cov / std::sqrt(va * vb);
  REQUIRE(std::abs(corr) < 3.0 / std::sqrt(n));
}
