#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <random>

#include "dspect/prox.hpp"
#include "dspect/varmodel.hpp"

using namespace dspect;

namespace {

LinearMap identity(Index n) {
  return {n, n, [](const Vector& x, Vector& out) { out = x; }, [](const Vector& y, Vector& out) { out = y; }, 1.0,
          1.0};
}

LinearMap differences(Index n) {
  return {n - 1,
          n,
          [](const Vector& x, Vector& out) { time_difference(x, out); },
          [](const Vector& y, Vector& out) { time_difference_adjoint(y, out); },
          2.0,
          2.0};
}

// prox of tau/2 ||x - a||^2
std::function<void(Vector&, double)> quadratic_to(const Vector& a) {
  return [a](Vector& x, double tau) { x = (x + tau * a) / (1.0 + tau); };
}

Vector random_vector(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("quadratic plus simplex indicator converges to the projection") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector a = 2.0 * random_vector(6, rng);
    std::vector<DualTerm> terms{{identity(6), [](Vector& z, double sigma) {
                                   Vector u = z / sigma;
                                   u = project_simplex(u);
                                   z -= sigma * u;
                                 }}};
    PdhgConfig cfg;
    cfg.max_iter = 5000;
    cfg.tol = 1e-10;
    const auto res = pdhg_solve(terms, quadratic_to(a), cfg, Vector::Zero(6));
    CHECK((res.solution - project_simplex(a)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(res.diagnostics.residuals.back() < res.diagnostics.residuals.front());
  }
}

TEST_CASE("quadratic plus l1 converges to soft shrinkage") {
  std::mt19937_64 rng(2);
  const Vector a = 3.0 * random_vector(20, rng);
  const double lambda = 0.8;
  std::vector<DualTerm> terms{{identity(20), [lambda](Vector& z, double) { z = z.cwiseMax(-lambda).cwiseMin(lambda); }}};
  PdhgConfig cfg;
  cfg.max_iter = 5000;
  cfg.tol = 1e-12;
  const auto res = pdhg_solve(terms, quadratic_to(a), cfg, Vector::Zero(20));
  CHECK((res.solution - soft_shrink(a, lambda)).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(res.diagnostics.converged);
  CHECK(res.diagnostics.residuals.back() < res.diagnostics.residuals.front());
}

TEST_CASE("quadratic smoothing matches the normal equations") {
  std::mt19937_64 rng(3);
  const Index n = 15;
  const Vector a = random_vector(n, rng);
  const double delta = 3.0;
  std::vector<DualTerm> terms{{differences(n), [delta](Vector& z, double sigma) { z /= 1.0 + sigma / delta; }}};
  PdhgConfig cfg;
  cfg.max_iter = 20000;
  cfg.tol = 1e-13;
  const auto res = pdhg_solve(terms, quadratic_to(a), cfg, Vector::Zero(n));

  Matrix d = Matrix::Zero(n - 1, n);
  for (Index i = 0; i + 1 < n; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  const Matrix normal = Matrix::Identity(n, n) + delta * d.transpose() * d;
  const Vector exact = normal.ldlt().solve(a);
  CHECK((res.solution - exact).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(res.diagnostics.residuals.back() < res.diagnostics.residuals.front());
}

TEST_CASE("stacked terms: TV plus nonnegativity stays feasible and reduces the residual") {
  std::mt19937_64 rng(4);
  const Index n = 30;
  const Vector a = random_vector(n, rng);
  const double alpha = 0.2;
  std::vector<DualTerm> terms{
      {differences(n), [alpha](Vector& z, double) { z = z.cwiseMax(-alpha).cwiseMin(alpha); }},
      {identity(n), [](Vector& z, double sigma) { z -= sigma * (z / sigma).cwiseMax(0.0); }}};
  PdhgConfig cfg;
  cfg.max_iter = 3000;
  cfg.tol = 1e-9;
  const auto res = pdhg_solve(terms, quadratic_to(a), cfg, Vector::Zero(n));
  CHECK(res.solution.minCoeff() >= -1e-6);
  CHECK(res.diagnostics.residuals.back() < res.diagnostics.residuals.front());
}

TEST_CASE("step sizes respect the operator norm bound") {
  std::vector<DualTerm> terms{{differences(50), [](Vector&, double) {}}, {identity(50), [](Vector&, double) {}}};
  const double norm_sq = estimate_norm_sq(terms, 50, 200);
  // ||D||^2 < 4 for forward differences, plus the identity
  CHECK(norm_sq <= 5.0 + 1e-9);
  CHECK(norm_sq > 4.5);
  PdhgConfig cfg;
  cfg.max_iter = 1;
  const auto res = pdhg_solve(terms, quadratic_to(Vector::Zero(50)), cfg, Vector::Zero(50));
  CHECK(res.diagnostics.sigma * res.diagnostics.tau * res.diagnostics.norm_sq_estimate < 1.0);
}

TEST_CASE("forced large steps are shrunk below the stability bound") {
  std::vector<DualTerm> terms{{identity(4), [](Vector&, double) {}}};
  PdhgConfig cfg;
  cfg.sigma = 10.0;
  cfg.tau = 10.0;
  cfg.max_iter = 1;
  const auto res = pdhg_solve(terms, quadratic_to(Vector::Zero(4)), cfg, Vector::Zero(4));
  CHECK(res.diagnostics.steps_rescaled);
  CHECK(res.diagnostics.sigma * res.diagnostics.tau * 1.02 * res.diagnostics.norm_sq_estimate <= 0.95 + 1e-12);
}

TEST_CASE("invalid configurations are rejected") {
  PdhgConfig cfg;
  cfg.theta = 2.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PdhgConfig{};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  std::vector<DualTerm> terms{{identity(3), [](Vector&, double) {}}};
  CHECK_THROWS_AS(pdhg_solve(terms, quadratic_to(Vector::Zero(4)), PdhgConfig{}, Vector::Zero(4)),
                  std::invalid_argument);
}
