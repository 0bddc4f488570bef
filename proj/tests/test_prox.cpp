#include <doctest.h>

#include <cmath>
#include <random>

#include "dspect/prox.hpp"

using namespace dspect;

namespace {

// Exhaustive oracle: on every candidate support the projection is an
// equality-constrained least squares problem; keep the closest feasible one.
Vector simplex_oracle(const Vector& x) {
  const Index k = x.size();
  Vector best;
  double best_dist = INFINITY;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (Index j = 0; j < k; ++j) {
      if (mask & (1u << j)) {
        sum += x[j];
        ++count;
      }
    }
    const double shift = (sum - 1.0) / count;
    Vector w = Vector::Zero(k);
    bool feasible = true;
    for (Index j = 0; j < k; ++j) {
      if (mask & (1u << j)) {
        w[j] = x[j] - shift;
        if (w[j] < 0.0) feasible = false;
      }
    }
    if (!feasible) continue;
    const double dist = (w - x).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  }
  return best;
}

// Root of a nondecreasing function by bisection, to full double precision.
double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("soft shrinkage") {
  Vector x(5);
  x << -3.0, -0.5, 0.0, 0.2, 2.5;
  Vector expected(5);
  expected << -2.0, 0.0, 0.0, 0.0, 1.5;
  CHECK((soft_shrink(x, 1.0) - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(soft_shrink(x, 0.0) == x);
  CHECK_THROWS_AS(soft_shrink(x, -1.0), std::invalid_argument);
}

TEST_CASE("simplex projection matches the exhaustive oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Index k = 1 + i % 5;
    Vector x(k);
    for (Index j = 0; j < k; ++j) x[j] = u(rng);
    worst = std::max(worst, (project_simplex(x) - simplex_oracle(x)).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("simplex projection fixes simplex points and handles ties") {
  Vector x(3);
  x << 0.2, 0.3, 0.5;
  CHECK((project_simplex(x) - x).norm() < 1e-15);
  x << 1.0, 1.0, 1.0;
  CHECK((project_simplex(x) - Vector::Constant(3, 1.0 / 3.0)).norm() < 1e-15);
  Matrix rows(2, 2);
  rows << 3.0, 0.0, -1.0, -1.0;
  Matrix expected(2, 2);
  expected << 1.0, 0.0, 0.5, 0.5;
  CHECK((project_simplex_rows(rows) - expected).norm() < 1e-15);
  CHECK_THROWS_AS(project_simplex(Vector()), std::invalid_argument);
}

TEST_CASE("weighted quadratic prox matches scalar minimisation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 3.0), v(-2.0, 2.0);
  const Index n = 200;
  WeightedQuadratic q{Vector(n), Vector(n), Vector(n), 1e-12};
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    q.weight[i] = u(rng);
    q.center[i] = v(rng);
    q.previous[i] = u(rng);
    x[i] = v(rng);
  }
  for (double tau : {0.01, 0.5, 10.0}) {
    const Vector p = q.prox(x, tau);
    for (Index i = 0; i < n; ++i) {
      const double a = q.weight[i] / q.previous[i];
      const auto slope = [&](double s) { return a * (s - q.center[i]) + (s - x[i]) / tau; };
      const double ref = bisect_root(slope, -5.0, 5.0);
      CHECK(std::abs(p[i] - ref) <= 1e-8);
    }
  }
}

TEST_CASE("weighted quadratic floors the previous iterate") {
  WeightedQuadratic q{Vector::Ones(1), Vector::Constant(1, 2.0), Vector::Zero(1), 0.5};
  // a = 1 / 0.5 = 2: (2 * 2 + 0 / 1) / (2 + 1)
  CHECK(q.prox(Vector::Zero(1), 1.0)[0] == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS(q.prox(Vector::Zero(2), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(q.prox(Vector::Zero(1), 0.0), std::invalid_argument);
}

TEST_CASE("scaled squared norm prox") {
  Vector y(2);
  y << 3.0, -6.0;
  CHECK((prox_scaled_sq_l2(y, 2.0, 1.0) - y / 3.0).norm() < 1e-15);
  CHECK(prox_nonneg(y)[1] == 0.0);
}

TEST_CASE("conjugate prox of the l1 norm clips to the dual ball") {
  const double lambda = 0.7;
  const ProxFn l1 = [lambda](const Vector& x, double step) { return soft_shrink(x, lambda * step); };
  Vector z(5);
  z << -3.0, -0.2, 0.0, 0.5, 9.0;
  for (double sigma : {0.1, 1.0, 4.0}) {
    const Vector y = conjugate_prox(l1, z, sigma);
    CHECK((y - z.cwiseMax(-lambda).cwiseMin(lambda)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("Moreau decomposition holds for the simplex indicator") {
  const ProxFn simplex = [](const Vector& x, double) { return project_simplex(x); };
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    Vector x(4);
    for (Index j = 0; j < 4; ++j) x[j] = u(rng);
    const double tau = 0.3 + 0.1 * i;
    // x = prox_{tau f}(x) + tau prox_{f*/tau}(x/tau)
    const Vector dual = conjugate_prox(simplex, x / tau, 1.0 / tau);
    CHECK((project_simplex(x) + tau * dual - x).norm() < 1e-12);
  }
}
