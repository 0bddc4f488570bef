#pragma once

#include <functional>
#include <vector>

#include "dspect/types.hpp"

namespace dspect {

/// sign(x) max(|x| - lambda, 0), the prox of lambda ||.||_1.
Vector soft_shrink(const Eigen::Ref<const Vector>& x, double lambda);

/// Euclidean projection of one vector onto {w >= 0, sum w = 1}.
Vector project_simplex(const Eigen::Ref<const Vector>& x);

/// Projects every row of an n x K matrix onto the unit simplex.
Matrix project_simplex_rows(const Matrix& rows);
void project_simplex_rows_inplace(Eigen::Ref<Matrix> rows);

Vector prox_nonneg(const Eigen::Ref<const Vector>& x);

/// G(v) = 1/2 sum d (v - center)^2 / max(previous, floor).
struct WeightedQuadratic {
  Vector weight;
  Vector center;
  Vector previous;
  double floor = 1e-12;

  /// argmin_v G(v) + ||v - x||^2 / (2 tau), solved entrywise.
  Vector prox(const Eigen::Ref<const Vector>& x, double tau) const;
  void prox_inplace(Eigen::Ref<Vector> x, double tau) const;
};

/// prox of sigma * (weight / 2) ||.||^2, i.e. y / (1 + sigma weight).
Vector prox_scaled_sq_l2(const Eigen::Ref<const Vector>& y, double weight, double sigma);

/// prox_{lambda f}(x) for a convex f.
using ProxFn = std::function<Vector(const Vector& x, double lambda)>;

/// prox_{sigma f*}(z) = z - sigma prox_{f / sigma}(z / sigma).
Vector conjugate_prox(const ProxFn& prox, const Vector& z, double sigma);

/// Matrix-free linear map with the row/column absolute sums needed by the
/// step-size rule.
struct LinearMap {
  Index rows = 0;
  Index cols = 0;
  std::function<void(const Vector& x, Vector& out)> apply;
  std::function<void(const Vector& y, Vector& out)> adjoint;
  double max_row_abs_sum = 1.0;
  double max_col_abs_sum = 1.0;
};

/// One component of F(Kx) = sum_j F_j(K_j x). prox_conjugate overwrites z
/// with prox_{sigma F_j*}(z).
struct DualTerm {
  LinearMap op;
  std::function<void(Vector& z, double sigma)> prox_conjugate;
};

struct PdhgConfig {
  double sigma = 0.0;  // 0 selects 1 / max row sum of |K|
  double tau = 0.0;    // 0 selects 1 / max column sum of |K|
  double theta = 1.0;
  Index max_iter = 1000;
  double tol = 1e-6;
  int power_iterations = 40;
  double norm_sq_hint = 0.0;  // known ||K||^2; 0 runs the power method

  void validate() const;
};

struct PdhgDiagnostics {
  std::vector<double> residuals;
  Index iterations = 0;
  bool converged = false;
  bool steps_rescaled = false;
  double sigma = 0.0;
  double tau = 0.0;
  double norm_sq_estimate = 0.0;
};

struct PdhgResult {
  Vector solution;
  Vector extrapolated;
  PdhgDiagnostics diagnostics;
};

/// Power-method estimate of ||K||^2 for a stacked set of maps.
double estimate_norm_sq(const std::vector<DualTerm>& terms, Index cols, int iterations);

/// Primal-dual hybrid gradient for min_x sum_j F_j(K_j x) + G(x):
///   y_j <- prox_{sigma F_j*}(y_j + sigma K_j xbar)
///   x'  <- prox_{tau G}(x - tau sum_j K_j^T y_j)
///   xbar = x' + theta (x' - x)
/// Stops when the normalised primal-dual residual drops below tol.
PdhgResult pdhg_solve(const std::vector<DualTerm>& terms, const std::function<void(Vector& x, double tau)>& prox_g,
                      const PdhgConfig& cfg, Vector x0);

}  // namespace dspect
