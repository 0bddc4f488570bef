#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dspect/prox.hpp"

namespace dspect {

void PdhgConfig::validate() const {
  if (sigma < 0.0 || tau < 0.0) throw std::invalid_argument("PDHG steps must be positive (or 0 for automatic)");
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("PDHG extrapolation must lie in [0, 1]");
  if (max_iter < 1) throw std::invalid_argument("PDHG needs at least one iteration");
  if (!(tol >= 0.0)) throw std::invalid_argument("PDHG tolerance must be nonnegative");
}

double estimate_norm_sq(const std::vector<DualTerm>& terms, Index cols, int iterations) {
  if (terms.empty() || cols == 0) return 0.0;
  Vector x(cols);
  for (Index i = 0; i < cols; ++i) x[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  x.normalize();
  Vector kx;
  Vector back(cols);
  Vector acc(cols);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    acc.setZero();
    for (const auto& term : terms) {
      kx.resize(term.op.rows);
      term.op.apply(x, kx);
      term.op.adjoint(kx, back);
      acc += back;
    }
    estimate = x.dot(acc);
    const double norm = acc.norm();
    if (!(norm > 0.0)) return 0.0;
    x = acc / norm;
  }
  return estimate;
}

PdhgResult pdhg_solve(const std::vector<DualTerm>& terms, const std::function<void(Vector& x, double tau)>& prox_g,
                      const PdhgConfig& cfg, Vector x0) {
  cfg.validate();
  const Index n = x0.size();
  for (const auto& term : terms) {
    if (term.op.cols != n) throw std::invalid_argument("PDHG: operator column count does not match the primal size");
  }

  PdhgDiagnostics diag;
  double max_row = 0.0;
  double col_sum = 0.0;
  for (const auto& term : terms) {
    max_row = std::max(max_row, term.op.max_row_abs_sum);
    col_sum += term.op.max_col_abs_sum;
  }
  double sigma = cfg.sigma > 0.0 ? cfg.sigma : (max_row > 0.0 ? 1.0 / max_row : 1.0);
  double tau = cfg.tau > 0.0 ? cfg.tau : (col_sum > 0.0 ? 1.0 / col_sum : 1.0);
  diag.norm_sq_estimate = cfg.norm_sq_hint > 0.0 ? cfg.norm_sq_hint : estimate_norm_sq(terms, n, cfg.power_iterations);
  // power iterations approach ||K||^2 from below
  const double guarded = 1.02 * diag.norm_sq_estimate;
  if (sigma * tau * guarded >= 1.0) {
    const double shrink = std::sqrt(0.95 / (sigma * tau * guarded));
    sigma *= shrink;
    tau *= shrink;
    diag.steps_rescaled = true;
  }
  diag.sigma = sigma;
  diag.tau = tau;

  const std::size_t nterms = terms.size();
  std::vector<Vector> y(nterms);
  std::vector<Vector> kx(nterms);      // K_j x
  std::vector<Vector> kx_new(nterms);  // K_j x'
  std::vector<Vector> z(nterms);
  std::vector<Vector> y_old(nterms);
  for (std::size_t j = 0; j < nterms; ++j) {
    y[j] = Vector::Zero(terms[j].op.rows);
    kx[j].resize(terms[j].op.rows);
    kx_new[j].resize(terms[j].op.rows);
    z[j].resize(terms[j].op.rows);
    terms[j].op.apply(x0, kx[j]);
  }

  Vector x = std::move(x0);
  Vector x_new(n);
  Vector kty = Vector::Zero(n);  // K^T y
  Vector kty_new(n);
  Vector back(n);
  Vector xbar = x;

  for (Index it = 0; it < cfg.max_iter; ++it) {
    // dual step at the extrapolated point
    kty_new.setZero();
    double dual_norm_sq = 0.0;
    for (std::size_t j = 0; j < nterms; ++j) {
      terms[j].op.apply(xbar, z[j]);
      y_old[j] = y[j];
      z[j] = y[j] + sigma * z[j];
      terms[j].prox_conjugate(z[j], sigma);
      y[j].swap(z[j]);
      terms[j].op.adjoint(y[j], back);
      kty_new += back;
      dual_norm_sq += y[j].squaredNorm();
    }

    x_new = x - tau * kty_new;
    prox_g(x_new, tau);

    // Goldstein-style residuals
    //   P = (x - x')/tau - K^T (y - y'),  D = (y - y')/sigma - K (x - x')
    const Vector primal_res = (x - x_new) / tau - (kty - kty_new);
    double dres_sq = 0.0;
    for (std::size_t j = 0; j < nterms; ++j) {
      terms[j].op.apply(x_new, kx_new[j]);
      dres_sq += ((y_old[j] - y[j]) / sigma - (kx[j] - kx_new[j])).squaredNorm();
      kx[j].swap(kx_new[j]);
    }
    const double scale = x_new.norm() / tau + std::sqrt(dual_norm_sq) / sigma;
    const double residual = (primal_res.norm() + std::sqrt(dres_sq)) / std::max(scale, 1e-300);
    diag.residuals.push_back(residual);

    xbar = x_new + cfg.theta * (x_new - x);
    x.swap(x_new);
    kty.swap(kty_new);
    diag.iterations = it + 1;
    if (!std::isfinite(residual)) break;
    if (residual <= cfg.tol) {
      diag.converged = true;
      break;
    }
  }

  return {std::move(x), std::move(xbar), std::move(diag)};
}

}  // namespace dspect
