#include "dspect/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace dspect {

Vector soft_shrink(const Eigen::Ref<const Vector>& x, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("shrinkage threshold must be nonnegative");
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x[i]) - lambda;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
  return out;
}

namespace {

// Sort-and-threshold projection onto the unit simplex for a strided row.
template <typename Row>
void project_row(Row&& row, std::vector<double>& scratch) {
  const Index k = row.size();
  scratch.resize(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) scratch[static_cast<std::size_t>(j)] = row[j];
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double cumsum = 0.0;
  double threshold = 0.0;
  for (Index j = 0; j < k; ++j) {
    cumsum += scratch[static_cast<std::size_t>(j)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (scratch[static_cast<std::size_t>(j)] - candidate > 0.0) threshold = candidate;
  }
  for (Index j = 0; j < k; ++j) row[j] = std::max(row[j] - threshold, 0.0);
}

}  // namespace

Vector project_simplex(const Eigen::Ref<const Vector>& x) {
  if (x.size() == 0) throw std::invalid_argument("cannot project an empty vector onto the simplex");
  Vector out = x;
  std::vector<double> scratch;
  project_row(out, scratch);
  return out;
}

void project_simplex_rows_inplace(Eigen::Ref<Matrix> rows) {
  if (rows.cols() == 0) throw std::invalid_argument("cannot project rows with no columns onto the simplex");
  std::vector<double> scratch;
  for (Index i = 0; i < rows.rows(); ++i) project_row(rows.row(i), scratch);
}

Matrix project_simplex_rows(const Matrix& rows) {
  Matrix out = rows;
  project_simplex_rows_inplace(out);
  return out;
}

Vector prox_nonneg(const Eigen::Ref<const Vector>& x) { return x.cwiseMax(0.0); }

void WeightedQuadratic::prox_inplace(Eigen::Ref<Vector> x, double tau) const {
  if (!(tau > 0.0)) throw std::invalid_argument("prox step must be positive");
  const double inv_tau = 1.0 / tau;
  for (Index i = 0; i < x.size(); ++i) {
    const double a = weight[i] / std::max(previous[i], floor);
    x[i] = (a * center[i] + x[i] * inv_tau) / (a + inv_tau);
  }
}

Vector WeightedQuadratic::prox(const Eigen::Ref<const Vector>& x, double tau) const {
  if (weight.size() != x.size() || center.size() != x.size() || previous.size() != x.size()) {
    throw std::invalid_argument("weighted quadratic: size mismatch");
  }
  Vector out = x;
  prox_inplace(out, tau);
  return out;
}

Vector prox_scaled_sq_l2(const Eigen::Ref<const Vector>& y, double weight, double sigma) {
  if (!(weight >= 0.0)) throw std::invalid_argument("quadratic weight must be nonnegative");
  if (!(sigma > 0.0)) throw std::invalid_argument("prox step must be positive");
  return y / (1.0 + sigma * weight);
}

Vector conjugate_prox(const ProxFn& prox, const Vector& z, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("prox step must be positive");
  return z - sigma * prox(z / sigma, 1.0 / sigma);
}

}  // namespace dspect
