#include "dspect/varmodel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dspect {

namespace {

void check_projectors(const ProjectorSet& projectors) {
  if (projectors.empty()) throw std::invalid_argument("operator needs at least one time step");
  const Index m = projectors.front()->bins();
  const Index n = projectors.front()->pixels();
  for (const auto& r : projectors) {
    if (!r || r->bins() != m || r->pixels() != n) {
      throw std::invalid_argument("projectors disagree on bins or pixels");
    }
  }
}

std::string shape(const Matrix& x) { return std::to_string(x.rows()) + "x" + std::to_string(x.cols()); }

}  // namespace

void ObjectiveParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(delta >= 0.0)) {
    throw std::invalid_argument("regularisation weights must be nonnegative");
  }
  if (!(kl_floor >= 0.0)) throw std::invalid_argument("KL floor must be nonnegative (0 selects the default)");
}

double resolve_kl_floor(const Matrix& g, double kl_floor) {
  if (kl_floor > 0.0) return kl_floor;
  const double gmax = g.size() > 0 ? g.maxCoeff() : 0.0;
  return gmax > 0.0 ? 1e-12 * gmax : std::numeric_limits<double>::min();
}

double kl_divergence(const Matrix& p, const Matrix& g, double kl_floor) {
  if (p.rows() != g.rows() || p.cols() != g.cols()) {
    throw std::invalid_argument("KL: shape mismatch " + shape(p) + " vs " + shape(g));
  }
  if ((p.array() < 0.0).any() || (g.array() < 0.0).any()) {
    throw std::invalid_argument("KL: arguments must be nonnegative");
  }
  const double floor = resolve_kl_floor(g, kl_floor);
  double total = 0.0;
  for (Index j = 0; j < p.cols(); ++j) {
    for (Index i = 0; i < p.rows(); ++i) {
      const double gi = g(i, j);
      const double pi = p(i, j);
      total += pi - gi;
      if (gi > 0.0) total += gi * std::log(gi / std::max(pi, floor));
    }
  }
  return total;
}

void grid_gradient(const Eigen::Ref<const Vector>& u, GridShape grid, Eigen::Ref<Vector> out) {
  const Index n = grid.size();
  for (Index r = 0; r < grid.rows; ++r) {
    for (Index c = 0; c < grid.cols; ++c) {
      const Index p = r * grid.cols + c;
      out[p] = (r + 1 < grid.rows) ? u[p + grid.cols] - u[p] : 0.0;
      out[n + p] = (c + 1 < grid.cols) ? u[p + 1] - u[p] : 0.0;
    }
  }
}

void grid_gradient_adjoint(const Eigen::Ref<const Vector>& q, GridShape grid, Eigen::Ref<Vector> out) {
  const Index n = grid.size();
  for (Index r = 0; r < grid.rows; ++r) {
    for (Index c = 0; c < grid.cols; ++c) {
      const Index p = r * grid.cols + c;
      double v = 0.0;
      if (r + 1 < grid.rows) v -= q[p];
      if (r > 0) v += q[p - grid.cols];
      if (c + 1 < grid.cols) v -= q[n + p];
      if (c > 0) v += q[n + p - 1];
      out[p] = v;
    }
  }
}

Vector grid_gradient(const Eigen::Ref<const Vector>& u, GridShape grid) {
  Vector out(2 * grid.size());
  grid_gradient(u, grid, out);
  return out;
}

double tv_aniso(const Eigen::Ref<const Vector>& u, GridShape grid) {
  if (u.size() != grid.size()) throw std::invalid_argument("TV: field size does not match the grid");
  return grid_gradient(u, grid).lpNorm<1>();
}

void time_difference(const Eigen::Ref<const Vector>& c, Eigen::Ref<Vector> out) {
  for (Index t = 0; t + 1 < c.size(); ++t) out[t] = c[t + 1] - c[t];
}

void time_difference_adjoint(const Eigen::Ref<const Vector>& d, Eigen::Ref<Vector> out) {
  const Index m = d.size() + 1;
  for (Index t = 0; t < m; ++t) {
    double v = 0.0;
    if (t > 0) v += d[t - 1];
    if (t + 1 < m) v -= d[t];
    out[t] = v;
  }
}

OperatorA::OperatorA(const ProjectorSet& projectors, Matrix curves)
    : projectors_(projectors), curves_(std::move(curves)) {
  check_projectors(projectors_);
  if (curves_.rows() != static_cast<Index>(projectors_.size())) {
    throw std::invalid_argument("curve matrix has " + std::to_string(curves_.rows()) + " time steps, expected " +
                                std::to_string(projectors_.size()));
  }
  const Index n = projectors_.front()->pixels();
  Matrix back(n, curves_.rows());
  for (Index t = 0; t < curves_.rows(); ++t) back.col(t) = projectors_[static_cast<std::size_t>(t)]->col_sums();
  sensitivity_ = back * curves_;
}

Matrix OperatorA::apply(const Matrix& labels) const {
  const Index n = projectors_.front()->pixels();
  if (labels.rows() != n || labels.cols() != curves_.cols()) {
    throw std::invalid_argument("A: label matrix is " + shape(labels) + ", expected " + std::to_string(n) + "x" +
                                std::to_string(curves_.cols()));
  }
  const Index steps = curves_.rows();
  Matrix out(projectors_.front()->bins(), steps);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < steps; ++t) {
    const Vector frame = labels * curves_.row(t).transpose();
    out.col(t) = projectors_[static_cast<std::size_t>(t)]->matrix() * frame;
  }
  return out;
}

Matrix OperatorA::adjoint(const Matrix& y) const {
  const Index steps = curves_.rows();
  if (y.rows() != projectors_.front()->bins() || y.cols() != steps) {
    throw std::invalid_argument("A^T: data matrix is " + shape(y) + ", expected " +
                                std::to_string(projectors_.front()->bins()) + "x" + std::to_string(steps));
  }
  Matrix back(projectors_.front()->pixels(), steps);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < steps; ++t) {
    back.col(t) = projectors_[static_cast<std::size_t>(t)]->matrix().transpose() * y.col(t);
  }
  return back * curves_;
}

OperatorB::OperatorB(const ProjectorSet& projectors, const Matrix& labels) {
  check_projectors(projectors);
  pixels_ = projectors.front()->pixels();
  if (labels.rows() != pixels_) {
    throw std::invalid_argument("B: label matrix has " + std::to_string(labels.rows()) + " rows, expected " +
                                std::to_string(pixels_));
  }
  projected_labels_.resize(projectors.size());
#pragma omp parallel for schedule(static)
  for (std::size_t t = 0; t < projectors.size(); ++t) projected_labels_[t] = projectors[t]->matrix() * labels;
  sensitivity_ = adjoint(Matrix::Ones(projectors.front()->bins(), static_cast<Index>(projectors.size())));
}

Matrix OperatorB::apply(const Matrix& curves) const {
  const auto steps = static_cast<Index>(projected_labels_.size());
  const Index k = projected_labels_.front().cols();
  if (curves.rows() != steps || curves.cols() != k) {
    throw std::invalid_argument("B: curve matrix is " + shape(curves) + ", expected " + std::to_string(steps) + "x" +
                                std::to_string(k));
  }
  Matrix out(projected_labels_.front().rows(), steps);
  for (Index t = 0; t < steps; ++t) {
    out.col(t) = projected_labels_[static_cast<std::size_t>(t)] * curves.row(t).transpose();
  }
  return out;
}

Matrix OperatorB::adjoint(const Matrix& y) const {
  const auto steps = static_cast<Index>(projected_labels_.size());
  const Index m = projected_labels_.front().rows();
  if (y.rows() != m || y.cols() != steps) {
    throw std::invalid_argument("B^T: data matrix is " + shape(y) + ", expected " + std::to_string(m) + "x" +
                                std::to_string(steps));
  }
  Matrix out(steps, projected_labels_.front().cols());
  for (Index t = 0; t < steps; ++t) {
    out.row(t) = (projected_labels_[static_cast<std::size_t>(t)].transpose() * y.col(t)).transpose();
  }
  return out;
}

bool on_simplex(const Matrix& labels, double tol) {
  if (labels.size() == 0) return false;
  if ((labels.array() < -tol).any() || (labels.array() > 1.0 + tol).any()) return false;
  return ((labels.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

Matrix forward_model(const ProjectorSet& projectors, const Matrix& labels, const Matrix& curves) {
  return OperatorA(projectors, curves).apply(labels);
}

ObjectiveTerms objective(const Matrix& labels, const Matrix& curves, const Matrix& g, const ObjectiveParams& params,
                         const ProjectorSet& projectors, GridShape grid) {
  params.validate();
  if (labels.rows() != grid.size()) throw std::invalid_argument("objective: labels do not match the grid");
  ObjectiveTerms terms;
  terms.feasible = on_simplex(labels) && (curves.array() >= 0.0).all();

  const Matrix model = forward_model(projectors, labels, curves).cwiseMax(0.0);
  terms.kl = kl_divergence(model, g, params.kl_floor);

  double tv = 0.0;
  for (Index k = 0; k < labels.cols(); ++k) tv += tv_aniso(labels.col(k), grid);
  terms.tv = params.alpha * tv;
  terms.l1 = params.beta * labels.lpNorm<1>();

  double smooth = 0.0;
  Vector diff(std::max<Index>(curves.rows() - 1, 0));
  for (Index k = 0; k < curves.cols(); ++k) {
    time_difference(curves.col(k), diff);
    smooth += diff.squaredNorm();
  }
  terms.smooth = 0.5 * params.delta * smooth;
  return terms;
}

}  // namespace dspect
