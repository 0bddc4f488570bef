#pragma once

#include <limits>

#include "dspect/tomo.hpp"
#include "dspect/types.hpp"

namespace dspect {

struct ObjectiveParams {
  double alpha = 0.0;     // total variation weight
  double beta = 0.0;      // L1 weight on the labels
  double delta = 0.0;     // temporal smoothness weight on the curves
  double kl_floor = 0.0;  // 0 selects 1e-12 * max(g)

  void validate() const;
};

/// Floor actually used by kl() for data g.
double resolve_kl_floor(const Matrix& g, double kl_floor);

/// sum(p - g + g log(g / p)), with 0 log 0 = 0 and p clamped below by the floor.
double kl_divergence(const Matrix& p, const Matrix& g, double kl_floor = 0.0);

/// Row-major pixel grid for the spatial difference operator.
struct GridShape {
  Index rows = 0;
  Index cols = 0;
  Index size() const { return rows * cols; }
};

/// Forward differences with a zero difference on the last row/column.
/// Output layout: [vertical differences (n); horizontal differences (n)].
void grid_gradient(const Eigen::Ref<const Vector>& u, GridShape grid, Eigen::Ref<Vector> out);
/// Transpose of grid_gradient (a negative divergence).
void grid_gradient_adjoint(const Eigen::Ref<const Vector>& p, GridShape grid, Eigen::Ref<Vector> out);
Vector grid_gradient(const Eigen::Ref<const Vector>& u, GridShape grid);
double tv_aniso(const Eigen::Ref<const Vector>& u, GridShape grid);

/// Forward differences in time: length M - 1 per column, no boundary term.
void time_difference(const Eigen::Ref<const Vector>& c, Eigen::Ref<Vector> out);
void time_difference_adjoint(const Eigen::Ref<const Vector>& d, Eigen::Ref<Vector> out);

/// vec(R U C^T) viewed as a linear map of U, with C held fixed.
class OperatorA {
 public:
  OperatorA(const ProjectorSet& projectors, Matrix curves);

  /// m x M, column t = R_t U C(t,:)^T.
  Matrix apply(const Matrix& labels) const;
  /// n x K, entry (p, k) = sum_t C(t, k) (R_t^T y(:, t))(p).
  Matrix adjoint(const Matrix& y) const;
  /// adjoint of the all-ones sinogram.
  const Matrix& sensitivity() const { return sensitivity_; }
  const Matrix& curves() const { return curves_; }

 private:
  ProjectorSet projectors_;
  Matrix curves_;
  Matrix sensitivity_;
};

/// vec(R U C^T) viewed as a linear map of C, with U held fixed.
class OperatorB {
 public:
  OperatorB(const ProjectorSet& projectors, const Matrix& labels);

  Matrix apply(const Matrix& curves) const;
  /// M x K, entry (t, k) = (R_t U(:, k))^T y(:, t).
  Matrix adjoint(const Matrix& y) const;
  const Matrix& sensitivity() const { return sensitivity_; }

 private:
  std::vector<Matrix> projected_labels_;  // R_t U per time step, m x K
  Index pixels_ = 0;
  Matrix sensitivity_;
};

/// Row sums equal to one (within tol) and entries inside [-tol, 1 + tol].
bool on_simplex(const Matrix& labels, double tol = 1e-9);

struct ObjectiveTerms {
  double kl = 0.0;
  double tv = 0.0;      // alpha * sum_k TV(U_k)
  double l1 = 0.0;      // beta * ||U||_1
  double smooth = 0.0;  // delta / 2 * sum_k ||grad_t C_k||^2
  bool feasible = true;
  double total() const {
    return feasible ? kl + tv + l1 + smooth : std::numeric_limits<double>::infinity();
  }
};

ObjectiveTerms objective(const Matrix& labels, const Matrix& curves, const Matrix& g, const ObjectiveParams& params,
                         const ProjectorSet& projectors, GridShape grid);

/// m x M matrix R_t U C(t,:)^T.
Matrix forward_model(const ProjectorSet& projectors, const Matrix& labels, const Matrix& curves);

}  // namespace dspect
