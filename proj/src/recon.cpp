#include "dspect/recon.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace dspect {

void SolverConfig::validate() const {
  if (outer_max < 1 || inner_max < 1) throw std::invalid_argument("iteration limits must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  if (!(outer_tol > 0.0) || !(inner_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(em_floor > 0.0)) throw std::invalid_argument("EM floor must be positive");
  params.validate();
}

std::vector<int> ReconState::hard_labels() const {
  std::vector<int> out(static_cast<std::size_t>(labels.rows()));
  for (Index p = 0; p < labels.rows(); ++p) {
    Index best = 0;
    for (Index k = 1; k < labels.cols(); ++k) {
      if (labels(p, k) > labels(p, best)) best = k;
    }
    out[static_cast<std::size_t>(p)] = static_cast<int>(best);
  }
  return out;
}

Matrix ReconState::hardened_labels() const {
  Matrix out = Matrix::Zero(labels.rows(), labels.cols());
  const auto hard = hard_labels();
  for (Index p = 0; p < labels.rows(); ++p) out(p, hard[static_cast<std::size_t>(p)]) = 1.0;
  return out;
}

namespace {

// factor * x / sens elementwise, leaving x unchanged where sens == 0.
Matrix em_combine(const Matrix& x, const Matrix& back, const Matrix& sens, double damping, EmStepInfo* info) {
  Matrix out(x.rows(), x.cols());
  Index zeros = 0;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      if (sens(i, j) > 0.0) {
        out(i, j) = damping * x(i, j) / sens(i, j) * back(i, j) + (1.0 - damping) * x(i, j);
      } else {
        out(i, j) = x(i, j);
        ++zeros;
      }
    }
  }
  if (info) info->zero_sensitivity = zeros;
  return out;
}

Matrix data_ratio(const Matrix& g, const Matrix& model, double floor) {
  return g.array() / model.array().max(floor);
}

void check_data(const Matrix& g, const ProjectorSet& projectors) {
  if (projectors.empty()) throw std::invalid_argument("reconstruction needs at least one time step");
  if (g.cols() != static_cast<Index>(projectors.size()) || g.rows() != projectors.front()->bins()) {
    throw std::invalid_argument("data is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                                " but the schedule expects " + std::to_string(projectors.front()->bins()) + "x" +
                                std::to_string(projectors.size()));
  }
  if (!g.allFinite() || (g.array() < 0.0).any()) {
    throw std::invalid_argument("data must be finite and nonnegative");
  }
}

double relative_floor(const Matrix& x, double rel) {
  const double mean = x.size() > 0 ? x.cwiseAbs().mean() : 0.0;
  return rel * (mean > 0.0 ? mean : 1.0);
}

// Moreau: prox_{sigma F*}(z) = z - sigma prox_{F/sigma}(z / sigma), applied
// with an in-place prox of F / sigma.
template <typename ProxOfScaled>
void moreau_dual_step(Vector& z, double sigma, ProxOfScaled&& prox_scaled) {
  Vector u = z / sigma;
  prox_scaled(u);
  z -= sigma * u;
}

LinearMap identity_map(Index size) {
  LinearMap op;
  op.rows = size;
  op.cols = size;
  op.apply = [](const Vector& x, Vector& out) { out = x; };
  op.adjoint = [](const Vector& y, Vector& out) { out = y; };
  op.max_row_abs_sum = 1.0;
  op.max_col_abs_sum = 1.0;
  return op;
}

LinearMap spatial_gradient_map(GridShape grid, Index regions) {
  const Index n = grid.size();
  LinearMap op;
  op.rows = 2 * n * regions;
  op.cols = n * regions;
  op.apply = [grid, n, regions](const Vector& x, Vector& out) {
    for (Index k = 0; k < regions; ++k) grid_gradient(x.segment(k * n, n), grid, out.segment(2 * k * n, 2 * n));
  };
  op.adjoint = [grid, n, regions](const Vector& y, Vector& out) {
    for (Index k = 0; k < regions; ++k) {
      grid_gradient_adjoint(y.segment(2 * k * n, 2 * n), grid, out.segment(k * n, n));
    }
  };
  op.max_row_abs_sum = 2.0;
  op.max_col_abs_sum = 4.0;
  return op;
}

LinearMap temporal_gradient_map(Index steps, Index regions) {
  LinearMap op;
  op.rows = (steps - 1) * regions;
  op.cols = steps * regions;
  op.apply = [steps, regions](const Vector& x, Vector& out) {
    for (Index k = 0; k < regions; ++k) time_difference(x.segment(k * steps, steps), out.segment(k * (steps - 1), steps - 1));
  };
  op.adjoint = [steps, regions](const Vector& y, Vector& out) {
    for (Index k = 0; k < regions; ++k) {
      time_difference_adjoint(y.segment(k * (steps - 1), steps - 1), out.segment(k * steps, steps));
    }
  };
  op.max_row_abs_sum = 2.0;
  op.max_col_abs_sum = 2.0;
  return op;
}

void shrink_inplace(Vector& u, double lambda) {
  for (Index i = 0; i < u.size(); ++i) {
    const double mag = std::abs(u[i]) - lambda;
    u[i] = mag > 0.0 ? std::copysign(mag, u[i]) : 0.0;
  }
}

std::vector<DualTerm> label_terms(const ObjectiveParams& params, double damping, GridShape grid, Index regions,
                                  bool enforce_simplex) {
  const Index n = grid.size();
  const double tv_weight = damping * params.alpha;
  const double l1_weight = damping * params.beta;
  std::vector<DualTerm> terms;
  terms.push_back({spatial_gradient_map(grid, regions), [tv_weight](Vector& z, double sigma) {
                     moreau_dual_step(z, sigma, [&](Vector& u) { shrink_inplace(u, tv_weight / sigma); });
                   }});
  terms.push_back({identity_map(n * regions), [l1_weight](Vector& z, double sigma) {
                     moreau_dual_step(z, sigma, [&](Vector& u) { shrink_inplace(u, l1_weight / sigma); });
                   }});
  if (enforce_simplex) {
    terms.push_back({identity_map(n * regions), [n, regions](Vector& z, double sigma) {
                       moreau_dual_step(z, sigma, [&](Vector& u) {
                         project_simplex_rows_inplace(Eigen::Map<Matrix>(u.data(), n, regions));
                       });
                     }});
  }
  return terms;
}

std::vector<DualTerm> curve_terms(const ObjectiveParams& params, double damping, Index steps, Index regions,
                                  bool enforce_nonneg) {
  const double smooth_weight = damping * params.delta;
  std::vector<DualTerm> terms;
  if (steps > 1) {
    terms.push_back({temporal_gradient_map(steps, regions), [smooth_weight](Vector& z, double sigma) {
                       moreau_dual_step(z, sigma, [&](Vector& u) { u = prox_scaled_sq_l2(u, smooth_weight, 1.0 / sigma); });
                     }});
  }
  if (enforce_nonneg) {
    terms.push_back({identity_map(steps * regions), [](Vector& z, double sigma) {
                       moreau_dual_step(z, sigma, [](Vector& u) { u = u.cwiseMax(0.0); });
                     }});
  }
  return terms;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}

WeightedQuadratic make_quadratic(const Matrix& sens, const Matrix& surrogate, const Matrix& previous, double floor) {
  return WeightedQuadratic{Eigen::Map<const Vector>(sens.data(), sens.size()),
                           Eigen::Map<const Vector>(surrogate.data(), surrogate.size()),
                           Eigen::Map<const Vector>(previous.data(), previous.size()), floor};
}

}  // namespace

Matrix em_surrogate_labels(const Matrix& labels, const OperatorA& op, const Matrix& g, double damping,
                           double data_floor, EmStepInfo* info) {
  const Matrix ratio = data_ratio(g, op.apply(labels), data_floor);
  return em_combine(labels, op.adjoint(ratio), op.sensitivity(), damping, info);
}

Matrix em_surrogate_curves(const Matrix& curves, const OperatorB& op, const Matrix& g, double damping,
                           double data_floor, EmStepInfo* info) {
  const Matrix ratio = data_ratio(g, op.apply(curves), data_floor);
  return em_combine(curves, op.adjoint(ratio), op.sensitivity(), damping, info);
}

Matrix solve_label_subproblem(const Matrix& surrogate, const Matrix& previous, const Matrix& sensitivity,
                              const ObjectiveParams& params, double damping, GridShape grid, const PdhgConfig& cfg,
                              double floor, const SubproblemOptions& options, PdhgDiagnostics* diagnostics) {
  check_same_shape(surrogate, previous, "label subproblem");
  check_same_shape(surrogate, sensitivity, "label subproblem");
  if (surrogate.rows() != grid.size()) throw std::invalid_argument("label subproblem: grid does not match labels");
  const Index n = surrogate.rows();
  const Index regions = surrogate.cols();

  const auto terms = label_terms(params, damping, grid, regions, options.enforce_constraint);
  const auto quad = make_quadratic(sensitivity, surrogate, previous, floor);
  auto result = pdhg_solve(terms, [&quad](Vector& x, double tau) { quad.prox_inplace(x, tau); }, cfg,
                           Eigen::Map<const Vector>(surrogate.data(), surrogate.size()));

  Matrix out = Eigen::Map<Matrix>(result.solution.data(), n, regions);
  if (options.enforce_constraint) project_simplex_rows_inplace(out);
  if (diagnostics) *diagnostics = std::move(result.diagnostics);
  return out;
}

Matrix solve_curve_subproblem(const Matrix& surrogate, const Matrix& previous, const Matrix& sensitivity,
                              const ObjectiveParams& params, double damping, const PdhgConfig& cfg, double floor,
                              const SubproblemOptions& options, PdhgDiagnostics* diagnostics) {
  check_same_shape(surrogate, previous, "curve subproblem");
  check_same_shape(surrogate, sensitivity, "curve subproblem");
  const Index steps = surrogate.rows();
  const Index regions = surrogate.cols();

  const auto terms = curve_terms(params, damping, steps, regions, options.enforce_constraint);
  const auto quad = make_quadratic(sensitivity, surrogate, previous, floor);
  auto result = pdhg_solve(terms, [&quad](Vector& x, double tau) { quad.prox_inplace(x, tau); }, cfg,
                           Eigen::Map<const Vector>(surrogate.data(), surrogate.size()));

  Matrix out = Eigen::Map<Matrix>(result.solution.data(), steps, regions);
  if (options.enforce_constraint) out = out.cwiseMax(0.0);
  if (diagnostics) *diagnostics = std::move(result.diagnostics);
  return out;
}

InitialGuess default_initial_guess(const Matrix& g, const ProjectorSet& projectors, Index regions,
                                   std::uint64_t seed) {
  check_data(g, projectors);
  if (regions < 1) throw std::invalid_argument("need at least one region");
  const Index n = projectors.front()->pixels();
  const Index steps = g.cols();

  InitialGuess init;
  init.labels = Matrix::Constant(n, regions, 1.0 / static_cast<double>(regions));
  if (regions > 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-1e-6, 1e-6);
    for (Index k = 0; k < regions; ++k) {
      for (Index p = 0; p < n; ++p) init.labels(p, k) += jitter(rng);
    }
    project_simplex_rows_inplace(init.labels);
  }

  // level a_t makes a constant image reproduce the counts of step t
  Vector level(steps);
  for (Index t = 0; t < steps; ++t) {
    const double sens = projectors[static_cast<std::size_t>(t)]->row_sums().sum();
    level[t] = sens > 0.0 ? g.col(t).sum() / sens : 0.0;
  }
  const double positive_mean = level.sum() > 0.0 ? level.sum() / static_cast<double>(steps) : 1.0;
  for (Index t = 0; t < steps; ++t) level[t] = std::max(level[t], 1e-3 * positive_mean);

  // column k ramps linearly in time with its own slope, so no two columns
  // share a temporal profile
  init.curves.resize(steps, regions);
  for (Index k = 0; k < regions; ++k) {
    const double slope = regions > 1 ? 2.0 * static_cast<double>(k) / static_cast<double>(regions - 1) - 1.0 : 0.0;
    for (Index t = 0; t < steps; ++t) {
      const double s = steps > 1 ? 2.0 * static_cast<double>(t) / static_cast<double>(steps - 1) - 1.0 : 0.0;
      init.curves(t, k) = level[t] * (1.0 + 0.5 * slope * s);
    }
  }
  return init;
}

namespace {

enum class Mode { regularised, baseline };

ReconState run(Mode mode, const Matrix& g, const ProjectorSet& projectors, GridShape grid, Index regions,
               const SolverConfig& cfg, const std::optional<InitialGuess>& init,
               const IterationCallback& on_iteration) {
  cfg.validate();
  check_data(g, projectors);
  if (grid.size() != projectors.front()->pixels()) {
    throw std::invalid_argument("grid has " + std::to_string(grid.size()) + " pixels, projectors expect " +
                                std::to_string(projectors.front()->pixels()));
  }
  const InitialGuess start = init ? *init : default_initial_guess(g, projectors, regions, cfg.seed);
  if (start.labels.rows() != grid.size() || start.labels.cols() != regions || start.curves.rows() != g.cols() ||
      start.curves.cols() != regions) {
    throw std::invalid_argument("initial guess has the wrong shape");
  }

  ReconState state;
  state.labels = start.labels;
  state.curves = start.curves;
  state.objective_trace.push_back(objective(state.labels, state.curves, g, cfg.params, projectors, grid));

  const double data_floor = resolve_kl_floor(g, cfg.params.kl_floor);
  const double w = mode == Mode::baseline ? 1.0 : cfg.damping;

  PdhgConfig inner;
  inner.max_iter = cfg.inner_max;
  inner.tol = cfg.inner_tol;
  // operator norms depend only on the sizes, so estimate them once
  const double label_norm_sq =
      estimate_norm_sq(label_terms(cfg.params, w, grid, regions, true), grid.size() * regions, inner.power_iterations);
  const double curve_norm_sq =
      estimate_norm_sq(curve_terms(cfg.params, w, g.cols(), regions, true), g.cols() * regions, inner.power_iterations);

  for (Index it = 0; it < cfg.outer_max; ++it) {
    EmStepInfo info;
    PdhgDiagnostics diag;

    // labels: EM step then regularised subproblem
    const Matrix labels_prev = state.labels;
    const double label_floor = relative_floor(state.labels, cfg.em_floor);
    const Matrix labels_guarded = state.labels.cwiseMax(label_floor);
    const OperatorA op_a(projectors, state.curves);
    Matrix labels_tilde = em_surrogate_labels(labels_guarded, op_a, g, w, data_floor, &info);
    state.zero_sensitivity_entries += info.zero_sensitivity;
    if (mode == Mode::baseline) {
      for (Index p = 0; p < labels_tilde.rows(); ++p) {
        const double sum = labels_tilde.row(p).sum();
        if (sum > 0.0) {
          labels_tilde.row(p) /= sum;
        } else {
          labels_tilde.row(p).setConstant(1.0 / static_cast<double>(regions));
        }
      }
      state.labels = labels_tilde;
    } else {
      inner.norm_sq_hint = label_norm_sq;
      state.labels = solve_label_subproblem(labels_tilde, labels_guarded, op_a.sensitivity(), cfg.params, w, grid,
                                            inner, label_floor, {}, &diag);
      state.label_inner_iterations.push_back(diag.iterations);
      if (!diag.converged) state.inner_nonconverged = true;
    }

    // curves: EM step then regularised subproblem, with the new labels
    const Matrix curves_prev = state.curves;
    const double curve_floor = relative_floor(state.curves, cfg.em_floor);
    const Matrix curves_guarded = state.curves.cwiseMax(curve_floor);
    const OperatorB op_b(projectors, state.labels);
    const Matrix curves_tilde = em_surrogate_curves(curves_guarded, op_b, g, w, data_floor, &info);
    state.zero_sensitivity_entries += info.zero_sensitivity;
    if (mode == Mode::baseline) {
      state.curves = curves_tilde;
    } else {
      inner.norm_sq_hint = curve_norm_sq;
      state.curves = solve_curve_subproblem(curves_tilde, curves_guarded, op_b.sensitivity(), cfg.params, w, inner,
                                            curve_floor, {}, &diag);
      state.curve_inner_iterations.push_back(diag.iterations);
      if (!diag.converged) state.inner_nonconverged = true;
    }

    const double change = std::max((state.labels - labels_prev).norm(), (state.curves - curves_prev).norm());
    state.change_trace.push_back(change);
    state.objective_trace.push_back(objective(state.labels, state.curves, g, cfg.params, projectors, grid));
    state.iterations = it + 1;
    if (on_iteration) on_iteration(state);
    if (!std::isfinite(change)) break;
    if (change < cfg.outer_tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace

ReconState reconstruct(const Matrix& g, const ProjectorSet& projectors, GridShape grid, Index regions,
                       const SolverConfig& cfg, const std::optional<InitialGuess>& init,
                       const IterationCallback& on_iteration) {
  return run(Mode::regularised, g, projectors, grid, regions, cfg, init, on_iteration);
}

ReconState reconstruct_baseline_em(const Matrix& g, const ProjectorSet& projectors, GridShape grid, Index regions,
                                   const SolverConfig& cfg, const std::optional<InitialGuess>& init,
                                   const IterationCallback& on_iteration) {
  return run(Mode::baseline, g, projectors, grid, regions, cfg, init, on_iteration);
}

}  // namespace dspect
