#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dspect/prox.hpp"
#include "dspect/varmodel.hpp"

namespace dspect {

struct SolverConfig {
  Index outer_max = 1000;
  Index inner_max = 10000;
  double damping = 0.9;
  double outer_tol = 1e-6;  // on max(||dU||_F, ||dC||_F)
  double inner_tol = 1e-6;  // on the normalised primal-dual residual
  double em_floor = 1e-10;  // relative to the mean of U (or C)
  std::uint64_t seed = 0;   // initial symmetry-breaking perturbation
  ObjectiveParams params;

  void validate() const;
};

struct InitialGuess {
  Matrix labels;  // n x K
  Matrix curves;  // M x K
};

struct ReconState {
  Matrix labels;
  Matrix curves;
  Index iterations = 0;
  std::vector<ObjectiveTerms> objective_trace;  // entry 0 is the starting point
  std::vector<double> change_trace;
  std::vector<Index> label_inner_iterations;
  std::vector<Index> curve_inner_iterations;
  bool converged = false;
  bool inner_nonconverged = false;
  Index zero_sensitivity_entries = 0;

  /// Row argmax of the labels; ties go to the lowest region index.
  std::vector<int> hard_labels() const;
  Matrix hardened_labels() const;
};

struct EmStepInfo {
  Index zero_sensitivity = 0;
};

/// w (U / A^T 1) A^T(g / A U) + (1 - w) U, entries with zero sensitivity kept.
Matrix em_surrogate_labels(const Matrix& labels, const OperatorA& op, const Matrix& g, double damping,
                           double data_floor, EmStepInfo* info = nullptr);
/// Same update for the curves with U held fixed.
Matrix em_surrogate_curves(const Matrix& curves, const OperatorB& op, const Matrix& g, double damping,
                           double data_floor, EmStepInfo* info = nullptr);

struct SubproblemOptions {
  bool enforce_constraint = true;  // simplex for labels, nonnegativity for curves
};

/// argmin_U 1/2 || sqrt(sens) (U - U~) / sqrt(U_prev) ||^2 + w alpha sum TV(U_k)
///          + w beta ||U||_1 + w delta_S(U), with K = (grad, I, I).
Matrix solve_label_subproblem(const Matrix& surrogate, const Matrix& previous, const Matrix& sensitivity,
                              const ObjectiveParams& params, double damping, GridShape grid, const PdhgConfig& cfg,
                              double floor, const SubproblemOptions& options = {},
                              PdhgDiagnostics* diagnostics = nullptr);

/// argmin_C 1/2 || sqrt(sens) (C - C~) / sqrt(C_prev) ||^2 + w delta/2 sum ||grad_t C_k||^2
///          + w delta_+(C), with K = (grad_t, I).
Matrix solve_curve_subproblem(const Matrix& surrogate, const Matrix& previous, const Matrix& sensitivity,
                              const ObjectiveParams& params, double damping, const PdhgConfig& cfg, double floor,
                              const SubproblemOptions& options = {}, PdhgDiagnostics* diagnostics = nullptr);

/// Uniform labels with a tiny seeded perturbation, curves scaled so the
/// first guess matches the data mass of every time step.
InitialGuess default_initial_guess(const Matrix& g, const ProjectorSet& projectors, Index regions, std::uint64_t seed);

using IterationCallback = std::function<void(const ReconState&)>;

/// Alternating damped-EM / PDHG reconstruction of labels and curves.
ReconState reconstruct(const Matrix& g, const ProjectorSet& projectors, GridShape grid, Index regions,
                       const SolverConfig& cfg, const std::optional<InitialGuess>& init = std::nullopt,
                       const IterationCallback& on_iteration = {});

/// Plain alternating EM without regularisation; labels renormalised per row.
ReconState reconstruct_baseline_em(const Matrix& g, const ProjectorSet& projectors, GridShape grid, Index regions,
                                   const SolverConfig& cfg, const std::optional<InitialGuess>& init = std::nullopt,
                                   const IterationCallback& on_iteration = {});

}  // namespace dspect
