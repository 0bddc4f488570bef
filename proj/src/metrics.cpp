#include "dspect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dspect/io.hpp"

namespace dspect {

namespace {

void check_dims(const Matrix& labels, const Matrix& curves, const Phantom& truth) {
  if (labels.rows() != truth.geom.pixels() || curves.rows() != truth.steps() || labels.cols() != curves.cols()) {
    throw std::invalid_argument("reconstruction and phantom dimensions differ");
  }
}

double residual_norm(const Matrix& labels, const Matrix& curves, const Phantom& truth) {
  check_dims(labels, curves, truth);
  return (labels * curves.transpose() - render_frames(truth)).norm();
}

}  // namespace

double image_error(const Matrix& labels, const Matrix& curves, const Phantom& truth) {
  const double nm = static_cast<double>(truth.geom.pixels()) * static_cast<double>(truth.steps());
  return residual_norm(labels, curves, truth) / nm;
}

double relative_frobenius_error(const Matrix& labels, const Matrix& curves, const Phantom& truth) {
  const double ref = render_frames(truth).norm();
  if (!(ref > 0.0)) throw std::invalid_argument("relative error of an all-zero phantom is undefined");
  return residual_norm(labels, curves, truth) / ref;
}

Segmentation segmentation_accuracy(const Matrix& labels, const Phantom& truth) {
  const Index k = labels.cols();
  if (labels.rows() != truth.geom.pixels()) throw std::invalid_argument("label field and phantom sizes differ");
  if (k != truth.regions()) throw std::invalid_argument("label field and phantom region counts differ");
  if (k > 8) throw std::invalid_argument("exhaustive label matching supports at most 8 regions");

  // confusion(j, r): pixels hardened to column j whose true region is r
  Matrix confusion = Matrix::Zero(k, k);
  for (Index p = 0; p < labels.rows(); ++p) {
    Index best = 0;
    for (Index j = 1; j < k; ++j) {
      if (labels(p, j) > labels(p, best)) best = j;
    }
    confusion(best, truth.region_map[static_cast<std::size_t>(p)]) += 1.0;
  }

  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm = perm;
  double best_hits = -1.0;
  do {
    double hits = 0.0;
    for (Index j = 0; j < k; ++j) hits += confusion(j, perm[static_cast<std::size_t>(j)]);
    if (hits > best_hits) {
      best_hits = hits;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  return {best_hits / static_cast<double>(labels.rows()), best_perm};
}

EvalReport evaluate(const Matrix& labels, const Matrix& curves, const Phantom& truth, const Matrix& g,
                    const ProjectorSet& projectors) {
  EvalReport report;
  report.l2_per_pixel_per_step = image_error(labels, curves, truth);
  report.relative_frobenius = relative_frobenius_error(labels, curves, truth);
  const auto seg = segmentation_accuracy(labels, truth);
  report.misclassification_rate = 1.0 - seg.accuracy;
  report.matching = seg.matching;

  const Index k = labels.cols();
  report.per_region_curve_rmse.assign(static_cast<std::size_t>(k), 0.0);
  for (Index j = 0; j < k; ++j) {
    const int r = seg.matching[static_cast<std::size_t>(j)];
    const double mse = (curves.col(j) - truth.curves.values.col(r)).squaredNorm() / static_cast<double>(curves.rows());
    report.per_region_curve_rmse[static_cast<std::size_t>(r)] = std::sqrt(mse);
  }
  report.kl_data_fit = kl_divergence(forward_model(projectors, labels, curves), g);
  return report;
}

void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "metric,region,value\n";
  os << "l2_per_pixel_per_step,," << format_double(report.l2_per_pixel_per_step) << '\n';
  os << "relative_frobenius,," << format_double(report.relative_frobenius) << '\n';
  os << "misclassification_rate,," << format_double(report.misclassification_rate) << '\n';
  os << "kl_data_fit,," << format_double(report.kl_data_fit) << '\n';
  for (std::size_t r = 0; r < report.per_region_curve_rmse.size(); ++r) {
    os << "curve_rmse," << r << ',' << format_double(report.per_region_curve_rmse[r]) << '\n';
  }
  for (std::size_t j = 0; j < report.matching.size(); ++j) {
    os << "matching," << j << ',' << report.matching[j] << '\n';
  }
}

void set_parameter(ObjectiveParams& params, std::string_view name, double value) {
  if (name == "alpha") {
    params.alpha = value;
  } else if (name == "beta") {
    params.beta = value;
  } else if (name == "delta") {
    params.delta = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + std::string(name) + "' (expected alpha, beta or delta)");
  }
}

std::vector<SweepRow> sweep(std::string_view param, const std::vector<double>& grid, const SolverConfig& base,
                            const Matrix& g, const ProjectorSet& projectors, const Phantom& truth) {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  std::vector<SolverConfig> configs(grid.size(), base);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw std::invalid_argument("sweep grid values must be finite");
    set_parameter(configs[i].params, param, grid[i]);
    configs[i].validate();
  }
  const GridShape shape{truth.geom.n1, truth.geom.n2};
  const Index regions = truth.regions();
  const InitialGuess init = default_initial_guess(g, projectors, regions, base.seed);

  std::vector<SweepRow> rows(grid.size());
  const auto count = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const ReconState state = reconstruct(g, projectors, shape, regions, configs[idx], init);
    SweepRow& row = rows[idx];
    row.value = grid[idx];
    row.image_error = image_error(state.labels, state.curves, truth);
    row.relative_frobenius = relative_frobenius_error(state.labels, state.curves, truth);
    row.accuracy = segmentation_accuracy(state.labels, truth).accuracy;
    row.objective = state.objective_trace.back().total();
    row.iterations = state.iterations;
    row.converged = state.converged;
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, std::string_view param, const std::vector<SweepRow>& rows) {
  os << param << ",image_error,relative_frobenius,accuracy,objective,iterations,converged\n";
  for (const auto& row : rows) {
    os << format_double(row.value) << ',' << format_double(row.image_error) << ','
       << format_double(row.relative_frobenius) << ',' << format_double(row.accuracy) << ','
       << format_double(row.objective) << ',' << row.iterations << ',' << (row.converged ? 1 : 0) << '\n';
  }
}

}  // namespace dspect
