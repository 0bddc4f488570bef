#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dspect/kinetics.hpp"
#include "dspect/recon.hpp"

namespace dspect {

/// ||U C^T - F||_F / (n M).
double image_error(const Matrix& labels, const Matrix& curves, const Phantom& truth);
/// ||U C^T - F||_F / ||F||_F.
double relative_frobenius_error(const Matrix& labels, const Matrix& curves, const Phantom& truth);

struct Segmentation {
  double accuracy = 0.0;
  /// matching[k] is the true region assigned to reconstructed column k.
  std::vector<int> matching;
};

/// Argmax-hardened labels compared with the truth under the best column
/// permutation (exhaustive, K <= 8).
Segmentation segmentation_accuracy(const Matrix& labels, const Phantom& truth);

struct EvalReport {
  double l2_per_pixel_per_step = 0.0;
  double relative_frobenius = 0.0;
  double misclassification_rate = 0.0;
  std::vector<double> per_region_curve_rmse;  // indexed by true region
  double kl_data_fit = 0.0;
  std::vector<int> matching;
};

EvalReport evaluate(const Matrix& labels, const Matrix& curves, const Phantom& truth, const Matrix& g,
                    const ProjectorSet& projectors);

void write_report_csv(std::ostream& os, const EvalReport& report);

struct SweepRow {
  double value = 0.0;
  double image_error = 0.0;
  double relative_frobenius = 0.0;
  double accuracy = 0.0;
  double objective = 0.0;
  Index iterations = 0;
  bool converged = false;
};

/// Setter for alpha, beta or delta; throws on any other name.
void set_parameter(ObjectiveParams& params, std::string_view name, double value);

/// Runs reconstruct once per grid value (in parallel), other settings fixed.
std::vector<SweepRow> sweep(std::string_view param, const std::vector<double>& grid, const SolverConfig& base,
                            const Matrix& g, const ProjectorSet& projectors, const Phantom& truth);

void write_sweep_csv(std::ostream& os, std::string_view param, const std::vector<SweepRow>& rows);

}  // namespace dspect
