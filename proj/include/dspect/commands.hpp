#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dspect/config.hpp"

namespace dspect {

enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_data = 3, exit_nonconvergence = 4 };

/// Bad flags or configuration (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Missing, corrupt or mismatched input files (exit 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int manifest_format_version = 1;
/// Frames (1-based time steps) written by reconstruct when they exist.
inline const std::vector<Index> frame_steps{1, 5, 10, 15, 25, 50, 90};

struct SolverOverrides {
  std::optional<double> alpha, beta, delta, damping, outer_tol, inner_tol, em_floor;
  std::optional<Index> outer_max, inner_max, checkpoint_every;
  std::optional<std::uint64_t> seed;

  void apply(RunConfig& cfg) const;
};

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

struct ReconstructOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;  // solver and objective sections replace the dataset's
  SolverOverrides overrides;
  bool baseline_em = false;
};

struct EvaluateOptions {
  std::filesystem::path recon;
  std::filesystem::path data;
  std::filesystem::path out;
};

struct SweepOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::string param;
  std::string grid;  // comma-separated values
  SolverOverrides overrides;
};

/// Each command returns an exit code and throws UsageError or DataError.
int cmd_simulate(const SimulateOptions& opts);
int cmd_reconstruct(const ReconstructOptions& opts);
int cmd_evaluate(const EvaluateOptions& opts);
int cmd_sweep(const SweepOptions& opts);

/// "0,0.1,0.25" -> {0, 0.1, 0.25}; throws UsageError on anything malformed.
std::vector<double> parse_grid(const std::string& text);

/// Simulated data directory after its hashes have been checked.
struct Dataset {
  RunConfig config;
  nlohmann::json manifest;
  Matrix sinogram;
  AttenuationMap mu;
  Phantom truth;
  std::string sinogram_sha256;
};

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace dspect
