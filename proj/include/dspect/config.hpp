#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "dspect/kinetics.hpp"
#include "dspect/recon.hpp"
#include "dspect/sim.hpp"

namespace dspect {

struct AttenuationConfig {
  std::string kind = "none";  // none | disk
  double mu = 0.0;
  double radius_fraction = 0.9;
};

struct NoiseConfig {
  std::string kind = "none";  // none | poisson | montecarlo
  double scale = 0.0;         // poisson: 0 derives it from target_mean_counts
  double target_mean_counts = 2500.0;
  double lambda = 0.0;        // montecarlo: expected events per unit mean concentration
};

/// Everything a run needs; a pure function of this plus the seed.
struct RunConfig {
  std::string preset = "heart_circles";
  ImageGeometry geom{64, 64, 1.0};
  Index steps = 90;
  std::string schedule = "rotate2";
  Index bins_per_head = 95;
  double bin_width = 0.0;  // 0 spans the image diagonal
  Index rays_per_bin = 1;
  AttenuationConfig attenuation;
  NoiseConfig noise;
  Index regions = 0;  // 0 uses the phantom's region count
  SolverConfig solver;
  Index checkpoint_every = 0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  Index resolved_regions() const;
  double resolved_bin_width() const;
  AcquisitionSchedule make_schedule() const;
  AttenuationMap make_attenuation() const;
  Phantom make_phantom() const;
};

/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

}  // namespace dspect
