#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dspect/kinetics.hpp"
#include "dspect/tomo.hpp"

namespace dspect {

/// One camera pose per time step; every pose has the same bin count.
struct AcquisitionSchedule {
  std::string kind;
  std::vector<CameraPose> poses;

  Index steps() const { return static_cast<Index>(poses.size()); }
  Index bins_per_step() const { return poses.empty() ? 0 : poses.front().total_bins(); }
  void validate() const;
};

/// Measured (or simulated) data, bins x time steps.
struct Sinogram {
  Matrix data;
  AcquisitionSchedule schedule;
};

const std::vector<std::string>& schedule_kinds();

/// Bin width such that one head spans the image diagonal.
double default_bin_width(const ImageGeometry& geom, Index bins_per_head);

/// Dual-head schedules:
///   rotate2      heads at 2t and 2t + 180 degrees
///   alternate45  heads at t and t + 180 for even t, 45 + t and 225 + t for odd t
///   mc46         heads at 46t and 46t + 180 degrees
AcquisitionSchedule schedule_preset(std::string_view kind, Index steps, Index bins_per_head, double bin_width,
                                    Index rays_per_bin = 1);

ProjectorSet build_projector_set(const AcquisitionSchedule& schedule, ProjectorCache& cache);
ProjectorSet build_projector_set(const ImageGeometry& geom, const AcquisitionSchedule& schedule,
                                 const AttenuationMap& mu);

/// Noise-free data: column t is the projection of frame t under pose t.
Sinogram simulate_clean(const Phantom& ph, const AcquisitionSchedule& schedule, const ProjectorSet& projectors);
Sinogram simulate_clean(const Phantom& ph, const AcquisitionSchedule& schedule, const AttenuationMap& mu);

/// Poisson(scale * s) / scale elementwise, reproducible per seed.
Sinogram poissonize(const Sinogram& s, double scale, std::uint64_t seed);

/// Scale for which scale * (mean over t of the column sums of s) equals target.
double scale_for_mean_counts(const Matrix& s, double target_mean_counts);

/// Event-level simulation. Step t draws Poisson(lambda * mean pixel
/// concentration) decays, places each uniformly inside a pixel chosen
/// proportionally to its concentration, sends it to one head chosen
/// uniformly, keeps it with probability exp(-mu integral toward the head),
/// and bins it at the nearest detector bin.
Sinogram monte_carlo(const Phantom& ph, const AcquisitionSchedule& schedule, const AttenuationMap& mu, double lambda,
                     std::uint64_t seed);

/// Independent generator for one (seed, stream, step) triple.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);

/// Uniform disk of attenuation (radius as a fraction of the half-width).
AttenuationMap disk_attenuation(const ImageGeometry& geom, double mu, double radius_fraction = 0.9);

}  // namespace dspect
