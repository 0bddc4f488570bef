#include "dspect/sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dspect {

namespace {

constexpr std::uint64_t kPoissonStream = 1;
constexpr std::uint64_t kMonteCarloStream = 2;

double degrees(double deg) { return normalize_angle(deg * std::numbers::pi / 180.0); }

CameraPose dual_head(double deg, Index bins_per_head, double bin_width, Index rays_per_bin) {
  return CameraPose{{degrees(deg), degrees(deg + 180.0)}, bins_per_head, bin_width, rays_per_bin};
}

}  // namespace

void AcquisitionSchedule::validate() const {
  if (poses.empty()) throw std::invalid_argument("acquisition schedule has no time steps");
  const Index m = poses.front().total_bins();
  for (const auto& pose : poses) {
    pose.validate();
    if (pose.total_bins() != m) throw std::invalid_argument("schedule poses disagree on the bin count");
  }
}

const std::vector<std::string>& schedule_kinds() {
  static const std::vector<std::string> kinds{"rotate2", "alternate45", "mc46"};
  return kinds;
}

double default_bin_width(const ImageGeometry& geom, Index bins_per_head) {
  geom.validate();
  if (bins_per_head < 1) throw std::invalid_argument("need at least one bin per head");
  return geom.diagonal() / static_cast<double>(bins_per_head);
}

AcquisitionSchedule schedule_preset(std::string_view kind, Index steps, Index bins_per_head, double bin_width,
                                    Index rays_per_bin) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one time step");
  AcquisitionSchedule schedule{std::string(kind), {}};
  schedule.poses.reserve(static_cast<std::size_t>(steps));
  for (Index t = 0; t < steps; ++t) {
    const double td = static_cast<double>(t);
    double deg = 0.0;
    if (kind == "rotate2") {
      deg = 2.0 * td;
    } else if (kind == "alternate45") {
      deg = (t % 2 == 0) ? td : 45.0 + td;
    } else if (kind == "mc46") {
      deg = 46.0 * td;
    } else {
      throw std::invalid_argument("unknown schedule kind '" + std::string(kind) + "'");
    }
    schedule.poses.push_back(dual_head(deg, bins_per_head, bin_width, rays_per_bin));
  }
  schedule.validate();
  return schedule;
}

ProjectorSet build_projector_set(const AcquisitionSchedule& schedule, ProjectorCache& cache) {
  schedule.validate();
  ProjectorSet set;
  set.reserve(schedule.poses.size());
  for (const auto& pose : schedule.poses) set.push_back(cache.get(pose));
  return set;
}

ProjectorSet build_projector_set(const ImageGeometry& geom, const AcquisitionSchedule& schedule,
                                 const AttenuationMap& mu) {
  ProjectorCache cache(geom, mu);
  return build_projector_set(schedule, cache);
}

Sinogram simulate_clean(const Phantom& ph, const AcquisitionSchedule& schedule, const ProjectorSet& projectors) {
  schedule.validate();
  if (schedule.steps() != ph.steps() || static_cast<Index>(projectors.size()) != ph.steps()) {
    throw std::invalid_argument("phantom has " + std::to_string(ph.steps()) + " time steps, schedule has " +
                                std::to_string(schedule.steps()));
  }
  const Matrix frames = render_frames(ph);
  Sinogram out{Matrix(schedule.bins_per_step(), ph.steps()), schedule};
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < ph.steps(); ++t) {
    out.data.col(t) = projectors[static_cast<std::size_t>(t)]->forward(frames.col(t));
  }
  return out;
}

Sinogram simulate_clean(const Phantom& ph, const AcquisitionSchedule& schedule, const AttenuationMap& mu) {
  return simulate_clean(ph, schedule, build_projector_set(ph.geom, schedule, mu));
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32)};
  return std::mt19937_64(seq);
}

Sinogram poissonize(const Sinogram& s, double scale, std::uint64_t seed) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("Poisson scale must be positive");
  if (!s.data.allFinite()) throw std::invalid_argument("cannot add Poisson noise to a nonfinite sinogram");
  if ((s.data.array() < 0.0).any()) throw std::invalid_argument("cannot add Poisson noise to negative data");

  Sinogram out{Matrix(s.data.rows(), s.data.cols()), s.schedule};
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < s.data.cols(); ++t) {
    auto rng = substream(seed, kPoissonStream, static_cast<std::uint64_t>(t));
    for (Index b = 0; b < s.data.rows(); ++b) {
      const double mean = scale * s.data(b, t);
      double count = 0.0;
      if (mean > 0.0) count = static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
      out.data(b, t) = count / scale;
    }
  }
  return out;
}

double scale_for_mean_counts(const Matrix& s, double target_mean_counts) {
  if (!(target_mean_counts > 0.0)) throw std::invalid_argument("target count level must be positive");
  const double mean_total = s.colwise().sum().mean();
  if (!(mean_total > 0.0)) throw std::invalid_argument("sinogram carries no signal to scale");
  return target_mean_counts / mean_total;
}

Sinogram monte_carlo(const Phantom& ph, const AcquisitionSchedule& schedule, const AttenuationMap& mu, double lambda,
                     std::uint64_t seed) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("Monte Carlo lambda must be positive");
  schedule.validate();
  if (schedule.steps() != ph.steps()) throw std::invalid_argument("phantom and schedule disagree on time steps");
  const auto& geom = ph.geom;
  const Index n = geom.pixels();
  if (mu.mu.size() != n) throw std::invalid_argument("attenuation map does not match the phantom geometry");
  const bool attenuate = !mu.is_zero();
  const Matrix frames = render_frames(ph);

  Sinogram out{Matrix::Zero(schedule.bins_per_step(), ph.steps()), schedule};
#pragma omp parallel for schedule(dynamic)
  for (Index t = 0; t < ph.steps(); ++t) {
    const auto frame = frames.col(t);
    const double mean_conc = frame.mean();
    if (!(mean_conc > 0.0)) continue;

    auto rng = substream(seed, kMonteCarloStream, static_cast<std::uint64_t>(t));
    const long long events = std::poisson_distribution<long long>(lambda * mean_conc)(rng);
    std::discrete_distribution<Index> pick_pixel(frame.data(), frame.data() + n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& pose = schedule.poses[static_cast<std::size_t>(t)];
    std::uniform_int_distribution<Index> pick_head(0, pose.heads() - 1);
    const double half_bins = 0.5 * static_cast<double>(pose.bins_per_head - 1);

    for (long long e = 0; e < events; ++e) {
      const Index p = pick_pixel(rng);
      const double x = geom.pixel_center_x(p % geom.n2) + (unit(rng) - 0.5) * geom.pixel_size;
      const double y = geom.pixel_center_y(p / geom.n2) + (unit(rng) - 0.5) * geom.pixel_size;
      const Index head = pick_head(rng);
      const double angle = pose.angles[static_cast<std::size_t>(head)];
      const double offset = -x * std::sin(angle) + y * std::cos(angle);
      const auto bin = static_cast<Index>(std::floor(offset / pose.bin_width + half_bins + 0.5));
      if (bin < 0 || bin >= pose.bins_per_head) continue;
      if (attenuate) {
        const double along = x * std::cos(angle) + y * std::sin(angle);
        const double path = attenuation_integral(trace_line(geom, angle, offset), mu.mu, along);
        if (unit(rng) >= std::exp(-path)) continue;
      }
      out.data(head * pose.bins_per_head + bin, t) += 1.0;
    }
  }
  return out;
}

AttenuationMap disk_attenuation(const ImageGeometry& geom, double mu, double radius_fraction) {
  geom.validate();
  if (mu < 0.0) throw std::invalid_argument("attenuation coefficient must be nonnegative");
  AttenuationMap map = AttenuationMap::zeros(geom.pixels());
  const double r = radius_fraction * 0.5 * std::min(geom.width(), geom.height());
  for (Index row = 0; row < geom.n1; ++row) {
    for (Index c = 0; c < geom.n2; ++c) {
      if (std::hypot(geom.pixel_center_x(c), geom.pixel_center_y(row)) <= r) map.mu[row * geom.n2 + c] = mu;
    }
  }
  return map;
}

}  // namespace dspect
