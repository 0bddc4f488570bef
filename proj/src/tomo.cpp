#include "dspect/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dspect {

namespace {

// Direction components below this are treated as exactly parallel to a grid axis.
constexpr double kParallelEps = 1e-12;

}  // namespace

double ImageGeometry::diagonal() const { return std::hypot(width(), height()); }

void ImageGeometry::validate() const {
  if (n1 < 1 || n2 < 1) {
    throw std::invalid_argument("image geometry needs at least one pixel (got " + std::to_string(n1) + "x" +
                                std::to_string(n2) + ")");
  }
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) {
    throw std::invalid_argument("pixel size must be positive and finite");
  }
}

double ImageGeometry::pixel_center_x(Index c) const {
  return -0.5 * width() + (static_cast<double>(c) + 0.5) * pixel_size;
}

double ImageGeometry::pixel_center_y(Index r) const {
  return 0.5 * height() - (static_cast<double>(r) + 0.5) * pixel_size;
}

double CameraPose::bin_offset(Index bin) const {
  return (static_cast<double>(bin) - 0.5 * static_cast<double>(bins_per_head - 1)) * bin_width;
}

void CameraPose::validate() const {
  if (angles.empty()) throw std::invalid_argument("camera pose has no detector heads");
  if (bins_per_head < 1) throw std::invalid_argument("camera pose needs at least one bin per head");
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw std::invalid_argument("bin width must be positive");
  if (rays_per_bin < 1) throw std::invalid_argument("camera pose needs at least one ray per bin");
  for (double a : angles) {
    if (!(a >= 0.0 && a < 2.0 * std::numbers::pi)) {
      throw std::invalid_argument("camera angle outside [0, 2pi): " + std::to_string(a));
    }
  }
}

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  return a;
}

std::vector<RaySegment> trace_line(const ImageGeometry& geom, double angle, double offset) {
  const double h = geom.pixel_size;
  const double x_left = -0.5 * geom.width();
  const double x_right = 0.5 * geom.width();
  const double y_bottom = -0.5 * geom.height();
  const double y_top = 0.5 * geom.height();

  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const double px = -offset * dy;
  const double py = offset * dx;

  const bool parallel_x = std::abs(dx) < kParallelEps;  // line runs vertically
  const bool parallel_y = std::abs(dy) < kParallelEps;  // line runs horizontally

  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  auto clip = [&](bool parallel, double p, double d, double lo, double hi) {
    if (parallel) {
      if (p < lo || p >= hi) t_hi = t_lo;  // misses the slab
      return;
    }
    const double ta = (lo - p) / d;
    const double tb = (hi - p) / d;
    t_lo = std::max(t_lo, std::min(ta, tb));
    t_hi = std::min(t_hi, std::max(ta, tb));
  };
  clip(parallel_x, px, dx, x_left, x_right);
  clip(parallel_y, py, dy, y_bottom, y_top);

  std::vector<RaySegment> segments;
  if (!(t_hi > t_lo)) return segments;

  std::vector<double> alphas;
  alphas.reserve(static_cast<std::size_t>(geom.n1 + geom.n2 + 2));
  alphas.push_back(t_lo);
  if (!parallel_x) {
    for (Index i = 1; i < geom.n2; ++i) {
      const double t = (x_left + static_cast<double>(i) * h - px) / dx;
      if (t > t_lo && t < t_hi) alphas.push_back(t);
    }
  }
  if (!parallel_y) {
    for (Index j = 1; j < geom.n1; ++j) {
      const double t = (y_top - static_cast<double>(j) * h - py) / dy;
      if (t > t_lo && t < t_hi) alphas.push_back(t);
    }
  }
  alphas.push_back(t_hi);
  std::sort(alphas.begin(), alphas.end());

  segments.reserve(alphas.size());
  for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
    const double a = alphas[k];
    const double b = alphas[k + 1];
    if (!(b > a)) continue;
    const double tm = 0.5 * (a + b);
    const double xm = parallel_x ? px : px + tm * dx;
    const double ym = parallel_y ? py : py + tm * dy;
    const Index c = std::clamp<Index>(static_cast<Index>(std::floor((xm - x_left) / h)), 0, geom.n2 - 1);
    const Index r = std::clamp<Index>(static_cast<Index>(std::floor((y_top - ym) / h)), 0, geom.n1 - 1);
    segments.push_back({r * geom.n2 + c, a, b});
  }
  return segments;
}

double attenuation_integral(const std::vector<RaySegment>& segments, const Vector& mu, double t_from) {
  double total = 0.0;
  for (const auto& seg : segments) {
    const double start = std::max(seg.t_in, t_from);
    if (seg.t_out > start) total += mu[seg.pixel] * (seg.t_out - start);
  }
  return total;
}

ProjectorFrame::ProjectorFrame(CameraPose pose, SparseMatrix matrix)
    : pose_(std::move(pose)), matrix_(std::move(matrix)) {
  matrix_.makeCompressed();
  row_sums_ = matrix_ * Vector::Ones(matrix_.cols());
  col_sums_ = matrix_.transpose() * Vector::Ones(matrix_.rows());
}

Vector ProjectorFrame::forward(const Eigen::Ref<const Vector>& image) const {
  if (image.size() != pixels()) {
    throw std::invalid_argument("forward projection: image has " + std::to_string(image.size()) +
                                " entries, projector expects " + std::to_string(pixels()));
  }
  return matrix_ * image;
}

Vector ProjectorFrame::adjoint(const Eigen::Ref<const Vector>& sino) const {
  if (sino.size() != bins()) {
    throw std::invalid_argument("back projection: sinogram has " + std::to_string(sino.size()) +
                                " entries, projector expects " + std::to_string(bins()));
  }
  return matrix_.transpose() * sino;
}

ProjectorFrame build_projector(const ImageGeometry& geom, const CameraPose& pose, const AttenuationMap& mu) {
  geom.validate();
  pose.validate();
  if (mu.mu.size() != geom.pixels()) {
    throw std::invalid_argument("attenuation map has " + std::to_string(mu.mu.size()) + " entries, expected " +
                                std::to_string(geom.pixels()));
  }
  if ((mu.mu.array() < 0.0).any() || !mu.mu.allFinite()) {
    throw std::invalid_argument("attenuation coefficients must be finite and nonnegative");
  }

  std::vector<Eigen::Triplet<double, Index>> triplets;
  std::vector<double> tail;
  const double share = 1.0 / static_cast<double>(pose.rays_per_bin);
  for (Index head = 0; head < pose.heads(); ++head) {
    const double angle = pose.angles[static_cast<std::size_t>(head)];
    for (Index b = 0; b < pose.bins_per_head; ++b) {
      const Index row = head * pose.bins_per_head + b;
      for (Index r = 0; r < pose.rays_per_bin; ++r) {
        const double shift = ((static_cast<double>(r) + 0.5) * share - 0.5) * pose.bin_width;
        const auto segments = trace_line(geom, angle, pose.bin_offset(b) + shift);
        // tail[i]: mu integrated over segments strictly after i (toward the detector)
        tail.assign(segments.size(), 0.0);
        double acc = 0.0;
        for (std::size_t i = segments.size(); i-- > 0;) {
          tail[i] = acc;
          acc += mu.mu[segments[i].pixel] * segments[i].length();
        }
        for (std::size_t i = 0; i < segments.size(); ++i) {
          const auto& seg = segments[i];
          const double path = tail[i] + 0.5 * mu.mu[seg.pixel] * seg.length();
          triplets.emplace_back(row, seg.pixel, share * seg.length() * std::exp(-path));
        }
      }
    }
  }

  SparseMatrix matrix(pose.total_bins(), geom.pixels());
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  return ProjectorFrame(pose, std::move(matrix));
}

ProjectorCache::ProjectorCache(ImageGeometry geom, AttenuationMap mu) : geom_(geom), mu_(std::move(mu)) {
  geom_.validate();
  if (mu_.mu.size() == 0) mu_ = AttenuationMap::zeros(geom_.pixels());
}

std::shared_ptr<const ProjectorFrame> ProjectorCache::get(const CameraPose& pose) {
  Key key{{}, pose.bins_per_head, pose.bin_width, pose.rays_per_bin};
  for (double a : pose.angles) key.angles.push_back(std::llround(a * 1e9));

  std::lock_guard lock(mutex_);
  auto it = frames_.find(key);
  if (it != frames_.end()) return it->second;
  auto frame = std::make_shared<const ProjectorFrame>(build_projector(geom_, pose, mu_));
  frames_.emplace(std::move(key), frame);
  return frame;
}

std::size_t ProjectorCache::size() const {
  std::lock_guard lock(mutex_);
  return frames_.size();
}

}  // namespace dspect
