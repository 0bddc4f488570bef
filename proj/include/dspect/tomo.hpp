#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/SparseCore>

#include "dspect/types.hpp"

namespace dspect {

/// Pixel grid centred on the origin. Pixel (r, c) has linear index
/// r * n2 + c; row 0 is the top of the image (largest y).
struct ImageGeometry {
  Index n1 = 0;
  Index n2 = 0;
  double pixel_size = 1.0;

  Index pixels() const { return n1 * n2; }
  double width() const { return static_cast<double>(n2) * pixel_size; }
  double height() const { return static_cast<double>(n1) * pixel_size; }
  double diagonal() const;

  /// Throws std::invalid_argument for an empty grid or nonpositive pixel size.
  void validate() const;

  double pixel_center_x(Index c) const;
  double pixel_center_y(Index r) const;
};

/// One camera position. Each head looks along the ray direction
/// d = (cos a, sin a) and sits on the +d side of the object; bins are
/// laid out along (-sin a, cos a), centred on the rotation axis.
/// Rows of the projector are head-major: head 0 bins, then head 1 bins.
struct CameraPose {
  std::vector<double> angles;
  Index bins_per_head = 0;
  double bin_width = 1.0;
  Index rays_per_bin = 1;  // parallel sub-rays averaged across each bin; 1 is the centre line

  Index heads() const { return static_cast<Index>(angles.size()); }
  Index total_bins() const { return heads() * bins_per_head; }
  double bin_offset(Index bin) const;
  void validate() const;
};

struct AttenuationMap {
  Vector mu;

  static AttenuationMap zeros(Index pixels) { return {Vector::Zero(pixels)}; }
  bool is_zero() const { return (mu.array() == 0.0).all(); }
};

/// Piece of a line inside one pixel, parametrised by arc length t along
/// the ray direction (t grows toward the detector).
struct RaySegment {
  Index pixel;
  double t_in;
  double t_out;
  double length() const { return t_out - t_in; }
};

/// Exact pixel intersections of the line {s * e_perp + t * d} with the
/// image grid, ordered by increasing t.
std::vector<RaySegment> trace_line(const ImageGeometry& geom, double angle, double offset);

/// Line integral of mu along the line from parameter t_from to the detector.
double attenuation_integral(const std::vector<RaySegment>& segments, const Vector& mu, double t_from);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Attenuated Radon projector for one pose; immutable after construction.
class ProjectorFrame {
 public:
  ProjectorFrame(CameraPose pose, SparseMatrix matrix);

  const CameraPose& pose() const { return pose_; }
  const SparseMatrix& matrix() const { return matrix_; }
  const Vector& row_sums() const { return row_sums_; }
  const Vector& col_sums() const { return col_sums_; }
  Index bins() const { return matrix_.rows(); }
  Index pixels() const { return matrix_.cols(); }

  Vector forward(const Eigen::Ref<const Vector>& image) const;
  Vector adjoint(const Eigen::Ref<const Vector>& sino) const;

 private:
  CameraPose pose_;
  SparseMatrix matrix_;
  Vector row_sums_;
  Vector col_sums_;
};

ProjectorFrame build_projector(const ImageGeometry& geom, const CameraPose& pose, const AttenuationMap& mu);

using ProjectorSet = std::vector<std::shared_ptr<const ProjectorFrame>>;

/// Projectors for one geometry and attenuation map, shared across time steps
/// with identical poses. Angles are compared after rounding to 1e-9 rad.
class ProjectorCache {
 public:
  ProjectorCache(ImageGeometry geom, AttenuationMap mu);

  std::shared_ptr<const ProjectorFrame> get(const CameraPose& pose);
  std::size_t size() const;

  const ImageGeometry& geometry() const { return geom_; }
  const AttenuationMap& attenuation() const { return mu_; }

 private:
  struct Key {
    std::vector<long long> angles;
    Index bins_per_head;
    double bin_width;
    Index rays_per_bin;
    auto operator<=>(const Key&) const = default;
  };

  ImageGeometry geom_;
  AttenuationMap mu_;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const ProjectorFrame>> frames_;
};

/// Maps an angle into [0, 2 pi).
double normalize_angle(double angle);

}  // namespace dspect
