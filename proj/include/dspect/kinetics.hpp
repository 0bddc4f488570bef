#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dspect/tomo.hpp"
#include "dspect/types.hpp"

namespace dspect {

/// Arterial (blood) concentration sampled at t = i * dt, i = 0..M-1.
struct ArterialInput {
  Vector samples;
  double dt = 1.0;

  Index steps() const { return samples.size(); }
};

/// Gamma-variate bolus, amplitude * (t/peak)^shape * exp(shape * (1 - t/peak)).
ArterialInput gamma_variate_input(Index steps, double dt, double peak_time, double shape, double amplitude = 1.0);

/// c(t) = int_0^t C_A(tau) exp(-rate (t - tau)) dtau with trapezoidal
/// quadrature on the sample grid. c(0) = 0.
Vector basis_curve(const ArterialInput& input, double rate);

/// Per-region concentrations, M time steps by K regions.
struct ConcentrationMatrix {
  Matrix values;
  double dt = 1.0;

  Index steps() const { return values.rows(); }
  Index regions() const { return values.cols(); }
};

/// How one region's curve is generated.
struct RegionCurve {
  enum class Kind { constant, compartment };
  Kind kind = Kind::compartment;
  double amplitude = 1.0;  // constant level, or scale of the basis curve
  double rate = 0.0;       // exchange rate for compartment curves
};

struct CurveConfig {
  double dt = 1.0;
  double input_peak_time = 6.0;
  double input_shape = 2.0;
  std::vector<RegionCurve> regions;
};

/// Ground truth: hard region map plus per-region curves.
/// Region indices are 0-based; region 0 is the background in every preset.
struct Phantom {
  std::string name;
  ImageGeometry geom;
  std::vector<int> region_map;
  ConcentrationMatrix curves;

  Index regions() const { return curves.regions(); }
  Index steps() const { return curves.steps(); }
  Matrix one_hot() const;
  std::vector<Index> region_sizes() const;
};

/// Known preset names: heart_circles, heart_k3, rat_liver_like, mc_circles.
const std::vector<std::string>& phantom_presets();

CurveConfig default_curves(std::string_view preset);

Phantom make_phantom(std::string_view preset, const ImageGeometry& geom, Index steps);
Phantom make_phantom(std::string_view preset, const ImageGeometry& geom, Index steps, const CurveConfig& curves);

/// Region map for a preset without curves.
std::vector<int> preset_regions(std::string_view preset, const ImageGeometry& geom, Index* region_count = nullptr);

ConcentrationMatrix make_curves(const CurveConfig& config, Index steps);

/// n x M image sequence, frame column t = curves(t, region_map[p]).
Matrix render_frames(const Phantom& ph);

}  // namespace dspect
