#include "dspect/kinetics.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace dspect {

ArterialInput gamma_variate_input(Index steps, double dt, double peak_time, double shape, double amplitude) {
  if (steps < 1) throw std::invalid_argument("arterial input needs at least one sample");
  if (!(dt > 0.0) || !(peak_time > 0.0) || !(shape > 0.0) || amplitude < 0.0) {
    throw std::invalid_argument("arterial input parameters must be positive");
  }
  ArterialInput input{Vector(steps), dt};
  for (Index i = 0; i < steps; ++i) {
    const double x = static_cast<double>(i) * dt / peak_time;
    input.samples[i] = amplitude * std::pow(x, shape) * std::exp(shape * (1.0 - x));
  }
  return input;
}

Vector basis_curve(const ArterialInput& input, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("basis curve rate must be finite and nonnegative");
  }
  if (!(input.dt > 0.0)) throw std::invalid_argument("arterial input dt must be positive");
  const Index m = input.steps();
  Vector out = Vector::Zero(m);
  if (m == 0) return out;
  // Trapezoid rule written as a recursion over the grid:
  // c_j = e c_{j-1} + dt/2 (e C_A[j-1] + C_A[j]),  e = exp(-rate dt)
  const double decay = std::exp(-rate * input.dt);
  const auto& ca = input.samples;
  for (Index j = 1; j < m; ++j) {
    out[j] = decay * out[j - 1] + 0.5 * input.dt * (decay * ca[j - 1] + ca[j]);
  }
  return out;
}

ConcentrationMatrix make_curves(const CurveConfig& config, Index steps) {
  if (config.regions.empty()) throw std::invalid_argument("curve config lists no regions");
  const auto input = gamma_variate_input(steps, config.dt, config.input_peak_time, config.input_shape);
  ConcentrationMatrix curves{Matrix(steps, static_cast<Index>(config.regions.size())), config.dt};
  for (std::size_t k = 0; k < config.regions.size(); ++k) {
    const auto& rc = config.regions[k];
    if (rc.amplitude < 0.0) throw std::invalid_argument("region curve amplitude must be nonnegative");
    const Index col = static_cast<Index>(k);
    if (rc.kind == RegionCurve::Kind::constant) {
      curves.values.col(col).setConstant(rc.amplitude);
    } else {
      curves.values.col(col) = rc.amplitude * basis_curve(input, rc.rate);
    }
  }
  return curves;
}

Matrix Phantom::one_hot() const {
  Matrix u = Matrix::Zero(geom.pixels(), regions());
  for (Index p = 0; p < geom.pixels(); ++p) u(p, region_map[static_cast<std::size_t>(p)]) = 1.0;
  return u;
}

std::vector<Index> Phantom::region_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(regions()), 0);
  for (int r : region_map) ++sizes[static_cast<std::size_t>(r)];
  return sizes;
}

namespace {

// Shapes live in normalised coordinates: u, v in [-1, 1] across the field
// of view, v pointing up.
using Shape = std::function<bool(double, double)>;

Shape circle(double cu, double cv, double r) {
  return [=](double u, double v) { return (u - cu) * (u - cu) + (v - cv) * (v - cv) <= r * r; };
}

Shape ellipse(double cu, double cv, double a, double b) {
  return [=](double u, double v) {
    const double x = (u - cu) / a;
    const double y = (v - cv) / b;
    return x * x + y * y <= 1.0;
  };
}

// Classic implicit heart (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0, spanning roughly
// [-1.14, 1.14] x [-1, 1.25] before scaling.
Shape heart(double cu, double cv, double scale) {
  return [=](double u, double v) {
    const double x = (u - cu) / scale;
    const double y = (v - cv) / scale;
    const double q = x * x + y * y - 1.0;
    return q * q * q - x * x * y * y * y <= 0.0;
  };
}

struct Layer {
  Shape shape;
  int region;
};

struct PresetDef {
  int regions;
  std::vector<Layer> layers;  // painted in order, later layers on top
};

PresetDef preset_def(std::string_view preset) {
  if (preset == "heart_circles") {
    // 1: circle partly behind the heart, 2: the two small circles, 3: heart
    return {4,
            {{circle(-0.38, 0.38, 0.30), 1},
             {heart(0.05, -0.05, 0.38), 3},
             {circle(0.62, 0.58, 0.16), 2},
             {circle(0.60, -0.60, 0.16), 2}}};
  }
  if (preset == "heart_k3") {
    // 1: heart, 2: two small circles
    return {3, {{heart(-0.05, 0.0, 0.45), 1}, {circle(0.60, 0.58, 0.22), 2}, {circle(0.58, -0.60, 0.22), 2}}};
  }
  if (preset == "rat_liver_like") {
    // 1: outer tissue, 2: ring-shaped liver, 3: inside of the ring
    return {4,
            {{ellipse(0.0, 0.0, 0.88, 0.72), 1},
             {ellipse(0.08, 0.02, 0.58, 0.46), 2},
             {ellipse(0.10, 0.02, 0.36, 0.26), 3},
             {circle(-0.52, 0.05, 0.08), 2}}};
  }
  if (preset == "mc_circles") {
    // 1: outer circle, 2: two inner circles
    return {3, {{circle(0.0, 0.0, 0.85), 1}, {circle(-0.38, 0.0, 0.22), 2}, {circle(0.38, 0.05, 0.22), 2}}};
  }
  throw std::invalid_argument("unknown phantom preset '" + std::string(preset) + "'");
}

}  // namespace

const std::vector<std::string>& phantom_presets() {
  static const std::vector<std::string> names{"heart_circles", "heart_k3", "rat_liver_like", "mc_circles"};
  return names;
}

CurveConfig default_curves(std::string_view preset) {
  using K = RegionCurve::Kind;
  CurveConfig cfg;
  if (preset == "heart_circles") {
    cfg.regions = {{K::constant, 0.2, 0.0}, {K::compartment, 0.45, 0.35}, {K::compartment, 0.09, 0.0},
                   {K::compartment, 0.25, 0.08}};
  } else if (preset == "heart_k3") {
    cfg.regions = {{K::constant, 0.1, 0.0}, {K::compartment, 0.45, 0.35}, {K::compartment, 0.09, 0.0}};
  } else if (preset == "rat_liver_like") {
    cfg.regions = {{K::constant, 0.1, 0.0}, {K::compartment, 0.12, 0.02}, {K::compartment, 0.45, 0.3},
                   {K::compartment, 0.25, 0.08}};
  } else if (preset == "mc_circles") {
    cfg.regions = {{K::constant, 0.1, 0.0}, {K::compartment, 0.3, 0.2}, {K::compartment, 0.08, 0.0}};
  } else {
    throw std::invalid_argument("unknown phantom preset '" + std::string(preset) + "'");
  }
  return cfg;
}

std::vector<int> preset_regions(std::string_view preset, const ImageGeometry& geom, Index* region_count) {
  geom.validate();
  const auto def = preset_def(preset);
  if (geom.n1 < 8 || geom.n2 < 8) {
    throw std::invalid_argument("phantom preset '" + std::string(preset) + "' needs at least an 8x8 grid");
  }
  std::vector<int> map(static_cast<std::size_t>(geom.pixels()), 0);
  const double half_w = 0.5 * geom.width();
  const double half_h = 0.5 * geom.height();
  for (Index r = 0; r < geom.n1; ++r) {
    const double v = geom.pixel_center_y(r) / half_h;
    for (Index c = 0; c < geom.n2; ++c) {
      const double u = geom.pixel_center_x(c) / half_w;
      int label = 0;
      for (const auto& layer : def.layers) {
        if (layer.shape(u, v)) label = layer.region;
      }
      map[static_cast<std::size_t>(r * geom.n2 + c)] = label;
    }
  }
  if (region_count) *region_count = def.regions;
  return map;
}

Phantom make_phantom(std::string_view preset, const ImageGeometry& geom, Index steps) {
  return make_phantom(preset, geom, steps, default_curves(preset));
}

Phantom make_phantom(std::string_view preset, const ImageGeometry& geom, Index steps, const CurveConfig& curves) {
  if (steps < 1) throw std::invalid_argument("phantom needs at least one time step");
  Index regions = 0;
  auto map = preset_regions(preset, geom, &regions);
  if (static_cast<Index>(curves.regions.size()) != regions) {
    throw std::invalid_argument("preset '" + std::string(preset) + "' has " + std::to_string(regions) +
                                " regions but the curve config lists " + std::to_string(curves.regions.size()));
  }
  return Phantom{std::string(preset), geom, std::move(map), make_curves(curves, steps)};
}

Matrix render_frames(const Phantom& ph) {
  const Index n = ph.geom.pixels();
  if (static_cast<Index>(ph.region_map.size()) != n) {
    throw std::invalid_argument("phantom region map does not match its geometry");
  }
  Matrix frames(n, ph.steps());
  for (Index t = 0; t < ph.steps(); ++t) {
    for (Index p = 0; p < n; ++p) frames(p, t) = ph.curves.values(t, ph.region_map[static_cast<std::size_t>(p)]);
  }
  return frames;
}

}  // namespace dspect
