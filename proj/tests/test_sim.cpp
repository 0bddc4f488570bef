#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dspect/sim.hpp"

using namespace dspect;

namespace {

constexpr double deg = std::numbers::pi / 180.0;

Phantom single_pixel(const ImageGeometry& g, Index pixel, const Vector& curve) {
  Phantom ph;
  ph.name = "single";
  ph.geom = g;
  ph.region_map.assign(static_cast<std::size_t>(g.pixels()), 0);
  ph.region_map[static_cast<std::size_t>(pixel)] = 1;
  ph.curves.values = Matrix::Zero(curve.size(), 2);
  ph.curves.values.col(1) = curve;
  return ph;
}

}  // namespace

TEST_CASE("schedule presets follow their rotation rules") {
  const auto r = schedule_preset("rotate2", 90, 95, 1.0);
  CHECK(r.steps() == 90);
  CHECK(r.bins_per_step() == 190);
  CHECK(r.poses[0].angles[0] == doctest::Approx(0.0));
  CHECK(r.poses[0].angles[1] == doctest::Approx(180 * deg));
  CHECK(r.poses[7].angles[0] == doctest::Approx(14 * deg));

  const auto a = schedule_preset("alternate45", 4, 10, 1.0);
  CHECK(a.poses[0].angles[0] == doctest::Approx(0.0));
  CHECK(a.poses[1].angles[0] == doctest::Approx(46 * deg));
  CHECK(a.poses[1].angles[1] == doctest::Approx(226 * deg));
  CHECK(a.poses[2].angles[0] == doctest::Approx(2 * deg));

  const auto m = schedule_preset("mc46", 10, 187, 1.0);
  CHECK(m.bins_per_step() == 374);
  CHECK(m.poses[4].angles[0] == doctest::Approx(184 * deg));
  CHECK(m.poses[4].angles[1] == doctest::Approx(4 * deg));

  CHECK_THROWS_AS(schedule_preset("spin", 3, 10, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(schedule_preset("rotate2", 0, 10, 1.0), std::invalid_argument);
}

TEST_CASE("single pixel phantom projects to its scaled projector column") {
  ImageGeometry g{8, 8, 1.0};
  Vector curve(3);
  curve << 0.5, 2.0, 1.25;
  const Phantom ph = single_pixel(g, 19, curve);
  const auto sched = schedule_preset("rotate2", 3, 12, default_bin_width(g, 12));
  const auto proj = build_projector_set(g, sched, AttenuationMap::zeros(g.pixels()));
  const Sinogram s = simulate_clean(ph, sched, proj);
  for (Index t = 0; t < 3; ++t) {
    const Vector col = Matrix(proj[static_cast<std::size_t>(t)]->matrix()).col(19) * curve[t];
    CHECK((s.data.col(t) - col).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("clean simulation is nonnegative and zero for a zero phantom") {
  ImageGeometry g{32, 32, 1.0};
  Phantom ph = make_phantom("heart_circles", g, 6);
  const auto sched = schedule_preset("rotate2", 6, 95, default_bin_width(g, 95));
  const auto mu = disk_attenuation(g, 0.1);
  CHECK(simulate_clean(ph, sched, mu).data.minCoeff() >= 0.0);
  ph.curves.values.setZero();
  CHECK(simulate_clean(ph, sched, mu).data.isZero(0.0));
}

TEST_CASE("poisson noise keeps zeros and integer counts") {
  ImageGeometry g{16, 16, 1.0};
  const Phantom ph = make_phantom("heart_k3", g, 4);
  const auto sched = schedule_preset("rotate2", 4, 30, default_bin_width(g, 30));
  const Sinogram clean = simulate_clean(ph, sched, AttenuationMap::zeros(g.pixels()));
  const double scale = 3.7;
  const Sinogram noisy = poissonize(clean, scale, 9);
  for (Index i = 0; i < clean.data.size(); ++i) {
    if (clean.data.data()[i] == 0.0) CHECK(noisy.data.data()[i] == 0.0);
    const double counts = noisy.data.data()[i] * scale;
    CHECK(std::abs(counts - std::round(counts)) < 1e-9);
  }
  CHECK(poissonize(clean, scale, 9).data == noisy.data);
  CHECK(poissonize(clean, scale, 10).data != noisy.data);
  CHECK_THROWS_AS(poissonize(clean, 0.0, 1), std::invalid_argument);
}

TEST_CASE("poisson noise has the right mean and variance") {
  Sinogram one{Matrix::Constant(1, 1, 50.0), {}};
  const int reps = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double v = poissonize(one, 1.0, static_cast<std::uint64_t>(r)).data(0, 0);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / reps;
  const double var = sum_sq / reps - mean * mean;
  CHECK(std::abs(mean - 50.0) <= 3.0 * std::sqrt(50.0) / std::sqrt(static_cast<double>(reps)));
  CHECK(std::abs(var - 50.0) / 50.0 <= 0.10);
}

TEST_CASE("count scaling hits the requested mean counts per step") {
  Matrix s(3, 2);
  s << 1, 2, 3, 4, 5, 6;
  const double scale = scale_for_mean_counts(s, 2500.0);
  CHECK(scale * (s.colwise().sum().mean()) == doctest::Approx(2500.0));
}

TEST_CASE("monte carlo gives zero counts for an empty frame and is seeded") {
  ImageGeometry g{12, 12, 1.0};
  CurveConfig cc = default_curves("mc_circles");
  cc.regions[0].kind = RegionCurve::Kind::compartment;
  cc.regions[0].rate = 0.1;
  const Phantom ph = make_phantom("mc_circles", g, 3, cc);
  const auto sched = schedule_preset("mc46", 3, 20, default_bin_width(g, 20));
  const auto mu = disk_attenuation(g, 0.05);
  const Sinogram a = monte_carlo(ph, sched, mu, 5000.0, 4);
  CHECK(a.data.col(0).isZero(0.0));
  CHECK(a.data.col(1).sum() > 0.0);
  CHECK(monte_carlo(ph, sched, mu, 5000.0, 4).data == a.data);
  CHECK_THROWS_AS(monte_carlo(ph, sched, mu, 0.0, 4), std::invalid_argument);
}

TEST_CASE("monte carlo event totals scale with lambda") {
  ImageGeometry g{12, 12, 1.0};
  const Phantom ph = make_phantom("mc_circles", g, 2);
  const auto sched = schedule_preset("mc46", 2, 40, default_bin_width(g, 40));
  const auto mu = AttenuationMap::zeros(g.pixels());
  double one = 0.0, two = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    one += monte_carlo(ph, sched, mu, 2000.0, seed).data.sum();
    two += monte_carlo(ph, sched, mu, 4000.0, seed + 1000).data.sum();
  }
  CHECK(two / one == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("monte carlo step totals have mean lambda times mean concentration") {
  ImageGeometry g{10, 10, 1.0};
  const Phantom ph = make_phantom("mc_circles", g, 3);
  const auto sched = schedule_preset("mc46", 3, 40, default_bin_width(g, 40));
  const Matrix frames = render_frames(ph);
  const double lambda = 3000.0;
  const int seeds = 200;
  Vector totals = Vector::Zero(3);
  for (int s = 0; s < seeds; ++s) {
    totals += monte_carlo(ph, sched, AttenuationMap::zeros(g.pixels()), lambda, static_cast<std::uint64_t>(s))
                  .data.colwise()
                  .sum()
                  .transpose();
  }
  for (Index t = 0; t < 3; ++t) {
    const double expected = lambda * frames.col(t).mean();
    if (expected == 0.0) continue;
    const double sd_of_mean = std::sqrt(expected / seeds);
    CHECK(std::abs(totals[t] / seeds - expected) <= 4.0 * sd_of_mean);
  }
}

TEST_CASE("substreams are independent of each other") {
  auto a = substream(1, 1, 0);
  auto b = substream(1, 1, 1);
  auto c = substream(1, 2, 0);
  auto a2 = substream(1, 1, 0);
  const auto va = a();
  CHECK(va != b());
  CHECK(va != c());
  CHECK(va == a2());
}

TEST_CASE("disk attenuation fills a centred disk") {
  ImageGeometry g{20, 20, 1.0};
  const auto mu = disk_attenuation(g, 0.2, 0.5);
  CHECK(mu.mu[0] == 0.0);
  CHECK(mu.mu[10 * 20 + 10] == 0.2);
  CHECK_THROWS_AS(disk_attenuation(g, -1.0), std::invalid_argument);
}
