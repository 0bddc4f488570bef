#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dspect/tomo.hpp"

using namespace dspect;

namespace {

constexpr double pi = std::numbers::pi;

// Independent oracle: clip the line against every pixel box separately.
struct Chord {
  Index pixel;
  double t0, t1;
};

std::vector<Chord> clip_all(const ImageGeometry& g, double angle, double offset) {
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double px = -std::sin(angle) * offset, py = std::cos(angle) * offset;
  std::vector<Chord> out;
  for (Index r = 0; r < g.n1; ++r) {
    for (Index c = 0; c < g.n2; ++c) {
      const double h = 0.5 * g.pixel_size;
      const double lo[2] = {g.pixel_center_x(c) - h, g.pixel_center_y(r) - h};
      const double hi[2] = {g.pixel_center_x(c) + h, g.pixel_center_y(r) + h};
      const double p[2] = {px, py};
      const double d[2] = {dx, dy};
      double t0 = -1e300, t1 = 1e300;
      bool empty = false;
      for (int a = 0; a < 2; ++a) {
        if (std::abs(d[a]) < 1e-14) {
          if (p[a] < lo[a] || p[a] >= hi[a]) empty = true;
          continue;
        }
        double ta = (lo[a] - p[a]) / d[a], tb = (hi[a] - p[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      }
      if (!empty && t1 - t0 > 1e-12) out.push_back({r * g.n2 + c, t0, t1});
    }
  }
  return out;
}

SparseMatrix dense_oracle_matrix(const ImageGeometry& g, const CameraPose& pose, const Vector& mu) {
  Matrix dense = Matrix::Zero(pose.total_bins(), g.pixels());
  for (Index h = 0; h < pose.heads(); ++h) {
    for (Index b = 0; b < pose.bins_per_head; ++b) {
      for (Index r = 0; r < pose.rays_per_bin; ++r) {
        const double width = pose.bin_width / static_cast<double>(pose.rays_per_bin);
        const double offset = pose.bin_offset(b) - 0.5 * pose.bin_width + (static_cast<double>(r) + 0.5) * width;
        const auto chords = clip_all(g, pose.angles[static_cast<std::size_t>(h)], offset);
        for (const auto& ch : chords) {
          double tail = 0.5 * mu[ch.pixel] * (ch.t1 - ch.t0);
          for (const auto& other : chords) {
            if (other.t0 >= ch.t1 - 1e-12 && other.pixel != ch.pixel) tail += mu[other.pixel] * (other.t1 - other.t0);
          }
          dense(h * pose.bins_per_head + b, ch.pixel) +=
              (ch.t1 - ch.t0) * std::exp(-tail) / static_cast<double>(pose.rays_per_bin);
        }
      }
    }
  }
  return dense.sparseView();
}

Vector random_vector(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("ray through the image centre along the x axis crosses one full row") {
  ImageGeometry g{4, 4, 1.0};
  const auto segs = trace_line(g, 0.0, 0.5);  // y = 0.5 lies inside row 1
  REQUIRE(segs.size() == 4);
  double total = 0.0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(segs[i].pixel == 1 * 4 + static_cast<Index>(i));
    total += segs[i].length();
  }
  CHECK(total == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("diagonal ray has the image diagonal as total length") {
  ImageGeometry g{8, 8, 0.5};
  const auto segs = trace_line(g, pi / 4, 0.0);
  double total = 0.0;
  for (const auto& s : segs) total += s.length();
  CHECK(total == doctest::Approx(g.diagonal()).epsilon(1e-12));
}

TEST_CASE("ray outside the image has no segments") {
  ImageGeometry g{4, 4, 1.0};
  CHECK(trace_line(g, 0.3, 10.0).empty());
}

TEST_CASE("segments agree with per-pixel box clipping") {
  ImageGeometry g{7, 5, 0.8};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0.0, 2 * pi), off(-3.5, 3.5);
  for (int trial = 0; trial < 300; ++trial) {
    const double a = trial < 8 ? trial * pi / 4 : ang(rng);
    const double s = off(rng);
    const auto segs = trace_line(g, a, s);
    const auto ref = clip_all(g, a, s);
    REQUIRE(segs.size() == ref.size());
    for (const auto& seg : segs) {
      const auto it = std::find_if(ref.begin(), ref.end(), [&](const Chord& c) { return c.pixel == seg.pixel; });
      REQUIRE(it != ref.end());
      CHECK(seg.t_in == doctest::Approx(it->t0).epsilon(1e-10));
      CHECK(seg.t_out == doctest::Approx(it->t1).epsilon(1e-10));
    }
  }
}

TEST_CASE("projector matches the dense attenuated oracle") {
  ImageGeometry g{6, 6, 1.0};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  Vector mu(g.pixels());
  for (Index i = 0; i < mu.size(); ++i) mu[i] = u(rng);
  // bin width chosen so no ray runs exactly along a pixel edge
  for (double a : {0.0, 0.4, pi / 2, 2.2, pi, 4.0, 3 * pi / 2 + 0.1}) {
    CameraPose pose{{a, normalize_angle(a + pi)}, 12, 0.73};
    const ProjectorFrame frame = build_projector(g, pose, {mu});
    const Matrix diff = Matrix(frame.matrix()) - Matrix(dense_oracle_matrix(g, pose, mu));
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sub-rays match the dense oracle averaged across the bin") {
  ImageGeometry g{6, 6, 1.0};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  Vector mu(g.pixels());
  for (Index i = 0; i < mu.size(); ++i) mu[i] = u(rng);
  for (double a : {0.3, 2.2, 4.0}) {
    CameraPose pose{{a, normalize_angle(a + pi)}, 9, 0.93, 3};
    const Matrix diff = Matrix(build_projector(g, pose, {mu}).matrix()) - Matrix(dense_oracle_matrix(g, pose, mu));
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("many sub-rays turn column sums into pixel areas") {
  // with mu = 0 the strip integral over all bins of one head is the pixel area
  ImageGeometry g{10, 10, 0.5};
  CameraPose pose{{0.37}, 31, g.diagonal() / 31, 256};
  const auto frame = build_projector(g, pose, AttenuationMap::zeros(g.pixels()));
  const Vector area = frame.col_sums() * pose.bin_width;
  CHECK((area.array() - 0.25).abs().maxCoeff() < 1e-3);
  CHECK_THROWS_AS(build_projector(g, CameraPose{{0.37}, 31, 0.1, 0}, AttenuationMap::zeros(g.pixels())),
                  std::invalid_argument);
}

TEST_CASE("projector adjoint identity") {
  ImageGeometry g{32, 32, 1.0};
  CameraPose pose{{0.7, 0.7 + pi}, 95, g.diagonal() / 95};
  const ProjectorFrame frame = build_projector(g, pose, AttenuationMap::zeros(g.pixels()));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_vector(g.pixels(), rng);
    const Vector y = random_vector(frame.bins(), rng);
    const double lhs = frame.forward(x).dot(y);
    const double rhs = x.dot(frame.adjoint(y));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("opposite heads see the same line integrals without attenuation") {
  ImageGeometry g{9, 9, 1.0};
  CameraPose pose{{0.3, 0.3 + pi}, 11, 1.0};
  const ProjectorFrame frame = build_projector(g, pose, AttenuationMap::zeros(g.pixels()));
  // bin b of the opposite head lies at offset -offset(b)
  for (Index b = 0; b < 11; ++b) {
    CHECK(frame.row_sums()[b] == doctest::Approx(frame.row_sums()[11 + (10 - b)]).epsilon(1e-12));
  }
}

TEST_CASE("attenuation never increases projector weights") {
  ImageGeometry g{8, 8, 1.0};
  CameraPose pose{{1.1, 1.1 + pi}, 15, 0.9};
  const auto plain = build_projector(g, pose, AttenuationMap::zeros(g.pixels()));
  const auto att = build_projector(g, pose, {Vector::Constant(g.pixels(), 0.2)});
  const Matrix diff = Matrix(plain.matrix()) - Matrix(att.matrix());
  CHECK(diff.minCoeff() >= 0.0);
  CHECK(att.matrix().sum() < plain.matrix().sum());
}

TEST_CASE("projector rejects bad input") {
  ImageGeometry g{4, 4, 1.0};
  CameraPose pose{{0.0}, 5, 1.0};
  CHECK_THROWS_AS(build_projector(g, pose, AttenuationMap::zeros(3)), std::invalid_argument);
  CHECK_THROWS_AS(build_projector(g, CameraPose{{7.0}, 5, 1.0}, AttenuationMap::zeros(16)), std::invalid_argument);
  CHECK_THROWS_AS(build_projector(ImageGeometry{0, 4, 1.0}, pose, AttenuationMap::zeros(0)), std::invalid_argument);
  const auto frame = build_projector(g, pose, AttenuationMap::zeros(16));
  CHECK_THROWS_AS(frame.forward(Vector::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(frame.adjoint(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("bin offsets are centred and evenly spaced") {
  CameraPose pose{{0.0}, 5, 2.0};
  CHECK(pose.bin_offset(0) == doctest::Approx(-4.0));
  CHECK(pose.bin_offset(2) == doctest::Approx(0.0));
  CHECK(pose.bin_offset(4) == doctest::Approx(4.0));
}

TEST_CASE("cache shares frames for equal poses") {
  ImageGeometry g{4, 4, 1.0};
  ProjectorCache cache(g, AttenuationMap::zeros(16));
  const auto a = cache.get(CameraPose{{0.5, 0.5 + pi}, 6, 1.0});
  const auto b = cache.get(CameraPose{{0.5, 0.5 + pi}, 6, 1.0});
  const auto c = cache.get(CameraPose{{0.6, 0.6 + pi}, 6, 1.0});
  const auto d = cache.get(CameraPose{{0.5, 0.5 + pi}, 6, 1.0, 4});
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
  CHECK(cache.size() == 3);
}

TEST_CASE("normalize_angle maps into [0, 2 pi)") {
  CHECK(normalize_angle(-pi / 2) == doctest::Approx(3 * pi / 2));
  CHECK(normalize_angle(2 * pi) == doctest::Approx(0.0));
  CHECK(normalize_angle(5 * pi) == doctest::Approx(pi));
}
