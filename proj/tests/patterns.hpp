#pragma once

// Band-limited test patterns: finite Fourier-Bessel series rendered straight
// onto a raster with the standard library's Bessel function.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fbface/bessel.hpp"
#include "fbface/fbt.hpp"
#include "fbface/raster.hpp"

namespace fbface::testing {

struct Term {
  int n = 0;
  int i = 1;  // 1-based root index
  double a = 0.0;
  double b = 0.0;
};

inline double pattern_value(const std::vector<Term>& terms, double r, double theta, double radius) {
  if (r > radius) return 0.0;
  double v = 0.0;
  for (const Term& t : terms) {
    const double alpha = shared_root_table(30, 6)->root(t.n, t.i);
    const double jr = std::cyl_bessel_j(static_cast<double>(t.n), alpha * r / radius);
    v += jr * (t.a * std::cos(t.n * theta) + t.b * std::sin(t.n * theta));
  }
  return v;
}

/// Renders the pattern about `center`, rotated by `phi` radians and shifted by (dx, dy).
inline RasterImage render(const std::vector<Term>& terms, int width, int height, Point center,
                          double radius, double phi = 0.0, double dx = 0.0, double dy = 0.0) {
  RasterImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = x - center.x - dx;
      const double v = y - center.y - dy;
      img.at(x, y) = pattern_value(terms, std::hypot(u, v), std::atan2(v, u) - phi, radius);
    }
  }
  return img;
}

/// `count` random terms with n <= max_order and i <= max_root.
inline std::vector<Term> random_terms(std::uint64_t seed, int count, int max_order, int max_root) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> order(0, max_order);
  std::uniform_int_distribution<int> root(1, max_root);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<Term> terms;
  for (int k = 0; k < count; ++k) {
    Term t{order(rng), root(rng), coef(rng), coef(rng)};
    if (t.n == 0) t.b = 0.0;
    terms.push_back(t);
  }
  return terms;
}

/// Relative RMSE of a synthesized grid against the pattern, over the quadrature rings.
inline double relative_rmse(const PolarGrid& grid, const std::vector<Term>& terms) {
  double err = 0.0;
  double ref = 0.0;
  for (int j = 0; j < grid.rings(); ++j) {
    for (int k = 0; k < grid.angles(); ++k) {
      const double want = pattern_value(terms, grid.ring_radius(j), grid.angle(k), grid.radius());
      err += (grid.value(j, k) - want) * (grid.value(j, k) - want);
      ref += want * want;
    }
  }
  return std::sqrt(err / ref);
}

}  // namespace fbface::testing
