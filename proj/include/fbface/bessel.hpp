#pragma once

#include <memory>
#include <span>
#include <vector>

namespace fbface {

/// Largest Bessel order accepted by bessel_j and the root finders.
inline constexpr int kMaxBesselOrder = 64;

/**
 * Bessel function of the first kind J_n(x) for integer order 0 <= n <= 64
 * and real x >= 0.
 *
 * Small arguments (x <= 12) use the ascending power series; larger arguments
 * use Miller's backward recurrence normalized by J_0 + 2 sum J_2k = 1.
 * Absolute error is below 1e-10 for x <= 250.
 *
 * Throws std::invalid_argument for an order outside [0, 64] or a negative or
 * non-finite argument.
 */
double bessel_j(int n, double x);

/// dJ_n/dx via (J_{n-1} - J_{n+1}) / 2, with J_{-1} = -J_1. At the order cap
/// the equivalent J_{n-1} - (n/x) J_n is used.
double bessel_j_derivative(int n, double x);

/**
 * The first `count` positive zeros of J_n in increasing order.
 *
 * Zeros of J_0 are seeded by McMahon's expansion; zeros of higher orders are
 * bracketed by the interlacing property alpha_{n-1,i} < alpha_{n,i} <
 * alpha_{n-1,i+1}. Each zero is refined by Newton steps that fall back to
 * bisection whenever an iterate leaves its bracket.
 */
std::vector<double> bessel_roots(int n, int count);

/// Immutable table of alpha_{n,i} for 0 <= n <= max_order, 1 <= i <= max_root.
class BesselRootTable {
 public:
  BesselRootTable(int max_order, int max_root);

  int max_order() const { return max_order_; }
  int max_root() const { return max_root_; }

  /// i is 1-based, matching the usual alpha_{n,i} indexing.
  double root(int n, int i) const;

  /// All tabulated zeros of J_n, index 0 holding alpha_{n,1}.
  std::span<const double> roots(int n) const;

 private:
  int max_order_;
  int max_root_;
  std::vector<double> roots_;  // row-major (order, root)
};

/// Process-wide cache; tables are built once per (max_order, max_root).
std::shared_ptr<const BesselRootTable> shared_root_table(int max_order, int max_root);

}  // namespace fbface
