#include "fbface/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace fbface {
namespace {

constexpr double kSeriesLimit = 12.0;

void check_order(int n) {
  if (n < 0 || n > kMaxBesselOrder) {
    throw std::invalid_argument("bessel order " + std::to_string(n) + " outside [0, " +
                                std::to_string(kMaxBesselOrder) + "]");
  }
}

double series(int n, double x) {
  const double half = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / k;
  const double q = -half * half;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (n + k));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > half) break;
  }
  return sum;
}

double miller(int n, double x) {
  const double top = std::max<double>(n, x);
  const int start = 2 * static_cast<int>((top + 30.0 + 10.0 * std::cbrt(top)) / 2.0) + 2;
  constexpr double kBig = 1e200;

  double next = 0.0;   // J_{k+1}
  double cur = 1e-30;  // J_k, k = start
  double norm = 2.0 * cur;
  double result = 0.0;
  for (int k = start; k > 0; --k) {
    const double prev = (2.0 * k / x) * cur - next;  // J_{k-1}
    next = cur;
    cur = prev;
    const int idx = k - 1;
    if (idx == n) result = cur;
    if (idx == 0) {
      norm += cur;
    } else if (idx % 2 == 0) {
      norm += 2.0 * cur;
    }
    if (std::abs(cur) > kBig) {
      cur /= kBig;
      next /= kBig;
      norm /= kBig;
      result /= kBig;
    }
  }
  return result / norm;
}

double refine_root(int n, double lo, double hi, double guess) {
  double flo = bessel_j(n, lo);
  const double fhi = bessel_j(n, hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw std::logic_error("bessel root bracket without sign change for order " +
                           std::to_string(n));
  }
  double x = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = bessel_j(n, x);
    if (f == 0.0) return x;
    if ((f < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = f;
    } else {
      hi = x;
    }
    double step = x - f / bessel_j_derivative(n, x);
    if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
    if (std::abs(step - x) <= 1e-15 * x || hi - lo <= 4e-16 * x) return step;
    x = step;
  }
  return x;
}

double mcmahon_guess(int n, int i) {
  const double mu = 4.0 * n * n;
  const double beta = (i + 0.5 * n - 0.25) * std::numbers::pi;
  const double e = 8.0 * beta;
  return beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
}

// rows[n] holds the first (count + max_order - n) zeros of J_n.
std::vector<std::vector<double>> root_cascade(int max_order, int count) {
  check_order(max_order);
  if (count < 1) throw std::invalid_argument("root count must be positive");
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(max_order) + 1);

  const int base_count = count + max_order;
  auto& zero_row = rows[0];
  zero_row.reserve(base_count);
  for (int i = 1; i <= base_count; ++i) {
    const double lo = (i - 0.5) * std::numbers::pi;
    const double hi = i * std::numbers::pi;
    zero_row.push_back(refine_root(0, lo, hi, mcmahon_guess(0, i)));
  }
  for (int n = 1; n <= max_order; ++n) {
    const auto& below = rows[n - 1];
    auto& row = rows[n];
    const int want = count + max_order - n;
    row.reserve(want);
    for (int i = 1; i <= want; ++i) {
      row.push_back(refine_root(n, below[i - 1], below[i], mcmahon_guess(n, i)));
    }
  }
  return rows;
}

}  // namespace

double bessel_j(int n, double x) {
  check_order(n);
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("bessel argument must be finite and non-negative");
  }
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x <= kSeriesLimit) return series(n, x);
  return miller(n, x);
}

double bessel_j_derivative(int n, double x) {
  if (n == 0) return -bessel_j(1, x);
  if (n == kMaxBesselOrder) {
    if (x == 0.0) return 0.0;
    return bessel_j(n - 1, x) - (n / x) * bessel_j(n, x);
  }
  return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x));
}

std::vector<double> bessel_roots(int n, int count) {
  auto rows = root_cascade(n, count);
  auto& row = rows[n];
  row.resize(count);
  return std::move(row);
}

BesselRootTable::BesselRootTable(int max_order, int max_root)
    : max_order_(max_order), max_root_(max_root) {
  const auto rows = root_cascade(max_order, max_root);
  roots_.reserve(static_cast<std::size_t>(max_order + 1) * max_root);
  for (const auto& row : rows) roots_.insert(roots_.end(), row.begin(), row.begin() + max_root);
}

double BesselRootTable::root(int n, int i) const {
  if (n < 0 || n > max_order_ || i < 1 || i > max_root_) {
    throw std::out_of_range("root index outside table");
  }
  return roots_[static_cast<std::size_t>(n) * max_root_ + (i - 1)];
}

std::span<const double> BesselRootTable::roots(int n) const {
  if (n < 0 || n > max_order_) throw std::out_of_range("order outside table");
  return {roots_.data() + static_cast<std::size_t>(n) * max_root_,
          static_cast<std::size_t>(max_root_)};
}

std::shared_ptr<const BesselRootTable> shared_root_table(int max_order, int max_root) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const BesselRootTable>> cache;
  const std::lock_guard lock(mutex);
  auto& slot = cache[{max_order, max_root}];
  if (!slot) slot = std::make_shared<const BesselRootTable>(max_order, max_root);
  return slot;
}

}  // namespace fbface
