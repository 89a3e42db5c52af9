#include "fbface/bessel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "oracles.hpp"

namespace fbface {
namespace {

TEST(BesselJ, ValuesAtOrigin) {
  EXPECT_EQ(bessel_j(0, 0.0), 1.0);
  EXPECT_EQ(bessel_j(1, 0.0), 0.0);
  EXPECT_EQ(bessel_j(30, 0.0), 0.0);
}

TEST(BesselJ, FirstZeroOfJ0) {
  // The oracle agrees that this argument is a zero of J_0.
  EXPECT_NEAR(oracle::bessel_series(0, 2.404825557695773), 0.0, 1e-15);
  EXPECT_NEAR(bessel_j(0, 2.404825557695773), 0.0, 1e-9);
}

TEST(BesselJ, RejectsBadInput) {
  EXPECT_THROW(bessel_j(kMaxBesselOrder + 1, 1.0), std::invalid_argument);
  EXPECT_THROW(bessel_j(-1, 1.0), std::invalid_argument);
  EXPECT_THROW(bessel_j(0, -0.5), std::invalid_argument);
  EXPECT_THROW(bessel_j(0, NAN), std::invalid_argument);
  EXPECT_NO_THROW(bessel_j(kMaxBesselOrder, 1.0));
}

TEST(BesselJ, MatchesSeriesOracleOnGrid) {
  for (int n : {0, 5, 15, 30}) {
    for (double x : {0.1, 1.0, 10.0, 40.0}) {
      EXPECT_NEAR(bessel_j(n, x), oracle::bessel_series(n, x), 1e-10) << "n=" << n << " x=" << x;
    }
  }
}

TEST(BesselJ, MatchesOracleAcrossBothBranches) {
  // Straddles the series / backward-recurrence switch and reaches large orders.
  for (int n : {0, 1, 2, 7, 31, 45, 64}) {
    for (double x : {11.9, 12.0, 12.1, 20.0, 33.3, 57.0, 64.0, 80.0}) {
      EXPECT_NEAR(bessel_j(n, x), oracle::bessel_series(n, x), 1e-10) << "n=" << n << " x=" << x;
    }
  }
}

TEST(BesselJ, LargeArgumentsAgainstOracle) {
  for (int n : {0, 3, 30}) {
    for (double x : {120.0, 199.5, 250.0}) {
      const double want = static_cast<double>(oracle::bessel_series_big(n, oracle::Big(x)));
      EXPECT_NEAR(bessel_j(n, x), want, 1e-10) << "n=" << n << " x=" << x;
    }
  }
}

TEST(BesselJ, ThreeTermRecurrence) {
  for (int n = 1; n <= 31; ++n) {
    for (double x = 0.25; x <= 50.0; x += 0.25) {
      const double lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x) - (2.0 * n / x) * bessel_j(n, x);
      ASSERT_LE(std::abs(lhs), 1e-9) << "n=" << n << " x=" << x;
    }
  }
}

TEST(BesselRoots, KnownLeadingZeros) {
  // Frozen from bisection on the series oracle.
  const double j0_first = oracle::bisect_root(0, 2.0, 3.0);
  const double j1_first = oracle::bisect_root(1, 3.0, 4.0);
  const double j0_second = oracle::bisect_root(0, 5.0, 6.0);
  EXPECT_NEAR(j0_first, 2.404825557695773, 1e-14);
  EXPECT_NEAR(j1_first, 3.831705970207512, 1e-14);
  EXPECT_NEAR(j0_second, 5.520078110286311, 1e-14);

  EXPECT_NEAR(bessel_roots(0, 1).at(0), j0_first, 1e-12);
  EXPECT_NEAR(bessel_roots(1, 1).at(0), j1_first, 1e-12);
  const auto two = bessel_roots(0, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0], j0_first, 1e-12);
  EXPECT_NEAR(two[1], j0_second, 1e-12);
}

TEST(BesselRoots, ResidualAndOrderingAcrossTable) {
  const BesselRootTable table(30, 6);
  for (int n = 0; n <= 30; ++n) {
    const auto row = table.roots(n);
    for (int i = 0; i < 6; ++i) {
      EXPECT_LE(std::abs(oracle::bessel_series(n, row[i])), 1e-10) << n << "," << i + 1;
      EXPECT_LE(std::abs(bessel_j(n, row[i])), 1e-10);
      if (i > 0) {
        EXPECT_LT(row[i - 1], row[i]);
      }
    }
  }
}

TEST(BesselRoots, Interlacing) {
  const BesselRootTable table(31, 6);
  for (int n = 0; n <= 30; ++n) {
    for (int i = 1; i <= 5; ++i) {
      EXPECT_LT(table.root(n, i), table.root(n + 1, i));
      EXPECT_LT(table.root(n + 1, i), table.root(n, i + 1));
    }
  }
}

TEST(BesselRoots, StandaloneAgreesWithTable) {
  const BesselRootTable table(30, 6);
  const auto roots = bessel_roots(17, 6);
  for (int i = 1; i <= 6; ++i) EXPECT_DOUBLE_EQ(roots[i - 1], table.root(17, i));
}

TEST(BesselRoots, HighestOrderSupported) {
  const auto roots = bessel_roots(kMaxBesselOrder, 3);
  for (double r : roots) EXPECT_LE(std::abs(bessel_j(kMaxBesselOrder, r)), 1e-10);
}

TEST(BesselRoots, RejectsBadCount) {
  EXPECT_THROW(bessel_roots(0, 0), std::invalid_argument);
  const BesselRootTable table(2, 2);
  EXPECT_THROW(table.root(3, 1), std::out_of_range);
  EXPECT_THROW(table.root(0, 0), std::out_of_range);
}

TEST(BesselRoots, SharedTableIsReusedAcrossThreads) {
  std::vector<std::shared_ptr<const BesselRootTable>> seen(4);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < seen.size(); ++t) {
    pool.emplace_back([&seen, t] { seen[t] = shared_root_table(12, 4); });
  }
  for (auto& th : pool) th.join();
  for (const auto& p : seen) EXPECT_EQ(p.get(), seen[0].get());
}

}  // namespace
}  // namespace fbface
