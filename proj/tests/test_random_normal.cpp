#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/normal.hpp"
#include "spectra/random.hpp"

using namespace spectra;

TEST(Random, SplitMixReferenceValue) {
  std::uint64_t s = 0;
  EXPECT_EQ(splitmix64(s), 0xe220a8397b1dcdafULL);
}

TEST(Random, DerivedStreamIsPureFunction) {
  Xoshiro256 a = derive_stream(42, 7);
  Xoshiro256 b = derive_stream(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Random, DistinctReplicatesAndSeedsDiffer) {
  EXPECT_NE(derive_stream(42, 0)(), derive_stream(42, 1)());
  EXPECT_NE(derive_stream(42, 0)(), derive_stream(43, 0)());
  EXPECT_NE(derive_stream(0, 1)(), derive_stream(1, 0)());
}

TEST(Random, UniformBitsLookBalanced) {
  Xoshiro256 g = derive_stream(1, 1);
  std::uniform_real_distribution<double> u;
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += u(g);
  EXPECT_NEAR(s / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Normal, KnownQuantiles) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-13);
  EXPECT_NEAR(upper_quantile(0.05), 1.6448536269514722, 1e-13);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-10);
}

TEST(Normal, CdfAndSurvival) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_sf(10.0), 7.619853024160527e-24, 1e-36);
}

TEST(Normal, QuantileInvertsCdf) {
  for (double u : {1e-8, 0.001, 0.02, 0.3, 0.6, 0.97, 0.999999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(u)), u, 1e-14 * std::max(1.0, u / (1.0 - u)));
  }
}

TEST(Normal, RejectsOutOfRange) {
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
  EXPECT_THROW(normal_quantile(std::nan("")), DomainError);
}
