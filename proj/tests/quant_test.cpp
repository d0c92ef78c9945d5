// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#include "ctg/quant.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ctg/hash.hpp"
#include "support/oracles.hpp"

using namespace ctg;
using quant::QuantLevels;

TEST(NormalQuantile, DomainErrors) {
    EXPECT_THROW(quant::std_normal_quantile(0.0), DomainError);
    EXPECT_THROW(quant::std_normal_quantile(1.0), DomainError);
    EXPECT_THROW(quant::std_normal_quantile(-0.1), DomainError);
    EXPECT_THROW(quant::std_normal_quantile(1.1), DomainError);
}

TEST(NormalQuantile, KnownValues) {
    EXPECT_DOUBLE_EQ(quant::std_normal_quantile(0.5), 0.0);
    // Verified against the quadrature + bisection oracle.
    EXPECT_NEAR(quant::std_normal_quantile(0.975), 1.959964, 1e-6);
    EXPECT_NEAR(quant::std_normal_quantile(0.975), oracles::quantile_by_bisection(0.975), 1e-9);
    EXPECT_NEAR(quant::std_normal_quantile(0.841344746), 1.0, 1e-8);
}

TEST(NormalQuantile, AntisymmetryIsExact) {
    // bitwise-exact for dyadic p, where 1 - (1 - p) reproduces p exactly
    for (double p : {0.25, 0.125, 0.375, 0.0625}) {
        EXPECT_EQ(quant::std_normal_quantile(p), -quant::std_normal_quantile(1.0 - p));
    }
    // other p only round-trip through 1 - p approximately
    for (double p : {0.01, 0.1, 0.3, 0.45}) {
        EXPECT_NEAR(quant::std_normal_quantile(p), -quant::std_normal_quantile(1.0 - p), 1e-12);
    }
}

TEST(NormalQuantile, RoundTripAccuracyOnGrid) {
    // |Phi(Q(p)) - p| <= 1e-10 across 10^4 grid points
    const int grid = 10000;
    double worst = 0.0;
    for (int i = 1; i <= grid; ++i) {
        const double p = static_cast<double>(i) / (grid + 1);
        const double x = quant::std_normal_quantile(p);
        worst = std::max(worst, std::fabs(quant::std_normal_cdf(x) - p));
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(NormalQuantile, StrictlyIncreasingOnGrid) {
    const int grid = 10000;
    double prev = quant::std_normal_quantile(1.0 / (grid + 1));
    for (int i = 2; i <= grid; ++i) {
        const double x = quant::std_normal_quantile(static_cast<double>(i) / (grid + 1));
        EXPECT_GT(x, prev);
        prev = x;
    }
}

TEST(BuildLevels, DomainErrors) {
    EXPECT_THROW(quant::build_levels(0), DomainError);
    EXPECT_THROW(quant::build_levels(9), DomainError);
}

TEST(BuildLevels, FourBitTableInvariants) {
    const QuantLevels levels = quant::build_levels(4);
    ASSERT_EQ(levels.count(), 16u);

    // strictly increasing
    for (std::size_t i = 1; i < 16; ++i) {
        EXPECT_GT(levels.levels[i], levels.levels[i - 1]);
    }
    // middle level from complementary quantiles is exactly zero
    EXPECT_NEAR(levels.levels[8], 0.0, 1e-12);
    // the symmetry the construction actually has: k_i = -k_{16-i} for
    // i = 1..15; level 0 is the lone clipped extreme
    for (std::size_t i = 1; i < 16; ++i) {
        EXPECT_NEAR(levels.levels[i] + levels.levels[16 - i], 0.0, 1e-9) << "i=" << i;
    }
    EXPECT_LT(levels.levels[0], -levels.levels[15]);

    // normalized table spans exactly [-1, 1] with zero preserved
    EXPECT_DOUBLE_EQ(levels.normalized.front(), -1.0);
    EXPECT_DOUBLE_EQ(levels.normalized.back(), 1.0);
    EXPECT_DOUBLE_EQ(levels.normalized[8], 0.0);
    EXPECT_EQ(levels.zero_code(), 8u);
}

TEST(BuildLevels, MatchesBisectionOracle) {
    const QuantLevels levels = quant::build_levels(4);
    const auto oracle = oracles::levels_by_bisection(4);
    ASSERT_EQ(oracle.size(), 16u);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_NEAR(levels.levels[i], oracle[i], 1e-8) << "i=" << i;
    }
}

TEST(BuildLevels, InvariantsHoldForSmallWidths) {
    for (int bits : {2, 3, 4, 5}) {
        const QuantLevels levels = quant::build_levels(bits);
        const std::size_t count = std::size_t{1} << bits;
        ASSERT_EQ(levels.count(), count);
        for (std::size_t i = 1; i < count; ++i) {
            EXPECT_GT(levels.levels[i], levels.levels[i - 1]) << "bits=" << bits;
            EXPECT_NEAR(levels.levels[i] + levels.levels[count - i], 0.0, 1e-9)
                << "bits=" << bits << " i=" << i;
        }
        EXPECT_NEAR(levels.levels[count / 2], 0.0, 1e-12);
        EXPECT_DOUBLE_EQ(levels.normalized.front(), -1.0);
        EXPECT_DOUBLE_EQ(levels.normalized.back(), 1.0);
    }
}

TEST(Quantize, AllZerosBlock) {
    const QuantLevels levels = quant::build_levels(4);
    std::vector<double> zeros(10, 0.0);
    auto blocks = quant::quantize_blocks(zeros, levels, 4);
    ASSERT_EQ(blocks.size(), 3u);
    for (const auto& b : blocks) {
        EXPECT_EQ(b.scale, 0.0);
        for (auto code : b.codes) EXPECT_EQ(code, levels.zero_code());
    }
    EXPECT_EQ(blocks[2].block_len, 2u);
    auto recovered = quant::dequantize(blocks[0], levels);
    for (double v : recovered) EXPECT_EQ(v, 0.0);
}

TEST(Quantize, AbsmaxValueHitsEndpointCode) {
    const QuantLevels levels = quant::build_levels(4);
    std::vector<double> values = {0.1, -0.2, 0.9};  // max is positive
    auto blocks = quant::quantize_blocks(values, levels, 8);
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_DOUBLE_EQ(blocks[0].scale, 0.9);
    EXPECT_EQ(blocks[0].codes[2], 15);  // normalized 1 -> top code

    std::vector<double> neg = {0.1, -0.9};
    auto nblocks = quant::quantize_blocks(neg, levels, 8);
    EXPECT_EQ(nblocks[0].codes[1], 0);  // normalized -1 -> bottom code
}

TEST(Quantize, ExactLevelMultiplesRecoverExactly) {
    const QuantLevels levels = quant::build_levels(4);
    const double scale = 3.5;
    std::vector<double> values;
    for (double n : levels.normalized) values.push_back(scale * n);
    auto blocks = quant::quantize_blocks(values, levels, values.size());
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_DOUBLE_EQ(blocks[0].scale, scale);
    auto recovered = quant::dequantize(blocks[0], levels);
    for (std::size_t i = 0; i < values.size(); ++i) {
        EXPECT_DOUBLE_EQ(recovered[i], values[i]) << "i=" << i;
    }
}

TEST(Quantize, RoundTripErrorWithinHalfGapBound) {
    const QuantLevels levels = quant::build_levels(4);
    const double half_gap = levels.max_adjacent_normalized_gap() / 2.0;
    SplitMix64 rng(5150);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> values(64);
        for (auto& v : values) {
            // uniform in [-2, 2)
            v = 4.0 * (static_cast<double>(rng.next() >> 11) / 9007199254740992.0) - 2.0;
        }
        auto blocks = quant::quantize_blocks(values, levels, 64);
        ASSERT_EQ(blocks.size(), 1u);
        auto recovered = quant::dequantize(blocks[0], levels);
        const double bound = blocks[0].scale * half_gap + 1e-12;
        for (std::size_t i = 0; i < values.size(); ++i) {
            EXPECT_LE(std::fabs(values[i] - recovered[i]), bound) << "i=" << i;
        }
    }
}

TEST(Quantize, NearestLevelAgainstExhaustiveCheck) {
    const QuantLevels levels = quant::build_levels(4);
    SplitMix64 rng(777);
    for (int trial = 0; trial < 2000; ++trial) {
        const double u =
            2.0 * (static_cast<double>(rng.next() >> 11) / 9007199254740992.0) - 1.0;
        const auto code = quant::encode_value(u, levels);
        double best = 1e300;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < 16; ++i) {
            const double d = std::fabs(u - levels.normalized[i]);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        EXPECT_EQ(code, best_i);
    }
}

TEST(Quantize, IdempotentAfterRoundTrip) {
    const QuantLevels levels = quant::build_levels(4);
    SplitMix64 rng(2025);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values(32);
        for (auto& v : values) {
            v = 2.0 * (static_cast<double>(rng.next() >> 11) / 9007199254740992.0) - 1.0;
        }
        auto first = quant::quantize_blocks(values, levels, 32);
        auto recovered = quant::dequantize(first[0], levels);
        auto second = quant::quantize_blocks(recovered, levels, 32);
        EXPECT_DOUBLE_EQ(first[0].scale, second[0].scale);
        EXPECT_EQ(first[0].codes, second[0].codes);
    }
}

TEST(Dequantize, CodeOutOfRangeThrows) {
    const QuantLevels levels = quant::build_levels(2);
    quant::QuantizedBlock block;
    block.scale = 1.0;
    block.codes = {0, 7};
    block.block_len = 2;
    EXPECT_THROW(quant::dequantize(block, levels), quant::CodeOutOfRange);
}
