// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ctg/errors.hpp"

// Quantile-based n-bit level construction over the standard normal, with
// blockwise absmax quantize/dequantize. Level i averages the quantiles at
// i/(2^n+1) and (i+1)/(2^n+1); the lone undefined argument (0 at i = 0) is
// clipped to the half-step delta = 1/(2*(2^n+1)). That leaves level 0 as the
// unpaired negative extreme while k_i = -k_{2^n-i} holds exactly for every
// other index and the middle level is exactly zero.
namespace ctg::quant {

struct CodeOutOfRange : Error {
    using Error::Error;
};

inline double std_normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace detail {

// Inversion of the normal CDF for p in (0, 0.5]: bisection bracket to
// machine-width, then two guarded Newton refinements.
inline double quantile_lower_half(double p) {
    double lo = -40.0, hi = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (std_normal_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 2; ++iter) {
        double density = std_normal_pdf(x);
        if (density < 1e-300) break;
        x -= (std_normal_cdf(x) - p) / density;
    }
    return x;
}

}  // namespace detail

/// Inverse of the standard normal CDF. Antisymmetric by construction:
/// Q(1 - p) == -Q(p) exactly. Throws DomainError outside (0, 1).
inline double std_normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw DomainError("std_normal_quantile: p must lie strictly inside (0, 1)");
    }
    if (p == 0.5) return 0.0;
    if (p < 0.5) return detail::quantile_lower_half(p);
    return -detail::quantile_lower_half(1.0 - p);
}

/// 2^n strictly increasing code levels plus their normalized form. Negative
/// levels are normalized by |levels.front()| and positive ones by
/// levels.back(), so the normalized table spans exactly [-1, 1], zero stays
/// exactly representable, and an absmax-scaled block maps its extreme values
/// onto exact codes.
struct QuantLevels {
    int bits = 0;
    std::vector<double> levels;
    std::vector<double> normalized;

    std::size_t count() const { return levels.size(); }

    std::size_t zero_code() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < normalized.size(); ++i) {
            if (std::fabs(normalized[i]) < std::fabs(normalized[best])) best = i;
        }
        return best;
    }

    double max_adjacent_normalized_gap() const {
        double gap = 0.0;
        for (std::size_t i = 1; i < normalized.size(); ++i) {
            gap = std::max(gap, normalized[i] - normalized[i - 1]);
        }
        return gap;
    }
};

inline QuantLevels build_levels(int bits) {
    if (bits < 1 || bits > 8) throw DomainError("build_levels: bits must lie in [1, 8]");
    const std::size_t count = std::size_t{1} << bits;
    const double denom = static_cast<double>(count + 1);
    const double delta = 1.0 / (2.0 * denom);

    auto clipped_quantile = [&](double p) {
        if (p < delta) p = delta;
        if (p > 1.0 - delta) p = 1.0 - delta;
        return std_normal_quantile(p);
    };

    QuantLevels out;
    out.bits = bits;
    out.levels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double q_lo = clipped_quantile(static_cast<double>(i) / denom);
        const double q_hi = clipped_quantile(static_cast<double>(i + 1) / denom);
        out.levels[i] = 0.5 * (q_lo + q_hi);
    }

    const double neg_scale = -out.levels.front();
    const double pos_scale = out.levels.back();
    out.normalized.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double k = out.levels[i];
        if (k < 0.0) {
            out.normalized[i] = k / neg_scale;
        } else if (k > 0.0) {
            out.normalized[i] = pos_scale > 0.0 ? k / pos_scale : 0.0;
        } else {
            out.normalized[i] = 0.0;
        }
    }
    return out;
}

/// One quantized block: absmax scale plus one code per value.
struct QuantizedBlock {
    double scale = 0.0;
    std::vector<std::uint8_t> codes;
    std::size_t block_len = 0;
};

/// Nearest normalized level for u in [-1, 1]; ties go to the lower index.
inline std::uint8_t encode_value(double u, const QuantLevels& levels) {
    std::size_t best = 0;
    double best_dist = std::fabs(u - levels.normalized[0]);
    for (std::size_t i = 1; i < levels.normalized.size(); ++i) {
        double dist = std::fabs(u - levels.normalized[i]);
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    return static_cast<std::uint8_t>(best);
}

inline std::vector<QuantizedBlock> quantize_blocks(std::span<const double> values,
                                                   const QuantLevels& levels,
                                                   std::size_t block_len) {
    if (block_len < 1) throw DomainError("quantize_blocks: block_len must be >= 1");
    std::vector<QuantizedBlock> blocks;
    for (std::size_t begin = 0; begin < values.size(); begin += block_len) {
        const std::size_t end = std::min(begin + block_len, values.size());
        QuantizedBlock block;
        block.block_len = end - begin;
        for (std::size_t i = begin; i < end; ++i) {
            block.scale = std::max(block.scale, std::fabs(values[i]));
        }
        block.codes.reserve(block.block_len);
        if (block.scale == 0.0) {
            block.codes.assign(block.block_len,
                               static_cast<std::uint8_t>(levels.zero_code()));
        } else {
            for (std::size_t i = begin; i < end; ++i) {
                block.codes.push_back(encode_value(values[i] / block.scale, levels));
            }
        }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

inline std::vector<double> dequantize(const QuantizedBlock& block, const QuantLevels& levels) {
    std::vector<double> out;
    out.reserve(block.codes.size());
    for (std::uint8_t code : block.codes) {
        if (code >= levels.count()) {
            throw CodeOutOfRange("dequantize: code " + std::to_string(code) +
                                 " exceeds level count " + std::to_string(levels.count()));
        }
        out.push_back(block.scale * levels.normalized[code]);
    }
    return out;
}

/// Human-readable level table: "index, k_i, normalized" per row.
inline void print_levels(const QuantLevels& levels, std::ostream& os) {
    char buf[96];
    for (std::size_t i = 0; i < levels.count(); ++i) {
        std::snprintf(buf, sizeof buf, "%2zu, %+.10f, %+.10f", i, levels.levels[i],
                      levels.normalized[i]);
        os << buf << '\n';
    }
}

}  // namespace ctg::quant
