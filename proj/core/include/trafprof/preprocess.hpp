#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trafprof/capture.hpp"

namespace trafprof {

/// (sqrt(delay), sign, sqrt(size)), each in [0, 1].
using PacketFeature = std::array<double, 3>;
/// Max-pooled components followed by average-pooled components.
using PooledFeature = std::array<double, 6>;

inline constexpr std::size_t kSeriesLength = 2048;
inline constexpr std::size_t kPooledLength = 128;
inline constexpr std::size_t kPoolBlockSize = 16;
inline constexpr std::size_t kPoolBlocks = kPooledLength / kPoolBlockSize;

struct PreprocessOptions {
    double size_cap = 2048.0;  ///< bytes
    double delay_cap = 1.0;    ///< seconds
};

struct NormalizedSeries {
    std::vector<PacketFeature> entries;
};

struct PooledSeries {
    std::array<PooledFeature, kPooledLength> entries{};

    /// Scale block (0..7) of an entry: blocks 0 and 1 hold the raw first 32
    /// packets, block k >= 2 pools windows of 2^(k-1) entries.
    static constexpr std::size_t block_index(std::size_t entry) { return entry / kPoolBlockSize; }
};

/// Throws EmptyStream for an empty packet list and std::invalid_argument for
/// non-positive caps.
NormalizedSeries normalize(std::span<const PacketSummary> packets, const PreprocessOptions& opts = {});
NormalizedSeries normalize(const Stream& stream, const PreprocessOptions& opts = {});

/// Keeps the first 2048 entries, zero-padding at the tail.
NormalizedSeries clip_pad(NormalizedSeries series);

/// Exponential pooling of a 2048-entry series into 128 six-dimensional
/// entries. Throws BadLength for any other input length.
PooledSeries exp_pool(const NormalizedSeries& series2048);

/// One pooling window: `width` input entries starting at `start`.
struct PoolWindow {
    std::size_t start;
    std::size_t width;
};

/// Input window for pooled entry `i`. Width 1 marks a raw entry.
PoolWindow pool_window(std::size_t i);

/// normalize -> clip_pad -> exp_pool.
PooledSeries preprocess(std::span<const PacketSummary> packets, const PreprocessOptions& opts = {});

/// `{"label_app", "label_act", "pooled"}` with 9 significant digits.
std::string feature_dump_line(const PooledSeries& pooled, const std::string& label_app, const std::string& label_act);

}  // namespace trafprof
