#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

#include "trafprof/capture.hpp"

namespace trafprof {

/// Mergeable moments of one packet-size series.
struct SeriesStats {
    std::uint64_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();

    void add(double size);
    bool empty() const { return n == 0; }
    /// Zero for an empty series.
    double mean() const;
    /// Population variance, clamped at zero.
    double variance() const;
    double stddev() const;

    bool operator==(const SeriesStats&) const = default;
};

SeriesStats merge(const SeriesStats& a, const SeriesStats& b);

struct FlowStats {
    SeriesStats full;
    SeriesStats incoming;
    SeriesStats outgoing;

    bool operator==(const FlowStats&) const = default;
};

FlowStats compute_stats(std::span<const PacketSummary> packets);
FlowStats merge_stats(const FlowStats& a, const FlowStats& b);

inline constexpr std::size_t kStatsFeatureCount = 15;
using StatsFeatures = std::array<double, kStatsFeatureCount>;

/// (mean, std, min, max, n) for full, incoming, outgoing in that order;
/// empty series contribute zeros.
StatsFeatures stats_to_features(const FlowStats& s);

/// Names matching stats_to_features, e.g. "incoming.std".
std::array<const char*, kStatsFeatureCount> stats_feature_names();

}  // namespace trafprof
