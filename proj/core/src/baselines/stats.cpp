#include "trafprof/baselines/stats.hpp"

#include <algorithm>
#include <cmath>

namespace trafprof {

void SeriesStats::add(double size) {
    ++n;
    sum += size;
    sum_sq += size * size;
    min = std::min(min, size);
    max = std::max(max, size);
}

double SeriesStats::mean() const {
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double SeriesStats::variance() const {
    if (n == 0) return 0.0;
    const double m = mean();
    return std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
}

double SeriesStats::stddev() const {
    return std::sqrt(variance());
}

SeriesStats merge(const SeriesStats& a, const SeriesStats& b) {
    return {a.n + b.n, a.sum + b.sum, a.sum_sq + b.sum_sq, std::min(a.min, b.min), std::max(a.max, b.max)};
}

FlowStats compute_stats(std::span<const PacketSummary> packets) {
    FlowStats s;
    for (const auto& p : packets) {
        const auto size = static_cast<double>(p.size);
        s.full.add(size);
        (p.outgoing ? s.outgoing : s.incoming).add(size);
    }
    return s;
}

FlowStats merge_stats(const FlowStats& a, const FlowStats& b) {
    return {merge(a.full, b.full), merge(a.incoming, b.incoming), merge(a.outgoing, b.outgoing)};
}

StatsFeatures stats_to_features(const FlowStats& s) {
    StatsFeatures f{};
    std::size_t k = 0;
    for (const SeriesStats* series : {&s.full, &s.incoming, &s.outgoing}) {
        if (!series->empty()) {
            f[k] = series->mean();
            f[k + 1] = series->stddev();
            f[k + 2] = series->min;
            f[k + 3] = series->max;
            f[k + 4] = static_cast<double>(series->n);
        }
        k += 5;
    }
    return f;
}

std::array<const char*, kStatsFeatureCount> stats_feature_names() {
    return {"full.mean",     "full.std",     "full.min",     "full.max",     "full.n",
            "incoming.mean", "incoming.std", "incoming.min", "incoming.max", "incoming.n",
            "outgoing.mean", "outgoing.std", "outgoing.min", "outgoing.max", "outgoing.n"};
}

}  // namespace trafprof
