#include "trafprof/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trafprof/error.hpp"

namespace trafprof {

NormalizedSeries normalize(std::span<const PacketSummary> packets, const PreprocessOptions& opts) {
    if (packets.empty()) throw EmptyStream{"cannot normalize a stream without packets"};
    if (!(opts.size_cap > 0.0) || !(opts.delay_cap > 0.0)) {
        throw std::invalid_argument{"size_cap and delay_cap must be positive"};
    }
    NormalizedSeries out;
    out.entries.reserve(packets.size());
    std::uint64_t prev = packets.front().ts_micros();
    for (const auto& p : packets) {
        const std::uint64_t now = p.ts_micros();
        const double gap = now > prev ? static_cast<double>(now - prev) * 1e-6 : 0.0;
        prev = now;
        const double delay = std::min(gap, opts.delay_cap) / opts.delay_cap;
        const double size = std::min(static_cast<double>(p.size), opts.size_cap) / opts.size_cap;
        out.entries.push_back({std::sqrt(delay), p.outgoing ? 1.0 : 0.0, std::sqrt(size)});
    }
    return out;
}

NormalizedSeries normalize(const Stream& stream, const PreprocessOptions& opts) {
    if (stream.foreign()) throw EmptyStream{"stream has no device-side packets"};
    return normalize(summarize(stream).packets, opts);
}

NormalizedSeries clip_pad(NormalizedSeries series) {
    series.entries.resize(kSeriesLength, PacketFeature{0.0, 0.0, 0.0});
    return series;
}

PoolWindow pool_window(std::size_t i) {
    if (i >= kPooledLength) throw std::out_of_range{"pooled index out of range"};
    const std::size_t block = i / kPoolBlockSize;
    if (block < 2) return {i, 1};
    // Block k >= 2 covers input [16 * 2^(k-1), 16 * 2^k) with windows of 2^(k-1).
    const std::size_t width = std::size_t{1} << (block - 1);
    const std::size_t block_start = kPoolBlockSize * width;
    return {block_start + (i % kPoolBlockSize) * width, width};
}

PooledSeries exp_pool(const NormalizedSeries& series2048) {
    const auto& x = series2048.entries;
    if (x.size() != kSeriesLength) {
        throw BadLength{fmt::format("exp_pool expects {} entries, got {}", kSeriesLength, x.size())};
    }
    PooledSeries out;
    for (std::size_t i = 0; i < kPooledLength; ++i) {
        const auto [start, width] = pool_window(i);
        auto& y = out.entries[i];
        if (width == 1) {
            // Raw entry paired with its predecessor to keep six inputs.
            const PacketFeature prev = start > 0 ? x[start - 1] : PacketFeature{0.0, 0.0, 0.0};
            for (std::size_t d = 0; d < 3; ++d) {
                y[d] = x[start][d];
                y[d + 3] = prev[d];
            }
            continue;
        }
        for (std::size_t d = 0; d < 3; ++d) {
            double mx = x[start][d];
            double sum = 0.0;
            for (std::size_t k = start; k < start + width; ++k) {
                mx = std::max(mx, x[k][d]);
                sum += x[k][d];
            }
            y[d] = mx;
            y[d + 3] = sum / static_cast<double>(width);
        }
    }
    return out;
}

PooledSeries preprocess(std::span<const PacketSummary> packets, const PreprocessOptions& opts) {
    return exp_pool(clip_pad(normalize(packets, opts)));
}

std::string feature_dump_line(const PooledSeries& pooled, const std::string& label_app,
                              const std::string& label_act) {
    auto escape = [](const std::string& s) { return nlohmann::json(s).dump(); };
    std::string line = fmt::format(R"({{"label_app":{},"label_act":{},"pooled":[)", escape(label_app),
                                   escape(label_act));
    for (std::size_t i = 0; i < kPooledLength; ++i) {
        if (i > 0) line.push_back(',');
        const auto& e = pooled.entries[i];
        line += fmt::format("[{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}]", e[0], e[1], e[2], e[3], e[4], e[5]);
    }
    line += "]}";
    return line;
}

}  // namespace trafprof
