#pragma once

// Brute-force exponential pooling: walks the segment table directly
// instead of going through pool_window.

#include <algorithm>
#include <array>
#include <vector>

namespace oracle {

using Entry = std::array<double, 3>;
using Pooled = std::array<double, 6>;

inline std::vector<Pooled> exp_pool(const std::vector<Entry>& x) {
    struct Segment {
        std::size_t begin, end, step;
    };
    const Segment segments[] = {{0, 32, 1},     {32, 64, 2},     {64, 128, 4},     {128, 256, 8},
                                {256, 512, 16}, {512, 1024, 32}, {1024, 2048, 64}};
    std::vector<Pooled> out;
    for (const auto& s : segments) {
        for (std::size_t w = s.begin; w < s.end; w += s.step) {
            Pooled y{};
            if (s.step == 1) {
                for (int d = 0; d < 3; ++d) {
                    y[d] = x[w][d];
                    y[d + 3] = w == 0 ? 0.0 : x[w - 1][d];
                }
            } else {
                for (int d = 0; d < 3; ++d) {
                    double mx = x[w][d], sum = 0.0;
                    for (std::size_t k = w; k < w + s.step; ++k) {
                        mx = std::max(mx, x[k][d]);
                        sum += x[k][d];
                    }
                    y[d] = mx;
                    y[d + 3] = sum / static_cast<double>(s.step);
                }
            }
            out.push_back(y);
        }
    }
    return out;
}

}  // namespace oracle
