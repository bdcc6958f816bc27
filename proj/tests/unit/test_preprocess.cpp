#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "support/pool_oracle.hpp"
#include "trafprof/error.hpp"
#include "trafprof/preprocess.hpp"

using namespace trafprof;

namespace {

PacketSummary pkt(std::uint64_t micros, bool out, std::uint32_t size) {
    return {static_cast<std::uint32_t>(micros / 1'000'000), static_cast<std::uint32_t>(micros % 1'000'000), out, size};
}

NormalizedSeries random_series(std::mt19937_64& rng, std::size_t n = kSeriesLength) {
    std::uniform_real_distribution<double> u{0.0, 1.0};
    NormalizedSeries s;
    for (std::size_t i = 0; i < n; ++i) s.entries.push_back({u(rng), (rng() & 1) ? 1.0 : 0.0, u(rng)});
    return s;
}

std::vector<oracle::Pooled> library_pool(const NormalizedSeries& s) {
    const auto p = exp_pool(s);
    return {p.entries.begin(), p.entries.end()};
}

}  // namespace

TEST_CASE("normalize worked examples") {
    const std::vector<PacketSummary> ps{pkt(10'000'000, true, 2048), pkt(10'500'000, false, 512),
                                        pkt(13'000'000, true, 4000), pkt(13'000'000, false, 0)};
    const auto s = normalize(ps);
    REQUIRE(s.entries.size() == 4);
    CHECK(s.entries[0][0] == 0.0);
    CHECK(s.entries[0][1] == 1.0);
    CHECK(s.entries[0][2] == 1.0);
    CHECK(s.entries[1][0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(s.entries[1][1] == 0.0);
    CHECK(s.entries[1][2] == 0.5);
    CHECK(s.entries[2][0] == 1.0);  // 2.5 s saturates the 1 s cap
    CHECK(s.entries[2][2] == 1.0);
    CHECK(s.entries[3][0] == 0.0);
    CHECK(s.entries[3][2] == 0.0);

    PreprocessOptions opts;
    opts.delay_cap = 5.0;
    CHECK(normalize(ps, opts).entries[2][0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("normalize errors") {
    CHECK_THROWS_AS(normalize(std::vector<PacketSummary>{}), EmptyStream);
    PreprocessOptions bad;
    bad.delay_cap = 0.0;
    CHECK_THROWS_AS(normalize(std::vector{pkt(0, true, 1)}, bad), std::invalid_argument);
}

TEST_CASE("normalized components stay in the unit interval") {
    std::mt19937_64 rng{3};
    std::vector<PacketSummary> ps;
    std::uint64_t t = 0;
    for (int i = 0; i < 500; ++i) {
        t += rng() % 3'000'000;
        ps.push_back(pkt(t, rng() & 1, static_cast<std::uint32_t>(rng() % 5000)));
    }
    for (const auto& e : normalize(ps).entries) {
        for (double v : e) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("clip_pad") {
    std::mt19937_64 rng{1};
    const auto full = random_series(rng);
    CHECK(clip_pad(full).entries == full.entries);

    const auto long_series = random_series(rng, 3000);
    const auto clipped = clip_pad(long_series);
    REQUIRE(clipped.entries.size() == kSeriesLength);
    CHECK(std::equal(clipped.entries.begin(), clipped.entries.end(), long_series.entries.begin()));

    const auto short_series = random_series(rng, 10);
    const auto padded = clip_pad(short_series);
    REQUIRE(padded.entries.size() == kSeriesLength);
    CHECK(std::equal(short_series.entries.begin(), short_series.entries.end(), padded.entries.begin()));
    for (std::size_t i = 10; i < kSeriesLength; ++i) CHECK(padded.entries[i] == PacketFeature{0, 0, 0});
}

TEST_CASE("pool windows cover the series exactly once") {
    const std::size_t widths[] = {32, 32, 64, 128, 256, 512, 1024};
    CHECK(std::accumulate(std::begin(widths), std::end(widths), std::size_t{0}) == kSeriesLength);
    CHECK(32 + 16 * 6 == kPooledLength);

    std::vector<int> covered(kSeriesLength, 0);
    for (std::size_t i = 0; i < kPooledLength; ++i) {
        const auto w = pool_window(i);
        for (std::size_t k = w.start; k < w.start + w.width; ++k) ++covered[k];
        CHECK(PooledSeries::block_index(i) == i / 16);
    }
    for (int c : covered) CHECK(c == 1);
    CHECK(pool_window(31).width == 1);
    CHECK(pool_window(32).start == 32);
    CHECK(pool_window(32).width == 2);
    CHECK(pool_window(127).start == 2048 - 64);
    CHECK_THROWS(pool_window(128));
}

TEST_CASE("exp_pool trivial inputs") {
    NormalizedSeries zeros;
    zeros.entries.assign(kSeriesLength, {0, 0, 0});
    for (const auto& e : exp_pool(zeros).entries) CHECK(e == PooledFeature{});

    NormalizedSeries constant;
    constant.entries.assign(kSeriesLength, {0.25, 1.0, 0.75});
    const auto p = exp_pool(constant);
    for (std::size_t i = 32; i < kPooledLength; ++i) {
        CHECK(p.entries[i] == PooledFeature{0.25, 1.0, 0.75, 0.25, 1.0, 0.75});
    }
    CHECK(p.entries[0] == PooledFeature{0.25, 1.0, 0.75, 0, 0, 0});
    CHECK(p.entries[1] == PooledFeature{0.25, 1.0, 0.75, 0.25, 1.0, 0.75});
}

TEST_CASE("exp_pool matches the brute-force oracle") {
    NormalizedSeries ramp;
    for (std::size_t t = 0; t < kSeriesLength; ++t) ramp.entries.push_back({0.0, 0.0, static_cast<double>(t) / 2048.0});
    CHECK(library_pool(ramp) == oracle::exp_pool(ramp.entries));
    // The last window of the ramp: max is entry 2047, mean the window midpoint.
    const auto p = exp_pool(ramp);
    CHECK(p.entries[127][2] == 2047.0 / 2048.0);
    CHECK(p.entries[127][5] == doctest::Approx((1984.0 + 2047.0) / 2.0 / 2048.0).epsilon(1e-12));

    std::mt19937_64 rng{11};
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_series(rng);
        CHECK(library_pool(s) == oracle::exp_pool(s.entries));
    }
}

TEST_CASE("exp_pool invariants") {
    std::mt19937_64 rng{17};
    for (int trial = 0; trial < 50; ++trial) {
        auto s = random_series(rng);
        const auto base = exp_pool(s);
        for (std::size_t i = 0; i < kPooledLength; ++i) {
            for (double v : base.entries[i]) CHECK((v >= 0.0 && v <= 1.0));
            if (pool_window(i).width >= 2) {
                for (int d = 0; d < 3; ++d) CHECK(base.entries[i][d] >= base.entries[i][d + 3]);
            }
        }

        // Reversing one window leaves its max unchanged and its mean equal
        // up to summation order.
        const std::size_t i = 32 + rng() % (kPooledLength - 32);
        const auto w = pool_window(i);
        auto permuted = s;
        std::shuffle(permuted.entries.begin() + static_cast<long>(w.start),
                     permuted.entries.begin() + static_cast<long>(w.start + w.width), rng);
        const auto after = exp_pool(permuted);
        for (std::size_t j = 0; j < kPooledLength; ++j) {
            for (int d = 0; d < 6; ++d) {
                CHECK(after.entries[j][d] == doctest::Approx(base.entries[j][d]).epsilon(1e-12));
            }
        }

        // Raising one component never lowers its max-pooled output.
        const std::size_t t = rng() % kSeriesLength;
        const int d = static_cast<int>(rng() % 3);
        auto raised = s;
        raised.entries[t][d] = std::min(1.0, raised.entries[t][d] + 0.3);
        const auto up = exp_pool(raised);
        for (std::size_t j = 0; j < kPooledLength; ++j) CHECK(up.entries[j][d] >= base.entries[j][d]);
    }
}

TEST_CASE("exp_pool rejects other lengths") {
    std::mt19937_64 rng{2};
    CHECK_THROWS_AS(exp_pool(random_series(rng, 2047)), BadLength);
    CHECK_THROWS_AS(exp_pool(random_series(rng, 2049)), BadLength);
    CHECK_THROWS_AS(exp_pool(NormalizedSeries{}), DataError);
}

TEST_CASE("preprocess composes the stages") {
    std::vector<PacketSummary> ps;
    for (int i = 0; i < 40; ++i) ps.push_back(pkt(1'000'000 + 10'000 * i, i % 3 == 0, 100 + 30 * i));
    const auto p = preprocess(ps);
    CHECK(p.entries == exp_pool(clip_pad(normalize(ps))).entries);
}

TEST_CASE("feature dump line") {
    std::mt19937_64 rng{23};
    const auto p = exp_pool(random_series(rng));
    const auto line = feature_dump_line(p, "face\"book", "upload");
    CHECK(line.find('\n') == std::string::npos);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("label_app") == "face\"book");
    CHECK(j.at("label_act") == "upload");
    REQUIRE(j.at("pooled").size() == kPooledLength);
    for (std::size_t i = 0; i < kPooledLength; ++i) {
        REQUIRE(j["pooled"][i].size() == 6);
        for (int d = 0; d < 6; ++d) {
            const double v = j["pooled"][i][d].get<double>();
            CHECK(v == doctest::Approx(p.entries[i][d]).epsilon(1e-8));
        }
    }
}
