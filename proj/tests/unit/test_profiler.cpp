#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "trafprof/error.hpp"
#include "trafprof/profiler.hpp"
#include "trafprof/rng.hpp"

using namespace trafprof;

namespace {

const EventVocabulary kVocab{{"a/x", "a/y", "b/none"}};

ProfileRecord record(const std::string& user, std::map<std::string, std::uint64_t> counts) {
    ProfileRecord r{user, std::move(counts)};
    for (const auto& [k, n] : r.counts) r.total_streams += n;
    return r;
}

}  // namespace

TEST_CASE("event log lines round-trip") {
    const ProfileEvent e{"u1", 17, "facebook", "post_text"};
    CHECK(parse_event_line(event_to_json_line(e)) == e);
    std::istringstream in{event_to_json_line(e) + "\n\n" + event_to_json_line(e) + "\n"};
    CHECK(read_event_log(in).size() == 2);
    std::istringstream bad{"{\"user\": 1}\n"};
    CHECK_THROWS_AS(read_event_log(bad), DataError);
}

TEST_CASE("profile database") {
    ProfileDb db{kVocab};
    db.update({"u", 5, "a", "x"});
    CHECK(db.get("u")->total_streams == 1);
    for (int i = 0; i < 9; ++i) db.update({"u", static_cast<std::uint64_t>(i), "a", "y"});
    const auto r = *db.get("u");
    CHECK(r.total_streams == 10);
    CHECK(r.counts.at("a/y") == 9);
    CHECK(r.last_updated == 8);
    db.update({"u", 1, "zzz", "q"});
    CHECK(db.get("u")->counts.at("other") == 1);
    CHECK_FALSE(db.get("nobody").has_value());

    const auto back = ProfileDb::from_snapshot(nlohmann::json::parse(db.snapshot_json().dump()));
    CHECK(back.snapshot() == db.snapshot());
}

TEST_CASE("replay depends only on the multiset of events") {
    Rng rng = make_rng(1, "profile");
    const char* apps[] = {"a", "a", "b", "c"};
    const char* acts[] = {"x", "y", "none", "w"};
    std::uniform_int_distribution<int> pick{0, 3}, user{0, 4};
    std::vector<ProfileEvent> events;
    for (int i = 0; i < 300; ++i) {
        const int k = pick(rng);
        events.push_back({"user" + std::to_string(user(rng)), static_cast<std::uint64_t>(i), apps[k], acts[k]});
    }
    const auto reference = replay(kVocab, events).snapshot();
    std::uint64_t total = 0;
    for (const auto& [u, r] : reference) total += r.total_streams;
    CHECK(total == events.size());
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(events.begin(), events.end(), rng);
        CHECK(replay(kVocab, events).snapshot() == reference);
    }
}

TEST_CASE("naive Bayes matches explicit enumeration") {
    // Three users, two labels, hand-computed with Bayes' rule.
    const std::vector<LabeledProfile> train{
        {record("u1", {{"a/x", 3}, {"b/none", 1}}), "L"},
        {record("u2", {{"a/x", 1}, {"a/y", 2}}), "L"},
        {record("u3", {{"a/y", 4}, {"b/none", 2}}), "R"},
    };
    const auto m = nb_train("t", {"L", "R"}, train, kVocab, 1.0);
    // V = 4 (a/x, a/y, b/none, other). L totals: a/x 4, a/y 2, b/none 1 = 7.
    // R totals: a/y 4, b/none 2 = 6.
    const double pl[] = {5.0 / 11, 3.0 / 11, 2.0 / 11, 1.0 / 11};
    const double pr[] = {1.0 / 10, 5.0 / 10, 3.0 / 10, 1.0 / 10};
    const double prior_l = 2.0 / 3, prior_r = 1.0 / 3;
    for (int e = 0; e < 4; ++e) {
        CHECK(std::abs(std::exp(m.log_cond[0][e]) - pl[e]) < 1e-15);
        CHECK(std::abs(std::exp(m.log_cond[1][e]) - pr[e]) < 1e-15);
    }
    const auto q = record("q", {{"a/x", 1}, {"a/y", 2}, {"nope", 1}});
    const double jl = prior_l * pl[0] * pl[1] * pl[1] * pl[3];
    const double jr = prior_r * pr[0] * pr[1] * pr[1] * pr[3];
    const auto post = nb_predict(m, q);
    CHECK(std::abs(post[0] - jl / (jl + jr)) < 1e-12);
    CHECK(std::abs(post[1] - jr / (jl + jr)) < 1e-12);
    CHECK(TraitModel::from_json(nlohmann::json::parse(m.to_json().dump())) == m);
}

TEST_CASE("naive Bayes edge cases") {
    SUBCASE("one label") {
        const auto m = nb_train("t", {"only"}, {{record("u", {{"a/x", 2}}), "only"}}, kVocab);
        CHECK(m.log_prior[0] == 0.0);
        CHECK(nb_predict(m, record("q", {{"a/y", 9}}))[0] == 1.0);
    }
    SUBCASE("mirrored labels give an even posterior on a balanced query") {
        const auto m = nb_train("t", {"L", "R"},
                                {{record("u1", {{"a/x", 5}, {"a/y", 1}}), "L"}, {record("u2", {{"a/x", 1}, {"a/y", 5}}), "R"}},
                                kVocab);
        const auto p = nb_predict(m, record("q", {{"a/x", 3}, {"a/y", 3}}));
        CHECK(std::abs(p[0] - 0.5) < 1e-12);
    }
    SUBCASE("empty record returns the prior") {
        const auto m = nb_train("t", {"L", "R"},
                                {{record("u1", {{"a/x", 1}}), "L"}, {record("u2", {{"a/x", 1}}), "L"},
                                 {record("u3", {{"a/y", 1}}), "R"}},
                                kVocab);
        const auto p = nb_predict(m, ProfileRecord{"q"});
        CHECK(std::abs(p[0] - 2.0 / 3) < 1e-12);
    }
    SUBCASE("scaling counts keeps a strict argmax") {
        const auto m = nb_train("t", {"L", "R"},
                                {{record("u1", {{"a/x", 5}, {"a/y", 1}}), "L"}, {record("u2", {{"a/x", 1}, {"a/y", 5}}), "R"}},
                                kVocab);
        const auto base = nb_predict(m, record("q", {{"a/x", 2}, {"a/y", 1}}));
        for (std::uint64_t k = 1; k < 50; ++k) {
            const auto p = nb_predict(m, record("q", {{"a/x", 2 * k}, {"a/y", k}}));
            CHECK((p[0] > p[1]) == (base[0] > base[1]));
            CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-12);
            CHECK(p[1] > 0.0);
        }
    }
    SUBCASE("vocabulary order does not matter") {
        const std::vector<LabeledProfile> train{{record("u1", {{"a/x", 3}, {"b/none", 1}}), "L"},
                                                {record("u2", {{"a/y", 2}}), "R"}};
        const auto m1 = nb_train("t", {"L", "R"}, train, kVocab);
        const auto m2 = nb_train("t", {"L", "R"}, train, EventVocabulary{{"other", "b/none", "a/y", "a/x"}});
        const auto q = record("q", {{"a/x", 1}, {"b/none", 2}, {"zz", 1}});
        const auto p1 = nb_predict(m1, q), p2 = nb_predict(m2, q);
        CHECK(std::abs(p1[0] - p2[0]) < 1e-12);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(nb_train("t", {"L", "R"}, {{record("u", {}), "L"}}, kVocab), EmptyTraining);
        CHECK_THROWS_AS(nb_train("t", {"L"}, {{record("u", {}), "Q"}}, kVocab), BadConfig);
        CHECK_THROWS_AS(nb_train("t", {"L"}, {{record("u", {}), "L"}}, kVocab, 0.0), BadConfig);
    }
}
