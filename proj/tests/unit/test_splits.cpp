#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "osnids/error.hpp"
#include "osnids/splits.hpp"

using namespace osnids;

namespace {

SampleSet corpus(std::size_t benign, std::size_t per_attack) {
    SampleSet set;
    const std::vector<std::string> classes{"DDoS", "PortScan", "Bot", "DoS Hulk"};
    std::uint32_t counter = 1;
    auto add = [&](ClassId label) {
        LabeledSample s;
        s.features[0] = std::uint8_t(counter);
        s.features[1] = std::uint8_t(counter >> 8);
        s.features[2] = std::uint8_t(counter >> 16);
        s.label = label;
        s.cluster_id = label == kBenignClass ? std::optional<ClusterId>(int(counter % 3)) : std::nullopt;
        ++counter;
        set.samples.push_back(s);
    };
    for (std::size_t i = 0; i < benign; ++i) {
        add(kBenignClass);
    }
    for (const auto& c : classes) {
        const ClassId id = set.intern_class(c);
        for (std::size_t i = 0; i < per_attack; ++i) {
            add(id);
        }
    }
    return set;
}

SplitSpec spec(std::uint64_t seed) {
    SplitSpec s;
    s.heldout_classes = {"Bot", "DoS Hulk"};
    s.seed = seed;
    return s;
}

ErrorCode error_of(const SampleSet& set, const SplitSpec& s) {
    try {
        build_splits(set, s);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoFailure;
}

} // namespace

TEST_CASE("benign partition sizes and class routing") {
    for (std::size_t n : {1u, 2u, 3u, 10u, 97u, 1000u}) {
        const SampleSet set = corpus(n, 5);
        const SplitResult r = build_splits(set, spec(n));
        const auto benign_in = [](const SampleSet& s) {
            return std::size_t(std::count_if(s.samples.begin(), s.samples.end(), [](auto& x) { return x.is_benign(); }));
        };
        const std::size_t n1 = n / 2;
        const std::size_t n2 = (8 * n) / 10 - n1;
        CHECK(r.d1.size() == n1);
        CHECK(benign_in(r.d2) == n2);
        CHECK(benign_in(r.d3) == n - n1 - n2);
        CHECK(r.d2.size() - benign_in(r.d2) == 10);
        CHECK(r.d3.size() - benign_in(r.d3) == 10);

        const ClassId bot = *set.find_class("Bot");
        const ClassId hulk = *set.find_class("DoS Hulk");
        for (const auto& s : r.d1.samples) {
            CHECK(s.is_benign());
            CHECK_FALSE(s.cluster_id);
        }
        for (const auto& s : r.d2.samples) {
            CHECK(s.label != bot);
            CHECK(s.label != hulk);
        }
        for (const auto& s : r.d3.samples) {
            CHECK((s.is_benign() || s.label == bot || s.label == hulk));
        }

        // Benign samples are partitioned: every input benign appears once.
        std::map<std::uint32_t, int> seen;
        auto key = [](const LabeledSample& s) {
            return std::uint32_t(s.features[0]) | std::uint32_t(s.features[1]) << 8 | std::uint32_t(s.features[2]) << 16;
        };
        for (const auto* part : {&r.d1, &r.d2, &r.d3}) {
            for (const auto& s : part->samples) {
                if (s.is_benign()) {
                    ++seen[key(s)];
                }
            }
        }
        CHECK(seen.size() == n);
        for (const auto& [k, c] : seen) {
            CHECK(c == 1);
        }
        CHECK(r.d1.class_names == set.class_names);
    }
}

TEST_CASE("splits are seed deterministic") {
    const SampleSet set = corpus(200, 3);
    CHECK(build_splits(set, spec(1)).d1 == build_splits(set, spec(1)).d1);
    CHECK_FALSE(build_splits(set, spec(1)).d1 == build_splits(set, spec(2)).d1);
}

TEST_CASE("manifest counts") {
    const SampleSet set = corpus(10, 2);
    const SplitResult r = build_splits(set, spec(0));
    std::map<std::pair<std::string, std::string>, std::size_t> m;
    for (const auto& row : r.manifest) {
        m[{row.split, row.class_name}] = row.count;
    }
    CHECK(m.at({"d1", "BENIGN"}) == 5);
    CHECK(m.at({"d2", "BENIGN"}) == 3);
    CHECK(m.at({"d3", "BENIGN"}) == 2);
    CHECK(m.at({"d2", "DDoS"}) == 2);
    CHECK(m.at({"d3", "Bot"}) == 2);
    CHECK_FALSE(m.contains({"d1", "DDoS"}));
    std::ostringstream out;
    write_manifest_csv(out, r.manifest);
    CHECK(out.str().rfind("split,class,count\n", 0) == 0);
}

TEST_CASE("split validation") {
    const SampleSet set = corpus(10, 2);
    SplitSpec s = spec(0);
    s.heldout_classes.push_back("Infiltration");
    CHECK(error_of(set, s) == ErrorCode::UnknownHeldoutClass);

    s = spec(0);
    s.benign_ratios = {0.5, 0.3, 0.3};
    CHECK(error_of(set, s) == ErrorCode::InvalidSplitSpec);
    s.benign_ratios = {-0.1, 0.6, 0.5};
    CHECK(error_of(set, s) == ErrorCode::InvalidSplitSpec);

    s = spec(0);
    s.heldout_classes = {"DDoS", "PortScan", "Bot", "DoS Hulk"};
    CHECK(error_of(set, s) == ErrorCode::NoKnownAttacks);

    CHECK(error_of(corpus(0, 2), spec(0)) == ErrorCode::EmptyBenign);
}

TEST_CASE("default held-out classes") {
    const auto names = default_heldout_classes();
    REQUIRE(names.size() == 5);
    CHECK(names.front() == "DoS Hulk");
    CHECK(std::find(names.begin(), names.end(), "Bot") != names.end());
}
