#include <doctest.h>

#include <limits>
#include <random>

#include "osnids/error.hpp"
#include "osnids/preprocess.hpp"
#include "support/fixtures.hpp"

using namespace osnids;

namespace {

// O(n^2): keep a sample iff no earlier sample has the same bytes and label.
std::vector<LabeledSample> quadratic_dedup(const std::vector<LabeledSample>& in) {
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < in.size(); ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i && !seen; ++j) {
            seen = in[j].features == in[i].features && in[j].label == in[i].label;
        }
        if (!seen) {
            out.push_back(in[i]);
        }
    }
    return out;
}

std::vector<LabeledSample> with_duplicates(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<PayloadBytes> pool;
    for (int i = 0; i < 15; ++i) {
        pool.push_back(fixtures::random_payload(rng));
    }
    std::vector<LabeledSample> out;
    for (int i = 0; i < 200; ++i) {
        LabeledSample s;
        s.features = pool[rng() % pool.size()];
        s.label = ClassId(rng() % 3);
        out.push_back(s);
    }
    return out;
}

} // namespace

TEST_CASE("deduplicate matches the quadratic oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto samples = with_duplicates(seed);
        const auto fast = deduplicate(samples);
        CHECK(fast == quadratic_dedup(samples));
        CHECK(fast.size() < samples.size());
    }
    CHECK(deduplicate({}).empty());
}

TEST_CASE("same bytes with different labels are kept") {
    LabeledSample a;
    a.features[0] = 1;
    LabeledSample b = a;
    b.label = 2;
    CHECK(deduplicate({a, b, a, b}).size() == 2);
}

TEST_CASE("undersampling caps benign and keeps attacks in order") {
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 300; ++i) {
        LabeledSample s;
        s.features[0] = std::uint8_t(i % 250 + 1);
        s.features[1] = std::uint8_t(i / 250);
        s.label = i % 3 == 0 ? ClassId(1) : kBenignClass;
        samples.push_back(s);
    }
    const auto out = undersample_benign(samples, 1.0, 5);
    const auto attacks = std::count_if(out.begin(), out.end(), [](auto& s) { return !s.is_benign(); });
    const auto benign = std::count_if(out.begin(), out.end(), [](auto& s) { return s.is_benign(); });
    CHECK(attacks == 100);
    CHECK(benign == 100);
    // Kept samples form a subsequence of the input.
    std::size_t j = 0;
    for (const auto& s : out) {
        while (j < samples.size() && !(samples[j] == s)) {
            ++j;
        }
        REQUIRE(j < samples.size());
        ++j;
    }
    CHECK(undersample_benign(samples, 1.0, 5) == out);
    CHECK_FALSE(undersample_benign(samples, 1.0, 6) == out);

    CHECK(undersample_benign(samples, 0.5, 1).size() == 150);
    CHECK(undersample_benign(samples, 10.0, 1) == samples);
    CHECK(undersample_benign(samples, std::numeric_limits<double>::infinity(), 1) == samples);
}

TEST_CASE("undersampling errors") {
    std::vector<LabeledSample> benign_only(5);
    for (auto& s : benign_only) {
        s.features[0] = 1;
    }
    CHECK_THROWS_AS(undersample_benign(benign_only, 1.0, 0), Error);
    try {
        undersample_benign(benign_only, 1.0, 0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoAttackSamples);
    }
    auto with_attack = benign_only;
    with_attack[0].label = 1;
    try {
        undersample_benign(with_attack, 0.0, 0);
        FAIL("expected ValueOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValueOutOfRange);
    }
}
