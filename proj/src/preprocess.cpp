#include "osnids/preprocess.hpp"

#include <cmath>
#include <string_view>
#include <unordered_set>

#include "osnids/error.hpp"
#include "osnids/random.hpp"

namespace osnids {
namespace {

struct SampleKeyHash {
    std::size_t operator()(const LabeledSample* s) const {
        const std::string_view bytes(reinterpret_cast<const char*>(s->features.data()), s->features.size());
        return std::hash<std::string_view>{}(bytes) ^ (std::size_t(s->label) * 0x9E3779B97F4A7C15ULL);
    }
};

struct SampleKeyEq {
    bool operator()(const LabeledSample* a, const LabeledSample* b) const {
        return a->label == b->label && a->features == b->features;
    }
};

} // namespace

std::vector<LabeledSample> deduplicate(const std::vector<LabeledSample>& samples) {
    std::unordered_set<const LabeledSample*, SampleKeyHash, SampleKeyEq> seen;
    seen.reserve(samples.size());
    std::vector<LabeledSample> out;
    for (const auto& s : samples) {
        if (seen.insert(&s).second) {
            out.push_back(s);
        }
    }
    return out;
}

std::vector<LabeledSample> undersample_benign(const std::vector<LabeledSample>& samples, double target_ratio,
                                              std::uint64_t seed) {
    if (!(target_ratio > 0.0)) {
        fail(ErrorCode::ValueOutOfRange, "under-sampling ratio must be positive");
    }
    if (std::isinf(target_ratio)) {
        return samples;
    }
    std::vector<std::size_t> benign;
    std::size_t attacks = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].is_benign()) {
            benign.push_back(i);
        } else {
            ++attacks;
        }
    }
    if (attacks == 0) {
        fail(ErrorCode::NoAttackSamples, "cannot under-sample benign traffic without attack samples");
    }
    const auto cap = static_cast<std::size_t>(std::floor(target_ratio * static_cast<double>(attacks) + 1e-9));
    if (benign.size() <= cap) {
        return samples;
    }

    Rng rng = make_rng(seed, 0x756e646572);
    shuffle(benign.begin(), benign.end(), rng);
    std::vector<bool> keep(samples.size(), true);
    for (std::size_t i = cap; i < benign.size(); ++i) {
        keep[benign[i]] = false;
    }
    std::vector<LabeledSample> out;
    out.reserve(cap + attacks);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (keep[i]) {
            out.push_back(samples[i]);
        }
    }
    return out;
}

} // namespace osnids
