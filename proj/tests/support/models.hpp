#pragma once

#include <random>
#include <vector>

#include "osnids/learners.hpp"
#include "osnids/meta.hpp"
#include "osnids/random.hpp"
#include "support/fixtures.hpp"

namespace fixtures {

// Base ensemble of `n` logistic scorers with random weights.
inline osnids::BaseEnsemble random_base(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.02);
    osnids::BaseEnsemble e;
    for (int i = 0; i < n; ++i) {
        std::vector<double> w(osnids::kPayloadLength + 1);
        for (double& v : w) {
            v = g(rng);
        }
        osnids::TrainingMeta meta;
        meta.seed = seed + std::uint64_t(i);
        e.scorers.emplace_back(osnids::ScorerKind::LogisticRegression, osnids::kDefaultGeometry, std::move(w), meta);
    }
    return e;
}

// Meta ensemble fit on the base ensemble's outputs for random samples,
// labeled by an arbitrary but learnable rule.
inline osnids::MetaEnsemble fit_meta(const osnids::BaseEnsemble& base, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<osnids::MetaFeatureVector> features;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        osnids::LabeledSample s;
        s.features = random_payload(rng);
        auto f = osnids::meta_features(base, s);
        labels.push_back(f[0] > f[1] ? 1 : 0);
        features.push_back(std::move(f));
    }
    osnids::MetaConfig config;
    config.forest_trees = 20;
    config.boost_rounds = 20;
    return osnids::train_meta_classifiers(features, labels, config, seed);
}

} // namespace fixtures
