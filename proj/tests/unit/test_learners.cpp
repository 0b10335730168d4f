#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "osnids/error.hpp"
#include "osnids/learners.hpp"
#include "osnids/random.hpp"
#include "support/oracles.hpp"

using namespace osnids;

namespace {

// Benign samples drawn around one random template per cluster.
std::vector<LabeledSample> clustered(int clusters, int per_cluster, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LabeledSample> out;
    for (int c = 0; c < clusters; ++c) {
        PayloadBytes base{};
        for (auto& b : base) {
            b = std::uint8_t(rng() % 256);
        }
        for (int i = 0; i < per_cluster; ++i) {
            LabeledSample s;
            s.features = base;
            for (int j = 0; j < 40; ++j) {
                s.features[rng() % kPayloadLength] = std::uint8_t(rng() % 256);
            }
            s.cluster_id = c;
            out.push_back(s);
        }
    }
    return out;
}

struct Batch {
    std::vector<std::vector<double>> inputs;
    std::vector<Example> examples;
};

Batch random_batch(std::size_t dim, std::size_t n, std::mt19937_64& rng) {
    Batch b;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (double& v : x) {
            v = u(rng);
        }
        b.inputs.push_back(std::move(x));
    }
    for (std::size_t i = 0; i < n; ++i) {
        b.examples.push_back({b.inputs[i], double(i % 2), 0.5 + u(rng)});
    }
    return b;
}

double max_gradient_error(ScorerKind kind, const ImageGeometry& geom, std::uint64_t seed, int coords) {
    std::mt19937_64 rng(seed);
    Rng init = make_rng(seed, 1);
    std::vector<double> params = model::initial_parameters(kind, geom, init);
    std::normal_distribution<double> g(0.0, 0.05);
    for (double& p : params) {
        p += g(rng);
    }
    const Batch batch = random_batch(geom.size(), 6, rng);
    std::vector<double> grad(params.size());
    model::loss_and_gradient(kind, geom, params, batch.examples, 1e-2, grad);
    auto f = [&](const std::vector<double>& p) { return model::loss(kind, geom, p, batch.examples, 1e-2); };
    double worst = 0.0;
    for (int c = 0; c < coords; ++c) {
        const std::size_t i = rng() % params.size();
        const double numeric = oracles::central_difference(f, params, i, 1e-4);
        worst = std::max(worst, oracles::relative_error(grad[i], numeric));
    }
    return worst;
}

TrainingConfig fast_config(ScorerKind kind = ScorerKind::LogisticRegression) {
    TrainingConfig c;
    c.kind = kind;
    c.epochs = 10;
    c.seed = 5;
    return c;
}

template <class Fn>
ErrorCode error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoFailure;
}

} // namespace

TEST_CASE("analytic gradients match finite differences") {
    const ImageGeometry small{4, 5, 3};
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        CHECK(max_gradient_error(ScorerKind::LogisticRegression, small, seed, 20) <= 1e-4);
        CHECK(max_gradient_error(ScorerKind::SmallConvNet, small, seed, 20) <= 1e-4);
    }
}

TEST_CASE("parameter layout") {
    const ImageGeometry g = kDefaultGeometry;
    CHECK(model::parameter_count(ScorerKind::LogisticRegression, g) == 1501);
    CHECK(model::parameter_count(ScorerKind::SmallConvNet, g) == 8 * 3 * 9 + 8 + 16 * 8 * 9 + 16 + 16 * 10 * 12 + 1);
    const auto mask = model::regularized_mask(ScorerKind::LogisticRegression, g);
    CHECK(mask.front());
    CHECK_FALSE(mask.back());
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("logistic base learner separates its cluster") {
    const auto d1 = clustered(3, 40, 1);
    const BinaryScorer s = train_base_learner(d1, 1, fast_config());
    const auto& curve = s.training_meta().loss_curve;
    REQUIRE(curve.size() == 10);
    CHECK(curve.back() < curve.front());
    CHECK(s.training_meta().final_loss == curve.back());
    CHECK(s.training_meta().learning_rate == 0.01);
    int correct = 0;
    for (const auto& x : d1) {
        const double p = s.score(sample_tensor(x));
        correct += (p >= 0.5) == (x.cluster_id == 1);
    }
    CHECK(correct >= 115);

    const BinaryScorer again = train_base_learner(d1, 1, fast_config());
    CHECK(again.parameters() == s.parameters());
}

TEST_CASE("convnet base learner trains") {
    const auto d1 = clustered(2, 30, 2);
    TrainingConfig c = fast_config(ScorerKind::SmallConvNet);
    c.epochs = 5;
    const BinaryScorer s = train_base_learner(d1, 0, c);
    CHECK(s.training_meta().learning_rate == 0.001);
    const auto& curve = s.training_meta().loss_curve;
    CHECK(curve.back() < curve.front());
    int correct = 0;
    for (const auto& x : d1) {
        correct += (s.score(sample_tensor(x)) >= 0.5) == (x.cluster_id == 0);
    }
    CHECK(correct >= 54);
}

TEST_CASE("base ensemble and meta-features") {
    const auto d1 = clustered(3, 30, 3);
    const BaseEnsemble e = train_base_ensemble(d1, 3, fast_config(), 2);
    REQUIRE(e.n_clusters() == 3);
    CHECK(e.trained());
    // Threads do not change the result.
    const BaseEnsemble single = train_base_ensemble(d1, 3, fast_config(), 1);
    for (int i = 0; i < 3; ++i) {
        CHECK(single.scorers[i].parameters() == e.scorers[i].parameters());
    }
    const auto f = meta_features(e, d1[0]);
    REQUIRE(f.size() == 3);
    CHECK(f[0] > f[1]);
    CHECK(f[0] > f[2]);
    const auto all = meta_features(e, d1, 2);
    CHECK(all.size() == d1.size());
    CHECK(all[0] == f);

    std::ostringstream out;
    write_loss_curve_csv(out, e);
    CHECK(out.str().rfind("scorer,epoch,loss\n", 0) == 0);
}

TEST_CASE("learner error conditions") {
    auto d1 = clustered(2, 30, 4);
    CHECK(error_of([&] { train_base_ensemble(d1, 3, fast_config()); }) == ErrorCode::MissingCluster);
    CHECK(error_of([&] { train_base_ensemble(d1, 1, fast_config()); }) == ErrorCode::MissingCluster);
    auto tiny = d1;
    tiny.resize(35); // cluster 1 has 5 samples
    CHECK(error_of([&] { train_base_learner(tiny, 1, fast_config()); }) == ErrorCode::DegenerateClasses);
    TrainingConfig huge = fast_config();
    huge.learning_rate = 1e300;
    CHECK(error_of([&] { train_base_learner(d1, 0, huge); }) == ErrorCode::NonFiniteLoss);

    CHECK(error_of([] { BinaryScorer(ScorerKind::LogisticRegression, kDefaultGeometry, {1.0, 2.0}); }) ==
          ErrorCode::GeometryMismatch);
    const BinaryScorer s(ScorerKind::LogisticRegression, kDefaultGeometry, std::vector<double>(1501, 0.0));
    CHECK(s.score(sample_tensor(d1[0])) == 0.5);
    ImageTensor wrong{{2, 2, 3}, std::vector<double>(12, 0.0)};
    CHECK(error_of([&] { s.score(wrong); }) == ErrorCode::GeometryMismatch);
    CHECK(error_of([&] { meta_features(BaseEnsemble{}, d1[0]); }) == ErrorCode::UntrainedEnsemble);
}

TEST_CASE("activation pattern tracks the convnet regime") {
    const ImageGeometry g{4, 5, 3};
    Rng rng = make_rng(3, 0);
    const auto p = model::initial_parameters(ScorerKind::SmallConvNet, g, rng);
    std::vector<double> x(g.size(), 0.5);
    const auto a = model::activation_pattern(ScorerKind::SmallConvNet, g, p, x);
    CHECK(a.size() == 8 * 20 + 16 * 20 + 16 * 2 * 2);
    CHECK(model::activation_pattern(ScorerKind::SmallConvNet, g, p, x) == a);
    // Driving every first-layer bias negative switches all first-layer units off.
    auto off = p;
    for (std::size_t i = 8 * 3 * 9; i < 8 * 3 * 9 + 8; ++i) {
        off[i] = -1e6;
    }
    const auto b = model::activation_pattern(ScorerKind::SmallConvNet, g, off, x);
    CHECK(std::all_of(b.begin(), b.begin() + 160, [](std::size_t v) { return v == 0; }));
    CHECK(model::activation_pattern(ScorerKind::LogisticRegression, g, std::vector<double>(g.size() + 1), x).empty());
}
