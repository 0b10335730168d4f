#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "osnids/image.hpp"
#include "osnids/sample.hpp"
#include "osnids/scorer.hpp"

namespace osnids {

struct TrainingConfig {
    ScorerKind kind = ScorerKind::LogisticRegression;
    int epochs = 30;
    int batch_size = 64;
    /// nullopt picks the per-kind default (0.01 logistic, 0.001 convnet).
    std::optional<double> learning_rate;
    double l2 = 1e-4;
    std::uint64_t seed = 0;

    double effective_learning_rate() const;
};

struct TrainingMeta {
    int epochs = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    /// Full-data objective after each epoch.
    std::vector<double> loss_curve;
};

/// Membership scorer for one benign sub-cluster.
class BinaryScorer {
public:
    BinaryScorer() = default;
    BinaryScorer(ScorerKind kind, ImageGeometry geometry, std::vector<double> parameters, TrainingMeta meta = {});

    /// Sigmoid membership probability. GeometryMismatch when the tensor shape
    /// differs from the trained geometry.
    double score(const ImageTensor& image) const;

    ScorerKind kind() const { return kind_; }
    const ImageGeometry& geometry() const { return geometry_; }
    const std::vector<double>& parameters() const { return parameters_; }
    const TrainingMeta& training_meta() const { return meta_; }

private:
    ScorerKind kind_ = ScorerKind::LogisticRegression;
    ImageGeometry geometry_;
    std::vector<double> parameters_;
    TrainingMeta meta_;
};

inline double score(const BinaryScorer& scorer, const ImageTensor& image) { return scorer.score(image); }

inline constexpr std::size_t kMinSamplesPerSide = 10;

/// Trains cluster `cluster_id` versus every other benign cluster with
/// inverse-frequency sample weights, by mini-batch gradient descent
/// (plain SGD for logistic, Adam for the convnet).
BinaryScorer train_base_learner(const std::vector<LabeledSample>& d1, ClusterId cluster_id,
                                const TrainingConfig& config);

struct BaseEnsemble {
    std::vector<BinaryScorer> scorers;
    ImageGeometry geometry = kDefaultGeometry;

    std::size_t n_clusters() const { return scorers.size(); }
    bool trained() const { return scorers.size() >= 2; }
};

/// One scorer per cluster id 0..n-1, trained independently on up to
/// `threads` workers. Scorer i uses seed derive_seed(config.seed, i).
BaseEnsemble train_base_ensemble(const std::vector<LabeledSample>& d1, int n, const TrainingConfig& config,
                                 unsigned threads = 1);

using MetaFeatureVector = std::vector<double>;

MetaFeatureVector meta_features(const BaseEnsemble& ensemble, const LabeledSample& sample);
MetaFeatureVector meta_features(const BaseEnsemble& ensemble, const ImageTensor& tensor);

/// Meta-features for a whole set, computed in parallel.
std::vector<MetaFeatureVector> meta_features(const BaseEnsemble& ensemble, const std::vector<LabeledSample>& samples,
                                             unsigned threads = 1);

void write_loss_curve_csv(std::ostream& out, const BaseEnsemble& ensemble);

} // namespace osnids
