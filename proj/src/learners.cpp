#include "osnids/learners.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>

#include "osnids/error.hpp"
#include "osnids/parallel.hpp"

namespace osnids {
namespace {

struct TensorTable {
    std::vector<std::vector<double>> inputs;
    std::vector<ClusterId> clusters;
};

TensorTable tensorize(const std::vector<LabeledSample>& d1) {
    TensorTable t;
    t.inputs.reserve(d1.size());
    t.clusters.reserve(d1.size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        const auto& s = d1[i];
        if (!s.is_benign() || !s.cluster_id) {
            fail(ErrorCode::ValueOutOfRange,
                 "base learner sample " + std::to_string(i) + " is not a clustered benign sample");
        }
        t.inputs.push_back(sample_tensor(s).values);
        t.clusters.push_back(*s.cluster_id);
    }
    return t;
}

BinaryScorer train_on_table(const TensorTable& table, ClusterId cluster_id, const TrainingConfig& config) {
    if (config.epochs < 1 || config.batch_size < 1) {
        fail(ErrorCode::ValueOutOfRange, "epochs and batch size must be positive");
    }
    const std::size_t n = table.inputs.size();
    std::size_t positives = 0;
    for (ClusterId c : table.clusters) {
        positives += c == cluster_id;
    }
    const std::size_t negatives = n - positives;
    if (positives < kMinSamplesPerSide || negatives < kMinSamplesPerSide) {
        fail(ErrorCode::DegenerateClasses, "cluster " + std::to_string(cluster_id) + " has " +
                                               std::to_string(positives) + " members and " +
                                               std::to_string(negatives) + " others; need at least " +
                                               std::to_string(kMinSamplesPerSide) + " each");
    }

    const double pos_weight = double(n) / (2.0 * double(positives));
    const double neg_weight = double(n) / (2.0 * double(negatives));
    std::vector<Example> examples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool member = table.clusters[i] == cluster_id;
        examples[i] = {table.inputs[i], member ? 1.0 : 0.0, member ? pos_weight : neg_weight};
    }

    const ImageGeometry geometry = kDefaultGeometry;
    Rng rng = make_rng(config.seed, 0x62617365);
    std::vector<double> params = model::initial_parameters(config.kind, geometry, rng);
    std::vector<double> grad(params.size());
    const double lr = config.effective_learning_rate();
    const bool adam = config.kind == ScorerKind::SmallConvNet;
    std::vector<double> m1, m2;
    if (adam) {
        m1.assign(params.size(), 0.0);
        m2.assign(params.size(), 0.0);
    }
    long long step = 0;

    TrainingMeta meta{config.epochs, lr, config.seed, 0.0, {}};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Example> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += std::size_t(config.batch_size)) {
            const std::size_t end = std::min(n, start + std::size_t(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(examples[order[i]]);
            }
            const double batch_loss = model::loss_and_gradient(config.kind, geometry, params, batch, config.l2, grad);
            if (!std::isfinite(batch_loss)) {
                fail(ErrorCode::NonFiniteLoss, "loss diverged in epoch " + std::to_string(epoch));
            }
            ++step;
            if (adam) {
                constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                const double c1 = 1.0 - std::pow(b1, double(step));
                const double c2 = 1.0 - std::pow(b2, double(step));
                for (std::size_t k = 0; k < params.size(); ++k) {
                    m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
                    m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
                    params[k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
                }
            } else {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    params[k] -= lr * grad[k];
                }
            }
        }
        const double epoch_loss = model::loss(config.kind, geometry, params, examples, config.l2);
        if (!std::isfinite(epoch_loss)) {
            fail(ErrorCode::NonFiniteLoss, "loss diverged after epoch " + std::to_string(epoch));
        }
        meta.loss_curve.push_back(epoch_loss);
    }
    meta.final_loss = meta.loss_curve.back();
    return BinaryScorer(config.kind, geometry, std::move(params), std::move(meta));
}

} // namespace

double TrainingConfig::effective_learning_rate() const {
    if (learning_rate) {
        return *learning_rate;
    }
    return kind == ScorerKind::LogisticRegression ? 0.01 : 0.001;
}

BinaryScorer::BinaryScorer(ScorerKind kind, ImageGeometry geometry, std::vector<double> parameters, TrainingMeta meta)
    : kind_(kind), geometry_(geometry), parameters_(std::move(parameters)), meta_(std::move(meta)) {
    if (parameters_.size() != model::parameter_count(kind_, geometry_)) {
        fail(ErrorCode::GeometryMismatch, "parameter count does not match scorer kind and geometry");
    }
    for (double v : parameters_) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteLoss, "scorer parameters must be finite");
        }
    }
}

double BinaryScorer::score(const ImageTensor& image) const {
    if (image.geometry != geometry_) {
        fail(ErrorCode::GeometryMismatch, "image geometry differs from the scorer's");
    }
    return sigmoid(model::logit(kind_, geometry_, parameters_, image.values));
}

BinaryScorer train_base_learner(const std::vector<LabeledSample>& d1, ClusterId cluster_id,
                                const TrainingConfig& config) {
    return train_on_table(tensorize(d1), cluster_id, config);
}

BaseEnsemble train_base_ensemble(const std::vector<LabeledSample>& d1, int n, const TrainingConfig& config,
                                 unsigned threads) {
    if (n < 2) {
        fail(ErrorCode::MissingCluster, "a base ensemble needs at least two clusters");
    }
    const TensorTable table = tensorize(d1);
    std::set<ClusterId> present(table.clusters.begin(), table.clusters.end());
    for (ClusterId c = 0; c < n; ++c) {
        if (!present.contains(c)) {
            fail(ErrorCode::MissingCluster, "cluster " + std::to_string(c) + " has no samples");
        }
    }
    if (*present.rbegin() >= n) {
        fail(ErrorCode::MissingCluster,
             "cluster id " + std::to_string(*present.rbegin()) + " outside 0.." + std::to_string(n - 1));
    }

    BaseEnsemble ensemble;
    ensemble.scorers.resize(std::size_t(n));
    parallel_for(std::size_t(n), threads, [&](std::size_t i) {
        TrainingConfig local = config;
        local.seed = derive_seed(config.seed, i);
        ensemble.scorers[i] = train_on_table(table, ClusterId(i), local);
    });
    return ensemble;
}

MetaFeatureVector meta_features(const BaseEnsemble& ensemble, const ImageTensor& tensor) {
    if (!ensemble.trained()) {
        fail(ErrorCode::UntrainedEnsemble, "base ensemble has no trained scorers");
    }
    MetaFeatureVector p(ensemble.scorers.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = ensemble.scorers[i].score(tensor);
    }
    return p;
}

MetaFeatureVector meta_features(const BaseEnsemble& ensemble, const LabeledSample& sample) {
    return meta_features(ensemble, sample_tensor(sample));
}

std::vector<MetaFeatureVector> meta_features(const BaseEnsemble& ensemble, const std::vector<LabeledSample>& samples,
                                             unsigned threads) {
    if (!ensemble.trained()) {
        fail(ErrorCode::UntrainedEnsemble, "base ensemble has no trained scorers");
    }
    std::vector<MetaFeatureVector> out(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) { out[i] = meta_features(ensemble, samples[i]); });
    return out;
}

void write_loss_curve_csv(std::ostream& out, const BaseEnsemble& ensemble) {
    out << "scorer,epoch,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < ensemble.scorers.size(); ++i) {
        const auto& curve = ensemble.scorers[i].training_meta().loss_curve;
        for (std::size_t e = 0; e < curve.size(); ++e) {
            out << i << ',' << e + 1 << ',' << curve[e] << '\n';
        }
    }
}

} // namespace osnids
