#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "osnids/learners.hpp"
#include "osnids/trees.hpp"

namespace osnids {

enum class MetaFamily { Logistic, RandomForest, GradBoostDepthwise, GradBoostLeafwise };

inline constexpr std::array<MetaFamily, 4> kMetaFamilies{MetaFamily::Logistic, MetaFamily::RandomForest,
                                                         MetaFamily::GradBoostDepthwise,
                                                         MetaFamily::GradBoostLeafwise};
inline constexpr std::size_t kMetaArity = kMetaFamilies.size();

std::string_view to_string(MetaFamily family);
MetaFamily meta_family_from_string(std::string_view name);

/// Binary classifier over meta-feature vectors. O = 1 (attack) when the
/// internal probability reaches 0.5.
class MetaClassifier {
public:
    virtual ~MetaClassifier() = default;

    virtual MetaFamily family() const = 0;
    virtual double probability(std::span<const double> features) const = 0;
    /// Family-specific parameter payload (little-endian).
    virtual void write(ByteWriter& out) const = 0;

    int output(std::span<const double> features) const { return probability(features) >= 0.5 ? 1 : 0; }
};

struct MetaConfig {
    double logistic_c = 1.0;
    int forest_trees = 100;
    int forest_max_depth = 8;
    int boost_rounds = 100;
    double boost_learning_rate = 0.1;
    int boost_max_depth = 3;
    int boost_max_leaves = 15;
    double holdout_fraction = 0.2;
};

std::unique_ptr<MetaClassifier> train_meta_classifier(MetaFamily family, const Matrix& x, std::span<const double> y,
                                                      const MetaConfig& config, std::uint64_t seed);

/// Inverse of MetaClassifier::write.
std::unique_ptr<MetaClassifier> read_meta_classifier(MetaFamily family, ByteReader& in);

enum class Decision { Benign, UnknownAttack };

std::string_view to_string(Decision decision);

struct Verdict {
    Decision decision = Decision::Benign;
    double v = 0.0;
    std::array<int, kMetaArity> outputs{};

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// V = mean of the outputs; UnknownAttack iff V >= 0.5 (a 2-2 tie is an
/// attack). WrongArity unless exactly four outputs.
Verdict vote(std::span<const int> outputs);

class MetaEnsemble {
public:
    MetaEnsemble() = default;
    /// Requires exactly four classifiers of four distinct families.
    explicit MetaEnsemble(std::vector<std::shared_ptr<const MetaClassifier>> classifiers,
                          std::array<double, kMetaArity> holdout_accuracy = {});

    const std::vector<std::shared_ptr<const MetaClassifier>>& classifiers() const { return classifiers_; }
    /// Accuracy of each family on the internal 20% holdout, in classifier order.
    const std::array<double, kMetaArity>& holdout_accuracy() const { return holdout_accuracy_; }
    bool trained() const { return classifiers_.size() == kMetaArity; }

    Verdict decide(std::span<const double> features) const;

private:
    std::vector<std::shared_ptr<const MetaClassifier>> classifiers_;
    std::array<double, kMetaArity> holdout_accuracy_{};
};

/// Labels: 0 benign, 1 attack. Measures each family on a seeded 80/20
/// split, then fits the returned classifiers on all rows.
MetaEnsemble train_meta_classifiers(const std::vector<MetaFeatureVector>& features, const std::vector<int>& labels,
                                    const MetaConfig& config, std::uint64_t seed, unsigned threads = 1);

struct Prediction {
    MetaFeatureVector p;
    Verdict verdict;
};

Prediction predict_detailed(const BaseEnsemble& base, const MetaEnsemble& meta, const LabeledSample& sample);

inline Verdict predict(const BaseEnsemble& base, const MetaEnsemble& meta, const LabeledSample& sample) {
    return predict_detailed(base, meta, sample).verdict;
}

std::vector<Prediction> predict_all(const BaseEnsemble& base, const MetaEnsemble& meta,
                                    const std::vector<LabeledSample>& samples, unsigned threads = 1);

/// Audit CSV: index, p_1..p_N, O_1..O_4, v, decision.
void write_verdicts_csv(std::ostream& out, const std::vector<Prediction>& predictions);

} // namespace osnids
