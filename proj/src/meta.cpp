#include "osnids/meta.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>

#include "osnids/error.hpp"
#include "osnids/parallel.hpp"
#include "osnids/random.hpp"

namespace osnids {

std::string_view to_string(MetaFamily family) {
    switch (family) {
    case MetaFamily::Logistic: return "logistic";
    case MetaFamily::RandomForest: return "random_forest";
    case MetaFamily::GradBoostDepthwise: return "gradboost_depthwise";
    case MetaFamily::GradBoostLeafwise: return "gradboost_leafwise";
    }
    return "?";
}

MetaFamily meta_family_from_string(std::string_view name) {
    for (auto f : kMetaFamilies) {
        if (to_string(f) == name) {
            return f;
        }
    }
    fail(ErrorCode::ManifestInvalid, "unknown meta-classifier family '" + std::string(name) + "'");
}

std::string_view to_string(Decision decision) {
    return decision == Decision::UnknownAttack ? "UnknownAttack" : "Benign";
}

namespace {

double log_loss_term(double z, double y) {
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - y * z;
}

// Solves a x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) {
                pivot = r;
            }
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[col * n + c], a[pivot * n + c]);
            }
            std::swap(b[col], b[pivot]);
        }
        const double diag = a[col * n + col];
        if (diag == 0.0) {
            fail(ErrorCode::NonFiniteLoss, "singular Newton system");
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / diag;
            for (std::size_t c = col; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) {
            s -= a[i * n + c] * x[c];
        }
        x[i] = s / a[i * n + i];
    }
    return x;
}

class LogisticMeta final : public MetaClassifier {
public:
    explicit LogisticMeta(std::vector<double> weights) : weights_(std::move(weights)) {}

    // min 1/2 |w|^2 + C sum CE, bias unpenalized, by damped Newton steps.
    static std::unique_ptr<MetaClassifier> fit(const Matrix& x, std::span<const double> y, double c) {
        const std::size_t d = x.cols();
        const std::size_t m = d + 1;
        std::vector<double> w(m, 0.0);
        auto objective = [&](const std::vector<double>& p) {
            double f = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                f += 0.5 * p[j] * p[j];
            }
            for (std::size_t i = 0; i < x.rows(); ++i) {
                f += c * log_loss_term(margin(p, x.row(i)), y[i]);
            }
            return f;
        };
        double current = objective(w);
        for (int iter = 0; iter < 100; ++iter) {
            std::vector<double> grad(m, 0.0);
            std::vector<double> hess(m * m, 0.0);
            for (std::size_t j = 0; j < d; ++j) {
                grad[j] = w[j];
                hess[j * m + j] = 1.0;
            }
            hess[d * m + d] = 1e-12;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const auto row = x.row(i);
                const double p = sigmoid(margin(w, row));
                const double r = c * (p - y[i]);
                const double s = c * p * (1.0 - p);
                for (std::size_t a = 0; a < m; ++a) {
                    const double xa = a < d ? row[a] : 1.0;
                    grad[a] += r * xa;
                    for (std::size_t b = 0; b < m; ++b) {
                        hess[a * m + b] += s * xa * (b < d ? row[b] : 1.0);
                    }
                }
            }
            const std::vector<double> step = solve(hess, grad);
            double t = 1.0;
            std::vector<double> trial(m);
            double next = current;
            for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
                for (std::size_t a = 0; a < m; ++a) {
                    trial[a] = w[a] - t * step[a];
                }
                next = objective(trial);
                if (next <= current) {
                    break;
                }
            }
            if (next > current) {
                break;
            }
            double largest = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                largest = std::max(largest, std::abs(trial[a] - w[a]));
            }
            w = trial;
            current = next;
            if (largest < 1e-10) {
                break;
            }
        }
        return std::make_unique<LogisticMeta>(std::move(w));
    }

    MetaFamily family() const override { return MetaFamily::Logistic; }

    double probability(std::span<const double> features) const override {
        check_width(features.size());
        return sigmoid(margin(weights_, features));
    }

    void write(ByteWriter& out) const override { out.put_doubles(weights_); }

    static std::unique_ptr<MetaClassifier> read(ByteReader& in) {
        auto w = in.get_doubles();
        if (w.size() < 2) {
            fail(ErrorCode::ManifestInvalid, "logistic meta-classifier needs at least one weight and a bias");
        }
        return std::make_unique<LogisticMeta>(std::move(w));
    }

private:
    static double margin(std::span<const double> w, std::span<const double> x) {
        double z = w[x.size()];
        for (std::size_t j = 0; j < x.size(); ++j) {
            z += w[j] * x[j];
        }
        return z;
    }

    void check_width(std::size_t n) const {
        if (n + 1 != weights_.size()) {
            fail(ErrorCode::GeometryMismatch, "meta-feature width does not match the logistic meta-classifier");
        }
    }

    std::vector<double> weights_;
};

class RandomForestMeta final : public MetaClassifier {
public:
    explicit RandomForestMeta(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

    static std::unique_ptr<MetaClassifier> fit(const Matrix& x, std::span<const double> y, const MetaConfig& config,
                                               std::uint64_t seed) {
        const std::size_t n = x.rows();
        CartParams params;
        params.max_depth = config.forest_max_depth;
        params.max_features = std::max(1, static_cast<int>(std::floor(std::sqrt(double(x.cols())))));
        std::vector<DecisionTree> trees;
        trees.reserve(std::size_t(config.forest_trees));
        Rng rng = make_rng(seed, 0x666f72657374);
        std::vector<std::size_t> rows(n);
        for (int t = 0; t < config.forest_trees; ++t) {
            for (auto& r : rows) {
                r = uniform_below(rng, n);
            }
            trees.push_back(fit_cart(x, y, rows, params, derive_seed(seed, std::uint64_t(t))));
        }
        return std::make_unique<RandomForestMeta>(std::move(trees));
    }

    MetaFamily family() const override { return MetaFamily::RandomForest; }

    double probability(std::span<const double> features) const override {
        double s = 0.0;
        for (const auto& t : trees_) {
            s += t.predict(features);
        }
        return s / double(trees_.size());
    }

    void write(ByteWriter& out) const override {
        out.put<std::uint32_t>(std::uint32_t(trees_.size()));
        for (const auto& t : trees_) {
            t.write(out);
        }
    }

    static std::unique_ptr<MetaClassifier> read(ByteReader& in) {
        const auto count = in.get<std::uint32_t>();
        if (count == 0) {
            fail(ErrorCode::ManifestInvalid, "random forest has no trees");
        }
        std::vector<DecisionTree> trees;
        for (std::uint32_t i = 0; i < count; ++i) {
            trees.push_back(DecisionTree::read(in));
        }
        return std::make_unique<RandomForestMeta>(std::move(trees));
    }

private:
    std::vector<DecisionTree> trees_;
};

class BoostedMeta final : public MetaClassifier {
public:
    BoostedMeta(MetaFamily family, BoostedTrees model) : family_(family), model_(std::move(model)) {}

    static std::unique_ptr<MetaClassifier> fit(MetaFamily family, const Matrix& x, std::span<const double> y,
                                               const MetaConfig& config) {
        BoostParams params;
        params.rounds = config.boost_rounds;
        params.learning_rate = config.boost_learning_rate;
        if (family == MetaFamily::GradBoostDepthwise) {
            params.growth = TreeGrowth::Depthwise;
            params.max_depth = config.boost_max_depth;
            params.min_child_hessian = 1.0;
            params.min_child_samples = 1;
        } else {
            params.growth = TreeGrowth::Leafwise;
            params.max_leaves = config.boost_max_leaves;
            params.min_child_hessian = 1e-3;
            params.min_child_samples = 20;
        }
        return std::make_unique<BoostedMeta>(family, fit_boosted_trees(x, y, params));
    }

    MetaFamily family() const override { return family_; }

    double probability(std::span<const double> features) const override { return sigmoid(model_.margin(features)); }

    void write(ByteWriter& out) const override {
        out.put(model_.base_margin);
        out.put<std::uint32_t>(std::uint32_t(model_.trees.size()));
        for (const auto& t : model_.trees) {
            t.write(out);
        }
    }

    static std::unique_ptr<MetaClassifier> read(MetaFamily family, ByteReader& in) {
        BoostedTrees model;
        model.base_margin = in.get<double>();
        const auto count = in.get<std::uint32_t>();
        for (std::uint32_t i = 0; i < count; ++i) {
            model.trees.push_back(DecisionTree::read(in));
        }
        return std::make_unique<BoostedMeta>(family, std::move(model));
    }

private:
    MetaFamily family_;
    BoostedTrees model_;
};

Matrix to_matrix(const std::vector<MetaFeatureVector>& rows, std::span<const std::size_t> pick) {
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    Matrix m(pick.size(), d);
    for (std::size_t i = 0; i < pick.size(); ++i) {
        const auto& r = rows[pick[i]];
        if (r.size() != d) {
            fail(ErrorCode::LengthMismatch, "meta-feature vectors differ in length");
        }
        std::copy(r.begin(), r.end(), m.row(i).begin());
    }
    return m;
}

} // namespace

std::unique_ptr<MetaClassifier> train_meta_classifier(MetaFamily family, const Matrix& x, std::span<const double> y,
                                                      const MetaConfig& config, std::uint64_t seed) {
    switch (family) {
    case MetaFamily::Logistic: return LogisticMeta::fit(x, y, config.logistic_c);
    case MetaFamily::RandomForest: return RandomForestMeta::fit(x, y, config, seed);
    case MetaFamily::GradBoostDepthwise:
    case MetaFamily::GradBoostLeafwise: return BoostedMeta::fit(family, x, y, config);
    }
    fail(ErrorCode::ManifestInvalid, "unknown meta family");
}

std::unique_ptr<MetaClassifier> read_meta_classifier(MetaFamily family, ByteReader& in) {
    switch (family) {
    case MetaFamily::Logistic: return LogisticMeta::read(in);
    case MetaFamily::RandomForest: return RandomForestMeta::read(in);
    case MetaFamily::GradBoostDepthwise:
    case MetaFamily::GradBoostLeafwise: return BoostedMeta::read(family, in);
    }
    fail(ErrorCode::ManifestInvalid, "unknown meta family");
}

Verdict vote(std::span<const int> outputs) {
    if (outputs.size() != kMetaArity) {
        fail(ErrorCode::WrongArity,
             "expected " + std::to_string(kMetaArity) + " outputs, got " + std::to_string(outputs.size()));
    }
    Verdict verdict;
    int sum = 0;
    for (std::size_t i = 0; i < kMetaArity; ++i) {
        if (outputs[i] != 0 && outputs[i] != 1) {
            fail(ErrorCode::ValueOutOfRange, "meta-classifier outputs must be 0 or 1");
        }
        verdict.outputs[i] = outputs[i];
        sum += outputs[i];
    }
    verdict.v = static_cast<double>(sum) / static_cast<double>(kMetaArity);
    verdict.decision = verdict.v >= 0.5 ? Decision::UnknownAttack : Decision::Benign;
    return verdict;
}

MetaEnsemble::MetaEnsemble(std::vector<std::shared_ptr<const MetaClassifier>> classifiers,
                           std::array<double, kMetaArity> holdout_accuracy)
    : classifiers_(std::move(classifiers)), holdout_accuracy_(holdout_accuracy) {
    if (classifiers_.size() != kMetaArity) {
        fail(ErrorCode::WrongArity, "a meta ensemble holds exactly four classifiers");
    }
    std::set<MetaFamily> families;
    for (const auto& c : classifiers_) {
        if (!c) {
            fail(ErrorCode::UntrainedModel, "null meta-classifier");
        }
        families.insert(c->family());
    }
    if (families.size() != kMetaArity) {
        fail(ErrorCode::WrongArity, "meta-classifiers must come from four distinct families");
    }
}

Verdict MetaEnsemble::decide(std::span<const double> features) const {
    if (!trained()) {
        fail(ErrorCode::UntrainedModel, "meta ensemble is not trained");
    }
    std::array<int, kMetaArity> outputs{};
    for (std::size_t i = 0; i < kMetaArity; ++i) {
        outputs[i] = classifiers_[i]->output(features);
    }
    return vote(outputs);
}

MetaEnsemble train_meta_classifiers(const std::vector<MetaFeatureVector>& features, const std::vector<int>& labels,
                                    const MetaConfig& config, std::uint64_t seed, unsigned threads) {
    if (features.size() != labels.size()) {
        fail(ErrorCode::LengthMismatch, std::to_string(features.size()) + " feature rows but " +
                                            std::to_string(labels.size()) + " labels");
    }
    std::size_t attacks = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) {
            fail(ErrorCode::ValueOutOfRange, "meta labels must be 0 (benign) or 1 (attack)");
        }
        attacks += std::size_t(l);
    }
    if (attacks == 0 || attacks == labels.size()) {
        fail(ErrorCode::SingleClassLabels, "meta-classifier training needs both benign and attack rows");
    }
    const std::size_t n = features.size();

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> shuffled = all;
    Rng rng = make_rng(seed, 0x686f6c646f7574);
    shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto n_holdout = std::size_t(std::floor(config.holdout_fraction * double(n)));
    std::vector<std::size_t> holdout(shuffled.begin(), shuffled.begin() + std::ptrdiff_t(n_holdout));
    std::vector<std::size_t> fit_rows(shuffled.begin() + std::ptrdiff_t(n_holdout), shuffled.end());
    std::sort(holdout.begin(), holdout.end());
    std::sort(fit_rows.begin(), fit_rows.end());

    auto targets = [&](std::span<const std::size_t> rows) {
        std::vector<double> y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            y[i] = double(labels[rows[i]]);
        }
        return y;
    };
    const Matrix x_all = to_matrix(features, all);
    const std::vector<double> y_all = targets(all);
    const Matrix x_fit = to_matrix(features, fit_rows);
    const std::vector<double> y_fit = targets(fit_rows);

    std::vector<std::shared_ptr<const MetaClassifier>> classifiers(kMetaArity);
    std::array<double, kMetaArity> accuracy{};
    parallel_for(kMetaArity, threads, [&](std::size_t i) {
        const MetaFamily family = kMetaFamilies[i];
        const std::uint64_t family_seed = derive_seed(seed, i);
        if (!holdout.empty()) {
            auto probe = train_meta_classifier(family, x_fit, y_fit, config, family_seed);
            std::size_t correct = 0;
            for (auto r : holdout) {
                correct += probe->output(features[r]) == labels[r];
            }
            accuracy[i] = double(correct) / double(holdout.size());
        }
        classifiers[i] = train_meta_classifier(family, x_all, y_all, config, family_seed);
    });
    return MetaEnsemble(std::move(classifiers), accuracy);
}

Prediction predict_detailed(const BaseEnsemble& base, const MetaEnsemble& meta, const LabeledSample& sample) {
    if (!base.trained() || !meta.trained()) {
        fail(ErrorCode::UntrainedModel, "prediction needs trained base and meta ensembles");
    }
    Prediction out;
    out.p = meta_features(base, sample);
    out.verdict = meta.decide(out.p);
    return out;
}

std::vector<Prediction> predict_all(const BaseEnsemble& base, const MetaEnsemble& meta,
                                    const std::vector<LabeledSample>& samples, unsigned threads) {
    if (!base.trained() || !meta.trained()) {
        fail(ErrorCode::UntrainedModel, "prediction needs trained base and meta ensembles");
    }
    std::vector<Prediction> out(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) { out[i] = predict_detailed(base, meta, samples[i]); });
    return out;
}

void write_verdicts_csv(std::ostream& out, const std::vector<Prediction>& predictions) {
    const std::size_t n = predictions.empty() ? 0 : predictions.front().p.size();
    out << "index";
    for (std::size_t i = 1; i <= n; ++i) {
        out << ",p_" << i;
    }
    for (std::size_t i = 1; i <= kMetaArity; ++i) {
        out << ",O_" << i;
    }
    out << ",v,decision\n" << std::setprecision(17);
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        const auto& pr = predictions[s];
        out << s;
        for (double p : pr.p) {
            out << ',' << p;
        }
        for (int o : pr.verdict.outputs) {
            out << ',' << o;
        }
        out << ',' << pr.verdict.v << ',' << to_string(pr.verdict.decision) << '\n';
    }
}

} // namespace osnids
