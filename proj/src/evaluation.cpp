#include "osnids/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>

#include <json.hpp>

#include "osnids/csv.hpp"
#include "osnids/error.hpp"
#include "osnids/random.hpp"
#include "osnids/splits.hpp"

namespace osnids {

std::optional<double> EvalReport::sensitivity() const {
    if (tp + fn == 0) {
        return std::nullopt;
    }
    return double(tp) / double(tp + fn);
}

std::optional<double> EvalReport::specificity() const {
    if (tn + fp == 0) {
        return std::nullopt;
    }
    return double(tn) / double(tn + fp);
}

EvalReport tally(const SampleSet& data, const std::vector<Decision>& decisions) {
    if (data.samples.size() != decisions.size()) {
        fail(ErrorCode::LengthMismatch, "one decision per sample is required");
    }
    EvalReport report;
    std::map<ClassId, ClassRate> rows;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& s = data.samples[i];
        const bool flagged = decisions[i] == Decision::UnknownAttack;
        bool correct = false;
        if (s.is_benign()) {
            correct = !flagged;
            ++(flagged ? report.fp : report.tn);
        } else {
            correct = flagged;
            ++(flagged ? report.tp : report.fn);
        }
        auto& row = rows[s.label];
        row.class_name = data.class_name(s.label);
        ++row.total;
        row.correct += correct;
    }
    for (auto& [id, row] : rows) {
        report.per_class.push_back(std::move(row));
    }
    return report;
}

EvalReport evaluate(const BaseEnsemble& base, const MetaEnsemble& meta, const SampleSet& d3, unsigned threads) {
    if (d3.empty()) {
        fail(ErrorCode::EmptyDataset, "evaluation set is empty");
    }
    const auto predictions = predict_all(base, meta, d3.samples, threads);
    std::vector<Decision> decisions;
    decisions.reserve(predictions.size());
    for (const auto& p : predictions) {
        decisions.push_back(p.verdict.decision);
    }
    return tally(d3, decisions);
}

void write_report_json(std::ostream& out, const EvalReport& report) {
    nlohmann::ordered_json j;
    j["tp"] = report.tp;
    j["tn"] = report.tn;
    j["fp"] = report.fp;
    j["fn"] = report.fn;
    j["total"] = report.total();
    const auto sens = report.sensitivity();
    const auto spec = report.specificity();
    j["sensitivity"] = sens ? nlohmann::ordered_json(*sens) : nlohmann::ordered_json(nullptr);
    j["specificity"] = spec ? nlohmann::ordered_json(*spec) : nlohmann::ordered_json(nullptr);
    auto& per_class = j["per_class"] = nlohmann::ordered_json::array();
    for (const auto& row : report.per_class) {
        per_class.push_back({{"class", row.class_name}, {"total", row.total}, {"correct", row.correct},
                             {"rate", row.rate()}});
    }
    out << j.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    auto fmt = [](std::optional<double> v) {
        if (!v) {
            return std::string();
        }
        std::ostringstream s;
        s << std::setprecision(17) << *v;
        return s.str();
    };
    write_csv_row(out, {"metric", "value"});
    write_csv_row(out, {"tp", std::to_string(report.tp)});
    write_csv_row(out, {"tn", std::to_string(report.tn)});
    write_csv_row(out, {"fp", std::to_string(report.fp)});
    write_csv_row(out, {"fn", std::to_string(report.fn)});
    write_csv_row(out, {"sensitivity", fmt(report.sensitivity())});
    write_csv_row(out, {"specificity", fmt(report.specificity())});
    for (const auto& row : report.per_class) {
        write_csv_row(out, {"rate:" + row.class_name, fmt(row.rate())});
    }
}

std::size_t hamming_distance(const PayloadBytes& a, const PayloadBytes& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i];
    }
    return d;
}

namespace {

const std::vector<std::string>& known_attack_names() {
    static const std::vector<std::string> names{
        "DDoS",          "PortScan", "FTP-Patator", "SSH-Patator", "DoS GoldenEye", "Web Attack – Brute Force",
        "Web Attack – XSS", "Infiltration", "Heartbleed"};
    return names;
}

std::string pick_name(const std::vector<std::string>& names, int i, const std::string& fallback) {
    return std::size_t(i) < names.size() ? names[std::size_t(i)] : fallback + "-" + std::to_string(i + 1);
}

} // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
    if (config.n_benign_clusters < 1 || config.n_known_attack_classes < 1 || config.n_unknown_attack_classes < 1 ||
        config.samples_per_class < 1) {
        fail(ErrorCode::ValueOutOfRange, "synthetic class and sample counts must be at least 1");
    }
    if (config.min_payload < 1 || config.min_payload > int(kPayloadLength) || config.noise_sigma < 0.0 ||
        config.min_template_separation < 0) {
        fail(ErrorCode::ValueOutOfRange, "synthetic payload length, noise or separation out of range");
    }
    if (config.min_template_separation > int(kPayloadLength)) {
        fail(ErrorCode::SeparationUnsatisfiable, "separation exceeds the 1500 byte positions");
    }

    const int n_templates = config.n_benign_clusters + config.n_known_attack_classes + config.n_unknown_attack_classes;
    Rng rng = make_rng(config.seed, 0x73796e7468);
    SyntheticCorpus corpus;
    constexpr int kAttemptsPerTemplate = 1000;
    for (int t = 0; t < n_templates; ++t) {
        bool placed = false;
        for (int attempt = 0; attempt < kAttemptsPerTemplate && !placed; ++attempt) {
            PayloadBytes candidate{};
            const auto span = std::uint64_t(int(kPayloadLength) - config.min_payload + 1);
            const std::size_t length = std::size_t(config.min_payload) + uniform_below(rng, span);
            for (std::size_t i = 0; i < length; ++i) {
                candidate[i] = static_cast<std::uint8_t>(uniform_below(rng, 256));
            }
            placed = std::all_of(corpus.templates.begin(), corpus.templates.end(), [&](const auto& other) {
                return hamming_distance(candidate, other) >= std::size_t(config.min_template_separation);
            });
            if (placed) {
                corpus.templates.push_back(candidate);
            }
        }
        if (!placed) {
            fail(ErrorCode::SeparationUnsatisfiable,
                 "could not place template " + std::to_string(t) + " at separation " +
                     std::to_string(config.min_template_separation));
        }
    }

    std::vector<ClassId> template_class;
    for (int b = 0; b < config.n_benign_clusters; ++b) {
        template_class.push_back(kBenignClass);
    }
    for (int k = 0; k < config.n_known_attack_classes; ++k) {
        template_class.push_back(corpus.samples.intern_class(pick_name(known_attack_names(), k, "Known-Attack")));
    }
    const auto heldout = default_heldout_classes();
    for (int u = 0; u < config.n_unknown_attack_classes; ++u) {
        const std::string name = pick_name(heldout, u, "Unknown-Attack");
        corpus.unknown_classes.push_back(name);
        template_class.push_back(corpus.samples.intern_class(name));
    }

    for (int t = 0; t < n_templates; ++t) {
        const auto& tmpl = corpus.templates[std::size_t(t)];
        std::size_t length = kPayloadLength;
        while (length > 0 && tmpl[length - 1] == 0) {
            --length;
        }
        for (int s = 0; s < config.samples_per_class; ++s) {
            LabeledSample sample;
            sample.label = template_class[std::size_t(t)];
            for (std::size_t i = 0; i < length; ++i) {
                const double v = double(tmpl[i]) + std::round(config.noise_sigma * standard_normal(rng));
                sample.features[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
            if (std::all_of(sample.features.begin(), sample.features.end(), [](auto b) { return b == 0; })) {
                sample.features[0] = 1;
            }
            corpus.samples.samples.push_back(sample);
            corpus.template_of.push_back(t);
        }
    }
    return corpus;
}

CentroidBaseline::CentroidBaseline(const SampleSet& d1, double threshold_quantile) {
    if (d1.empty()) {
        fail(ErrorCode::EmptyDataset, "baseline needs benign reference samples");
    }
    std::map<ClusterId, std::pair<std::vector<double>, std::size_t>> sums;
    for (const auto& s : d1.samples) {
        auto& [sum, count] = sums[s.cluster_id.value_or(0)];
        sum.resize(kPayloadLength, 0.0);
        for (std::size_t i = 0; i < kPayloadLength; ++i) {
            sum[i] += s.features[i];
        }
        ++count;
    }
    for (auto& [id, entry] : sums) {
        auto& [sum, count] = entry;
        for (double& v : sum) {
            v /= double(count);
        }
        centroids_.push_back(std::move(sum));
    }
    for (const auto& s : d1.samples) {
        self_distances_.push_back(distance(s.features));
    }
    std::sort(self_distances_.begin(), self_distances_.end());
    set_quantile(threshold_quantile);
}

double CentroidBaseline::distance(const PayloadBytes& features) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centroids_) {
        double d = 0.0;
        for (std::size_t i = 0; i < kPayloadLength; ++i) {
            const double diff = double(features[i]) - c[i];
            d += diff * diff;
        }
        best = std::min(best, d);
    }
    return std::sqrt(best);
}

Decision CentroidBaseline::decide(const PayloadBytes& features) const {
    return distance(features) > threshold_ ? Decision::UnknownAttack : Decision::Benign;
}

void CentroidBaseline::set_quantile(double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        fail(ErrorCode::ValueOutOfRange, "threshold quantile must lie in [0, 1]");
    }
    // Nearest-rank quantile.
    const std::size_t n = self_distances_.size();
    const auto rank = static_cast<std::size_t>(std::ceil(q * double(n)));
    threshold_ = self_distances_[std::clamp<std::size_t>(rank, 1, n) - 1];
}

EvalReport naive_baseline(const SampleSet& d1, const SampleSet& d3, double threshold_quantile) {
    if (d3.empty()) {
        fail(ErrorCode::EmptyDataset, "evaluation set is empty");
    }
    const CentroidBaseline baseline(d1, threshold_quantile);
    std::vector<Decision> decisions;
    decisions.reserve(d3.size());
    for (const auto& s : d3.samples) {
        decisions.push_back(baseline.decide(s.features));
    }
    return tally(d3, decisions);
}

MatchedBaseline matched_baseline(const SampleSet& d1, const SampleSet& d3, double target_specificity) {
    if (d3.empty()) {
        fail(ErrorCode::EmptyDataset, "evaluation set is empty");
    }
    CentroidBaseline baseline(d1, 1.0);
    std::vector<double> distances;
    distances.reserve(d3.size());
    for (const auto& s : d3.samples) {
        distances.push_back(baseline.distance(s.features));
    }
    const std::size_t m = baseline.self_distances().size();
    MatchedBaseline best;
    double best_gap = std::numeric_limits<double>::infinity();
    double best_sens = -1.0;
    for (std::size_t rank = 1; rank <= m; ++rank) {
        const double q = double(rank) / double(m);
        baseline.set_quantile(q);
        std::vector<Decision> decisions;
        decisions.reserve(distances.size());
        for (double d : distances) {
            decisions.push_back(d > baseline.threshold() ? Decision::UnknownAttack : Decision::Benign);
        }
        EvalReport report = tally(d3, decisions);
        const double gap = std::abs(report.specificity().value_or(0.0) - target_specificity);
        const double sens = report.sensitivity().value_or(0.0);
        if (gap < best_gap - 1e-12 || (gap <= best_gap + 1e-12 && sens > best_sens)) {
            best_gap = gap;
            best_sens = sens;
            best = {q, std::move(report)};
        }
    }
    return best;
}

} // namespace osnids
