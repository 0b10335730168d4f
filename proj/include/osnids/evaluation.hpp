#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "osnids/meta.hpp"
#include "osnids/sample.hpp"

namespace osnids {

struct ClassRate {
    std::string class_name;
    std::size_t total = 0;
    /// Samples that received the correct decision (benign kept benign,
    /// attacks flagged).
    std::size_t correct = 0;

    double rate() const { return total ? double(correct) / double(total) : 0.0; }
    friend bool operator==(const ClassRate&, const ClassRate&) = default;
};

/// Confusion counts with UnknownAttack as the positive class.
struct EvalReport {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::vector<ClassRate> per_class;

    std::size_t total() const { return tp + tn + fp + fn; }
    /// Detection rate of unknown attacks; nullopt without attack samples.
    std::optional<double> sensitivity() const;
    /// Detection rate of benign samples; nullopt without benign samples.
    std::optional<double> specificity() const;
};

/// Folds (true label, decision) pairs into a report. Per-class rows are in
/// class-id order and only for classes present.
EvalReport tally(const SampleSet& data, const std::vector<Decision>& decisions);

EvalReport evaluate(const BaseEnsemble& base, const MetaEnsemble& meta, const SampleSet& d3, unsigned threads = 1);

void write_report_json(std::ostream& out, const EvalReport& report);
void write_report_csv(std::ostream& out, const EvalReport& report);

struct SyntheticConfig {
    int n_benign_clusters = 7;
    int n_known_attack_classes = 9;
    int n_unknown_attack_classes = 5;
    int samples_per_class = 200;
    /// Standard deviation of the additive per-byte Gaussian noise.
    double noise_sigma = 8.0;
    /// Minimum Hamming distance between any two class templates.
    int min_template_separation = 600;
    /// Template payload lengths are drawn from [min_payload, 1500].
    int min_payload = 300;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    SampleSet samples;
    std::vector<PayloadBytes> templates;       // benign clusters, known, unknown
    std::vector<std::string> unknown_classes;  // held-out class names
    std::vector<int> template_of;              // generating template per sample
};

/// Benign sub-clusters, known attacks and unknown attacks, each a random
/// byte template plus per-sample noise. Class names follow the
/// CIC-IDS2017 taxonomy while enough names exist: unknown classes default to
/// the five usual held-out classes.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

std::size_t hamming_distance(const PayloadBytes& a, const PayloadBytes& b);

/// Distance-to-nearest-benign-centroid detector in raw byte space.
/// Centroids are per-cluster means of d1 when cluster ids are present,
/// otherwise the single benign mean.
class CentroidBaseline {
public:
    CentroidBaseline(const SampleSet& d1, double threshold_quantile);

    double distance(const PayloadBytes& features) const;
    Decision decide(const PayloadBytes& features) const;
    double threshold() const { return threshold_; }
    const std::vector<double>& self_distances() const { return self_distances_; }

    /// Re-thresholds at another quantile of the stored d1 self-distances.
    void set_quantile(double q);

private:
    std::vector<std::vector<double>> centroids_;
    std::vector<double> self_distances_; // sorted
    double threshold_ = 0.0;
};

EvalReport naive_baseline(const SampleSet& d1, const SampleSet& d3, double threshold_quantile);

struct MatchedBaseline {
    double quantile = 0.0;
    EvalReport report;
};

/// Sweeps the baseline threshold over every d1 self-distance rank and keeps
/// the one whose d3 specificity is closest to `target_specificity`; ties go
/// to the higher baseline sensitivity.
MatchedBaseline matched_baseline(const SampleSet& d1, const SampleSet& d3, double target_specificity);

} // namespace osnids
