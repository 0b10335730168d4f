#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "osnids/config.hpp"
#include "osnids/evaluation.hpp"
#include "osnids/kmeans.hpp"
#include "osnids/learners.hpp"
#include "osnids/meta.hpp"
#include "osnids/pcap.hpp"
#include "osnids/sample.hpp"
#include "osnids/tsne.hpp"

namespace osnids {

using LogFn = std::function<void(const std::string&)>;

struct IngestSummary {
    CaptureStats capture;
    UnmatchedReport unmatched;
    std::size_t labeled = 0;
    std::size_t after_dedup = 0;
    std::size_t after_undersample = 0;
};

/// Parses every capture, joins packets against all flow tables and applies
/// de-duplication and benign under-sampling.
SampleSet ingest_captures(const IngestConfig& config, std::uint64_t seed, IngestSummary* summary = nullptr);

struct ClusterOutcome {
    SampleSet clustered;
    ClusteringReport report;
    TsneResult embedding;
};

/// Embeds d1 with t-SNE, picks the cluster count and annotates every sample.
ClusterOutcome cluster_benign(const SampleSet& d1, const ClusterConfig& config, std::uint64_t seed);

/// Meta-features over d2, labeled 1 for attacks and 0 for benign.
MetaEnsemble train_meta_stage(const BaseEnsemble& base, const SampleSet& d2, const MetaConfig& config,
                              std::uint64_t seed, unsigned threads);

void write_embedding_csv(std::ostream& out, const TsneResult& result, const std::vector<int>& assignments);

struct PipelineSummary {
    int n_clusters = 0;
    EvalReport report;
    EvalReport baseline;
};

/// Runs data acquisition, split, cluster, base training, meta training and
/// evaluation, persisting each artifact under config.output_dir. Errors are
/// re-raised with the failing stage prefixed to the message.
PipelineSummary run_pipeline(const PipelineConfig& config, unsigned threads = 1, const LogFn& log = {});

} // namespace osnids
