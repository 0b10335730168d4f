#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "osnids/evaluation.hpp"
#include "osnids/flows.hpp"
#include "osnids/kmeans.hpp"
#include "osnids/learners.hpp"
#include "osnids/meta.hpp"
#include "osnids/splits.hpp"
#include "osnids/tsne.hpp"

namespace osnids {

enum class DataSource { Synthetic, SampleSet, Capture };

struct IngestConfig {
    std::vector<std::filesystem::path> captures;
    std::vector<std::filesystem::path> flows;
    FlowColumns columns;
    bool deduplicate = true;
    /// Benign-to-attack cap; infinity disables under-sampling.
    double undersample_ratio = 1.0;
};

struct ClusterConfig {
    EmbeddingParams embedding;
    int k_min = 2;
    int k_max = 15;
    int restarts = 10;
};

struct PipelineConfig {
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    DataSource source = DataSource::Synthetic;
    std::filesystem::path sample_set;
    IngestConfig ingest;
    SyntheticConfig synthetic;
    SplitSpec split;
    ClusterConfig cluster;
    TrainingConfig learners;
    MetaConfig meta;
    double baseline_quantile = 0.95;

    /// Per-stage seeds, all derived from `seed`.
    std::uint64_t stage_seed(std::uint64_t stage) const;
};

/// Stage identifiers for stage_seed.
enum : std::uint64_t { kSeedSynthetic = 1, kSeedUndersample, kSeedSplit, kSeedCluster, kSeedBase, kSeedMeta };

/// Parses a configuration document. Missing required keys raise
/// ConfigInvalid naming the key; optional keys fall back to defaults.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Template listing every key with its default value.
nlohmann::ordered_json default_config_json();

/// Digest of the learner and meta settings, recorded in bundle manifests.
std::string training_config_digest(const PipelineConfig& config);

} // namespace osnids
