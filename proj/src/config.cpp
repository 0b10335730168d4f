#include "osnids/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "osnids/error.hpp"
#include "osnids/persistence.hpp"
#include "osnids/random.hpp"

namespace osnids {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t PipelineConfig::stage_seed(std::uint64_t stage) const { return derive_seed(seed, stage); }

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
        fail(ErrorCode::ConfigInvalid, "missing required key '" + full + "'");
    }
    return obj.at(key);
}

const json& section(const json& doc, const std::string& key) {
    const json& s = require(doc, key, "");
    if (!s.is_object()) {
        fail(ErrorCode::ConfigInvalid, "'" + key + "' must be an object");
    }
    return s;
}

template <class T>
void read_opt(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::ConfigInvalid, "key '" + path + "." + key + "' has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

} // namespace

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) {
        fail(ErrorCode::ConfigInvalid, "configuration must be a JSON object");
    }
    PipelineConfig c;
    try {
        c.output_dir = resolve(base_dir, require(doc, "output_dir", "").get<std::string>());
    } catch (const json::exception&) {
        fail(ErrorCode::ConfigInvalid, "'output_dir' must be a string");
    }
    read_opt(doc, "seed", "", c.seed);

    const json& data = section(doc, "data");
    const std::string source = require(data, "source", "data").is_string() ? data.at("source").get<std::string>() : "";
    if (source == "synthetic") {
        c.source = DataSource::Synthetic;
    } else if (source == "sample_set") {
        c.source = DataSource::SampleSet;
        c.sample_set = resolve(base_dir, require(data, "sample_set", "data").get<std::string>());
    } else if (source == "capture") {
        c.source = DataSource::Capture;
    } else {
        fail(ErrorCode::ConfigInvalid, "'data.source' must be synthetic, sample_set or capture");
    }

    if (doc.contains("ingest")) {
        const json& in = doc.at("ingest");
        std::vector<std::string> captures, flows;
        read_opt(in, "captures", "ingest", captures);
        read_opt(in, "flows", "ingest", flows);
        for (const auto& p : captures) {
            c.ingest.captures.push_back(resolve(base_dir, p));
        }
        for (const auto& p : flows) {
            c.ingest.flows.push_back(resolve(base_dir, p));
        }
        read_opt(in, "deduplicate", "ingest", c.ingest.deduplicate);
        if (in.contains("undersample_ratio") && in.at("undersample_ratio").is_null()) {
            c.ingest.undersample_ratio = std::numeric_limits<double>::infinity();
        } else {
            read_opt(in, "undersample_ratio", "ingest", c.ingest.undersample_ratio);
        }
        if (in.contains("columns")) {
            const json& col = in.at("columns");
            auto& m = c.ingest.columns;
            read_opt(col, "src_ip", "ingest.columns", m.src_ip);
            read_opt(col, "src_port", "ingest.columns", m.src_port);
            read_opt(col, "dst_ip", "ingest.columns", m.dst_ip);
            read_opt(col, "dst_port", "ingest.columns", m.dst_port);
            read_opt(col, "protocol", "ingest.columns", m.protocol);
            read_opt(col, "start_time", "ingest.columns", m.start_time);
            read_opt(col, "duration", "ingest.columns", m.duration);
            read_opt(col, "label", "ingest.columns", m.label);
            read_opt(col, "duration_scale", "ingest.columns", m.duration_scale);
        }
    }
    if (c.source == DataSource::Capture) {
        const json& in = section(doc, "ingest");
        require(in, "captures", "ingest");
        require(in, "flows", "ingest");
        if (c.ingest.captures.empty() || c.ingest.flows.empty()) {
            fail(ErrorCode::ConfigInvalid, "'ingest.captures' and 'ingest.flows' must be non-empty");
        }
    }

    if (doc.contains("synthetic")) {
        const json& s = doc.at("synthetic");
        auto& m = c.synthetic;
        read_opt(s, "n_benign_clusters", "synthetic", m.n_benign_clusters);
        read_opt(s, "n_known_attack_classes", "synthetic", m.n_known_attack_classes);
        read_opt(s, "n_unknown_attack_classes", "synthetic", m.n_unknown_attack_classes);
        read_opt(s, "samples_per_class", "synthetic", m.samples_per_class);
        read_opt(s, "noise_sigma", "synthetic", m.noise_sigma);
        read_opt(s, "min_template_separation", "synthetic", m.min_template_separation);
        read_opt(s, "min_payload", "synthetic", m.min_payload);
    }

    const json& split = section(doc, "split");
    std::vector<double> ratios{c.split.benign_ratios.begin(), c.split.benign_ratios.end()};
    read_opt(split, "benign_ratios", "split", ratios);
    if (ratios.size() != 3) {
        fail(ErrorCode::ConfigInvalid, "'split.benign_ratios' must have three entries");
    }
    std::copy(ratios.begin(), ratios.end(), c.split.benign_ratios.begin());
    read_opt(split, "heldout_classes", "split", c.split.heldout_classes);

    const json& cluster = section(doc, "cluster");
    auto& e = c.cluster.embedding;
    read_opt(cluster, "perplexity", "cluster", e.perplexity);
    read_opt(cluster, "iterations", "cluster", e.iterations);
    read_opt(cluster, "early_exaggeration", "cluster", e.early_exaggeration);
    read_opt(cluster, "exaggeration_iterations", "cluster", e.exaggeration_iterations);
    read_opt(cluster, "learning_rate", "cluster", e.learning_rate);
    read_opt(cluster, "k_min", "cluster", c.cluster.k_min);
    read_opt(cluster, "k_max", "cluster", c.cluster.k_max);
    read_opt(cluster, "restarts", "cluster", c.cluster.restarts);

    const json& learners = section(doc, "learners");
    std::string kind = std::string(to_string(c.learners.kind));
    read_opt(learners, "kind", "learners", kind);
    c.learners.kind = scorer_kind_from_string(kind);
    read_opt(learners, "epochs", "learners", c.learners.epochs);
    read_opt(learners, "batch_size", "learners", c.learners.batch_size);
    if (learners.contains("learning_rate") && !learners.at("learning_rate").is_null()) {
        double lr = 0.0;
        read_opt(learners, "learning_rate", "learners", lr);
        c.learners.learning_rate = lr;
    }
    read_opt(learners, "l2", "learners", c.learners.l2);

    const json& meta = section(doc, "meta");
    read_opt(meta, "logistic_c", "meta", c.meta.logistic_c);
    read_opt(meta, "forest_trees", "meta", c.meta.forest_trees);
    read_opt(meta, "forest_max_depth", "meta", c.meta.forest_max_depth);
    read_opt(meta, "boost_rounds", "meta", c.meta.boost_rounds);
    read_opt(meta, "boost_learning_rate", "meta", c.meta.boost_learning_rate);
    read_opt(meta, "boost_max_depth", "meta", c.meta.boost_max_depth);
    read_opt(meta, "boost_max_leaves", "meta", c.meta.boost_max_leaves);
    read_opt(meta, "holdout_fraction", "meta", c.meta.holdout_fraction);

    const json& eval = section(doc, "eval");
    read_opt(eval, "baseline_quantile", "eval", c.baseline_quantile);

    c.synthetic.seed = c.stage_seed(kSeedSynthetic);
    c.split.seed = c.stage_seed(kSeedSplit);
    c.cluster.embedding.seed = c.stage_seed(kSeedCluster);
    c.learners.seed = c.stage_seed(kSeedBase);
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

nlohmann::ordered_json default_config_json() {
    const PipelineConfig d;
    const FlowColumns cols;
    nlohmann::ordered_json j;
    j["output_dir"] = "run";
    j["seed"] = 42;
    j["data"] = {{"source", "synthetic"}, {"sample_set", "samples.oss"}};
    j["ingest"] = {{"captures", json::array()},
                   {"flows", json::array()},
                   {"columns",
                    {{"src_ip", cols.src_ip},
                     {"src_port", cols.src_port},
                     {"dst_ip", cols.dst_ip},
                     {"dst_port", cols.dst_port},
                     {"protocol", cols.protocol},
                     {"start_time", cols.start_time},
                     {"duration", cols.duration},
                     {"label", cols.label},
                     {"duration_scale", cols.duration_scale}}},
                   {"deduplicate", d.ingest.deduplicate},
                   {"undersample_ratio", d.ingest.undersample_ratio}};
    const auto& s = d.synthetic;
    j["synthetic"] = {{"n_benign_clusters", s.n_benign_clusters},
                      {"n_known_attack_classes", s.n_known_attack_classes},
                      {"n_unknown_attack_classes", s.n_unknown_attack_classes},
                      {"samples_per_class", s.samples_per_class},
                      {"noise_sigma", s.noise_sigma},
                      {"min_template_separation", s.min_template_separation},
                      {"min_payload", s.min_payload}};
    j["split"] = {{"benign_ratios", d.split.benign_ratios}, {"heldout_classes", d.split.heldout_classes}};
    const auto& e = d.cluster.embedding;
    j["cluster"] = {{"perplexity", e.perplexity},
                    {"iterations", e.iterations},
                    {"early_exaggeration", e.early_exaggeration},
                    {"exaggeration_iterations", e.exaggeration_iterations},
                    {"learning_rate", e.learning_rate},
                    {"k_min", d.cluster.k_min},
                    {"k_max", d.cluster.k_max},
                    {"restarts", d.cluster.restarts}};
    j["learners"] = {{"kind", std::string(to_string(d.learners.kind))},
                     {"epochs", d.learners.epochs},
                     {"batch_size", d.learners.batch_size},
                     {"learning_rate", nullptr},
                     {"l2", d.learners.l2}};
    const auto& m = d.meta;
    j["meta"] = {{"logistic_c", m.logistic_c},
                 {"forest_trees", m.forest_trees},
                 {"forest_max_depth", m.forest_max_depth},
                 {"boost_rounds", m.boost_rounds},
                 {"boost_learning_rate", m.boost_learning_rate},
                 {"boost_max_depth", m.boost_max_depth},
                 {"boost_max_leaves", m.boost_max_leaves},
                 {"holdout_fraction", m.holdout_fraction}};
    j["eval"] = {{"baseline_quantile", d.baseline_quantile}};
    return j;
}

std::string training_config_digest(const PipelineConfig& config) {
    nlohmann::ordered_json j;
    const auto& l = config.learners;
    j["learners"] = {{"kind", std::string(to_string(l.kind))}, {"epochs", l.epochs},
                     {"batch_size", l.batch_size}, {"learning_rate", l.effective_learning_rate()},
                     {"l2", l.l2},  {"seed", l.seed}};
    const auto& m = config.meta;
    j["meta"] = {{"logistic_c", m.logistic_c},       {"forest_trees", m.forest_trees},
                 {"forest_max_depth", m.forest_max_depth}, {"boost_rounds", m.boost_rounds},
                 {"boost_learning_rate", m.boost_learning_rate}, {"boost_max_depth", m.boost_max_depth},
                 {"boost_max_leaves", m.boost_max_leaves}, {"holdout_fraction", m.holdout_fraction},
                 {"seed", config.stage_seed(kSeedMeta)}};
    const std::string text = j.dump();
    std::ostringstream out;
    out << "crc32:" << std::hex << std::setw(8) << std::setfill('0')
        << crc32(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return out.str();
}

} // namespace osnids
