#include "osnids/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "osnids/error.hpp"
#include "osnids/flows.hpp"
#include "osnids/image.hpp"
#include "osnids/persistence.hpp"
#include "osnids/preprocess.hpp"
#include "osnids/random.hpp"
#include "osnids/splits.hpp"

namespace osnids {

namespace fs = std::filesystem;

SampleSet ingest_captures(const IngestConfig& config, std::uint64_t seed, IngestSummary* summary) {
    std::vector<FlowRecord> flows;
    for (const auto& path : config.flows) {
        auto part = read_flow_csv(path, config.columns);
        flows.insert(flows.end(), part.begin(), part.end());
    }
    IngestSummary local;
    SampleSet set;
    for (const auto& path : config.captures) {
        const Capture capture = parse_capture(path);
        local.capture.frames += capture.stats.frames;
        local.capture.emitted += capture.stats.emitted;
        local.capture.non_ip += capture.stats.non_ip;
        local.capture.non_tcp_udp += capture.stats.non_tcp_udp;
        local.capture.fragments += capture.stats.fragments;
        local.capture.malformed += capture.stats.malformed;
        auto previous = std::move(set.samples);
        LabelingResult labeled = label_packets(capture.packets, flows, std::move(set));
        previous.insert(previous.end(), labeled.samples.samples.begin(), labeled.samples.samples.end());
        set = std::move(labeled.samples);
        set.samples = std::move(previous);
        local.unmatched.unmatched += labeled.report.unmatched;
        local.unmatched.empty_payload += labeled.report.empty_payload;
    }
    local.labeled = set.size();
    if (config.deduplicate) {
        set.samples = deduplicate(set.samples);
    }
    local.after_dedup = set.size();
    set.samples = undersample_benign(set.samples, config.undersample_ratio, seed);
    local.after_undersample = set.size();
    if (summary) {
        *summary = local;
    }
    return set;
}

ClusterOutcome cluster_benign(const SampleSet& d1, const ClusterConfig& config, std::uint64_t seed) {
    const std::size_t n = d1.size();
    const std::size_t dim = kDefaultGeometry.size();
    Matrix x(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        const ImageTensor t = sample_tensor(d1.samples[i]);
        std::copy(t.values.begin(), t.values.end(), x.row(i).begin());
    }
    EmbeddingParams params = config.embedding;
    params.seed = derive_seed(seed, 0);
    ClusterOutcome out;
    out.embedding = tsne(x, params);

    SelectionParams sel;
    sel.k_min = config.k_min;
    sel.k_max = std::min<int>(config.k_max, int(n) - 1);
    sel.restarts = config.restarts;
    sel.seed = derive_seed(seed, 1);
    out.report = select_cluster_count(out.embedding.embedding, sel);

    out.clustered = d1.empty_like();
    out.clustered.samples = annotate_clusters(d1.samples, out.report.assignments);
    return out;
}

MetaEnsemble train_meta_stage(const BaseEnsemble& base, const SampleSet& d2, const MetaConfig& config,
                              std::uint64_t seed, unsigned threads) {
    const auto features = meta_features(base, d2.samples, threads);
    std::vector<int> labels;
    labels.reserve(d2.size());
    for (const auto& s : d2.samples) {
        labels.push_back(s.is_benign() ? 0 : 1);
    }
    return train_meta_classifiers(features, labels, config, seed, threads);
}

void write_embedding_csv(std::ostream& out, const TsneResult& result, const std::vector<int>& assignments) {
    out << "index,x,y,cluster\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < result.embedding.rows(); ++i) {
        out << i << ',' << result.embedding(i, 0) << ',' << result.embedding(i, 1) << ','
            << (i < assignments.size() ? assignments[i] : -1) << '\n';
    }
}

namespace {

template <class Fn>
auto stage(const char* name, const LogFn& log, Fn&& fn) {
    if (log) {
        log(std::string("stage ") + name);
    }
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), std::string(name) + ": " + e.what());
    }
}

template <class Writer>
void write_with(const fs::path& path, Writer&& writer) {
    std::ostringstream out;
    writer(out);
    write_text_file(path, out.str());
}

} // namespace

PipelineSummary run_pipeline(const PipelineConfig& config, unsigned threads, const LogFn& log) {
    const fs::path dir = config.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }

    const SampleSet samples = stage("data", log, [&] {
        SampleSet s;
        switch (config.source) {
        case DataSource::Synthetic:
            s = generate_synthetic(config.synthetic).samples;
            break;
        case DataSource::SampleSet:
            s = load_sample_set(config.sample_set);
            break;
        case DataSource::Capture:
            s = ingest_captures(config.ingest, config.stage_seed(kSeedUndersample));
            break;
        }
        save_sample_set(s, dir / "samples.oss");
        return s;
    });

    const SplitResult splits = stage("split", log, [&] {
        SplitResult r = build_splits(samples, config.split);
        save_sample_set(r.d1, dir / "d1.oss");
        save_sample_set(r.d2, dir / "d2.oss");
        save_sample_set(r.d3, dir / "d3.oss");
        write_with(dir / "split_manifest.csv", [&](std::ostream& o) { write_manifest_csv(o, r.manifest); });
        return r;
    });

    const ClusterOutcome clusters = stage("cluster", log, [&] {
        ClusterOutcome c = cluster_benign(splits.d1, config.cluster, config.stage_seed(kSeedCluster));
        save_sample_set(c.clustered, dir / "d1_clustered.oss");
        write_with(dir / "clustering.csv", [&](std::ostream& o) { write_report_csv(o, c.report); });
        write_with(dir / "clustering.json", [&](std::ostream& o) { write_report_json(o, c.report); });
        write_with(dir / "embedding.csv",
                   [&](std::ostream& o) { write_embedding_csv(o, c.embedding, c.report.assignments); });
        return c;
    });
    if (log) {
        log("selected " + std::to_string(clusters.report.selected_n) + " benign clusters");
    }

    BundleInfo info;
    info.base_seed = config.learners.seed;
    info.meta_seed = config.stage_seed(kSeedMeta);
    info.training_config_digest = training_config_digest(config);

    const BaseEnsemble base = stage("train-base", log, [&] {
        BaseEnsemble b = train_base_ensemble(clusters.clustered.samples, clusters.report.selected_n, config.learners,
                                             threads);
        write_with(dir / "loss_curves.csv", [&](std::ostream& o) { write_loss_curve_csv(o, b); });
        return b;
    });

    const MetaEnsemble meta = stage("train-meta", log, [&] {
        MetaEnsemble m = train_meta_stage(base, splits.d2, config.meta, info.meta_seed, threads);
        save_bundle(base, m, dir / "model", info);
        return m;
    });

    return stage("evaluate", log, [&] {
        PipelineSummary summary;
        summary.n_clusters = clusters.report.selected_n;
        const auto predictions = predict_all(base, meta, splits.d3.samples, threads);
        std::vector<Decision> decisions;
        decisions.reserve(predictions.size());
        for (const auto& p : predictions) {
            decisions.push_back(p.verdict.decision);
        }
        summary.report = tally(splits.d3, decisions);
        summary.baseline = naive_baseline(clusters.clustered, splits.d3, config.baseline_quantile);
        const MatchedBaseline matched =
            matched_baseline(clusters.clustered, splits.d3, summary.report.specificity().value_or(0.0));

        write_with(dir / "verdicts.csv", [&](std::ostream& o) { write_verdicts_csv(o, predictions); });
        write_with(dir / "eval_report.json", [&](std::ostream& o) { write_report_json(o, summary.report); });
        write_with(dir / "eval_report.csv", [&](std::ostream& o) { write_report_csv(o, summary.report); });
        write_with(dir / "baseline_report.json", [&](std::ostream& o) {
            nlohmann::ordered_json j;
            std::ostringstream fixed, swept;
            write_report_json(fixed, summary.baseline);
            write_report_json(swept, matched.report);
            j["quantile"] = config.baseline_quantile;
            j["report"] = nlohmann::ordered_json::parse(fixed.str());
            j["matched_quantile"] = matched.quantile;
            j["matched_report"] = nlohmann::ordered_json::parse(swept.str());
            o << j.dump(2) << '\n';
        });
        return summary;
    });
}

} // namespace osnids
