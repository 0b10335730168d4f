#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "osnids/config.hpp"
#include "osnids/error.hpp"
#include "osnids/evaluation.hpp"
#include "osnids/persistence.hpp"
#include "osnids/pipeline.hpp"
#include "osnids/splits.hpp"

namespace fs = std::filesystem;
using namespace osnids;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool verbose = false;
    std::string config;
};

void log_line(const Globals& g, const std::string& msg) {
    if (g.verbose) {
        std::cerr << "osnids: " << msg << '\n';
    }
}

PipelineConfig resolve_config(const Globals& g) {
    nlohmann::json doc;
    fs::path base;
    if (g.config.empty()) {
        doc = nlohmann::json::parse(default_config_json().dump());
    } else {
        std::ifstream in(g.config);
        if (!in) {
            fail(ErrorCode::IoFailure, "cannot open config " + g.config);
        }
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ConfigInvalid, g.config + ": " + e.what());
        }
        base = fs::path(g.config).parent_path();
    }
    if (g.seed && doc.is_object()) {
        doc["seed"] = *g.seed;
    }
    return parse_config(doc, base);
}

BundleInfo bundle_info(const PipelineConfig& c) {
    return {c.learners.seed, c.stage_seed(kSeedMeta), training_config_digest(c)};
}

template <class Writer>
void write_to(const fs::path& path, Writer&& writer) {
    std::ostringstream out;
    writer(out);
    write_text_file(path, out.str());
}

void print_report(const EvalReport& r) {
    const auto fmt = [](std::optional<double> v) { return v ? std::to_string(*v) : std::string("n/a"); };
    std::cout << "tp=" << r.tp << " tn=" << r.tn << " fp=" << r.fp << " fn=" << r.fn
              << " sensitivity=" << fmt(r.sensitivity()) << " specificity=" << fmt(r.specificity()) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-set payload intrusion detection"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Override the configured master seed");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");
    app.add_option("-c,--config", g.config, "JSON configuration file");

    std::function<void()> action;

    // config init
    auto* config_cmd = app.add_subcommand("config", "Configuration helpers");
    config_cmd->require_subcommand(1);
    auto* init = config_cmd->add_subcommand("init", "Write a template listing every default");
    std::string init_out;
    init->add_option("-o,--output", init_out, "Destination (stdout when omitted)");
    init->callback([&] {
        action = [&] {
            const std::string text = default_config_json().dump(2) + "\n";
            if (init_out.empty()) {
                std::cout << text;
            } else {
                write_text_file(init_out, text);
            }
        };
    });

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Label pcap payloads with flow CSVs into a sample set");
    std::vector<std::string> pcaps, flow_csvs;
    std::string ingest_out;
    ingest->add_option("--pcap", pcaps, "Capture files")->required();
    ingest->add_option("--flows", flow_csvs, "Flow CSV files")->required();
    ingest->add_option("-o,--output", ingest_out, "Sample-set file")->required();
    ingest->callback([&] {
        action = [&] {
            PipelineConfig c = resolve_config(g);
            c.ingest.captures.assign(pcaps.begin(), pcaps.end());
            c.ingest.flows.assign(flow_csvs.begin(), flow_csvs.end());
            IngestSummary summary;
            const SampleSet set = ingest_captures(c.ingest, c.stage_seed(kSeedUndersample), &summary);
            save_sample_set(set, ingest_out);
            std::cout << "frames=" << summary.capture.frames << " skipped=" << summary.capture.skipped()
                      << " unmatched=" << summary.unmatched.unmatched
                      << " empty_payload=" << summary.unmatched.empty_payload << " labeled=" << summary.labeled
                      << " deduplicated=" << summary.after_dedup << " kept=" << summary.after_undersample << '\n';
        };
    });

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
    std::string synth_out;
    synth->add_option("-o,--output", synth_out, "Sample-set file")->required();
    synth->callback([&] {
        action = [&] {
            const PipelineConfig c = resolve_config(g);
            const SyntheticCorpus corpus = generate_synthetic(c.synthetic);
            save_sample_set(corpus.samples, synth_out);
            std::cout << "samples=" << corpus.samples.size() << '\n';
        };
    });

    // split
    auto* split = app.add_subcommand("split", "Partition a sample set into d1/d2/d3");
    std::string split_in, split_dir;
    split->add_option("-i,--input", split_in, "Sample-set file")->required();
    split->add_option("-o,--output-dir", split_dir, "Directory for d1.oss, d2.oss, d3.oss")->required();
    split->callback([&] {
        action = [&] {
            const PipelineConfig c = resolve_config(g);
            const SplitResult r = build_splits(load_sample_set(split_in), c.split);
            fs::create_directories(split_dir);
            save_sample_set(r.d1, fs::path(split_dir) / "d1.oss");
            save_sample_set(r.d2, fs::path(split_dir) / "d2.oss");
            save_sample_set(r.d3, fs::path(split_dir) / "d3.oss");
            write_to(fs::path(split_dir) / "split_manifest.csv",
                     [&](std::ostream& o) { write_manifest_csv(o, r.manifest); });
            std::cout << "d1=" << r.d1.size() << " d2=" << r.d2.size() << " d3=" << r.d3.size() << '\n';
        };
    });

    // cluster
    auto* cluster = app.add_subcommand("cluster", "Embed and cluster benign d1 samples");
    std::string cluster_in, cluster_out, cluster_report;
    cluster->add_option("-i,--input", cluster_in, "Benign d1 sample set")->required();
    cluster->add_option("-o,--output", cluster_out, "Annotated sample set")->required();
    cluster->add_option("--report-dir", cluster_report, "Directory for clustering.csv/json and embedding.csv");
    cluster->callback([&] {
        action = [&] {
            const PipelineConfig c = resolve_config(g);
            const ClusterOutcome out = cluster_benign(load_sample_set(cluster_in), c.cluster, c.stage_seed(kSeedCluster));
            save_sample_set(out.clustered, cluster_out);
            if (!cluster_report.empty()) {
                const fs::path dir = cluster_report;
                fs::create_directories(dir);
                write_to(dir / "clustering.csv", [&](std::ostream& o) { write_report_csv(o, out.report); });
                write_to(dir / "clustering.json", [&](std::ostream& o) { write_report_json(o, out.report); });
                write_to(dir / "embedding.csv",
                         [&](std::ostream& o) { write_embedding_csv(o, out.embedding, out.report.assignments); });
            }
            std::cout << "selected_n=" << out.report.selected_n << '\n';
        };
    });

    // train-base
    auto* train_base = app.add_subcommand("train-base", "Train one scorer per benign cluster");
    std::string base_in, base_bundle, base_curves;
    train_base->add_option("-i,--input", base_in, "Annotated d1 sample set")->required();
    train_base->add_option("-m,--model", base_bundle, "Bundle directory")->required();
    train_base->add_option("--loss-curves", base_curves, "CSV of per-epoch losses");
    train_base->callback([&] {
        action = [&] {
            const PipelineConfig c = resolve_config(g);
            const SampleSet d1 = load_sample_set(base_in);
            int n = 0;
            for (const auto& s : d1.samples) {
                if (s.cluster_id) {
                    n = std::max(n, *s.cluster_id + 1);
                }
            }
            const BaseEnsemble base = train_base_ensemble(d1.samples, n, c.learners, g.threads);
            save_bundle(base, MetaEnsemble{}, base_bundle, bundle_info(c));
            if (!base_curves.empty()) {
                write_to(base_curves, [&](std::ostream& o) { write_loss_curve_csv(o, base); });
            }
            std::cout << "scorers=" << base.n_clusters() << '\n';
        };
    });

    // train-meta
    auto* train_meta = app.add_subcommand("train-meta", "Train the four meta-classifiers on d2");
    std::string meta_in, meta_bundle;
    train_meta->add_option("-i,--input", meta_in, "d2 sample set")->required();
    train_meta->add_option("-m,--model", meta_bundle, "Bundle directory holding the base scorers")->required();
    train_meta->callback([&] {
        action = [&] {
            const PipelineConfig c = resolve_config(g);
            const BaseEnsemble base = load_base_ensemble(meta_bundle);
            const MetaEnsemble meta =
                train_meta_stage(base, load_sample_set(meta_in), c.meta, c.stage_seed(kSeedMeta), g.threads);
            save_bundle(base, meta, meta_bundle, bundle_info(c));
            for (std::size_t i = 0; i < kMetaArity; ++i) {
                std::cout << to_string(meta.classifiers()[i]->family()) << "_holdout_accuracy="
                          << meta.holdout_accuracy()[i] << '\n';
            }
        };
    });

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score d3 and report sensitivity/specificity");
    std::string eval_in, eval_bundle, eval_out;
    evaluate_cmd->add_option("-i,--input", eval_in, "d3 sample set")->required();
    evaluate_cmd->add_option("-m,--model", eval_bundle, "Bundle directory")->required();
    evaluate_cmd->add_option("-o,--output", eval_out, "Report JSON");
    evaluate_cmd->callback([&] {
        action = [&] {
            const Bundle bundle = load_bundle(eval_bundle);
            const EvalReport report = evaluate(bundle.base, bundle.meta, load_sample_set(eval_in), g.threads);
            if (!eval_out.empty()) {
                write_to(eval_out, [&](std::ostream& o) { write_report_json(o, report); });
            }
            print_report(report);
        };
    });

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Write per-sample verdicts as CSV");
    std::string pred_in, pred_bundle, pred_out;
    predict_cmd->add_option("-i,--input", pred_in, "Sample set")->required();
    predict_cmd->add_option("-m,--model", pred_bundle, "Bundle directory")->required();
    predict_cmd->add_option("-o,--output", pred_out, "Verdict CSV")->required();
    predict_cmd->callback([&] {
        action = [&] {
            const Bundle bundle = load_bundle(pred_bundle);
            const auto predictions = predict_all(bundle.base, bundle.meta, load_sample_set(pred_in).samples, g.threads);
            write_to(pred_out, [&](std::ostream& o) { write_verdicts_csv(o, predictions); });
        };
    });

    // run
    auto* run = app.add_subcommand("run", "Run every stage from one configuration");
    run->callback([&] {
        action = [&] {
            if (g.config.empty()) {
                fail(ErrorCode::ConfigInvalid, "run requires --config");
            }
            const PipelineConfig c = resolve_config(g);
            const PipelineSummary s = run_pipeline(c, g.threads, [&](const std::string& m) { log_line(g, m); });
            std::cout << "clusters=" << s.n_clusters << ' ';
            print_report(s.report);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (action) {
            action();
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return static_cast<int>(e.category());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error [IoFailure]: " << e.what() << '\n';
        return static_cast<int>(ErrorCategory::Io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
