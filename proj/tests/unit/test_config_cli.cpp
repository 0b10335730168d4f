#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "osnids/config.hpp"
#include "osnids/error.hpp"
#include "osnids/persistence.hpp"
#include "support/fixtures.hpp"

using namespace osnids;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int status = -1;
    std::string err;
};

RunResult cli(const std::string& args, const fs::path& cwd) {
    const fs::path err = cwd / "stderr.txt";
    const std::string cmd =
        "cd '" + cwd.string() + "' && '" OSNIDS_CLI_PATH "' " + args + " >stdout.txt 2>'" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

nlohmann::json small_config() {
    auto j = nlohmann::json::parse(default_config_json().dump());
    j["synthetic"]["samples_per_class"] = 40;
    j["cluster"]["iterations"] = 300;
    j["learners"]["epochs"] = 10;
    j["meta"]["forest_trees"] = 20;
    j["meta"]["boost_rounds"] = 20;
    return j;
}

std::string slurp(const fs::path& p) {
    const auto b = read_file(p);
    return {b.begin(), b.end()};
}

} // namespace

TEST_CASE("default template parses back to the defaults") {
    const auto doc = nlohmann::json::parse(default_config_json().dump());
    const PipelineConfig c = parse_config(doc, "/base");
    CHECK(c.output_dir == fs::path("/base/run"));
    CHECK(c.seed == 42);
    CHECK(c.source == DataSource::Synthetic);
    CHECK(c.split.benign_ratios == std::array<double, 3>{0.5, 0.3, 0.2});
    CHECK(c.split.heldout_classes == default_heldout_classes());
    CHECK(c.cluster.embedding.perplexity == 30.0);
    CHECK(c.cluster.k_max == 15);
    CHECK(c.learners.epochs == 30);
    CHECK(c.learners.batch_size == 64);
    CHECK_FALSE(c.learners.learning_rate);
    CHECK(c.meta.forest_trees == 100);
    CHECK(c.baseline_quantile == 0.95);
    CHECK(c.ingest.undersample_ratio == 1.0);
    CHECK(c.learners.seed == c.stage_seed(kSeedBase));
    CHECK(c.stage_seed(kSeedBase) != c.stage_seed(kSeedMeta));
    for (const char* key : {"output_dir", "seed", "data", "ingest", "synthetic", "split", "cluster", "learners",
                            "meta", "eval"}) {
        CHECK(doc.contains(key));
    }
}

TEST_CASE("missing required keys name the key") {
    for (const char* key : {"output_dir", "data", "split", "cluster", "learners", "meta", "eval"}) {
        auto doc = nlohmann::json::parse(default_config_json().dump());
        doc.erase(key);
        try {
            parse_config(doc);
            FAIL("expected ConfigInvalid");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ConfigInvalid);
            CHECK(e.category() == ErrorCategory::Usage);
            CHECK(std::string(e.what()).find(key) != std::string::npos);
        }
    }
    auto doc = nlohmann::json::parse(default_config_json().dump());
    doc["data"].erase("source");
    CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("data.source"), Error);
    doc["data"]["source"] = "capture";
    CHECK_THROWS_AS(parse_config(doc), Error);
    doc["data"]["source"] = "synthetic";
    doc["learners"]["kind"] = "transformer";
    CHECK_THROWS_AS(parse_config(doc), Error);
    doc["learners"]["kind"] = "convnet";
    doc["learners"]["epochs"] = "many";
    CHECK_THROWS_AS(parse_config(doc), Error);
}

TEST_CASE("optional values and null ratio") {
    auto doc = nlohmann::json::parse(default_config_json().dump());
    doc["ingest"]["undersample_ratio"] = nullptr;
    doc["learners"]["kind"] = "convnet";
    doc["learners"]["learning_rate"] = 0.005;
    doc["data"] = {{"source", "sample_set"}, {"sample_set", "x.oss"}};
    const PipelineConfig c = parse_config(doc, "dir");
    CHECK(std::isinf(c.ingest.undersample_ratio));
    CHECK(c.learners.kind == ScorerKind::SmallConvNet);
    CHECK(*c.learners.learning_rate == 0.005);
    CHECK(c.sample_set == fs::path("dir/x.oss"));
    CHECK(training_config_digest(c).rfind("crc32:", 0) == 0);
    auto other = c;
    other.meta.boost_rounds = 7;
    CHECK(training_config_digest(other) != training_config_digest(c));
}

TEST_CASE("cli exit codes") {
    const auto dir = fixtures::scratch_dir("cli");
    CHECK(cli("config init -o cfg.json", dir).status == 0);
    CHECK(fs::exists(dir / "cfg.json"));

    CHECK(cli("", dir).status == 1);
    CHECK(cli("frobnicate", dir).status == 1);
    CHECK(cli("split", dir).status == 1);
    CHECK(cli("--help", dir).status == 0);

    auto doc = small_config();
    doc.erase("cluster");
    write_text_file(dir / "bad.json", doc.dump());
    const RunResult missing = cli("-c bad.json run", dir);
    CHECK(missing.status == 1);
    CHECK(missing.err.find("cluster") != std::string::npos);

    write_text_file(dir / "broken.json", "{");
    CHECK(cli("-c broken.json run", dir).status == 1);
    CHECK(cli("-c absent.json run", dir).status == 2);
    CHECK(cli("split -i absent.oss -o out", dir).status == 2);

    write_text_file(dir / "junk.oss", "definitely not a sample set");
    CHECK(cli("split -i junk.oss -o out", dir).status == 3);
    write_text_file(dir / "junk.pcap", "junk");
    write_text_file(dir / "flows.csv", "src_ip,src_port,dst_ip,dst_port,protocol,start_time,duration,label\n");
    CHECK(cli("ingest --pcap junk.pcap --flows flows.csv -o s.oss", dir).status == 3);

    // Two-cluster benign set where one cluster is too small to train on.
    SampleSet d1;
    for (int i = 0; i < 30; ++i) {
        LabeledSample s;
        s.features[0] = std::uint8_t(i + 1);
        s.cluster_id = i < 25 ? 0 : 1;
        d1.samples.push_back(s);
    }
    save_sample_set(d1, dir / "d1_tiny.oss");
    CHECK(cli("train-base -i d1_tiny.oss -m model", dir).status == 4);
    fs::remove_all(dir);
}

TEST_CASE("ingest through the cli") {
    const auto dir = fixtures::scratch_dir("ingest");
    fixtures::PcapBuilder b;
    b.tcp(0x0a000001, 1000, 0x0a000002, 80, {1, 2, 3}, 5);
    b.tcp(0x0a000002, 80, 0x0a000001, 1000, {4, 5}, 6);
    b.tcp(0x0a000001, 1000, 0x0a000002, 80, {1, 2, 3}, 7); // duplicate
    b.udp(0x0a000003, 53, 0x0a000004, 9999, {9}, 5);
    b.udp(0x0a000007, 53, 0x0a000008, 9999, {9}, 5); // no flow
    b.arp();
    write_file(dir / "cap.pcap", b.bytes());
    write_text_file(dir / "flows.csv", "src_ip,src_port,dst_ip,dst_port,protocol,start_time,duration,label\n"
                                       "10.0.0.1,1000,10.0.0.2,80,6,0,10,BENIGN\n"
                                       "10.0.0.3,53,10.0.0.4,9999,17,0,10,DDoS\n");
    write_text_file(dir / "cfg.json", R"({"output_dir": "run", "data": {"source": "synthetic"}, "split": {},
        "cluster": {}, "learners": {}, "meta": {}, "eval": {},
        "ingest": {"undersample_ratio": null}})");
    REQUIRE(cli("-c cfg.json ingest --pcap cap.pcap --flows flows.csv -o s.oss", dir).status == 0);
    const SampleSet s = load_sample_set(dir / "s.oss");
    REQUIRE(s.size() == 3);
    CHECK(s.samples[0].is_benign());
    CHECK(s.samples[1].features[0] == 4);
    CHECK(s.class_name(s.samples[2].label) == "DDoS");
    const std::string out = slurp(dir / "stdout.txt");
    CHECK(out.find("unmatched=1") != std::string::npos);
    CHECK(out.find("skipped=1") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("staged cli commands and the one-shot run agree and are reproducible") {
    const auto dir = fixtures::scratch_dir("stages");
    write_text_file(dir / "cfg.json", small_config().dump(2));
    const std::string c = "-c cfg.json --threads 2 ";
    REQUIRE(cli(c + "synth -o all.oss", dir).status == 0);
    REQUIRE(cli(c + "split -i all.oss -o parts", dir).status == 0);
    REQUIRE(cli(c + "cluster -i parts/d1.oss -o parts/d1c.oss --report-dir parts", dir).status == 0);
    REQUIRE(cli(c + "train-base -i parts/d1c.oss -m model --loss-curves curves.csv", dir).status == 0);
    CHECK(cli(c + "evaluate -i parts/d3.oss -m model", dir).status == 3);
    REQUIRE(cli(c + "train-meta -i parts/d2.oss -m model", dir).status == 0);
    REQUIRE(cli(c + "evaluate -i parts/d3.oss -m model -o report.json", dir).status == 0);
    REQUIRE(cli(c + "predict -i parts/d3.oss -m model -o verdicts.csv", dir).status == 0);

    REQUIRE(cli(c + "run", dir).status == 0);
    CHECK(slurp(dir / "report.json") == slurp(dir / "run" / "eval_report.json"));
    CHECK(slurp(dir / "verdicts.csv") == slurp(dir / "run" / "verdicts.csv"));
    CHECK(slurp(dir / "parts" / "d1c.oss") == slurp(dir / "run" / "d1_clustered.oss"));
    CHECK(slurp(dir / "model" / "manifest.json") == slurp(dir / "run" / "model" / "manifest.json"));

    const std::string first = slurp(dir / "run" / "eval_report.json");
    REQUIRE(cli(c + "run", dir).status == 0);
    CHECK(slurp(dir / "run" / "eval_report.json") == first);

    // Reduced corpus and epochs; the full-size thresholds live in the acceptance suite.
    const auto report = nlohmann::json::parse(first);
    CHECK(report.at("sensitivity").get<double>() >= 0.8);
    CHECK(report.at("specificity").get<double>() >= 0.8);

    // A different master seed changes the artifacts.
    REQUIRE(cli(c + "--seed 7 run", dir).status == 0);
    CHECK(slurp(dir / "run" / "verdicts.csv") != slurp(dir / "verdicts.csv"));
    fs::remove_all(dir);
}
