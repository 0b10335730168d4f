#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "osnids/error.hpp"
#include "osnids/persistence.hpp"
#include "support/fixtures.hpp"
#include "support/models.hpp"

using namespace osnids;
namespace fs = std::filesystem;

namespace {

template <class Fn>
ErrorCode error_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoFailure;
}

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

} // namespace

TEST_CASE("sample-set golden encoding") {
    SampleSet set;
    set.intern_class("DDoS");
    LabeledSample a;
    a.features[0] = 0xAB;
    a.features[1499] = 0xCD;
    a.label = 1;
    LabeledSample b;
    b.features[5] = 1;
    b.cluster_id = 258;
    set.samples = {a, b};

    std::vector<std::uint8_t> expected = bytes_of("OSNIDS1");
    for (int v : {1, 0, 2, 0, 6, 0}) {
        expected.push_back(std::uint8_t(v));
    }
    for (char c : std::string("BENIGN")) {
        expected.push_back(std::uint8_t(c));
    }
    expected.insert(expected.end(), {4, 0, 'D', 'D', 'o', 'S', 2, 0, 0, 0, 0, 0, 0, 0});
    expected.insert(expected.end(), a.features.begin(), a.features.end());
    expected.insert(expected.end(), {1, 0, 0xFF, 0xFF});
    expected.insert(expected.end(), b.features.begin(), b.features.end());
    expected.insert(expected.end(), {0, 0, 2, 1});

    const auto encoded = encode_sample_set(set);
    CHECK(encoded == expected);
    CHECK(decode_sample_set(encoded) == set);
}

TEST_CASE("sample-set round trips") {
    const auto dir = fixtures::scratch_dir("samples");
    const SampleSet empty;
    save_sample_set(empty, dir / "empty.oss");
    CHECK(fs::file_size(dir / "empty.oss") == 7 + 2 + 2 + 2 + 6 + 8);
    CHECK(load_sample_set(dir / "empty.oss") == empty);

    const SampleSet big = fixtures::random_sample_set(1000, 42);
    save_sample_set(big, dir / "big.oss");
    CHECK(load_sample_set(dir / "big.oss") == big);
    fs::remove_all(dir);
}

TEST_CASE("sample-set decoding errors") {
    const SampleSet set = fixtures::random_sample_set(10, 1);
    auto bytes = encode_sample_set(set);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 7 * (kPayloadLength + 4));
    CHECK(error_of([&] { decode_sample_set(truncated); }) == ErrorCode::CountMismatch);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(error_of([&] { decode_sample_set(trailing); }) == ErrorCode::CountMismatch);

    auto magic = bytes;
    magic[0] = 'X';
    CHECK(error_of([&] { decode_sample_set(magic); }) == ErrorCode::BadMagic);

    auto version = bytes;
    version[7] = 9;
    CHECK(error_of([&] { decode_sample_set(version); }) == ErrorCode::VersionUnsupported);

    // Header claims an absurd record count.
    SampleSet one;
    auto huge = encode_sample_set(one);
    for (std::size_t i = huge.size() - 8; i < huge.size(); ++i) {
        huge[i] = 0xFF;
    }
    CHECK(error_of([&] { decode_sample_set(huge); }) == ErrorCode::CountMismatch);

    CHECK(error_of([] { load_sample_set("/nonexistent/x.oss"); }) == ErrorCode::IoFailure);
    CHECK(error_of([&] { save_sample_set(set, "/nonexistent/dir/x.oss"); }) == ErrorCode::IoFailure);
}

TEST_CASE("parameter file framing") {
    CHECK(crc32(bytes_of("123456789")) == 0xCBF43926u);
    const auto payload = bytes_of("weights");
    const auto file = wrap_parameters(payload);
    REQUIRE(file.size() == 7 + 2 + 4 + 8 + payload.size());
    CHECK(std::equal(kParamMagic.begin(), kParamMagic.end(), file.begin()));
    CHECK(unwrap_parameters(file, "x") == payload);

    auto flipped = file;
    flipped.back() ^= 1;
    CHECK(error_of([&] { unwrap_parameters(flipped, "x"); }) == ErrorCode::ChecksumMismatch);
    auto cut = file;
    cut.pop_back();
    CHECK(error_of([&] { unwrap_parameters(cut, "x"); }) == ErrorCode::ChecksumMismatch);
    auto magic = file;
    magic[1] = 'Z';
    CHECK(error_of([&] { unwrap_parameters(magic, "x"); }) == ErrorCode::BadMagic);
}

TEST_CASE("bundle round trip reproduces predictions") {
    const auto dir = fixtures::scratch_dir("bundle");
    const BaseEnsemble base = fixtures::random_base(3, 5);
    const MetaEnsemble meta = fixtures::fit_meta(base, 6);
    save_bundle(base, meta, dir, {11, 12, "crc32:deadbeef"});

    const Bundle loaded = load_bundle(dir);
    CHECK(loaded.info.base_seed == 11);
    CHECK(loaded.info.training_config_digest == "crc32:deadbeef");
    CHECK(loaded.meta.holdout_accuracy() == meta.holdout_accuracy());
    REQUIRE(loaded.base.n_clusters() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(loaded.base.scorers[i].parameters() == base.scorers[i].parameters());
    }
    const SampleSet probe = fixtures::random_sample_set(100, 8, false);
    for (const auto& s : probe.samples) {
        const Prediction a = predict_detailed(base, meta, s);
        const Prediction b = predict_detailed(loaded.base, loaded.meta, s);
        REQUIRE(a.p == b.p);
        REQUIRE(a.verdict == b.verdict);
    }

    // Re-saving a loaded bundle gives identical files.
    const auto dir2 = fixtures::scratch_dir("bundle2");
    save_bundle(loaded.base, loaded.meta, dir2, loaded.info);
    for (const auto& entry : fs::directory_iterator(dir)) {
        CHECK(read_file(entry.path()) == read_file(dir2 / entry.path().filename()));
    }
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("bundle corruption is detected") {
    const BaseEnsemble base = fixtures::random_base(3, 1);
    const MetaEnsemble meta = fixtures::fit_meta(base, 2);

    SUBCASE("missing scorer file") {
        const auto dir = fixtures::scratch_dir("missing");
        save_bundle(base, meta, dir);
        fs::remove(dir / "base_02.bin");
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::ManifestInvalid);
        fs::remove_all(dir);
    }
    SUBCASE("flipped parameter byte") {
        const auto dir = fixtures::scratch_dir("flip");
        save_bundle(base, meta, dir);
        auto bytes = read_file(dir / "base_01.bin");
        bytes[bytes.size() / 2] ^= 0x40;
        write_file(dir / "base_01.bin", bytes);
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::ChecksumMismatch);
        fs::remove_all(dir);
    }
    SUBCASE("flipped meta byte") {
        const auto dir = fixtures::scratch_dir("flipmeta");
        save_bundle(base, meta, dir);
        auto bytes = read_file(dir / "meta_random_forest.bin");
        bytes.back() ^= 1;
        write_file(dir / "meta_random_forest.bin", bytes);
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::ChecksumMismatch);
        fs::remove_all(dir);
    }
    SUBCASE("manifest edits") {
        const auto dir = fixtures::scratch_dir("manifest");
        save_bundle(base, meta, dir);
        const auto text = read_file(dir / "manifest.json");
        auto m = nlohmann::json::parse(text.begin(), text.end());
        m["n_clusters"] = 4;
        write_text_file(dir / "manifest.json", m.dump());
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::ManifestInvalid);
        m["n_clusters"] = 3;
        m["format_version"] = 2;
        write_text_file(dir / "manifest.json", m.dump());
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::VersionUnsupported);
        write_text_file(dir / "manifest.json", "{not json");
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::ManifestInvalid);
        fs::remove_all(dir);
    }
    SUBCASE("base-only bundle") {
        const auto dir = fixtures::scratch_dir("baseonly");
        save_bundle(base, MetaEnsemble{}, dir);
        CHECK(load_base_ensemble(dir).n_clusters() == 3);
        CHECK(error_of([&] { load_bundle(dir); }) == ErrorCode::ManifestInvalid);
        // Completing it later works and stale scorer files are replaced.
        save_bundle(fixtures::random_base(2, 3), fixtures::fit_meta(fixtures::random_base(2, 3), 4), dir);
        CHECK(load_bundle(dir).base.n_clusters() == 2);
        fs::remove_all(dir);
    }
    CHECK(error_of([] { load_bundle("/nonexistent/bundle"); }) == ErrorCode::IoFailure);
    CHECK(error_of([&] { save_bundle(BaseEnsemble{}, meta, fixtures::scratch_dir("untrained")); }) ==
          ErrorCode::UntrainedModel);
}
