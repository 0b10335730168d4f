#include "osnids/persistence.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <zlib.h>

#include "osnids/binary_io.hpp"
#include "osnids/error.hpp"

namespace osnids {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::IoFailure, "read error on " + path.string());
    }
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoFailure, "write error on " + path.string());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_sample_set(const SampleSet& set) {
    if (set.class_names.empty() || set.class_names.size() > 0xFFFF) {
        fail(ErrorCode::ValueOutOfRange, "class table must hold 1..65535 names");
    }
    ByteWriter w;
    w.put_raw(kSampleSetMagic);
    w.put(kSampleSetVersion);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(set.class_names.size()));
    for (const auto& name : set.class_names) {
        if (name.size() > 0xFFFF) {
            fail(ErrorCode::ValueOutOfRange, "class name too long");
        }
        w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
        w.put_raw(name);
    }
    w.put<std::uint64_t>(set.samples.size());
    for (const auto& s : set.samples) {
        if (s.label >= set.class_names.size()) {
            fail(ErrorCode::ValueOutOfRange, "class id outside the class table");
        }
        if (s.cluster_id && (*s.cluster_id < 0 || *s.cluster_id > 0x7FFF)) {
            fail(ErrorCode::ValueOutOfRange, "cluster id does not fit the i16 field");
        }
        w.put_bytes(s.features);
        w.put<std::uint16_t>(s.label);
        w.put<std::int16_t>(s.cluster_id ? static_cast<std::int16_t>(*s.cluster_id) : std::int16_t(-1));
    }
    return w.take();
}

SampleSet decode_sample_set(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, ErrorCode::CountMismatch);
    if (bytes.size() < kSampleSetMagic.size() ||
        !std::equal(kSampleSetMagic.begin(), kSampleSetMagic.end(), bytes.begin())) {
        fail(ErrorCode::BadMagic, "not a sample-set file");
    }
    r.get_bytes(kSampleSetMagic.size());
    const auto version = r.get<std::uint16_t>();
    if (version != kSampleSetVersion) {
        fail(ErrorCode::VersionUnsupported, "sample-set version " + std::to_string(version));
    }
    SampleSet set;
    set.class_names.clear();
    const auto n_classes = r.get<std::uint16_t>();
    for (std::uint16_t i = 0; i < n_classes; ++i) {
        const auto len = r.get<std::uint16_t>();
        const auto name = r.get_bytes(len);
        set.class_names.emplace_back(name.begin(), name.end());
    }
    if (set.class_names.empty()) {
        fail(ErrorCode::ValueOutOfRange, "sample-set class table is empty");
    }
    const auto count = r.get<std::uint64_t>();
    constexpr std::size_t kRecordSize = kPayloadLength + 4;
    if (count > r.remaining() / kRecordSize || r.remaining() != count * kRecordSize) {
        fail(ErrorCode::CountMismatch, "header declares " + std::to_string(count) + " records but " +
                                           std::to_string(r.remaining() / kRecordSize) + " are present");
    }
    set.samples.resize(count);
    for (auto& s : set.samples) {
        const auto payload = r.get_bytes(kPayloadLength);
        std::copy(payload.begin(), payload.end(), s.features.begin());
        s.label = r.get<std::uint16_t>();
        const auto cluster = r.get<std::int16_t>();
        if (s.label >= set.class_names.size()) {
            fail(ErrorCode::ValueOutOfRange, "record class id outside the class table");
        }
        if (cluster >= 0) {
            s.cluster_id = cluster;
        } else if (cluster != -1) {
            fail(ErrorCode::ValueOutOfRange, "invalid cluster id");
        }
    }
    return set;
}

void save_sample_set(const SampleSet& set, const fs::path& path) { write_file(path, encode_sample_set(set)); }

SampleSet load_sample_set(const fs::path& path) { return decode_sample_set(read_file(path)); }

std::vector<std::uint8_t> wrap_parameters(std::span<const std::uint8_t> payload) {
    ByteWriter w;
    w.put_raw(kParamMagic);
    w.put(kBundleVersion);
    w.put<std::uint32_t>(crc32(payload));
    w.put<std::uint64_t>(payload.size());
    w.put_bytes(payload);
    return w.take();
}

std::vector<std::uint8_t> unwrap_parameters(std::span<const std::uint8_t> file, const std::string& name) {
    if (file.size() < kParamMagic.size() || !std::equal(kParamMagic.begin(), kParamMagic.end(), file.begin())) {
        fail(ErrorCode::BadMagic, name + " is not a parameter file");
    }
    ByteReader r(file, ErrorCode::ManifestInvalid);
    r.get_bytes(kParamMagic.size());
    const auto version = r.get<std::uint16_t>();
    if (version != kBundleVersion) {
        fail(ErrorCode::VersionUnsupported, name + " has version " + std::to_string(version));
    }
    const auto expected_crc = r.get<std::uint32_t>();
    const auto length = r.get<std::uint64_t>();
    if (length != r.remaining()) {
        fail(ErrorCode::ChecksumMismatch, name + " payload length does not match its header");
    }
    const auto payload = r.get_bytes(length);
    if (crc32(payload) != expected_crc) {
        fail(ErrorCode::ChecksumMismatch, name + " failed its CRC32 check");
    }
    return {payload.begin(), payload.end()};
}

namespace {

std::vector<std::uint8_t> encode_scorer(const BinaryScorer& scorer) {
    ByteWriter w;
    w.put<std::uint8_t>(static_cast<std::uint8_t>(scorer.kind()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scorer.geometry().rows));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scorer.geometry().cols));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scorer.geometry().channels));
    w.put_doubles(scorer.parameters());
    const auto& meta = scorer.training_meta();
    w.put<std::int32_t>(meta.epochs);
    w.put(meta.learning_rate);
    w.put(meta.seed);
    w.put(meta.final_loss);
    w.put_doubles(meta.loss_curve);
    return w.take();
}

BinaryScorer decode_scorer(std::span<const std::uint8_t> payload) {
    ByteReader r(payload, ErrorCode::ManifestInvalid);
    const auto kind = r.get<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(ScorerKind::SmallConvNet)) {
        fail(ErrorCode::ManifestInvalid, "unknown scorer kind in parameter file");
    }
    ImageGeometry g;
    g.rows = r.get<std::uint32_t>();
    g.cols = r.get<std::uint32_t>();
    g.channels = r.get<std::uint32_t>();
    auto params = r.get_doubles();
    TrainingMeta meta;
    meta.epochs = r.get<std::int32_t>();
    meta.learning_rate = r.get<double>();
    meta.seed = r.get<std::uint64_t>();
    meta.final_loss = r.get<double>();
    meta.loss_curve = r.get_doubles();
    return BinaryScorer(static_cast<ScorerKind>(kind), g, std::move(params), std::move(meta));
}

std::string base_file_name(std::size_t i) {
    std::string idx = std::to_string(i);
    if (idx.size() < 2) {
        idx.insert(0, 2 - idx.size(), '0');
    }
    return "base_" + idx + ".bin";
}

std::string meta_file_name(MetaFamily f) { return "meta_" + std::string(to_string(f)) + ".bin"; }

} // namespace

void save_bundle(const BaseEnsemble& base, const MetaEnsemble& meta, const fs::path& dir, const BundleInfo& info) {
    if (!base.trained()) {
        fail(ErrorCode::UntrainedModel, "only a trained base ensemble can be saved");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("base_") && name.ends_with(".bin")) {
            fs::remove(entry.path());
        }
    }

    nlohmann::ordered_json manifest;
    manifest["format_version"] = kBundleVersion;
    manifest["n_clusters"] = base.n_clusters();
    manifest["image_geometry"] = {{"rows", base.geometry.rows}, {"cols", base.geometry.cols},
                                  {"channels", base.geometry.channels}};
    auto kinds = nlohmann::ordered_json::array();
    auto base_files = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < base.scorers.size(); ++i) {
        kinds.push_back(std::string(to_string(base.scorers[i].kind())));
        base_files.push_back(base_file_name(i));
        write_file(dir / base_file_name(i), wrap_parameters(encode_scorer(base.scorers[i])));
    }
    manifest["scorer_kinds"] = std::move(kinds);
    manifest["base_files"] = std::move(base_files);
    auto families = nlohmann::ordered_json::array();
    auto meta_files = nlohmann::ordered_json::array();
    for (const auto& c : meta.classifiers()) {
        ByteWriter w;
        w.put<std::uint8_t>(static_cast<std::uint8_t>(c->family()));
        c->write(w);
        families.push_back(std::string(to_string(c->family())));
        meta_files.push_back(meta_file_name(c->family()));
        write_file(dir / meta_file_name(c->family()), wrap_parameters(w.bytes()));
    }
    manifest["meta_families"] = std::move(families);
    manifest["meta_files"] = std::move(meta_files);
    manifest["holdout_accuracy"] = meta.holdout_accuracy();
    manifest["seeds"] = {{"base", info.base_seed}, {"meta", info.meta_seed}};
    manifest["training_config_digest"] = info.training_config_digest;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

Bundle load_bundle_impl(const fs::path& dir, bool require_meta) {
    const auto text = read_file(dir / "manifest.json");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ManifestInvalid, std::string("manifest.json: ") + e.what());
    }

    Bundle bundle;
    try {
        const int version = manifest.at("format_version").get<int>();
        if (version != kBundleVersion) {
            fail(ErrorCode::VersionUnsupported, "bundle format version " + std::to_string(version));
        }
        const auto n = manifest.at("n_clusters").get<std::size_t>();
        const auto& geometry = manifest.at("image_geometry");
        bundle.base.geometry = {geometry.at("rows").get<std::size_t>(), geometry.at("cols").get<std::size_t>(),
                                geometry.at("channels").get<std::size_t>()};
        const auto base_files = manifest.at("base_files").get<std::vector<std::string>>();

        std::size_t on_disk = 0;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            on_disk += name.starts_with("base_") && name.ends_with(".bin");
        }
        if (n < 2 || base_files.size() != n || on_disk != n) {
            fail(ErrorCode::ManifestInvalid, "manifest declares " + std::to_string(n) + " base scorers but " +
                                                 std::to_string(on_disk) + " scorer files are present");
        }
        for (const auto& file : base_files) {
            if (!fs::exists(dir / file)) {
                fail(ErrorCode::ManifestInvalid, "missing scorer file " + file);
            }
            bundle.base.scorers.push_back(decode_scorer(unwrap_parameters(read_file(dir / file), file)));
            if (bundle.base.scorers.back().geometry() != bundle.base.geometry) {
                fail(ErrorCode::ManifestInvalid, file + " geometry disagrees with the manifest");
            }
        }

        const auto families = manifest.at("meta_families").get<std::vector<std::string>>();
        const auto meta_files = manifest.at("meta_files").get<std::vector<std::string>>();
        if (!require_meta && families.empty() && meta_files.empty()) {
            return bundle;
        }
        if (families.size() != kMetaArity || meta_files.size() != kMetaArity) {
            fail(ErrorCode::ManifestInvalid, "a bundle holds exactly four meta-classifiers");
        }
        std::vector<std::shared_ptr<const MetaClassifier>> classifiers;
        for (std::size_t i = 0; i < kMetaArity; ++i) {
            const MetaFamily family = meta_family_from_string(families[i]);
            if (!fs::exists(dir / meta_files[i])) {
                fail(ErrorCode::ManifestInvalid, "missing meta-classifier file " + meta_files[i]);
            }
            const auto payload = unwrap_parameters(read_file(dir / meta_files[i]), meta_files[i]);
            ByteReader r(payload, ErrorCode::ManifestInvalid);
            if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(family)) {
                fail(ErrorCode::ManifestInvalid, meta_files[i] + " family disagrees with the manifest");
            }
            classifiers.push_back(read_meta_classifier(family, r));
            if (!r.at_end()) {
                fail(ErrorCode::ManifestInvalid, meta_files[i] + " has trailing data");
            }
        }
        std::array<double, kMetaArity> accuracy{};
        if (manifest.contains("holdout_accuracy")) {
            accuracy = manifest.at("holdout_accuracy").get<std::array<double, kMetaArity>>();
        }
        bundle.meta = MetaEnsemble(std::move(classifiers), accuracy);
        if (manifest.contains("seeds")) {
            bundle.info.base_seed = manifest["seeds"].value("base", std::uint64_t{0});
            bundle.info.meta_seed = manifest["seeds"].value("meta", std::uint64_t{0});
        }
        bundle.info.training_config_digest = manifest.value("training_config_digest", std::string());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ManifestInvalid, std::string("manifest.json: ") + e.what());
    }
    return bundle;
}

} // namespace

Bundle load_bundle(const fs::path& dir) { return load_bundle_impl(dir, true); }

BaseEnsemble load_base_ensemble(const fs::path& dir) { return load_bundle_impl(dir, false).base; }

} // namespace osnids
