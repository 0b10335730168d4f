#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "osnids/learners.hpp"
#include "osnids/meta.hpp"
#include "osnids/sample.hpp"

namespace osnids {

// Sample-set file, all integers little-endian:
//   "OSNIDS1"            7 bytes
//   version              u16 (1)
//   class count          u16, then per class: u16 byte length + UTF-8 name
//   record count         u64
//   records              1500 payload bytes, u16 class id, i16 cluster id (-1 = unset)
inline constexpr std::string_view kSampleSetMagic = "OSNIDS1";
inline constexpr std::uint16_t kSampleSetVersion = 1;

std::vector<std::uint8_t> encode_sample_set(const SampleSet& set);
SampleSet decode_sample_set(std::span<const std::uint8_t> bytes);

void save_sample_set(const SampleSet& set, const std::filesystem::path& path);
SampleSet load_sample_set(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Parameter file inside a model bundle:
//   "OSPARAM"            7 bytes
//   version              u16 (1)
//   crc32                u32 over the payload
//   payload length       u64
//   payload
inline constexpr std::string_view kParamMagic = "OSPARAM";
inline constexpr std::uint16_t kBundleVersion = 1;

std::vector<std::uint8_t> wrap_parameters(std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> unwrap_parameters(std::span<const std::uint8_t> file, const std::string& name);

/// Extra manifest fields recorded for provenance.
struct BundleInfo {
    std::uint64_t base_seed = 0;
    std::uint64_t meta_seed = 0;
    std::string training_config_digest;
};

struct Bundle {
    BaseEnsemble base;
    MetaEnsemble meta;
    BundleInfo info;
};

/// Writes manifest.json, base_NN.bin per scorer and meta_<family>.bin per
/// meta-classifier into `dir` (created if needed). An untrained `meta`
/// yields a base-only bundle that train-meta completes later.
void save_bundle(const BaseEnsemble& base, const MetaEnsemble& meta, const std::filesystem::path& dir,
                 const BundleInfo& info = {});

/// Loads a complete bundle (base scorers and four meta-classifiers).
Bundle load_bundle(const std::filesystem::path& dir);

/// Loads only the base scorers; accepts base-only bundles.
BaseEnsemble load_base_ensemble(const std::filesystem::path& dir);

} // namespace osnids
