#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "osnids/sample.hpp"

namespace osnids {

/// The five CIC-IDS2017 classes held out as unknown attacks by default.
std::vector<std::string> default_heldout_classes();

struct SplitSpec {
    std::array<double, 3> benign_ratios{0.50, 0.30, 0.20};
    std::vector<std::string> heldout_classes = default_heldout_classes();
    std::uint64_t seed = 0;
};

struct ManifestRow {
    std::string split;
    std::string class_name;
    std::size_t count = 0;

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// d1: benign only (base learners). d2: benign + known attacks (meta
/// learners). d3: benign + held-out attacks (evaluation). All three share
/// the input's class table.
struct SplitResult {
    SampleSet d1;
    SampleSet d2;
    SampleSet d3;
    std::vector<ManifestRow> manifest;
};

SplitResult build_splits(const SampleSet& samples, const SplitSpec& spec);

/// Sparse per-(split, class) counts in split order, then class id order.
std::vector<ManifestRow> split_manifest(const SplitResult& result);

void write_manifest_csv(std::ostream& out, const std::vector<ManifestRow>& manifest);

} // namespace osnids
