#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace osnids {

inline constexpr std::size_t kPayloadLength = 1500;

using PayloadBytes = std::array<std::uint8_t, kPayloadLength>;
using ClassId = std::uint16_t;
using ClusterId = std::int32_t;

inline constexpr ClassId kBenignClass = 0;
inline constexpr std::string_view kBenignName = "BENIGN";

/// One packet's payload feature vector with its class and, for benign
/// samples after clustering, the sub-cluster it belongs to.
struct LabeledSample {
    PayloadBytes features{};
    ClassId label = kBenignClass;
    std::optional<ClusterId> cluster_id;

    bool is_benign() const { return label == kBenignClass; }

    friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Throws ValueOutOfRange when the sample is all-zero or carries a cluster id
/// without being benign.
void validate(const LabeledSample& sample);

/// Samples together with the class-name table their labels index into.
/// Entry 0 of the table is always the benign class.
struct SampleSet {
    std::vector<std::string> class_names{std::string(kBenignName)};
    std::vector<LabeledSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    /// Returns the id of `name`, appending it to the table when absent.
    ClassId intern_class(std::string_view name);
    std::optional<ClassId> find_class(std::string_view name) const;
    const std::string& class_name(ClassId id) const;

    /// Copy of the class table with no samples.
    SampleSet empty_like() const;

    friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

/// True when `name` denotes benign traffic ("BENIGN", "benign", ...).
bool is_benign_name(std::string_view name);

} // namespace osnids
