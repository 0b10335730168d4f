#pragma once

#include <cstdint>
#include <vector>

#include "osnids/sample.hpp"

namespace osnids {

/// Keeps the first occurrence of each distinct (features, label) pair,
/// preserving first-occurrence order.
std::vector<LabeledSample> deduplicate(const std::vector<LabeledSample>& samples);

/// Uniformly subsamples benign samples without replacement so that
/// |benign| <= ratio * |attacks|. Attack samples and the relative order of
/// everything kept are unchanged. An infinite ratio is a no-op.
std::vector<LabeledSample> undersample_benign(const std::vector<LabeledSample>& samples, double target_ratio,
                                              std::uint64_t seed);

} // namespace osnids
