#include "osnids/sample.hpp"

#include <algorithm>
#include <cctype>

#include "osnids/error.hpp"

namespace osnids {

void validate(const LabeledSample& sample) {
    if (std::all_of(sample.features.begin(), sample.features.end(), [](auto b) { return b == 0; })) {
        fail(ErrorCode::ValueOutOfRange, "sample payload is all zero");
    }
    if (sample.cluster_id && !sample.is_benign()) {
        fail(ErrorCode::ValueOutOfRange, "cluster id set on a non-benign sample");
    }
    if (sample.cluster_id && *sample.cluster_id < 0) {
        fail(ErrorCode::ValueOutOfRange, "negative cluster id");
    }
}

bool is_benign_name(std::string_view name) {
    return name.size() == kBenignName.size() &&
           std::equal(name.begin(), name.end(), kBenignName.begin(), [](char a, char b) {
               return std::toupper(static_cast<unsigned char>(a)) == b;
           });
}

ClassId SampleSet::intern_class(std::string_view name) {
    if (is_benign_name(name)) {
        return kBenignClass;
    }
    if (auto id = find_class(name)) {
        return *id;
    }
    if (class_names.size() >= 0xFFFF) {
        fail(ErrorCode::ValueOutOfRange, "class table overflow");
    }
    class_names.emplace_back(name);
    return static_cast<ClassId>(class_names.size() - 1);
}

std::optional<ClassId> SampleSet::find_class(std::string_view name) const {
    if (is_benign_name(name)) {
        return kBenignClass;
    }
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (class_names[i] == name) {
            return static_cast<ClassId>(i);
        }
    }
    return std::nullopt;
}

const std::string& SampleSet::class_name(ClassId id) const {
    if (id >= class_names.size()) {
        fail(ErrorCode::ValueOutOfRange, "class id " + std::to_string(id) + " outside class table");
    }
    return class_names[id];
}

SampleSet SampleSet::empty_like() const {
    SampleSet out;
    out.class_names = class_names;
    return out;
}

} // namespace osnids
