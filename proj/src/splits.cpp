#include "osnids/splits.hpp"

#include <cmath>
#include <set>

#include "osnids/csv.hpp"
#include "osnids/error.hpp"
#include "osnids/random.hpp"

namespace osnids {

std::vector<std::string> default_heldout_classes() {
    return {"DoS Hulk", "DoS slowloris", "DoS Slowhttptest", "Web Attack–Sql Injection", "Bot"};
}

namespace {

void check_spec(const SplitSpec& spec) {
    double sum = 0.0;
    for (double r : spec.benign_ratios) {
        if (!(r > 0.0)) {
            fail(ErrorCode::InvalidSplitSpec, "benign ratios must be positive");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        fail(ErrorCode::InvalidSplitSpec, "benign ratios must sum to 1");
    }
    if (spec.heldout_classes.empty()) {
        fail(ErrorCode::InvalidSplitSpec, "at least one held-out class is required");
    }
    for (const auto& name : spec.heldout_classes) {
        if (is_benign_name(name)) {
            fail(ErrorCode::InvalidSplitSpec, "benign cannot be held out");
        }
    }
}

std::size_t cut(double fraction, std::size_t n) {
    return std::min(n, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
}

void count_split(std::vector<ManifestRow>& rows, const std::string& name, const SampleSet& set) {
    std::vector<std::size_t> counts(set.class_names.size(), 0);
    for (const auto& s : set.samples) {
        ++counts[s.label];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] != 0) {
            rows.push_back({name, set.class_names[c], counts[c]});
        }
    }
}

} // namespace

SplitResult build_splits(const SampleSet& samples, const SplitSpec& spec) {
    check_spec(spec);

    std::set<ClassId> heldout;
    for (const auto& name : spec.heldout_classes) {
        auto id = samples.find_class(name);
        bool present = false;
        if (id) {
            for (const auto& s : samples.samples) {
                if (s.label == *id) {
                    present = true;
                    break;
                }
            }
        }
        if (!present) {
            fail(ErrorCode::UnknownHeldoutClass, "held-out class '" + name + "' does not occur in the data");
        }
        heldout.insert(*id);
    }

    std::vector<std::size_t> benign;
    bool has_known_attack = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples.samples[i];
        if (s.is_benign()) {
            benign.push_back(i);
        } else if (!heldout.contains(s.label)) {
            has_known_attack = true;
        }
    }
    if (benign.empty()) {
        fail(ErrorCode::EmptyBenign, "no benign samples to split");
    }
    if (!has_known_attack) {
        fail(ErrorCode::NoKnownAttacks, "every attack class is held out; the meta learners need known attacks");
    }

    Rng rng = make_rng(spec.seed, 0x73706c6974);
    shuffle(benign.begin(), benign.end(), rng);
    const std::size_t n = benign.size();
    const std::size_t cut1 = cut(spec.benign_ratios[0], n);
    const std::size_t cut2 = std::max(cut1, cut(spec.benign_ratios[0] + spec.benign_ratios[1], n));

    SplitResult result{samples.empty_like(), samples.empty_like(), samples.empty_like(), {}};
    for (std::size_t r = 0; r < n; ++r) {
        SampleSet& target = r < cut1 ? result.d1 : (r < cut2 ? result.d2 : result.d3);
        LabeledSample s = samples.samples[benign[r]];
        s.cluster_id.reset();
        target.samples.push_back(s);
    }
    for (const auto& s : samples.samples) {
        if (s.is_benign()) {
            continue;
        }
        (heldout.contains(s.label) ? result.d3 : result.d2).samples.push_back(s);
    }
    result.manifest = split_manifest(result);
    return result;
}

std::vector<ManifestRow> split_manifest(const SplitResult& result) {
    std::vector<ManifestRow> rows;
    count_split(rows, "d1", result.d1);
    count_split(rows, "d2", result.d2);
    count_split(rows, "d3", result.d3);
    return rows;
}

void write_manifest_csv(std::ostream& out, const std::vector<ManifestRow>& manifest) {
    write_csv_row(out, {"split", "class", "count"});
    for (const auto& row : manifest) {
        write_csv_row(out, {row.split, row.class_name, std::to_string(row.count)});
    }
}

} // namespace osnids
