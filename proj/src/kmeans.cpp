#include "osnids/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>

#include <json.hpp>

#include "osnids/error.hpp"
#include "osnids/random.hpp"

namespace osnids {
namespace {

int nearest(const Matrix& centroids, std::span<const double> p) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(p, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

double total_sse(const Matrix& points, const Matrix& centroids, const std::vector<int>& assignments) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        s += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(assignments[i])));
    }
    return s;
}

void recompute_means(const Matrix& points, const std::vector<int>& assignments, Matrix& centroids) {
    const std::size_t k = centroids.rows();
    const std::size_t d = points.cols();
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto c = static_cast<std::size_t>(assignments[i]);
        ++counts[c];
        for (std::size_t j = 0; j < d; ++j) {
            sums(c, j) += points(i, j);
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
            continue;
        }
        for (std::size_t j = 0; j < d; ++j) {
            centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
        }
    }
}

void repair_empty_clusters(const Matrix& points, Matrix& centroids, std::vector<int>& assignments) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> counts(k, 0);
    for (int a : assignments) {
        ++counts[static_cast<std::size_t>(a)];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) {
            continue;
        }
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const auto owner = static_cast<std::size_t>(assignments[i]);
            if (counts[owner] < 2) {
                continue;
            }
            const double d = squared_distance(points.row(i), centroids.row(owner));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        --counts[static_cast<std::size_t>(assignments[far])];
        assignments[far] = static_cast<int>(c);
        counts[c] = 1;
        std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(c).begin());
    }
}

} // namespace

KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iterations) {
    const std::size_t n = points.rows();
    KMeansResult result;
    std::vector<int> previous;
    std::vector<int> assignments(n, 0);
    for (int iter = 0; iter < max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            assignments[i] = nearest(centroids, points.row(i));
        }
        repair_empty_clusters(points, centroids, assignments);
        result.sse_trace.push_back(total_sse(points, centroids, assignments));
        if (assignments == previous) {
            break;
        }
        recompute_means(points, assignments, centroids);
        previous = assignments;
    }
    recompute_means(points, assignments, centroids);
    result.sse = total_sse(points, centroids, assignments);
    result.assignments = std::move(assignments);
    result.centroids = std::move(centroids);
    return result;
}

Matrix kmeans_plus_plus(const Matrix& points, int k, std::uint64_t seed) {
    const std::size_t n = points.rows();
    Rng rng = make_rng(seed, 0x6b6d2b2b);
    Matrix centroids(static_cast<std::size_t>(k), points.cols());
    auto take = [&](std::size_t c, std::size_t i) {
        std::copy(points.row(i).begin(), points.row(i).end(), centroids.row(c).begin());
    };
    take(0, uniform_below(rng, n));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_distance(points.row(i), centroids.row(0));
    }
    for (std::size_t c = 1; c < static_cast<std::size_t>(k); ++c) {
        double total = 0.0;
        for (double v : d2) {
            total += v;
        }
        std::size_t pick = n - 1;
        if (total > 0.0) {
            double r = uniform01(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                r -= d2[i];
                if (r < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform_below(rng, n);
        }
        take(c, pick);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
        }
    }
    return centroids;
}

KMeansResult kmeans(const Matrix& points, int k, int restarts, std::uint64_t seed) {
    if (k < 1 || restarts < 1) {
        fail(ErrorCode::InvalidRange, "k and restarts must be at least 1");
    }
    if (points.rows() < static_cast<std::size_t>(k)) {
        fail(ErrorCode::TooFewPoints,
             std::to_string(points.rows()) + " points cannot form " + std::to_string(k) + " clusters");
    }
    KMeansResult best;
    best.sse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        KMeansResult run = lloyd(points, kmeans_plus_plus(points, k, derive_seed(seed, static_cast<std::uint64_t>(r))));
        if (run.sse < best.sse) {
            best = std::move(run);
        }
    }
    return best;
}

double silhouette_score(const Matrix& points, std::span<const int> assignments) {
    const std::size_t n = points.rows();
    if (assignments.size() != n) {
        fail(ErrorCode::LengthMismatch, "assignment count differs from point count");
    }
    std::map<int, std::size_t> compact;
    for (int a : assignments) {
        compact.emplace(a, 0);
    }
    if (compact.size() < 2) {
        fail(ErrorCode::SingleCluster, "silhouette needs at least two clusters");
    }
    std::size_t next = 0;
    for (auto& [label, idx] : compact) {
        idx = next++;
    }
    const std::size_t k = compact.size();
    std::vector<std::size_t> label(n);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        label[i] = compact[assignments[i]];
        ++sizes[label[i]];
    }

    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::sqrt(squared_distance(points.row(i), points.row(j)));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = label[i];
        if (sizes[own] < 2) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            sums[label[j]] += dist(i, j);
        }
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) {
                b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

ClusteringReport select_cluster_count(const Matrix& points, const SelectionParams& params) {
    const auto n = static_cast<long long>(points.rows());
    if (params.k_min < 2 || params.k_min >= params.k_max || params.k_max > n - 1) {
        fail(ErrorCode::InvalidRange, "cluster range [" + std::to_string(params.k_min) + ", " +
                                          std::to_string(params.k_max) + "] invalid for " + std::to_string(n) +
                                          " points");
    }
    ClusteringReport report;
    double best_silhouette = -std::numeric_limits<double>::infinity();
    for (int k = params.k_min; k <= params.k_max; ++k) {
        KMeansResult run = kmeans(points, k, params.restarts, derive_seed(params.seed, static_cast<std::uint64_t>(k)));
        const double s = silhouette_score(points, run.assignments);
        report.per_k.push_back({k, run.sse, s});
        if (s > best_silhouette) {
            best_silhouette = s;
            report.selected_n = k;
            report.centroids = std::move(run.centroids);
            report.assignments = std::move(run.assignments);
        }
    }
    return report;
}

std::vector<LabeledSample> annotate_clusters(std::vector<LabeledSample> samples, std::span<const int> assignments) {
    if (samples.size() != assignments.size()) {
        fail(ErrorCode::LengthMismatch, std::to_string(samples.size()) + " samples but " +
                                            std::to_string(assignments.size()) + " assignments");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].is_benign()) {
            fail(ErrorCode::ValueOutOfRange, "sample " + std::to_string(i) + " is not benign");
        }
        if (assignments[i] < 0) {
            fail(ErrorCode::ValueOutOfRange, "negative cluster assignment");
        }
        samples[i].cluster_id = assignments[i];
    }
    return samples;
}

void write_report_csv(std::ostream& out, const ClusteringReport& report) {
    out << "k,sse,silhouette\n";
    out << std::setprecision(17);
    for (const auto& row : report.per_k) {
        out << row.k << ',' << row.sse << ',' << row.silhouette << '\n';
    }
}

void write_report_json(std::ostream& out, const ClusteringReport& report) {
    nlohmann::json j;
    j["selected_n"] = report.selected_n;
    auto& centroids = j["centroids"] = nlohmann::json::array();
    for (std::size_t c = 0; c < report.centroids.rows(); ++c) {
        centroids.push_back(std::vector<double>(report.centroids.row(c).begin(), report.centroids.row(c).end()));
    }
    auto& per_k = j["per_k"] = nlohmann::json::array();
    for (const auto& row : report.per_k) {
        per_k.push_back({{"k", row.k}, {"sse", row.sse}, {"silhouette", row.silhouette}});
    }
    out << j.dump(2) << '\n';
}

} // namespace osnids
