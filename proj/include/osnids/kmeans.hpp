#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "osnids/matrix.hpp"
#include "osnids/sample.hpp"

namespace osnids {

struct KMeansResult {
    std::vector<int> assignments;
    Matrix centroids;
    double sse = 0.0;
    /// SSE after each assignment step of the winning restart.
    std::vector<double> sse_trace;
};

inline constexpr int kMaxLloydIterations = 300;

/// Lloyd iterations from the given initial centroids until the assignment
/// set stops changing or the iteration cap is hit. An emptied cluster takes
/// over the point farthest from its current centroid.
KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iterations = kMaxLloydIterations);

/// k-means++ seeding.
Matrix kmeans_plus_plus(const Matrix& points, int k, std::uint64_t seed);

/// Best-of-restarts Lloyd with k-means++ seeding.
KMeansResult kmeans(const Matrix& points, int k, int restarts, std::uint64_t seed);

/// Mean silhouette; points in singleton clusters contribute 0.
double silhouette_score(const Matrix& points, std::span<const int> assignments);

struct ClusterCountScore {
    int k = 0;
    double sse = 0.0;
    double silhouette = 0.0;
};

struct ClusteringReport {
    std::vector<ClusterCountScore> per_k;
    int selected_n = 0;
    Matrix centroids;
    std::vector<int> assignments;
};

struct SelectionParams {
    int k_min = 2;
    int k_max = 15;
    int restarts = 10;
    std::uint64_t seed = 0;
};

/// Runs k-means for every k in [k_min, k_max] and selects the silhouette
/// maximum. The SSE curve is kept for elbow inspection.
ClusteringReport select_cluster_count(const Matrix& points, const SelectionParams& params);

/// Sets cluster_id on each sample from the parallel assignment vector.
/// Only benign samples may be annotated.
std::vector<LabeledSample> annotate_clusters(std::vector<LabeledSample> samples, std::span<const int> assignments);

void write_report_csv(std::ostream& out, const ClusteringReport& report);
void write_report_json(std::ostream& out, const ClusteringReport& report);

} // namespace osnids
