#pragma once

#include <cstdint>
#include <vector>

#include "osnids/matrix.hpp"

namespace osnids {

struct EmbeddingParams {
    double perplexity = 30.0;
    int iterations = 1000;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double learning_rate = 200.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    std::uint64_t seed = 0;
};

struct KlCheckpoint {
    int iteration = 0;
    double kl = 0.0;
};

struct TsneResult {
    Matrix embedding;
    /// KL(P || Q) against the unexaggerated P, sampled every 50 iterations
    /// from the end of early exaggeration onward.
    std::vector<KlCheckpoint> kl_trace;
};

/// Exact O(n^2) t-SNE into two dimensions.
TsneResult tsne(const Matrix& x, const EmbeddingParams& params);

inline Matrix tsne_embed(const Matrix& x, const EmbeddingParams& params) { return tsne(x, params).embedding; }

/// Symmetric joint input affinities (sum to 1) with per-point Gaussian
/// bandwidths tuned by bisection to the requested perplexity.
Matrix joint_affinities(const Matrix& x, double perplexity);

} // namespace osnids
