#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "osnids/image.hpp"
#include "osnids/random.hpp"

namespace osnids {

enum class ScorerKind { LogisticRegression, SmallConvNet };

std::string_view to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(std::string_view name);

/// One training example: a normalized tensor, a {0,1} target and a sample
/// weight.
struct Example {
    std::span<const double> input;
    double target = 0.0;
    double weight = 1.0;
};

/// Differentiable binary models behind BinaryScorer. Parameters are a flat
/// vector whose layout is fixed per kind:
///
///  LogisticRegression: [w_0 .. w_{D-1}, bias], D = geometry.size().
///
///  SmallConvNet: conv 3x3 (C->8, same padding) + ReLU, conv 3x3 (8->16,
///  same padding) + ReLU, 2x2 max-pool (floor), dense -> 1 logit.
///  Blocks in order: conv1 weights [8][C][3][3], conv1 bias [8],
///  conv2 weights [16][8][3][3], conv2 bias [16], dense weights
///  [16][R/2][W/2], dense bias.
namespace model {

std::size_t parameter_count(ScorerKind kind, const ImageGeometry& geometry);

std::vector<double> initial_parameters(ScorerKind kind, const ImageGeometry& geometry, Rng& rng);

/// Pre-sigmoid output.
double logit(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params,
             std::span<const double> input);

/// Mean over the batch of weight * cross-entropy, plus l2/2 * ||w||^2 over
/// non-bias parameters. Writes the gradient into `grad` (overwritten).
double loss_and_gradient(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params,
                         std::span<const Example> batch, double l2, std::span<double> grad);

/// Same objective without the gradient.
double loss(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params,
            std::span<const Example> batch, double l2);

/// Piecewise-linear regime of the forward pass: ReLU signs then max-pool
/// winners, per input. Empty for the logistic kind, which is smooth.
std::vector<std::size_t> activation_pattern(ScorerKind kind, const ImageGeometry& geometry,
                                            std::span<const double> params, std::span<const double> input);

/// Mask with 1 for parameters that receive the L2 penalty.
std::vector<bool> regularized_mask(ScorerKind kind, const ImageGeometry& geometry);

} // namespace model

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace osnids
