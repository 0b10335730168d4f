#include "osnids/scorer.hpp"

#include <algorithm>

#include "osnids/error.hpp"

namespace osnids {

std::string_view to_string(ScorerKind kind) {
    switch (kind) {
    case ScorerKind::LogisticRegression: return "logistic";
    case ScorerKind::SmallConvNet: return "convnet";
    }
    return "?";
}

ScorerKind scorer_kind_from_string(std::string_view name) {
    if (name == "logistic") {
        return ScorerKind::LogisticRegression;
    }
    if (name == "convnet") {
        return ScorerKind::SmallConvNet;
    }
    fail(ErrorCode::ConfigInvalid, "unknown scorer kind '" + std::string(name) + "'");
}

namespace model {
namespace {

constexpr std::size_t kConv1Out = 8;
constexpr std::size_t kConv2Out = 16;
constexpr std::size_t kKernel = 3;

// Cross-entropy from a logit, numerically stable: softplus(z) - y z.
double cross_entropy(double z, double y) {
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - y * z;
}

struct ConvLayout {
    std::size_t rows, cols, in_ch;
    std::size_t pool_rows, pool_cols;
    std::size_t w1, b1, w2, b2, wd, bd, total;

    explicit ConvLayout(const ImageGeometry& g)
        : rows(g.rows), cols(g.cols), in_ch(g.channels), pool_rows(g.rows / 2), pool_cols(g.cols / 2) {
        w1 = 0;
        b1 = w1 + kConv1Out * in_ch * kKernel * kKernel;
        w2 = b1 + kConv1Out;
        b2 = w2 + kConv2Out * kConv1Out * kKernel * kKernel;
        wd = b2 + kConv2Out;
        bd = wd + kConv2Out * pool_rows * pool_cols;
        total = bd + 1;
    }
};

// Activations of one forward pass, kept for backprop.
struct ConvActivations {
    std::vector<double> pre1, act1, pre2, act2, pooled;
    std::vector<std::size_t> argmax;
    double z = 0.0;
};

// Same-padded 3x3 convolution. Input and output are channel-major planes
// [ch][r][c]; the first layer reads the channels-last image instead.
template <class InputAt>
void convolve(std::size_t rows, std::size_t cols, std::size_t in_ch, std::size_t out_ch, const double* weights,
              const double* bias, InputAt input_at, std::vector<double>& out) {
    out.assign(out_ch * rows * cols, 0.0);
    for (std::size_t o = 0; o < out_ch; ++o) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                double s = bias[o];
                for (std::size_t k = 0; k < in_ch; ++k) {
                    const double* w = weights + ((o * in_ch + k) * kKernel) * kKernel;
                    for (std::size_t dr = 0; dr < kKernel; ++dr) {
                        const std::ptrdiff_t rr = std::ptrdiff_t(r + dr) - 1;
                        if (rr < 0 || rr >= std::ptrdiff_t(rows)) {
                            continue;
                        }
                        for (std::size_t dc = 0; dc < kKernel; ++dc) {
                            const std::ptrdiff_t cc = std::ptrdiff_t(c + dc) - 1;
                            if (cc < 0 || cc >= std::ptrdiff_t(cols)) {
                                continue;
                            }
                            s += w[dr * kKernel + dc] * input_at(k, std::size_t(rr), std::size_t(cc));
                        }
                    }
                }
                out[(o * rows + r) * cols + c] = s;
            }
        }
    }
}

void conv_forward(const ConvLayout& L, std::span<const double> p, std::span<const double> input,
                  ConvActivations& a) {
    const std::size_t plane = L.rows * L.cols;
    convolve(L.rows, L.cols, L.in_ch, kConv1Out, p.data() + L.w1, p.data() + L.b1,
             [&](std::size_t k, std::size_t r, std::size_t c) { return input[(r * L.cols + c) * L.in_ch + k]; },
             a.pre1);
    a.act1.resize(a.pre1.size());
    std::transform(a.pre1.begin(), a.pre1.end(), a.act1.begin(), [](double v) { return std::max(v, 0.0); });
    convolve(L.rows, L.cols, kConv1Out, kConv2Out, p.data() + L.w2, p.data() + L.b2,
             [&](std::size_t k, std::size_t r, std::size_t c) { return a.act1[k * plane + r * L.cols + c]; },
             a.pre2);
    a.act2.resize(a.pre2.size());
    std::transform(a.pre2.begin(), a.pre2.end(), a.act2.begin(), [](double v) { return std::max(v, 0.0); });

    const std::size_t pooled = kConv2Out * L.pool_rows * L.pool_cols;
    a.pooled.assign(pooled, 0.0);
    a.argmax.assign(pooled, 0);
    double z = p[L.bd];
    for (std::size_t o = 0; o < kConv2Out; ++o) {
        for (std::size_t i = 0; i < L.pool_rows; ++i) {
            for (std::size_t j = 0; j < L.pool_cols; ++j) {
                std::size_t best = o * plane + (2 * i) * L.cols + 2 * j;
                for (std::size_t di = 0; di < 2; ++di) {
                    for (std::size_t dj = 0; dj < 2; ++dj) {
                        const std::size_t idx = o * plane + (2 * i + di) * L.cols + (2 * j + dj);
                        if (a.act2[idx] > a.act2[best]) {
                            best = idx;
                        }
                    }
                }
                const std::size_t q = (o * L.pool_rows + i) * L.pool_cols + j;
                a.pooled[q] = a.act2[best];
                a.argmax[q] = best;
                z += p[L.wd + q] * a.pooled[q];
            }
        }
    }
    a.z = z;
}

void conv_backward(const ConvLayout& L, std::span<const double> p, std::span<const double> input,
                   const ConvActivations& a, double dz, std::span<double> grad) {
    const std::size_t plane = L.rows * L.cols;
    grad[L.bd] += dz;
    std::vector<double> d_act2(a.act2.size(), 0.0);
    for (std::size_t q = 0; q < a.pooled.size(); ++q) {
        grad[L.wd + q] += dz * a.pooled[q];
        d_act2[a.argmax[q]] += dz * p[L.wd + q];
    }
    std::vector<double> d_pre2(d_act2.size());
    for (std::size_t i = 0; i < d_pre2.size(); ++i) {
        d_pre2[i] = a.pre2[i] > 0.0 ? d_act2[i] : 0.0;
    }

    std::vector<double> d_act1(a.act1.size(), 0.0);
    for (std::size_t o = 0; o < kConv2Out; ++o) {
        for (std::size_t r = 0; r < L.rows; ++r) {
            for (std::size_t c = 0; c < L.cols; ++c) {
                const double g = d_pre2[o * plane + r * L.cols + c];
                if (g == 0.0) {
                    continue;
                }
                grad[L.b2 + o] += g;
                for (std::size_t k = 0; k < kConv1Out; ++k) {
                    const std::size_t wbase = L.w2 + ((o * kConv1Out + k) * kKernel) * kKernel;
                    for (std::size_t dr = 0; dr < kKernel; ++dr) {
                        const std::ptrdiff_t rr = std::ptrdiff_t(r + dr) - 1;
                        if (rr < 0 || rr >= std::ptrdiff_t(L.rows)) {
                            continue;
                        }
                        for (std::size_t dc = 0; dc < kKernel; ++dc) {
                            const std::ptrdiff_t cc = std::ptrdiff_t(c + dc) - 1;
                            if (cc < 0 || cc >= std::ptrdiff_t(L.cols)) {
                                continue;
                            }
                            const std::size_t in_idx = k * plane + std::size_t(rr) * L.cols + std::size_t(cc);
                            grad[wbase + dr * kKernel + dc] += g * a.act1[in_idx];
                            d_act1[in_idx] += g * p[wbase + dr * kKernel + dc];
                        }
                    }
                }
            }
        }
    }

    for (std::size_t o = 0; o < kConv1Out; ++o) {
        for (std::size_t r = 0; r < L.rows; ++r) {
            for (std::size_t c = 0; c < L.cols; ++c) {
                const std::size_t idx = o * plane + r * L.cols + c;
                if (a.pre1[idx] <= 0.0 || d_act1[idx] == 0.0) {
                    continue;
                }
                const double g = d_act1[idx];
                grad[L.b1 + o] += g;
                for (std::size_t k = 0; k < L.in_ch; ++k) {
                    const std::size_t wbase = L.w1 + ((o * L.in_ch + k) * kKernel) * kKernel;
                    for (std::size_t dr = 0; dr < kKernel; ++dr) {
                        const std::ptrdiff_t rr = std::ptrdiff_t(r + dr) - 1;
                        if (rr < 0 || rr >= std::ptrdiff_t(L.rows)) {
                            continue;
                        }
                        for (std::size_t dc = 0; dc < kKernel; ++dc) {
                            const std::ptrdiff_t cc = std::ptrdiff_t(c + dc) - 1;
                            if (cc < 0 || cc >= std::ptrdiff_t(L.cols)) {
                                continue;
                            }
                            grad[wbase + dr * kKernel + dc] +=
                                g * input[(std::size_t(rr) * L.cols + std::size_t(cc)) * L.in_ch + k];
                        }
                    }
                }
            }
        }
    }
}

void check_input(const ImageGeometry& geometry, std::span<const double> params, ScorerKind kind,
                 std::span<const double> input) {
    if (input.size() != geometry.size()) {
        fail(ErrorCode::GeometryMismatch, "input has " + std::to_string(input.size()) + " values, expected " +
                                              std::to_string(geometry.size()));
    }
    if (params.size() != parameter_count(kind, geometry)) {
        fail(ErrorCode::GeometryMismatch, "parameter vector does not match the scorer geometry");
    }
}

} // namespace

std::size_t parameter_count(ScorerKind kind, const ImageGeometry& geometry) {
    if (kind == ScorerKind::LogisticRegression) {
        return geometry.size() + 1;
    }
    return ConvLayout(geometry).total;
}

std::vector<std::size_t> activation_pattern(ScorerKind kind, const ImageGeometry& geometry,
                                            std::span<const double> params, std::span<const double> input) {
    check_input(geometry, params, kind, input);
    std::vector<std::size_t> pattern;
    if (kind == ScorerKind::LogisticRegression) {
        return pattern;
    }
    const ConvLayout L(geometry);
    ConvActivations a;
    conv_forward(L, params, input, a);
    pattern.reserve(a.pre1.size() + a.pre2.size() + a.argmax.size());
    for (double v : a.pre1) {
        pattern.push_back(v > 0.0);
    }
    for (double v : a.pre2) {
        pattern.push_back(v > 0.0);
    }
    pattern.insert(pattern.end(), a.argmax.begin(), a.argmax.end());
    return pattern;
}

std::vector<bool> regularized_mask(ScorerKind kind, const ImageGeometry& geometry) {
    std::vector<bool> mask(parameter_count(kind, geometry), true);
    if (kind == ScorerKind::LogisticRegression) {
        mask.back() = false;
        return mask;
    }
    const ConvLayout L(geometry);
    std::fill(mask.begin() + std::ptrdiff_t(L.b1), mask.begin() + std::ptrdiff_t(L.w2), false);
    std::fill(mask.begin() + std::ptrdiff_t(L.b2), mask.begin() + std::ptrdiff_t(L.wd), false);
    mask[L.bd] = false;
    return mask;
}

std::vector<double> initial_parameters(ScorerKind kind, const ImageGeometry& geometry, Rng& rng) {
    std::vector<double> p(parameter_count(kind, geometry), 0.0);
    if (kind == ScorerKind::LogisticRegression) {
        return p;
    }
    const ConvLayout L(geometry);
    auto he = [&](std::size_t from, std::size_t to, double fan_in, double gain) {
        const double sd = std::sqrt(gain / fan_in);
        for (std::size_t i = from; i < to; ++i) {
            p[i] = sd * standard_normal(rng);
        }
    };
    he(L.w1, L.b1, double(L.in_ch * kKernel * kKernel), 2.0);
    he(L.w2, L.b2, double(kConv1Out * kKernel * kKernel), 2.0);
    he(L.wd, L.bd, double(L.bd - L.wd), 1.0);
    return p;
}

double logit(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params,
             std::span<const double> input) {
    check_input(geometry, params, kind, input);
    if (kind == ScorerKind::LogisticRegression) {
        double z = params.back();
        for (std::size_t i = 0; i < input.size(); ++i) {
            z += params[i] * input[i];
        }
        return z;
    }
    ConvActivations a;
    conv_forward(ConvLayout(geometry), params, input, a);
    return a.z;
}

namespace {

double penalty(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params, double l2,
               std::span<double> grad) {
    if (l2 == 0.0) {
        return 0.0;
    }
    const auto mask = regularized_mask(kind, geometry);
    double s = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (mask[i]) {
            s += params[i] * params[i];
            if (!grad.empty()) {
                grad[i] += l2 * params[i];
            }
        }
    }
    return 0.5 * l2 * s;
}

} // namespace

double loss_and_gradient(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params,
                         std::span<const Example> batch, double l2, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    if (batch.empty()) {
        return penalty(kind, geometry, params, l2, grad);
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    if (kind == ScorerKind::LogisticRegression) {
        const std::size_t d = geometry.size();
        for (const auto& ex : batch) {
            const double z = logit(kind, geometry, params, ex.input);
            total += ex.weight * cross_entropy(z, ex.target);
            const double dz = scale * ex.weight * (sigmoid(z) - ex.target);
            for (std::size_t i = 0; i < d; ++i) {
                grad[i] += dz * ex.input[i];
            }
            grad[d] += dz;
        }
    } else {
        const ConvLayout L(geometry);
        ConvActivations a;
        for (const auto& ex : batch) {
            check_input(geometry, params, kind, ex.input);
            conv_forward(L, params, ex.input, a);
            total += ex.weight * cross_entropy(a.z, ex.target);
            conv_backward(L, params, ex.input, a, scale * ex.weight * (sigmoid(a.z) - ex.target), grad);
        }
    }
    return scale * total + penalty(kind, geometry, params, l2, grad);
}

double loss(ScorerKind kind, const ImageGeometry& geometry, std::span<const double> params,
            std::span<const Example> batch, double l2) {
    double total = 0.0;
    for (const auto& ex : batch) {
        total += ex.weight * cross_entropy(logit(kind, geometry, params, ex.input), ex.target);
    }
    const double mean = batch.empty() ? 0.0 : total / static_cast<double>(batch.size());
    return mean + penalty(kind, geometry, params, l2, {});
}

} // namespace model
} // namespace osnids
