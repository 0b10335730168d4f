#include "osnids/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "osnids/error.hpp"
#include "osnids/random.hpp"

namespace osnids {
namespace {

constexpr double kEntropyTolerance = 1e-5;
constexpr int kMaxBisectionSteps = 50;
constexpr double kFloor = 1e-12;
constexpr double kMinGain = 0.01;

void check_input(const Matrix& x, double perplexity) {
    const std::size_t n = x.rows();
    if (n < 4) {
        fail(ErrorCode::TooFewPoints, "t-SNE needs at least 4 points, got " + std::to_string(n));
    }
    if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n)) {
        fail(ErrorCode::PerplexityTooLarge,
             "perplexity " + std::to_string(perplexity) + " must lie in (0, " + std::to_string(n) + ")");
    }
    for (double v : x.data()) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteInput, "t-SNE input contains a non-finite entry");
        }
    }
}

// Fills row i of the conditional affinities p_{j|i}.
void conditional_row(std::span<const double> dist, std::size_t i, double log_perplexity, std::span<double> out) {
    const std::size_t n = dist.size();
    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        if (j != i) {
            d_min = std::min(d_min, dist[j]);
        }
    }
    // Entropy is invariant to shifting distances, which keeps exp() in range.
    double beta = 1.0;
    double beta_lo = 0.0;
    double beta_hi = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kMaxBisectionSteps; ++step) {
        double sum = 0.0;
        double weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                out[j] = 0.0;
                continue;
            }
            const double shifted = dist[j] - d_min;
            out[j] = std::exp(-beta * shifted);
            sum += out[j];
            weighted += shifted * out[j];
        }
        const double entropy = std::log(sum) + beta * weighted / sum;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] /= sum;
        }
        const double diff = entropy - log_perplexity;
        if (std::abs(diff) < kEntropyTolerance) {
            break;
        }
        if (diff > 0.0) {
            beta_lo = beta;
            beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
        } else {
            beta_hi = beta;
            beta = (beta + beta_lo) / 2.0;
        }
    }
}

double kl_divergence(const Matrix& p, const Matrix& num, double num_sum) {
    const std::size_t n = p.rows();
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            const double pij = std::max(p(i, j), kFloor);
            const double qij = std::max(num(i, j) / num_sum, kFloor);
            kl += pij * std::log(pij / qij);
        }
    }
    return kl;
}

} // namespace

Matrix joint_affinities(const Matrix& x, double perplexity) {
    check_input(x, perplexity);
    const std::size_t n = x.rows();
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = squared_distance(x.row(i), x.row(j));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    Matrix cond(n, n);
    const double log_perplexity = std::log(perplexity);
    for (std::size_t i = 0; i < n; ++i) {
        conditional_row(dist.row(i), i, log_perplexity, cond.row(i));
    }
    Matrix p(n, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) = cond(i, j) + cond(j, i);
            total += p(i, j);
        }
    }
    for (double& v : p.data()) {
        v = std::max(v / total, kFloor);
    }
    for (std::size_t i = 0; i < n; ++i) {
        p(i, i) = 0.0;
    }
    return p;
}

TsneResult tsne(const Matrix& x, const EmbeddingParams& params) {
    check_input(x, params.perplexity);
    if (params.iterations < params.exaggeration_iterations || params.exaggeration_iterations < 0) {
        fail(ErrorCode::ValueOutOfRange, "t-SNE iterations must cover the early-exaggeration phase");
    }
    const std::size_t n = x.rows();
    const Matrix p = joint_affinities(x, params.perplexity);

    Rng rng = make_rng(params.seed, 0x74736e65);
    Matrix y(n, 2);
    for (double& v : y.data()) {
        v = 1e-4 * standard_normal(rng);
    }
    Matrix update(n, 2);
    Matrix gains(n, 2, 1.0);
    Matrix grad(n, 2);
    Matrix num(n, n);

    TsneResult result;
    for (int iter = 0; iter < params.iterations; ++iter) {
        const bool exaggerating = iter < params.exaggeration_iterations;
        const double exaggeration = exaggerating ? params.early_exaggeration : 1.0;
        const double momentum = exaggerating ? params.initial_momentum : params.final_momentum;

        double num_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = y(i, 0) - y(j, 0);
                const double dy = y(i, 1) - y(j, 1);
                const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num(i, j) = v;
                num(j, i) = v;
                num_sum += 2.0 * v;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0.0;
            double gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) {
                    continue;
                }
                const double q = std::max(num(i, j) / num_sum, kFloor);
                const double mult = (exaggeration * p(i, j) - q) * num(i, j);
                gx += mult * (y(i, 0) - y(j, 0));
                gy += mult * (y(i, 1) - y(j, 1));
            }
            grad(i, 0) = 4.0 * gx;
            grad(i, 1) = 4.0 * gy;
        }

        for (std::size_t k = 0; k < n * 2; ++k) {
            double& g = gains.data()[k];
            double& u = update.data()[k];
            const double dk = grad.data()[k];
            g = ((dk > 0.0) != (u > 0.0)) ? g + 0.2 : g * 0.8;
            g = std::max(g, kMinGain);
            u = momentum * u - params.learning_rate * g * dk;
            y.data()[k] += u;
        }
        for (std::size_t c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mean += y(i, c);
            }
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                y(i, c) -= mean;
            }
        }

        const int done = iter + 1;
        if (done >= params.exaggeration_iterations && done % 50 == 0) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    const double dx = y(i, 0) - y(j, 0);
                    const double dy = y(i, 1) - y(j, 1);
                    const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                    num(i, j) = v;
                    num(j, i) = v;
                    sum += 2.0 * v;
                }
            }
            result.kl_trace.push_back({done, kl_divergence(p, num, sum)});
        }
    }
    for (double v : y.data()) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteInput, "t-SNE diverged to a non-finite embedding");
        }
    }
    result.embedding = std::move(y);
    return result;
}

} // namespace osnids
