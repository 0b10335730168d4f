#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "osnids/matrix.hpp"

namespace oracles {

// Minimum SSE over every assignment of n points to k labels (k^n cases).
inline double brute_force_sse(const osnids::Matrix& x, int k) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    std::vector<int> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<double> sum(k * d, 0.0);
        std::vector<int> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[label[i]];
            for (std::size_t j = 0; j < d; ++j) {
                sum[label[i] * d + j] += x(i, j);
            }
        }
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = x(i, j) - sum[label[i] * d + j] / count[label[i]];
                sse += diff * diff;
            }
        }
        best = std::min(best, sse);
        std::size_t pos = 0;
        while (pos < n && ++label[pos] == k) {
            label[pos++] = 0;
        }
        if (pos == n) {
            return best;
        }
    }
}

// Mean silhouette straight from the definition; singleton clusters score 0.
inline double silhouette(const osnids::Matrix& x, const std::vector<int>& label) {
    const std::size_t n = x.rows();
    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            s += (x(a, j) - x(b, j)) * (x(a, j) - x(b, j));
        }
        return std::sqrt(s);
    };
    const int k = *std::max_element(label.begin(), label.end()) + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sum(k, 0.0);
        std::vector<int> count(k, 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sum[label[j]] += dist(i, j);
                ++count[label[j]];
            }
        }
        if (count[label[i]] == 0) {
            continue;
        }
        const double a = sum[label[i]] / count[label[i]];
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c != label[i] && count[c] > 0) {
                b = std::min(b, sum[c] / count[c]);
            }
        }
        total += (b - a) / std::max(a, b);
    }
    return total / double(n);
}

// Central difference of f at coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

// Isotropic Gaussian blobs in 2-D with well separated centers.
struct Blobs {
    osnids::Matrix points;
    std::vector<int> truth;
};

inline Blobs gaussian_blobs(int k, int per_blob, double sigma, double min_separation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<std::pair<double, double>> centers;
    while (int(centers.size()) < k) {
        const std::pair<double, double> c{u(rng), u(rng)};
        bool ok = true;
        for (const auto& o : centers) {
            ok = ok && std::hypot(c.first - o.first, c.second - o.second) >= min_separation;
        }
        if (ok) {
            centers.push_back(c);
        }
    }
    Blobs b{osnids::Matrix(std::size_t(k * per_blob), 2), {}};
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < per_blob; ++i) {
            const std::size_t r = std::size_t(c * per_blob + i);
            b.points(r, 0) = centers[c].first + noise(rng);
            b.points(r, 1) = centers[c].second + noise(rng);
            b.truth.push_back(c);
        }
    }
    return b;
}

} // namespace oracles
