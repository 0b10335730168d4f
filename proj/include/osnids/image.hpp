#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "osnids/sample.hpp"

namespace osnids {

/// Rows x columns x channels of a feature image.
struct ImageGeometry {
    std::size_t rows = 20;
    std::size_t cols = 25;
    std::size_t channels = 3;

    std::size_t size() const { return rows * cols * channels; }
    friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

inline constexpr ImageGeometry kDefaultGeometry{};

/// Serialized RGB image: consecutive byte triples form one pixel, pixels are
/// laid out row-major. Channel (r, c, k) lives at index 3 * (25 * r + c) + k.
class FeatureImage {
public:
    FeatureImage() = default;
    explicit FeatureImage(const PayloadBytes& bytes) : pixels_(bytes) {}

    std::uint8_t at(std::size_t row, std::size_t col, std::size_t channel) const {
        return pixels_[index(row, col, channel)];
    }
    std::uint8_t& at(std::size_t row, std::size_t col, std::size_t channel) {
        return pixels_[index(row, col, channel)];
    }
    const PayloadBytes& channels() const { return pixels_; }

    static constexpr std::size_t index(std::size_t row, std::size_t col, std::size_t channel) {
        return kDefaultGeometry.channels * (kDefaultGeometry.cols * row + col) + channel;
    }

    friend bool operator==(const FeatureImage&, const FeatureImage&) = default;

private:
    PayloadBytes pixels_{};
};

/// Real-valued tensor fed to the learners; values are row-major in
/// (row, col, channel) order.
struct ImageTensor {
    ImageGeometry geometry;
    std::vector<double> values;
};

FeatureImage to_rgb_image(const PayloadBytes& features);

/// Checked overload for untyped input: WrongLength unless exactly 1500
/// entries, ValueOutOfRange for entries outside [0, 255].
FeatureImage to_rgb_image(std::span<const int> features);

PayloadBytes from_rgb_image(const FeatureImage& image);

/// Divides every channel by 255.
ImageTensor normalize(const FeatureImage& image);

inline ImageTensor sample_tensor(const LabeledSample& sample) { return normalize(to_rgb_image(sample.features)); }

/// Binary PPM (P6, 25x20, maxval 255) for eyeballing.
void write_ppm(std::ostream& out, const FeatureImage& image);

} // namespace osnids
