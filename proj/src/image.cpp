#include "osnids/image.hpp"

#include "osnids/error.hpp"

namespace osnids {

FeatureImage to_rgb_image(const PayloadBytes& features) { return FeatureImage(features); }

FeatureImage to_rgb_image(std::span<const int> features) {
    if (features.size() != kPayloadLength) {
        fail(ErrorCode::WrongLength, "expected 1500 features, got " + std::to_string(features.size()));
    }
    PayloadBytes bytes{};
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i] < 0 || features[i] > 255) {
            fail(ErrorCode::ValueOutOfRange,
                 "feature " + std::to_string(i) + " = " + std::to_string(features[i]) + " outside [0, 255]");
        }
        bytes[i] = static_cast<std::uint8_t>(features[i]);
    }
    return FeatureImage(bytes);
}

PayloadBytes from_rgb_image(const FeatureImage& image) { return image.channels(); }

ImageTensor normalize(const FeatureImage& image) {
    ImageTensor tensor{kDefaultGeometry, std::vector<double>(kPayloadLength)};
    const auto& ch = image.channels();
    for (std::size_t i = 0; i < ch.size(); ++i) {
        tensor.values[i] = static_cast<double>(ch[i]) / 255.0;
    }
    return tensor;
}

void write_ppm(std::ostream& out, const FeatureImage& image) {
    out << "P6\n" << kDefaultGeometry.cols << ' ' << kDefaultGeometry.rows << "\n255\n";
    const auto& ch = image.channels();
    out.write(reinterpret_cast<const char*>(ch.data()), static_cast<std::streamsize>(ch.size()));
}

} // namespace osnids
