#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "osnids/error.hpp"

namespace osnids {

/// Little-endian fixed-width encoder.
class ByteWriter {
public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        const U bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    void put_bytes(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
    void put_raw(std::string_view text) { bytes_.insert(bytes_.end(), text.begin(), text.end()); }
    void put_doubles(std::span<const double> values) {
        put<std::uint64_t>(values.size());
        for (double v : values) {
            put(v);
        }
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Little-endian decoder; running past the end raises `code`.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes, ErrorCode code = ErrorCode::CountMismatch)
        : bytes_(bytes), code_(code) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        need(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }
    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        need(n);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    std::vector<double> get_doubles() {
        const auto n = get<std::uint64_t>();
        if (n > remaining() / 8) {
            fail(code_, "declared vector length exceeds the remaining data");
        }
        std::vector<double> out(n);
        for (auto& v : out) {
            v = get<double>();
        }
        return out;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            fail(code_, "unexpected end of data");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    ErrorCode code_;
};

} // namespace osnids
