#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "osnids/pcap.hpp"
#include "osnids/sample.hpp"

namespace fixtures {

using Bytes = std::vector<std::uint8_t>;

inline void put16be(Bytes& b, std::uint16_t v) {
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v));
}
inline void put32be(Bytes& b, std::uint32_t v) {
    put16be(b, std::uint16_t(v >> 16));
    put16be(b, std::uint16_t(v));
}
inline void put16le(Bytes& b, std::uint16_t v) {
    b.push_back(std::uint8_t(v));
    b.push_back(std::uint8_t(v >> 8));
}
inline void put32le(Bytes& b, std::uint32_t v) {
    put16le(b, std::uint16_t(v));
    put16le(b, std::uint16_t(v >> 16));
}

// Classic little-endian pcap writer with Ethernet framing.
class PcapBuilder {
public:
    explicit PcapBuilder(std::uint32_t link_type = 1, std::uint32_t magic = 0xa1b2c3d4) {
        put32le(bytes_, magic);
        put16le(bytes_, 2);
        put16le(bytes_, 4);
        put32le(bytes_, 0);
        put32le(bytes_, 0);
        put32le(bytes_, 65535);
        put32le(bytes_, link_type);
    }

    void frame(const Bytes& data, std::uint32_t sec = 0, std::uint32_t usec = 0) {
        put32le(bytes_, sec);
        put32le(bytes_, usec);
        put32le(bytes_, std::uint32_t(data.size()));
        put32le(bytes_, std::uint32_t(data.size()));
        bytes_.insert(bytes_.end(), data.begin(), data.end());
    }

    void tcp(std::uint32_t src, std::uint16_t sport, std::uint32_t dst, std::uint16_t dport, const Bytes& payload,
             std::uint32_t sec = 0, std::uint32_t usec = 0) {
        Bytes l4;
        put16be(l4, sport);
        put16be(l4, dport);
        put32be(l4, 1); // seq
        put32be(l4, 0); // ack
        l4.push_back(0x50); // data offset 5
        l4.push_back(0x18);
        put16be(l4, 8192);
        put16be(l4, 0);
        put16be(l4, 0);
        l4.insert(l4.end(), payload.begin(), payload.end());
        frame(ethernet_ipv4(src, dst, 6, l4), sec, usec);
    }

    void udp(std::uint32_t src, std::uint16_t sport, std::uint32_t dst, std::uint16_t dport, const Bytes& payload,
             std::uint32_t sec = 0, std::uint32_t usec = 0) {
        Bytes l4;
        put16be(l4, sport);
        put16be(l4, dport);
        put16be(l4, std::uint16_t(8 + payload.size()));
        put16be(l4, 0);
        l4.insert(l4.end(), payload.begin(), payload.end());
        frame(ethernet_ipv4(src, dst, 17, l4), sec, usec);
    }

    void arp() {
        Bytes f = ethernet_header(0x0806);
        put16be(f, 1);
        put16be(f, 0x0800);
        f.push_back(6);
        f.push_back(4);
        put16be(f, 1);
        f.resize(f.size() + 20, 0x11);
        frame(f);
    }

    static Bytes ethernet_header(std::uint16_t ethertype) {
        Bytes f = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
        put16be(f, ethertype);
        return f;
    }

    static Bytes ethernet_ipv4(std::uint32_t src, std::uint32_t dst, std::uint8_t proto, const Bytes& l4,
                               std::uint16_t frag = 0) {
        Bytes f = ethernet_header(0x0800);
        f.push_back(0x45);
        f.push_back(0);
        put16be(f, std::uint16_t(20 + l4.size()));
        put16be(f, 0x1234);
        put16be(f, frag);
        f.push_back(64);
        f.push_back(proto);
        put16be(f, 0);
        put32be(f, src);
        put32be(f, dst);
        f.insert(f.end(), l4.begin(), l4.end());
        return f;
    }

    const Bytes& bytes() const { return bytes_; }

private:
    Bytes bytes_;
};

inline Bytes pattern(std::size_t n, std::uint8_t start = 1) {
    Bytes b(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = std::uint8_t(start + i);
    }
    return b;
}

inline osnids::PayloadBytes random_payload(std::mt19937_64& rng) {
    osnids::PayloadBytes p{};
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& v : p) {
        v = std::uint8_t(byte(rng));
    }
    p[0] |= 1; // never all-zero
    return p;
}

// Random sample set with a few classes; benign samples optionally clustered.
inline osnids::SampleSet random_sample_set(std::size_t n, std::uint64_t seed, bool clustered = true) {
    std::mt19937_64 rng(seed);
    osnids::SampleSet set;
    set.intern_class("PortScan");
    set.intern_class("DDoS");
    set.intern_class("Web Attack \xe2\x80\x93 XSS");
    for (std::size_t i = 0; i < n; ++i) {
        osnids::LabeledSample s;
        s.features = random_payload(rng);
        s.label = osnids::ClassId(rng() % set.class_names.size());
        if (clustered && s.is_benign() && rng() % 3 != 0) {
            s.cluster_id = osnids::ClusterId(rng() % 5);
        }
        set.samples.push_back(s);
    }
    return set;
}

// Unique scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    auto dir = std::filesystem::temp_directory_path() /
               ("osnids_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fixtures
