#include "osnids/pcap.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

#include "osnids/error.hpp"

namespace osnids {
namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::size_t kEthernetHeaderSize = 14;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kEtherTypeVlan = 0x8100;

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xFF00) | ((v << 8) & 0xFF0000) | (v << 24);
}

std::uint32_t read_le32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

std::uint16_t read_be16(const std::uint8_t* p) { return std::uint16_t(p[0] << 8 | p[1]); }

std::uint32_t read_be32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 |
           std::uint32_t(p[3]);
}

enum class FrameResult { Emitted, NonIp, NonTcpUdp, Fragment, Malformed };

FrameResult decode_frame(std::span<const std::uint8_t> frame, RawPacketRecord& out) {
    if (frame.size() < kEthernetHeaderSize) {
        return FrameResult::Malformed;
    }
    std::size_t offset = 12;
    std::uint16_t ether_type = read_be16(frame.data() + offset);
    offset += 2;
    while (ether_type == kEtherTypeVlan) {
        if (frame.size() < offset + 4) {
            return FrameResult::Malformed;
        }
        ether_type = read_be16(frame.data() + offset + 2);
        offset += 4;
    }
    if (ether_type != kEtherTypeIpv4) {
        return FrameResult::NonIp;
    }

    const auto ip = frame.subspan(offset);
    if (ip.size() < 20 || (ip[0] >> 4) != 4) {
        return FrameResult::Malformed;
    }
    const std::size_t ihl = std::size_t(ip[0] & 0x0F) * 4;
    const std::size_t total_length = read_be16(ip.data() + 2);
    if (ihl < 20 || total_length < ihl || total_length > ip.size()) {
        return FrameResult::Malformed;
    }
    const std::uint8_t protocol = ip[9];
    if (protocol != static_cast<std::uint8_t>(Protocol::Tcp) &&
        protocol != static_cast<std::uint8_t>(Protocol::Udp)) {
        return FrameResult::NonTcpUdp;
    }
    const std::uint16_t fragment_offset = read_be16(ip.data() + 6) & 0x1FFF;
    if (fragment_offset != 0) {
        return FrameResult::Fragment;
    }

    // Ethernet trailer padding is excluded by honoring the IP total length.
    const auto transport = ip.subspan(ihl, total_length - ihl);
    std::size_t transport_header = 0;
    if (protocol == static_cast<std::uint8_t>(Protocol::Tcp)) {
        if (transport.size() < 20) {
            return FrameResult::Malformed;
        }
        transport_header = std::size_t(transport[12] >> 4) * 4;
        if (transport_header < 20 || transport_header > transport.size()) {
            return FrameResult::Malformed;
        }
    } else {
        if (transport.size() < 8) {
            return FrameResult::Malformed;
        }
        transport_header = 8;
    }

    out.src_ip = read_be32(ip.data() + 12);
    out.dst_ip = read_be32(ip.data() + 16);
    out.src_port = read_be16(transport.data());
    out.dst_port = read_be16(transport.data() + 2);
    out.protocol = static_cast<Protocol>(protocol);
    const auto payload = transport.subspan(transport_header);
    out.payload.assign(payload.begin(), payload.end());
    return FrameResult::Emitted;
}

} // namespace

Capture parse_capture(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kGlobalHeaderSize) {
        fail(ErrorCode::BadMagic, "file shorter than a pcap global header");
    }
    const std::uint32_t raw_magic = read_le32(bytes.data());
    bool swapped = false;
    bool nanos = false;
    if (raw_magic == kMagicMicro || raw_magic == kMagicNano) {
        nanos = raw_magic == kMagicNano;
    } else if (bswap32(raw_magic) == kMagicMicro || bswap32(raw_magic) == kMagicNano) {
        swapped = true;
        nanos = bswap32(raw_magic) == kMagicNano;
    } else {
        fail(ErrorCode::BadMagic, "unrecognized pcap magic");
    }
    auto field32 = [swapped](const std::uint8_t* p) {
        const std::uint32_t v = read_le32(p);
        return swapped ? bswap32(v) : v;
    };

    const std::uint32_t link_type = field32(bytes.data() + 20) & 0x0FFFFFFF;
    if (link_type != kLinkEthernet) {
        fail(ErrorCode::UnsupportedLinkType, "link type " + std::to_string(link_type));
    }

    Capture capture;
    std::size_t pos = kGlobalHeaderSize;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < kRecordHeaderSize) {
            fail(ErrorCode::TruncatedHeader, "partial record header at offset " + std::to_string(pos));
        }
        const std::uint8_t* header = bytes.data() + pos;
        const std::uint32_t ts_sec = field32(header);
        const std::uint32_t ts_frac = field32(header + 4);
        const std::uint32_t incl_len = field32(header + 8);
        pos += kRecordHeaderSize;
        if (bytes.size() - pos < incl_len) {
            fail(ErrorCode::TruncatedHeader, "record at offset " + std::to_string(pos - kRecordHeaderSize) +
                                                 " declares " + std::to_string(incl_len) + " bytes");
        }
        ++capture.stats.frames;

        RawPacketRecord record;
        record.timestamp = {ts_sec, nanos ? ts_frac / 1000 : ts_frac};
        switch (decode_frame(bytes.subspan(pos, incl_len), record)) {
        case FrameResult::Emitted:
            ++capture.stats.emitted;
            capture.packets.push_back(std::move(record));
            break;
        case FrameResult::NonIp: ++capture.stats.non_ip; break;
        case FrameResult::NonTcpUdp: ++capture.stats.non_tcp_udp; break;
        case FrameResult::Fragment: ++capture.stats.fragments; break;
        case FrameResult::Malformed: ++capture.stats.malformed; break;
        }
        pos += incl_len;
    }
    return capture;
}

Capture parse_capture(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::UnreadableFile, "read error on " + path.string());
    }
    return parse_capture(std::span<const std::uint8_t>(bytes));
}

std::optional<PayloadBytes> extract_payload_features(const RawPacketRecord& packet) {
    if (packet.payload.empty()) {
        return std::nullopt;
    }
    PayloadBytes features{};
    const std::size_t n = std::min(packet.payload.size(), kPayloadLength);
    std::copy_n(packet.payload.begin(), n, features.begin());
    return features;
}

std::optional<Ipv4> parse_ipv4(std::string_view text) {
    Ipv4 addr = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        unsigned value = 0;
        auto [next, ec] = std::from_chars(p, end, value);
        if (ec != std::errc() || value > 255 || next == p) {
            return std::nullopt;
        }
        addr = addr << 8 | value;
        p = next;
        if (octet < 3) {
            if (p == end || *p != '.') {
                return std::nullopt;
            }
            ++p;
        }
    }
    if (p != end) {
        return std::nullopt;
    }
    return addr;
}

std::string format_ipv4(Ipv4 addr) {
    return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xFF) + "." +
           std::to_string((addr >> 8) & 0xFF) + "." + std::to_string(addr & 0xFF);
}

} // namespace osnids
