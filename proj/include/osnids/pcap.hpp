#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "osnids/sample.hpp"

namespace osnids {

enum class Protocol : std::uint8_t { Tcp = 6, Udp = 17 };

struct Timestamp {
    std::int64_t seconds = 0;
    std::uint32_t microseconds = 0;

    double as_seconds() const { return static_cast<double>(seconds) + microseconds * 1e-6; }
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// Host-order IPv4 address.
using Ipv4 = std::uint32_t;

struct RawPacketRecord {
    Timestamp timestamp;
    Ipv4 src_ip = 0;
    Ipv4 dst_ip = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::Tcp;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const RawPacketRecord&, const RawPacketRecord&) = default;
};

struct CaptureStats {
    std::size_t frames = 0;
    std::size_t emitted = 0;
    std::size_t non_ip = 0;
    std::size_t non_tcp_udp = 0;
    std::size_t fragments = 0;
    std::size_t malformed = 0;

    std::size_t skipped() const { return non_ip + non_tcp_udp + fragments + malformed; }
};

struct Capture {
    std::vector<RawPacketRecord> packets;
    CaptureStats stats;
};

/// Decodes a classic pcap stream (either byte order, microsecond or
/// nanosecond timestamps, Ethernet link type). Emits IPv4 TCP/UDP packets in
/// file order; everything else is counted in `stats` and dropped.
Capture parse_capture(std::span<const std::uint8_t> bytes);
Capture parse_capture(const std::filesystem::path& path);

/// Payload bytes truncated/zero-padded to 1500 entries; nullopt for an
/// empty payload.
std::optional<PayloadBytes> extract_payload_features(const RawPacketRecord& packet);

std::optional<Ipv4> parse_ipv4(std::string_view text);
std::string format_ipv4(Ipv4 addr);

} // namespace osnids
