#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "osnids/pcap.hpp"
#include "osnids/sample.hpp"

namespace osnids {

struct FiveTuple {
    Ipv4 src_ip = 0;
    std::uint16_t src_port = 0;
    Ipv4 dst_ip = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::Tcp;

    FiveTuple reversed() const { return {dst_ip, dst_port, src_ip, src_port, protocol}; }
    friend auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

FiveTuple five_tuple_of(const RawPacketRecord& packet);

struct FlowRecord {
    FiveTuple five_tuple;
    double start_time = 0.0;
    double duration = 0.0;
    std::string label;

    bool contains(double t) const { return t >= start_time && t <= start_time + duration; }
};

/// Binds the logical flow columns to the header names of a particular
/// CICFlowMeter release.
struct FlowColumns {
    std::string src_ip = "src_ip";
    std::string src_port = "src_port";
    std::string dst_ip = "dst_ip";
    std::string dst_port = "dst_port";
    std::string protocol = "protocol";
    std::string start_time = "start_time";
    std::string duration = "duration";
    std::string label = "label";
    /// Multiplier applied to the duration column to get seconds
    /// (CICFlowMeter reports microseconds).
    double duration_scale = 1.0;
};

/// Parses a flow table. Rows whose protocol is neither TCP nor UDP are
/// skipped; malformed rows raise BadCsv with the line number.
std::vector<FlowRecord> read_flow_csv(std::istream& in, const FlowColumns& columns = {});
std::vector<FlowRecord> read_flow_csv(const std::filesystem::path& path, const FlowColumns& columns = {});

struct UnmatchedReport {
    std::size_t unmatched = 0;
    std::size_t empty_payload = 0;

    std::size_t excluded() const { return unmatched + empty_payload; }
};

struct LabelingResult {
    SampleSet samples;
    UnmatchedReport report;
};

/// Index of the flow a packet joins to, or npos. Matching is bidirectional;
/// among several candidates a flow whose time window contains the packet
/// wins, then the earliest start time, then table order.
class FlowTable {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit FlowTable(std::vector<FlowRecord> flows);

    std::size_t match(const RawPacketRecord& packet) const;
    const std::vector<FlowRecord>& flows() const { return flows_; }

private:
    std::vector<FlowRecord> flows_;
    // Flow indices sorted by (canonical five-tuple, start time, index).
    std::vector<std::size_t> order_;
    std::vector<FiveTuple> keys_;
};

/// Joins packets to flows and emits labeled samples in packet order.
/// `into` supplies the class table to extend; new labels are appended in
/// first-seen order.
LabelingResult label_packets(std::span<const RawPacketRecord> packets, std::span<const FlowRecord> flows,
                             SampleSet into = {});

} // namespace osnids
