#include "osnids/flows.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

#include "osnids/csv.hpp"
#include "osnids/error.hpp"

namespace osnids {
namespace {

FiveTuple canonical(const FiveTuple& t) { return std::min(t, t.reversed()); }

std::optional<Protocol> parse_protocol(std::string_view text) {
    if (text == "6" || text == "TCP" || text == "tcp") {
        return Protocol::Tcp;
    }
    if (text == "17" || text == "UDP" || text == "udp") {
        return Protocol::Udp;
    }
    return std::nullopt;
}

template <class T>
std::optional<T> parse_number(std::string_view text) {
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

} // namespace

FiveTuple five_tuple_of(const RawPacketRecord& packet) {
    return {packet.src_ip, packet.src_port, packet.dst_ip, packet.dst_port, packet.protocol};
}

std::vector<FlowRecord> read_flow_csv(std::istream& in, const FlowColumns& columns) {
    CsvReader reader(in);
    const auto header = reader.next_row();
    if (!header) {
        fail(ErrorCode::BadCsv, "flow table has no header");
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header->size(); ++i) {
        index.emplace(trim((*header)[i]), i);
    }
    auto column = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) {
            fail(ErrorCode::BadCsv, "flow table is missing column '" + name + "'");
        }
        return it->second;
    };
    const std::size_t c_src_ip = column(columns.src_ip);
    const std::size_t c_src_port = column(columns.src_port);
    const std::size_t c_dst_ip = column(columns.dst_ip);
    const std::size_t c_dst_port = column(columns.dst_port);
    const std::size_t c_protocol = column(columns.protocol);
    const std::size_t c_start = column(columns.start_time);
    const std::size_t c_duration = column(columns.duration);
    const std::size_t c_label = column(columns.label);
    const std::size_t width = header->size();

    std::vector<FlowRecord> flows;
    while (auto row = reader.next_row()) {
        const std::size_t line = reader.line_number();
        if (row->size() == 1 && trim((*row)[0]).empty()) {
            continue;
        }
        auto bad = [&](const std::string& what) {
            fail(ErrorCode::BadCsv, "line " + std::to_string(line) + ": " + what);
        };
        if (row->size() != width) {
            bad("expected " + std::to_string(width) + " fields, got " + std::to_string(row->size()));
        }
        auto field = [&](std::size_t c) { return trim((*row)[c]); };

        const auto protocol = parse_protocol(field(c_protocol));
        if (!protocol) {
            continue;
        }
        FlowRecord flow;
        const auto src_ip = parse_ipv4(field(c_src_ip));
        const auto dst_ip = parse_ipv4(field(c_dst_ip));
        const auto src_port = parse_number<std::uint16_t>(field(c_src_port));
        const auto dst_port = parse_number<std::uint16_t>(field(c_dst_port));
        const auto start = parse_number<double>(field(c_start));
        const auto duration = parse_number<double>(field(c_duration));
        if (!src_ip || !dst_ip) {
            bad("invalid IPv4 address");
        }
        if (!src_port || !dst_port) {
            bad("invalid port");
        }
        if (!start || !duration) {
            bad("invalid start time or duration");
        }
        flow.five_tuple = {*src_ip, *src_port, *dst_ip, *dst_port, *protocol};
        flow.start_time = *start;
        flow.duration = *duration * columns.duration_scale;
        flow.label = std::string(field(c_label));
        if (flow.duration < 0.0) {
            bad("negative duration");
        }
        if (flow.label.empty()) {
            bad("empty label");
        }
        flows.push_back(std::move(flow));
    }
    return flows;
}

std::vector<FlowRecord> read_flow_csv(const std::filesystem::path& path, const FlowColumns& columns) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
    }
    return read_flow_csv(in, columns);
}

FlowTable::FlowTable(std::vector<FlowRecord> flows) : flows_(std::move(flows)) {
    keys_.reserve(flows_.size());
    for (const auto& f : flows_) {
        keys_.push_back(canonical(f.five_tuple));
    }
    order_.resize(flows_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
        order_[i] = i;
    }
    std::sort(order_.begin(), order_.end(), [this](std::size_t a, std::size_t b) {
        if (keys_[a] != keys_[b]) {
            return keys_[a] < keys_[b];
        }
        if (flows_[a].start_time != flows_[b].start_time) {
            return flows_[a].start_time < flows_[b].start_time;
        }
        return a < b;
    });
}

std::size_t FlowTable::match(const RawPacketRecord& packet) const {
    const FiveTuple key = canonical(five_tuple_of(packet));
    auto [lo, hi] = std::equal_range(order_.begin(), order_.end(), key, [this](const auto& a, const auto& b) {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, FiveTuple>) {
            return a < keys_[b];
        } else {
            return keys_[a] < b;
        }
    });
    if (lo == hi) {
        return npos;
    }
    const double t = packet.timestamp.as_seconds();
    for (auto it = lo; it != hi; ++it) {
        if (flows_[*it].contains(t)) {
            return *it;
        }
    }
    return *lo;
}

LabelingResult label_packets(std::span<const RawPacketRecord> packets, std::span<const FlowRecord> flows,
                             SampleSet into) {
    if (flows.empty()) {
        fail(ErrorCode::EmptyFlowTable, "no flow records to label against");
    }
    const FlowTable table(std::vector<FlowRecord>(flows.begin(), flows.end()));

    LabelingResult result;
    result.samples = std::move(into);
    result.samples.samples.clear();
    for (const auto& packet : packets) {
        auto features = extract_payload_features(packet);
        if (!features) {
            ++result.report.empty_payload;
            continue;
        }
        // A non-empty payload of zero bytes carries no signal either.
        if (std::all_of(features->begin(), features->end(), [](auto b) { return b == 0; })) {
            ++result.report.empty_payload;
            continue;
        }
        const std::size_t hit = table.match(packet);
        if (hit == FlowTable::npos) {
            ++result.report.unmatched;
            continue;
        }
        LabeledSample sample;
        sample.features = *features;
        sample.label = result.samples.intern_class(table.flows()[hit].label);
        result.samples.samples.push_back(sample);
    }
    return result;
}

} // namespace osnids
