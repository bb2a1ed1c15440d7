#include "chanfee/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "chanfee/rng.hpp"

namespace chanfee {

namespace {

constexpr std::array<const char*, 8> kFields = {"source_id", "target_id", "channel_id", "capacity",
                                                "base_fee",  "fee_rate",  "min_htlc",   "last_update"};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::int64_t parse_int(std::string_view text, std::size_t line, const char* field) {
    std::int64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw MalformedRecord(line, std::string("field '") + field + "' is not an integer");
    }
    if (value < 0) throw MalformedRecord(line, std::string("field '") + field + "' is negative");
    return value;
}

double parse_real(std::string_view text, std::size_t line, const char* field) {
    double value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw MalformedRecord(line, std::string("field '") + field + "' is not a number");
    }
    if (value < 0) throw MalformedRecord(line, std::string("field '") + field + "' is negative");
    return value;
}

void check_record(const ChannelRecord& r, std::size_t line) {
    if (r.source_id.empty() || r.target_id.empty()) throw MalformedRecord(line, "empty node id");
    if (r.channel_id.empty()) throw MalformedRecord(line, "empty channel id");
    if (r.source_id == r.target_id) throw MalformedRecord(line, "channel loops on a single node");
    if (r.capacity <= 0) throw MalformedRecord(line, "capacity must be positive");
}

ChannelRecord record_from_fields(std::span<const std::string_view> f, std::size_t line) {
    ChannelRecord r;
    r.source_id = std::string(f[0]);
    r.target_id = std::string(f[1]);
    r.channel_id = std::string(f[2]);
    r.capacity = parse_int(f[3], line, kFields[3]);
    r.base_fee = parse_int(f[4], line, kFields[4]);
    r.fee_rate = parse_real(f[5], line, kFields[5]);
    r.min_htlc = parse_int(f[6], line, kFields[6]);
    r.last_update = parse_int(f[7], line, kFields[7]);
    check_record(r, line);
    return r;
}

// Accepts JSON numbers or strings.
std::string json_text(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw MalformedRecord(line, std::string("missing field '") + key + "'");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
    if (it->is_number()) {
        std::ostringstream os;
        os << std::setprecision(17) << it->get<double>();
        return os.str();
    }
    throw MalformedRecord(line, std::string("field '") + key + "' has wrong type");
}

ChannelRecord record_from_json(std::string_view text, std::size_t line) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw MalformedRecord(line, "expected a JSON object");
    std::array<std::string, 8> values;
    std::array<std::string_view, 8> views;
    for (std::size_t i = 0; i < kFields.size(); ++i) {
        values[i] = json_text(obj, kFields[i], line);
        views[i] = values[i];
    }
    return record_from_fields(views, line);
}

std::string join_ids(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += '+';
        out += id;
    }
    return out;
}

void apply_half_half(PaymentChannel& c) {
    c.balance[1] = c.capacity / 2;
    c.balance[0] = c.capacity - c.balance[1];
}

}  // namespace

std::vector<ChannelRecord> parse_snapshot(std::istream& in) {
    std::vector<ChannelRecord> records;
    std::string raw;
    std::size_t line = 0;
    // Column permutation from a CSV header; identity when there is none.
    std::array<std::size_t, 8> column{0, 1, 2, 3, 4, 5, 6, 7};
    bool seen_content = false;
    while (std::getline(in, raw)) {
        ++line;
        const auto text = trim(raw);
        if (text.empty() || text.front() == '#') continue;
        if (text.front() == '{') {
            records.push_back(record_from_json(text, line));
            seen_content = true;
            continue;
        }
        const auto fields = split_csv(text);
        const bool all_names = std::all_of(fields.begin(), fields.end(), [](std::string_view f) {
            return std::find(kFields.begin(), kFields.end(), f) != kFields.end();
        });
        if (!seen_content && all_names) {
            if (fields.size() != kFields.size()) throw MalformedRecord(line, "header must name exactly 8 columns");
            for (std::size_t i = 0; i < kFields.size(); ++i) {
                const auto it = std::find(fields.begin(), fields.end(), kFields[i]);
                if (it == fields.end()) throw MalformedRecord(line, std::string("header lacks '") + kFields[i] + "'");
                column[i] = static_cast<std::size_t>(it - fields.begin());
            }
            seen_content = true;
            continue;
        }
        seen_content = true;
        if (fields.size() != kFields.size()) {
            throw MalformedRecord(line, "expected 8 fields, found " + std::to_string(fields.size()));
        }
        std::array<std::string_view, 8> ordered;
        for (std::size_t i = 0; i < ordered.size(); ++i) ordered[i] = fields[column[i]];
        records.push_back(record_from_fields(ordered, line));
    }
    if (records.empty()) throw EmptySnapshot();
    return records;
}

std::vector<ChannelRecord> parse_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open snapshot '" + path.string() + "'");
    return parse_snapshot(in);
}

MerchantSet parse_merchants(std::istream& in, const std::unordered_set<NodeId>& known_nodes) {
    MerchantSet out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto text = trim(raw);
        if (text.empty() || text.front() == '#') continue;
        if (text.find_first_of(" \t,") != std::string_view::npos) {
            throw MalformedLine(line, "expected a single node id");
        }
        out.ids.emplace(text);
    }
    if (!known_nodes.empty()) {
        out.unknown = static_cast<std::size_t>(
            std::count_if(out.ids.begin(), out.ids.end(), [&](const NodeId& id) { return !known_nodes.contains(id); }));
    }
    return out;
}

MerchantSet parse_merchants(const std::filesystem::path& path, const std::unordered_set<NodeId>& known_nodes) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open merchants file '" + path.string() + "'");
    return parse_merchants(in, known_nodes);
}

std::unordered_set<NodeId> node_ids(std::span<const ChannelRecord> records) {
    std::unordered_set<NodeId> ids;
    for (const auto& r : records) {
        ids.insert(r.source_id);
        ids.insert(r.target_id);
    }
    return ids;
}

std::vector<PaymentChannel> aggregate_channels(std::span<const ChannelRecord> records) {
    struct Direction {
        double rate_sum = 0;
        Msat base_sum = 0;
        std::size_t count = 0;
    };
    struct Pair {
        std::map<std::string, std::int64_t> capacity_by_id;  // first capacity seen per channel id
        std::array<Direction, 2> dir;
        Msat min_htlc = std::numeric_limits<Msat>::max();
        std::int64_t last_update = 0;
    };
    std::map<std::pair<NodeId, NodeId>, Pair> pairs;
    for (const auto& r : records) {
        const bool forward = r.source_id < r.target_id;
        auto key = forward ? std::pair{r.source_id, r.target_id} : std::pair{r.target_id, r.source_id};
        auto& p = pairs[std::move(key)];
        p.capacity_by_id.emplace(r.channel_id, r.capacity);
        auto& d = p.dir[forward ? 0 : 1];
        d.rate_sum += r.fee_rate;
        d.base_sum += r.base_fee;
        ++d.count;
        p.min_htlc = std::min(p.min_htlc, r.min_htlc);
        p.last_update = std::max(p.last_update, r.last_update);
    }

    std::vector<PaymentChannel> out;
    out.reserve(pairs.size());
    for (const auto& [key, p] : pairs) {
        PaymentChannel c;
        c.endpoints = {key.first, key.second};
        std::vector<std::string> ids;
        for (const auto& [id, cap] : p.capacity_by_id) {
            c.capacity += cap * kMsatPerSat;
            ids.push_back(id);
        }
        c.channel_id = join_ids(std::move(ids));
        for (int side = 0; side < 2; ++side) {
            const auto& d = p.dir[side].count > 0 ? p.dir[side] : p.dir[1 - side];
            const auto n = static_cast<Msat>(d.count);
            c.policy[side].fee_rate = d.rate_sum / static_cast<double>(d.count);
            c.policy[side].base_fee = (2 * d.base_sum + n) / (2 * n);  // mean, half-up
        }
        c.min_htlc = p.min_htlc;
        c.last_update = p.last_update;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<PaymentChannel> init_balances(std::vector<PaymentChannel> channels, const BalanceInitMode& mode) {
    if (std::holds_alternative<HalfHalf>(mode)) {
        for (auto& c : channels) apply_half_half(c);
    } else if (const auto* uniform = std::get_if<UniformRandom>(&mode)) {
        Rng rng(uniform->seed);
        for (auto& c : channels) {
            c.balance[0] = static_cast<Msat>(rng.below(static_cast<std::uint64_t>(c.capacity) + 1));
            c.balance[1] = c.capacity - c.balance[0];
        }
    } else {
        const auto& manual = std::get<Manual>(mode);
        std::map<std::pair<NodeId, NodeId>, std::size_t> index;
        for (std::size_t i = 0; i < channels.size(); ++i) {
            apply_half_half(channels[i]);
            index.emplace(std::pair{channels[i].endpoints[0], channels[i].endpoints[1]}, i);
        }
        for (const auto& [key, values] : manual.balances) {
            const bool forward = key.first < key.second;
            const auto it = index.find(forward ? key : std::pair{key.second, key.first});
            if (it == index.end()) {
                throw ManualSumMismatch("no channel between '" + key.first + "' and '" + key.second + "'");
            }
            auto& c = channels[it->second];
            const std::array<Msat, 2> b = forward ? values : std::array<Msat, 2>{values[1], values[0]};
            if (b[0] < 0 || b[1] < 0 || b[0] + b[1] != c.capacity) {
                throw ManualSumMismatch("balances for '" + key.first + "'-'" + key.second + "' do not sum to capacity " +
                                        std::to_string(c.capacity));
            }
            c.balance = b;
        }
    }
    return channels;
}

std::vector<ChannelRecord> to_records(std::span<const PaymentChannel> channels) {
    std::vector<ChannelRecord> out;
    out.reserve(2 * channels.size());
    for (const auto& c : channels) {
        for (int side = 0; side < 2; ++side) {
            ChannelRecord r;
            r.source_id = c.endpoints[side];
            r.target_id = c.endpoints[1 - side];
            r.channel_id = c.channel_id;
            r.capacity = c.capacity / kMsatPerSat;
            r.base_fee = c.policy[side].base_fee;
            r.fee_rate = c.policy[side].fee_rate;
            r.min_htlc = c.min_htlc;
            r.last_update = c.last_update;
            out.push_back(std::move(r));
        }
    }
    return out;
}

void write_snapshot_csv(std::ostream& out, std::span<const ChannelRecord> records) {
    for (std::size_t i = 0; i < kFields.size(); ++i) out << (i ? "," : "") << kFields[i];
    out << '\n';
    for (const auto& r : records) {
        std::array<char, 32> rate{};
        const auto res = std::to_chars(rate.data(), rate.data() + rate.size(), r.fee_rate);
        out << r.source_id << ',' << r.target_id << ',' << r.channel_id << ',' << r.capacity << ',' << r.base_fee << ','
            << std::string_view(rate.data(), static_cast<std::size_t>(res.ptr - rate.data())) << ',' << r.min_htlc
            << ',' << r.last_update << '\n';
    }
}

}  // namespace chanfee
