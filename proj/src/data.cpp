#include "sbrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sbrec/rng.hpp"

namespace sbrec {

bool RatingScale::contains(double rating) const {
    if (rating < min_rating - 1e-9 || rating > max_rating + 1e-9) return false;
    const double steps = (rating - min_rating) / step;
    return std::abs(steps - std::round(steps)) < 1e-6;
}

std::optional<DatasetFormat> detect_format(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".dat") return DatasetFormat::Dat;
    if (ext == ".csv") return DatasetFormat::Csv;
    return std::nullopt;
}

namespace {

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + sep.size();
    }
    return fields;
}

std::int64_t parse_int(std::string_view field, const std::filesystem::path& path,
                       std::size_t line_no, const char* name) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        malformed(path, line_no, std::string("bad ") + name + " field '" + std::string(field) + "'");
    }
    return value;
}

double parse_double(std::string_view field, const std::filesystem::path& path,
                    std::size_t line_no, const char* name) {
    // from_chars for doubles is available on this toolchain, but strtod keeps
    // the dependency surface minimal and the formats here are simple
    std::string buf(field);
    char* end = nullptr;
    const double value = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        malformed(path, line_no, std::string("bad ") + name + " field '" + buf + "'");
    }
    return value;
}

}  // namespace

std::vector<RatingEvent> ingest(const std::filesystem::path& path, DatasetFormat format,
                                const RatingScale& scale) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path.string());

    const std::string_view sep = format == DatasetFormat::Dat ? "::" : ",";
    std::vector<RatingEvent> events;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (format == DatasetFormat::Csv && !saw_header) {
            saw_header = true;
            if (line.rfind("userId", 0) == 0) continue;  // header row
            malformed(path, line_no, "expected csv header 'userId,movieId,rating,timestamp'");
        }
        const auto fields = split_fields(line, sep);
        if (fields.size() != 4) {
            malformed(path, line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        }
        RatingEvent event;
        event.user_id = parse_int(fields[0], path, line_no, "user id");
        event.item_id = parse_int(fields[1], path, line_no, "item id");
        event.rating = parse_double(fields[2], path, line_no, "rating");
        event.timestamp = parse_int(fields[3], path, line_no, "timestamp");
        if (!scale.contains(event.rating)) {
            malformed(path, line_no,
                      "rating " + std::to_string(event.rating) + " outside declared scale [" +
                          std::to_string(scale.min_rating) + ", " + std::to_string(scale.max_rating) +
                          "] step " + std::to_string(scale.step));
        }
        events.push_back(event);
    }
    return events;
}

ItemStats sufficient_stats(std::span<const RatingEvent> events) {
    if (events.empty()) throw std::invalid_argument("sufficient_stats: empty event list");
    ItemStats stats;
    double weighted_sum = 0.0;
    for (const auto& event : events) {
        if (!(event.weight > 0.0)) {
            throw std::invalid_argument("sufficient_stats: event weight must be > 0");
        }
        stats.counts[event.item_id] += event.weight;
        stats.sums[event.item_id] += event.weight * event.rating;
        stats.total_n += event.weight;
        stats.sum_squares += event.weight * event.rating * event.rating;
        weighted_sum += event.weight * event.rating;
    }
    stats.num_events = static_cast<std::int64_t>(events.size());
    if (stats.num_events >= 2) {
        const double mean = weighted_sum / stats.total_n;
        const double variance = std::max(0.0, stats.sum_squares / stats.total_n - mean * mean);
        stats.sigma2 = variance > 1e-12 ? variance : 1.0;
    } else {
        stats.sigma2 = 1.0;  // variance undefined for a single point
    }
    return stats;
}

ItemStats merge_stats(const ItemStats& a, const ItemStats& b) {
    ItemStats merged = a;
    for (const auto& [item, count] : b.counts) merged.counts[item] += count;
    for (const auto& [item, sum] : b.sums) merged.sums[item] += sum;
    merged.total_n += b.total_n;
    merged.sum_squares += b.sum_squares;
    merged.num_events += b.num_events;
    double weighted_sum = 0.0;
    for (const auto& [item, sum] : merged.sums) weighted_sum += sum;
    if (merged.num_events >= 2) {
        const double mean = weighted_sum / merged.total_n;
        const double variance = std::max(0.0, merged.sum_squares / merged.total_n - mean * mean);
        merged.sigma2 = variance > 1e-12 ? variance : 1.0;
    } else {
        merged.sigma2 = 1.0;
    }
    return merged;
}

SplitDataset split_per_user(std::span<const RatingEvent> events, double train_fraction,
                            std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split_per_user: train_fraction must be in (0, 1)");
    }
    std::map<UserId, std::vector<std::uint32_t>> by_user;
    for (std::uint32_t i = 0; i < events.size(); ++i) {
        by_user[events[i].user_id].push_back(i);
    }

    SplitDataset split;
    split.seed = seed;
    split.train_fraction = train_fraction;
    for (auto& [user, indices] : by_user) {
        // sub-seed per user so the partition does not depend on which other
        // users are present
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(user)));
        rng.shuffle(indices);
        const auto m = indices.size();
        auto train_count = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(m)));
        train_count = std::clamp<std::size_t>(train_count, 1, m);
        for (std::size_t i = 0; i < m; ++i) {
            (i < train_count ? split.train : split.test).push_back(events[indices[i]]);
        }
    }
    return split;
}

UserIndex::UserIndex(std::span<const RatingEvent> events) {
    for (std::uint32_t i = 0; i < events.size(); ++i) {
        by_user_[events[i].user_id].push_back(i);
    }
}

const std::vector<std::uint32_t>* UserIndex::indices_of(UserId user) const {
    const auto it = by_user_.find(user);
    return it == by_user_.end() ? nullptr : &it->second;
}

std::vector<UserId> UserIndex::users() const {
    std::vector<UserId> out;
    out.reserve(by_user_.size());
    for (const auto& [user, indices] : by_user_) out.push_back(user);
    return out;
}

std::uint64_t dataset_fingerprint(std::span<const RatingEvent> events) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    const auto feed = [&hash](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash ^= bytes[i];
            hash *= 0x100000001b3ULL;
        }
    };
    for (const auto& event : events) {
        feed(&event.user_id, sizeof(event.user_id));
        feed(&event.item_id, sizeof(event.item_id));
        feed(&event.rating, sizeof(event.rating));
        feed(&event.weight, sizeof(event.weight));
    }
    const std::uint64_t count = events.size();
    feed(&count, sizeof(count));
    return hash;
}

}  // namespace sbrec
