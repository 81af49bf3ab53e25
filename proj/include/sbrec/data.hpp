#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbrec {

using UserId = std::int64_t;
using ItemId = std::int64_t;

// Bad input files, malformed records, out-of-scale ratings. Exit code 2 in the CLI.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimization or linear-algebra failures. Exit code 3 in the CLI.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One voluntarily contributed rating observation.
struct RatingEvent {
    UserId user_id = 0;
    ItemId item_id = 0;
    double rating = 0.0;
    double weight = 1.0;
    std::int64_t timestamp = 0;  // carried through, never used by the algorithms
};

struct RatingScale {
    double min_rating;
    double max_rating;
    double step;

    // half integers .5 to 5
    static RatingScale movielens() { return {0.5, 5.0, 0.5}; }
    // integers 1 to 5
    static RatingScale netflix() { return {1.0, 5.0, 1.0}; }

    bool contains(double rating) const;
};

enum class DatasetFormat {
    Dat,  // userId::movieId::rating::timestamp, no header
    Csv,  // header "userId,movieId,rating,timestamp"
};

std::optional<DatasetFormat> detect_format(const std::filesystem::path& path);

std::vector<RatingEvent> ingest(const std::filesystem::path& path, DatasetFormat format,
                                const RatingScale& scale = RatingScale::movielens());

// Per-item sufficient statistics. Items with zero weight mass are never
// stored, so every count is strictly positive.
struct ItemStats {
    std::map<ItemId, double> counts;  // N_k, real-valued when weighted
    std::map<ItemId, double> sums;    // S_k
    double total_n = 0.0;             // sum of all weights
    double sum_squares = 0.0;         // sum of weight * rating^2, the constant term of the likelihood
    std::int64_t num_events = 0;
    double sigma2 = 1.0;              // estimated rating variance

    int num_items() const { return static_cast<int>(counts.size()); }
};

ItemStats sufficient_stats(std::span<const RatingEvent> events);

// Pointwise sum of counts/sums; sigma2 is recomputed from the pooled moments.
ItemStats merge_stats(const ItemStats& a, const ItemStats& b);

struct SplitDataset {
    std::vector<RatingEvent> train;
    std::vector<RatingEvent> test;
    std::uint64_t seed = 0;
    double train_fraction = 0.75;
};

// Random per-user partition. Every user keeps at least one training rating.
SplitDataset split_per_user(std::span<const RatingEvent> events, double train_fraction,
                            std::uint64_t seed);

// Lookup from user to the indices of their events in some fixed event span.
class UserIndex {
public:
    UserIndex() = default;
    explicit UserIndex(std::span<const RatingEvent> events);

    const std::vector<std::uint32_t>* indices_of(UserId user) const;
    std::vector<UserId> users() const;  // ascending
    std::size_t num_users() const { return by_user_.size(); }

private:
    std::map<UserId, std::vector<std::uint32_t>> by_user_;
};

// FNV-1a over the event records, used to key feature caches to a split.
std::uint64_t dataset_fingerprint(std::span<const RatingEvent> events);

}  // namespace sbrec
