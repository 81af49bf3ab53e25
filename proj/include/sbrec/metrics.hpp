#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sbrec/data.hpp"

namespace sbrec {

struct UserEval {
    UserId user_id = 0;
    std::optional<double> rmse;          // absent for ranking-only estimators
    std::map<int, double> p_at_n;        // empty when the user has no relevant items
    std::map<double, double> p_at_tau;   // a threshold is absent when no item clears it
    int test_size = 0;
};

struct EvalReport {
    std::string estimator_name;
    std::vector<UserEval> per_user;
    std::optional<double> mean_rmse;
    std::map<int, double> mean_p_at_n;       // averaged over users where defined
    std::map<double, double> mean_p_at_tau;  // averaged over users where defined
    std::map<int, int> p_at_n_user_count;
    std::map<double, int> p_at_tau_user_count;
    int num_users = 0;
    std::uint64_t seed = 0;
};

// sqrt of the mean squared prediction error over the user's test events;
// items without an estimate use the fallback value.
double user_rmse(const std::map<ItemId, double>& estimates,
                 std::span<const RatingEvent> test_events, double fallback);

// |top-n of ranked_items that are relevant| / n; missing slots count as misses.
double precision_at_n(std::span<const ItemId> ranked_items, const std::set<ItemId>& relevant,
                      int n);

// Among items with estimate >= tau, the fraction that are relevant; absent
// when no item clears the threshold.
std::optional<double> precision_at_tau(const std::map<ItemId, double>& estimates,
                                       const std::set<ItemId>& relevant, double tau);

// Items not in `exclude`, sorted by estimate descending, ties by ascending id.
std::vector<ItemId> rank_candidates(const std::map<ItemId, double>& estimates,
                                    const std::set<ItemId>& exclude);

// Arithmetic means of the per-user metrics, each over the users where the
// metric is defined.
EvalReport aggregate_report(std::string estimator_name, std::vector<UserEval> per_user,
                            std::uint64_t seed);

}  // namespace sbrec
