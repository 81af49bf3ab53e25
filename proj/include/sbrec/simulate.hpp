#pragma once

#include <span>
#include <vector>

#include "sbrec/data.hpp"
#include "sbrec/estimator.hpp"

namespace sbrec {

// Generative model: beta* ~ N(theta*/a, sigma_b) componentwise, then n i.i.d.
// draws X_t ~ Mult(softmax(beta*)), Y_t | X_t = k ~ N(theta*_k, sigma^2).
struct SimConfig {
    std::vector<double> theta_star = {2.7, 3.35, 4.0};
    double a_star = 0.35;
    double sigma = 1.0;    // rating noise std deviation
    double sigma_b = 1.0;  // beta* perturbation std deviation
    std::int64_t n = 2000;
    std::uint64_t seed = 1;
};

struct SimDraw {
    std::vector<RatingEvent> events;  // single synthetic population
    std::vector<double> beta_star;
    std::vector<double> lambda_star;  // probability simplex
    bool all_items_observed = false;
};

SimDraw simulate(const SimConfig& config);

struct EstimatorSummary {
    std::vector<double> mean_estimate;           // per item
    std::vector<double> std_estimate;            // per item, +-1 std
    double rmse = 0.0;                           // sqrt(mean ||est - theta*||^2)
    double error_std = 0.0;                      // std of per-replication error norms
    std::vector<double> per_replication_error;   // ||est - theta*|| per retained draw
};

struct RecoverySummary {
    EstimatorSummary sb;
    EstimatorSummary ls;
    int replications = 0;    // retained draws
    int rejected_draws = 0;  // draws with some item never selected
};

// Monte Carlo recovery comparison. Draws with unobserved items are rejected
// and redrawn (replication j, attempt t uses sub-seed mix(mix(seed, j), t));
// total attempts are capped at 100x replications.
RecoverySummary run_recovery(const SimConfig& config, const SBConfig& sb_config,
                             int replications);

struct SweepResult {
    std::vector<double> parameter;
    std::vector<RecoverySummary> summaries;
};

// Same replications (common random draws) evaluated at each regularization r.
SweepResult sweep_r(const SimConfig& config, const SBConfig& sb_config_base,
                    std::span<const double> r_values, int replications);

// Same replications evaluated with each penalty slope a.
SweepResult sweep_a(const SimConfig& config, const SBConfig& sb_config_base,
                    std::span<const double> a_values, int replications);

// Multi-user synthetic dataset with the same selection-bias structure, for
// exercising the full neighborhood evaluation pipeline.
struct PopulationConfig {
    int num_users = 600;
    int num_items = 400;
    int min_ratings_per_user = 30;
    int max_ratings_per_user = 80;
    double theta_min = 2.2;
    double theta_max = 4.4;
    double a_star = 0.35;
    double sigma = 1.0;
    double sigma_b = 1.0;
    bool quantize = true;  // round ratings to the half-integer scale and clamp
    std::uint64_t seed = 1;
};

struct Population {
    std::vector<RatingEvent> events;
    std::vector<double> theta_star;
    std::vector<double> beta_star;
    std::vector<double> lambda_star;
};

Population simulate_population(const PopulationConfig& config);

}  // namespace sbrec
