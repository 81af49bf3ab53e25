#include "sbrec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sbrec/rng.hpp"

namespace sbrec {

namespace {

std::vector<double> softmax(std::span<const double> beta) {
    double beta_max = beta[0];
    for (const double b : beta) beta_max = std::max(beta_max, b);
    double sum = 0.0;
    std::vector<double> lambda(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) {
        lambda[i] = std::exp(beta[i] - beta_max);
        sum += lambda[i];
    }
    for (double& l : lambda) l /= sum;
    return lambda;
}

std::size_t sample_categorical(std::span<const double> cumulative, double u) {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

void validate(const SimConfig& config) {
    if (config.theta_star.empty()) throw std::invalid_argument("simulate: theta_star empty");
    if (!(config.a_star > 0.0)) throw std::invalid_argument("simulate: a_star must be > 0");
    if (!(config.sigma > 0.0)) throw std::invalid_argument("simulate: sigma must be > 0");
    if (!(config.sigma_b > 0.0)) throw std::invalid_argument("simulate: sigma_b must be > 0");
    if (config.n <= 0) throw std::invalid_argument("simulate: n must be > 0");
}

SimDraw simulate_with_seed(const SimConfig& config, std::uint64_t seed) {
    const std::size_t k = config.theta_star.size();
    Rng rng(seed);

    SimDraw draw;
    draw.beta_star.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        draw.beta_star[i] = rng.normal(config.theta_star[i] / config.a_star, config.sigma_b);
    }
    draw.lambda_star = softmax(draw.beta_star);

    std::vector<double> cumulative(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += draw.lambda_star[i];
        cumulative[i] = acc;
    }

    std::vector<bool> seen(k, false);
    draw.events.reserve(static_cast<std::size_t>(config.n));
    for (std::int64_t t = 0; t < config.n; ++t) {
        const std::size_t item = sample_categorical(cumulative, rng.uniform());
        seen[item] = true;
        RatingEvent event;
        event.user_id = 1;
        event.item_id = static_cast<ItemId>(item + 1);
        event.rating = rng.normal(config.theta_star[item], config.sigma);
        event.timestamp = t;
        draw.events.push_back(event);
    }
    draw.all_items_observed = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    return draw;
}

double error_norm(const std::map<ItemId, double>& estimate, std::span<const double> theta_star) {
    double sum = 0.0;
    for (std::size_t i = 0; i < theta_star.size(); ++i) {
        const double diff = estimate.at(static_cast<ItemId>(i + 1)) - theta_star[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

EstimatorSummary summarize(const std::vector<std::vector<double>>& estimates,
                           const std::vector<double>& errors, std::size_t k) {
    EstimatorSummary summary;
    summary.per_replication_error = errors;
    const auto reps = static_cast<double>(estimates.size());
    summary.mean_estimate.assign(k, 0.0);
    summary.std_estimate.assign(k, 0.0);
    for (const auto& est : estimates) {
        for (std::size_t i = 0; i < k; ++i) summary.mean_estimate[i] += est[i];
    }
    for (double& m : summary.mean_estimate) m /= reps;
    for (const auto& est : estimates) {
        for (std::size_t i = 0; i < k; ++i) {
            const double diff = est[i] - summary.mean_estimate[i];
            summary.std_estimate[i] += diff * diff;
        }
    }
    for (double& s : summary.std_estimate) s = std::sqrt(s / reps);

    double mean_sq = 0.0;
    for (const double e : errors) mean_sq += e * e;
    mean_sq /= reps;
    summary.rmse = std::sqrt(mean_sq);
    double mean_err = 0.0;
    for (const double e : errors) mean_err += e;
    mean_err /= reps;
    double var_err = 0.0;
    for (const double e : errors) var_err += (e - mean_err) * (e - mean_err);
    summary.error_std = std::sqrt(var_err / reps);
    return summary;
}

}  // namespace

SimDraw simulate(const SimConfig& config) {
    validate(config);
    return simulate_with_seed(config, config.seed);
}

RecoverySummary run_recovery(const SimConfig& config, const SBConfig& sb_config,
                             int replications) {
    validate(config);
    if (replications < 1) throw std::invalid_argument("run_recovery: replications must be >= 1");

    const std::size_t k = config.theta_star.size();
    const std::int64_t attempt_cap = 100LL * replications;
    std::int64_t attempts = 0;

    std::vector<std::vector<double>> sb_estimates, ls_estimates;
    std::vector<double> sb_errors, ls_errors;
    int rejected = 0;

    for (int rep = 0; rep < replications && attempts < attempt_cap; ++rep) {
        SimDraw draw;
        bool retained = false;
        for (std::uint64_t t = 0; attempts < attempt_cap; ++t) {
            ++attempts;
            draw = simulate_with_seed(config,
                                      mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(rep)), t));
            if (draw.all_items_observed) {
                retained = true;
                break;
            }
            ++rejected;
        }
        if (!retained) break;

        const ItemStats stats = sufficient_stats(draw.events);
        const SBSolution sb = fit_sb(stats, sb_config);
        const auto ls = fit_ls(stats);

        std::vector<double> sb_vec(k), ls_vec(k);
        for (std::size_t i = 0; i < k; ++i) {
            sb_vec[i] = sb.theta.at(static_cast<ItemId>(i + 1));
            ls_vec[i] = ls.at(static_cast<ItemId>(i + 1));
        }
        sb_errors.push_back(error_norm(sb.theta, config.theta_star));
        ls_errors.push_back(error_norm(ls, config.theta_star));
        sb_estimates.push_back(std::move(sb_vec));
        ls_estimates.push_back(std::move(ls_vec));
    }

    if (sb_estimates.empty()) {
        throw NumericError("run_recovery: zero retained draws within the attempt cap");
    }

    RecoverySummary summary;
    summary.sb = summarize(sb_estimates, sb_errors, k);
    summary.ls = summarize(ls_estimates, ls_errors, k);
    summary.replications = static_cast<int>(sb_estimates.size());
    summary.rejected_draws = rejected;
    return summary;
}

SweepResult sweep_r(const SimConfig& config, const SBConfig& sb_config_base,
                    std::span<const double> r_values, int replications) {
    SweepResult result;
    for (const double r : r_values) {
        SBConfig sb_config = sb_config_base;
        sb_config.regularization = r;
        result.parameter.push_back(r);
        result.summaries.push_back(run_recovery(config, sb_config, replications));
    }
    return result;
}

SweepResult sweep_a(const SimConfig& config, const SBConfig& sb_config_base,
                    std::span<const double> a_values, int replications) {
    SweepResult result;
    for (const double a : a_values) {
        SBConfig sb_config = sb_config_base;
        sb_config.slope_a = a;
        result.parameter.push_back(a);
        result.summaries.push_back(run_recovery(config, sb_config, replications));
    }
    return result;
}

Population simulate_population(const PopulationConfig& config) {
    if (config.num_users < 1 || config.num_items < 1) {
        throw std::invalid_argument("simulate_population: need users and items");
    }
    if (config.min_ratings_per_user < 1 ||
        config.max_ratings_per_user < config.min_ratings_per_user) {
        throw std::invalid_argument("simulate_population: bad ratings-per-user range");
    }
    if (!(config.a_star > 0.0) || !(config.sigma > 0.0) || !(config.sigma_b > 0.0)) {
        throw std::invalid_argument("simulate_population: scale parameters must be > 0");
    }

    const auto k = static_cast<std::size_t>(config.num_items);
    Rng rng(config.seed);
    Population population;
    population.theta_star.resize(k);
    population.beta_star.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        population.theta_star[i] = rng.uniform(config.theta_min, config.theta_max);
        population.beta_star[i] =
            rng.normal(population.theta_star[i] / config.a_star, config.sigma_b);
    }
    population.lambda_star = softmax(population.beta_star);

    std::vector<double> cumulative(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += population.lambda_star[i];
        cumulative[i] = acc;
    }

    const RatingScale scale = RatingScale::movielens();
    for (int user = 1; user <= config.num_users; ++user) {
        Rng user_rng(mix_seed(config.seed, static_cast<std::uint64_t>(user)));
        const int span = config.max_ratings_per_user - config.min_ratings_per_user + 1;
        const int target = config.min_ratings_per_user +
                           static_cast<int>(user_rng.uniform_index(static_cast<std::size_t>(span)));
        std::set<ItemId> rated;
        // items repeat under multinomial sampling; keep first occurrence only
        for (int t = 0; t < target * 4 && static_cast<int>(rated.size()) < target; ++t) {
            const std::size_t item = sample_categorical(cumulative, user_rng.uniform());
            const auto item_id = static_cast<ItemId>(item + 1);
            if (!rated.insert(item_id).second) continue;
            double rating = user_rng.normal(population.theta_star[item], config.sigma);
            if (config.quantize) {
                rating = std::round(rating / scale.step) * scale.step;
                rating = std::clamp(rating, scale.min_rating, scale.max_rating);
            }
            RatingEvent event;
            event.user_id = user;
            event.item_id = item_id;
            event.rating = rating;
            event.timestamp = t;
            population.events.push_back(event);
        }
    }
    return population;
}

}  // namespace sbrec
