#include "sbrec/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "sbrec/lbfgs.hpp"

namespace sbrec {

namespace {

// Items in canonical (ascending id) order with raw arrays for the hot path.
struct Packed {
    std::vector<ItemId> ids;
    std::vector<double> counts;
    std::vector<double> sums;
    double total_n = 0.0;
    double constant = 0.0;  // sum_t w_t y_t^2 / (2 sigma^2)
    double sigma2 = 1.0;
};

Packed pack(const ItemStats& stats, const SBConfig& config) {
    if (stats.counts.empty()) throw std::invalid_argument("estimator: empty statistics");
    if (!(config.sigma2 > 0.0)) throw std::invalid_argument("estimator: sigma2 must be > 0");
    if (!(config.regularization >= 0.0)) throw std::invalid_argument("estimator: r must be >= 0");
    Packed packed;
    packed.ids.reserve(stats.counts.size());
    for (const auto& [item, count] : stats.counts) {
        if (!(count > 0.0)) throw std::invalid_argument("estimator: all counts must be > 0");
        packed.ids.push_back(item);
        packed.counts.push_back(count);
        packed.sums.push_back(stats.sums.at(item));
    }
    packed.total_n = stats.total_n;
    packed.sigma2 = config.sigma2;
    packed.constant = stats.sum_squares / (2.0 * config.sigma2);
    return packed;
}

std::vector<double> flatten(const Packed& packed, const std::map<ItemId, double>& theta,
                            const std::map<ItemId, double>& beta) {
    const std::size_t k = packed.ids.size();
    if (theta.size() != k || beta.size() != k) {
        throw std::invalid_argument("estimator: theta/beta must be keyed like the statistics");
    }
    std::vector<double> x(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto t = theta.find(packed.ids[i]);
        const auto b = beta.find(packed.ids[i]);
        if (t == theta.end() || b == beta.end()) {
            throw std::invalid_argument("estimator: theta/beta must be keyed like the statistics");
        }
        x[i] = t->second;
        x[k + i] = b->second;
    }
    return x;
}

// Objective and gradient over the packed layout (theta block, beta block).
double eval(const Packed& p, double slope_a, double reg, std::span<const double> x,
            std::span<double> grad) {
    const std::size_t k = p.ids.size();
    const auto theta = x.subspan(0, k);
    const auto beta = x.subspan(k, k);
    const double sigma2 = p.sigma2;

    double beta_max = beta[0];
    for (const double b : beta) beta_max = std::max(beta_max, b);
    double sum_exp = 0.0;
    for (const double b : beta) sum_exp += std::exp(b - beta_max);
    const double lse = beta_max + std::log(sum_exp);

    double value = p.constant + p.total_n * lse;
    for (std::size_t i = 0; i < k; ++i) {
        value += theta[i] * theta[i] * p.counts[i] / (2.0 * sigma2) -
                 theta[i] * p.sums[i] / sigma2 - p.counts[i] * beta[i];
        const double residual = theta[i] - slope_a * beta[i];
        value += reg * residual * residual;
        if (!grad.empty()) {
            const double lambda = std::exp(beta[i] - lse);
            grad[i] = theta[i] * p.counts[i] / sigma2 - p.sums[i] / sigma2 + 2.0 * reg * residual;
            grad[k + i] = -p.counts[i] + p.total_n * lambda - 2.0 * reg * slope_a * residual;
        }
    }
    return value;
}

}  // namespace

double objective(const ItemStats& stats, const std::map<ItemId, double>& theta,
                 const std::map<ItemId, double>& beta, const SBConfig& config) {
    const Packed packed = pack(stats, config);
    const auto x = flatten(packed, theta, beta);
    return eval(packed, config.slope_a, config.regularization, x, {});
}

std::vector<double> gradient(const ItemStats& stats, const std::map<ItemId, double>& theta,
                             const std::map<ItemId, double>& beta, const SBConfig& config) {
    const Packed packed = pack(stats, config);
    const auto x = flatten(packed, theta, beta);
    std::vector<double> grad(x.size());
    eval(packed, config.slope_a, config.regularization, x, grad);
    return grad;
}

Eigen::MatrixXd hessian(const ItemStats& stats, const std::map<ItemId, double>& theta,
                        const std::map<ItemId, double>& beta, const SBConfig& config) {
    const Packed packed = pack(stats, config);
    const auto x = flatten(packed, theta, beta);
    const auto k = static_cast<Eigen::Index>(packed.ids.size());
    const double r = config.regularization;
    const double a = config.slope_a;

    double beta_max = x[k];
    for (Eigen::Index i = 0; i < k; ++i) beta_max = std::max(beta_max, x[k + i]);
    double sum_exp = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) sum_exp += std::exp(x[k + i] - beta_max);
    Eigen::VectorXd lambda(k);
    for (Eigen::Index i = 0; i < k; ++i) lambda[i] = std::exp(x[k + i] - beta_max) / sum_exp;

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
        h(i, i) = packed.counts[i] / packed.sigma2 + 2.0 * r;
        h(i, k + i) = -2.0 * r * a;
        h(k + i, i) = -2.0 * r * a;
        for (Eigen::Index j = 0; j < k; ++j) {
            h(k + i, k + j) = i == j ? packed.total_n * lambda[i] * (1.0 - lambda[i]) + 2.0 * r * a * a
                                     : -packed.total_n * lambda[i] * lambda[j];
        }
    }
    return h;
}

SBSolution fit_sb(const ItemStats& stats, const SBConfig& config) {
    const Packed packed = pack(stats, config);
    const std::size_t k = packed.ids.size();

    std::vector<double> x0(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        x0[i] = packed.sums[i] / packed.counts[i];
        x0[k + i] = std::log(packed.counts[i] / packed.total_n);
    }

    LbfgsOptions options;
    options.memory = config.memory_size;
    options.max_iterations = config.max_iterations;
    options.gradient_tolerance = config.tolerance;
    const double slope_a = config.slope_a;
    const double reg = config.regularization;
    const auto fn = [&packed, slope_a, reg](std::span<const double> x, std::span<double> grad) {
        return eval(packed, slope_a, reg, x, grad);
    };
    LbfgsResult fit = lbfgs_minimize(fn, std::move(x0), options);

    SBSolution solution;
    for (std::size_t i = 0; i < k; ++i) {
        solution.theta[packed.ids[i]] = fit.x[i];
        solution.beta[packed.ids[i]] = fit.x[k + i];
    }
    solution.final_objective = fit.objective;
    solution.final_gradient_norm = fit.gradient_inf_norm;
    solution.iterations = fit.iterations;
    solution.converged = fit.converged;
    solution.objective_trace = std::move(fit.objective_trace);
    return solution;
}

std::map<ItemId, double> fit_ls(const ItemStats& stats) {
    if (stats.counts.empty()) throw std::invalid_argument("fit_ls: empty statistics");
    std::map<ItemId, double> theta;
    for (const auto& [item, count] : stats.counts) {
        if (!(count > 0.0)) throw std::invalid_argument("fit_ls: all counts must be > 0");
        theta[item] = stats.sums.at(item) / count;
    }
    return theta;
}

std::vector<ItemId> popularity_ranking(const ItemStats& stats) {
    if (stats.counts.empty()) throw std::invalid_argument("popularity_ranking: empty statistics");
    std::vector<ItemId> items;
    items.reserve(stats.counts.size());
    for (const auto& [item, count] : stats.counts) items.push_back(item);
    std::sort(items.begin(), items.end(), [&stats](ItemId lhs, ItemId rhs) {
        const double cl = stats.counts.at(lhs);
        const double cr = stats.counts.at(rhs);
        if (cl != cr) return cl > cr;
        return lhs < rhs;
    });
    return items;
}

}  // namespace sbrec
