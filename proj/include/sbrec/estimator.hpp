#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "sbrec/data.hpp"

namespace sbrec {

struct SBConfig {
    double slope_a = 0.27;        // selection-bias slope used in the penalty
    double regularization = 1.0;  // r >= 0
    double sigma2 = 1.0;          // rating variance
    double tolerance = 1e-6;      // gradient infinity-norm stop
    int max_iterations = 500;
    int memory_size = 10;         // quasi-Newton history length
};

struct SBSolution {
    std::map<ItemId, double> theta;  // estimated ratings
    std::map<ItemId, double> beta;   // log-selection scores (identifiable up to a shift)
    double final_objective = 0.0;
    double final_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

// Regularized negative log-likelihood, jointly in (theta, beta):
//   sum_k theta_k^2 N_k / (2 sigma^2) - theta_k S_k / sigma^2 + C
//   + n log(sum_j exp(beta_j)) - sum_k N_k beta_k
//   + r sum_k (theta_k - a beta_k)^2
// with C = sum_t w_t y_t^2 / (2 sigma^2). The log-sum-exp is max-shifted.
double objective(const ItemStats& stats, const std::map<ItemId, double>& theta,
                 const std::map<ItemId, double>& beta, const SBConfig& config);

// Analytic gradient, theta block then beta block, items ascending by id.
std::vector<double> gradient(const ItemStats& stats, const std::map<ItemId, double>& theta,
                             const std::map<ItemId, double>& beta, const SBConfig& config);

// Dense 2K x 2K Hessian assembled from the block formulas; testing / small K only.
Eigen::MatrixXd hessian(const ItemStats& stats, const std::map<ItemId, double>& theta,
                        const std::map<ItemId, double>& beta, const SBConfig& config);

// Minimizes the objective with limited-memory BFGS, started from the
// per-block stationary points theta = S/N and beta = ln(N/n).
SBSolution fit_sb(const ItemStats& stats, const SBConfig& config);

// Per-item empirical average S_k/N_k; equals fit_sb at r = 0.
std::map<ItemId, double> fit_ls(const ItemStats& stats);

// Items sorted by count descending, ties by ascending id.
std::vector<ItemId> popularity_ranking(const ItemStats& stats);

}  // namespace sbrec
