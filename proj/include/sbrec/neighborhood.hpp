#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "sbrec/data.hpp"

namespace sbrec {

struct UserFeatures {
    std::map<UserId, std::vector<double>> features;  // all vectors have dimension `rank`
    int rank = 0;
    std::uint64_t training_fingerprint = 0;
};

struct SvdResult {
    Eigen::MatrixXd u;                  // rows x rank, orthonormal columns
    Eigen::VectorXd singular_values;    // descending
    Eigen::MatrixXd v;                  // cols x rank, orthonormal columns
    int iterations = 0;
};

// Top-`rank` singular triplets by block subspace iteration with seeded random
// start vectors; touches only stored entries. Stops when successive
// singular-value estimates change by < 1e-8 relative.
SvdResult truncated_svd(const Eigen::SparseMatrix<double>& matrix, int rank, std::uint64_t seed);

// Rank-`rank` SVD of the user x item training matrix (missing entries as
// zeros); user feature = row of U * sqrt(Sigma).
UserFeatures compute_user_features(std::span<const RatingEvent> train, int rank,
                                   std::uint64_t seed);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct Neighborhood {
    UserId target_user = 0;
    std::vector<std::pair<UserId, double>> members;  // similarity descending
    int size = 0;                                    // requested size
};

// Exhaustive scan for the `size` users most cosine-similar to the target,
// excluding the target itself; ties broken by ascending user id.
Neighborhood build_neighborhood(const UserFeatures& features, UserId target, int size);

// Sufficient statistics over the training ratings of the neighborhood
// members. In weighted mode each event is weighted by its contributor's
// similarity; non-positive similarities drop the contributor.
ItemStats neighborhood_stats(std::span<const RatingEvent> train, const UserIndex& train_index,
                             const Neighborhood& neighborhood, bool weighted);

void save_features(const UserFeatures& features, const std::filesystem::path& path);
UserFeatures load_features(const std::filesystem::path& path);

}  // namespace sbrec
