#include "sbrec/neighborhood.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "sbrec/rng.hpp"

namespace sbrec {

SvdResult truncated_svd(const Eigen::SparseMatrix<double>& matrix, int rank, std::uint64_t seed) {
    const Eigen::Index rows = matrix.rows();
    const Eigen::Index cols = matrix.cols();
    if (rank < 1 || rank > std::min(rows, cols)) {
        throw std::invalid_argument("truncated_svd: rank must be in [1, min(rows, cols)]");
    }

    constexpr int kMaxIterations = 500;
    constexpr int kMaxRestarts = 3;
    constexpr double kRelTol = 1e-8;

    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
        Eigen::MatrixXd x(cols, rank);
        for (Eigen::Index j = 0; j < rank; ++j) {
            for (Eigen::Index i = 0; i < cols; ++i) x(i, j) = rng.normal();
        }
        x = Eigen::HouseholderQR<Eigen::MatrixXd>(x).householderQ() *
            Eigen::MatrixXd::Identity(cols, rank);

        Eigen::VectorXd sigma_prev = Eigen::VectorXd::Zero(rank);
        Eigen::MatrixXd q_left;
        for (int iter = 1; iter <= kMaxIterations; ++iter) {
            Eigen::MatrixXd w = matrix * x;
            q_left = Eigen::HouseholderQR<Eigen::MatrixXd>(w).householderQ() *
                     Eigen::MatrixXd::Identity(rows, rank);
            Eigen::MatrixXd z = matrix.transpose() * q_left;
            Eigen::VectorXd sigma = z.colwise().norm();
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
            x = qr.householderQ() * Eigen::MatrixXd::Identity(cols, rank);

            double max_change = 0.0;
            for (Eigen::Index j = 0; j < rank; ++j) {
                const double denom = std::max(std::abs(sigma[j]), 1e-300);
                max_change = std::max(max_change, std::abs(sigma[j] - sigma_prev[j]) / denom);
            }
            sigma_prev = sigma;
            if (max_change < kRelTol) {
                // Rayleigh-Ritz projection onto the converged subspaces
                Eigen::MatrixXd small = q_left.transpose() * (matrix * x);
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(small,
                                                      Eigen::ComputeFullU | Eigen::ComputeFullV);
                SvdResult result;
                result.u = q_left * svd.matrixU();
                result.singular_values = svd.singularValues();
                result.v = x * svd.matrixV();
                result.iterations = iter;
                return result;
            }
        }
    }
    throw NumericError("truncated_svd: subspace iteration did not converge");
}

UserFeatures compute_user_features(std::span<const RatingEvent> train, int rank,
                                   std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("compute_user_features: empty training data");

    std::map<UserId, Eigen::Index> user_row;
    std::map<ItemId, Eigen::Index> item_col;
    for (const auto& event : train) {
        user_row.emplace(event.user_id, 0);
        item_col.emplace(event.item_id, 0);
    }
    Eigen::Index next = 0;
    for (auto& [user, row] : user_row) row = next++;
    next = 0;
    for (auto& [item, col] : item_col) col = next++;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(train.size());
    for (const auto& event : train) {
        triplets.emplace_back(user_row.at(event.user_id), item_col.at(event.item_id),
                              event.rating);
    }
    Eigen::SparseMatrix<double> matrix(static_cast<Eigen::Index>(user_row.size()),
                                       static_cast<Eigen::Index>(item_col.size()));
    matrix.setFromTriplets(triplets.begin(), triplets.end());

    const SvdResult svd = truncated_svd(matrix, rank, seed);

    UserFeatures features;
    features.rank = rank;
    features.training_fingerprint = dataset_fingerprint(train);
    const Eigen::VectorXd scale = svd.singular_values.cwiseSqrt();
    for (const auto& [user, row] : user_row) {
        std::vector<double> vec(static_cast<std::size_t>(rank));
        for (int j = 0; j < rank; ++j) vec[static_cast<std::size_t>(j)] = svd.u(row, j) * scale[j];
        features.features.emplace(user, std::move(vec));
    }
    return features;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

Neighborhood build_neighborhood(const UserFeatures& features, UserId target, int size) {
    const auto it = features.features.find(target);
    if (it == features.features.end()) {
        throw std::invalid_argument("build_neighborhood: unknown target user");
    }
    if (size < 1) throw std::invalid_argument("build_neighborhood: size must be >= 1");

    Neighborhood neighborhood;
    neighborhood.target_user = target;
    neighborhood.size = size;
    neighborhood.members.reserve(features.features.size());
    for (const auto& [user, vec] : features.features) {
        if (user == target) continue;
        neighborhood.members.emplace_back(user, cosine_similarity(it->second, vec));
    }
    std::sort(neighborhood.members.begin(), neighborhood.members.end(),
              [](const auto& lhs, const auto& rhs) {
                  if (lhs.second != rhs.second) return lhs.second > rhs.second;
                  return lhs.first < rhs.first;
              });
    if (neighborhood.members.size() > static_cast<std::size_t>(size)) {
        neighborhood.members.resize(static_cast<std::size_t>(size));
    }
    return neighborhood;
}

ItemStats neighborhood_stats(std::span<const RatingEvent> train, const UserIndex& train_index,
                             const Neighborhood& neighborhood, bool weighted) {
    if (neighborhood.members.empty()) {
        throw std::invalid_argument("neighborhood_stats: empty neighborhood");
    }
    std::vector<RatingEvent> events;
    for (const auto& [user, similarity] : neighborhood.members) {
        if (weighted && similarity <= 0.0) continue;  // clamped to zero, event dropped
        const auto* indices = train_index.indices_of(user);
        if (!indices) continue;
        for (const std::uint32_t idx : *indices) {
            RatingEvent event = train[idx];
            if (weighted) event.weight = similarity;
            events.push_back(event);
        }
    }
    if (events.empty()) {
        if (weighted) {
            throw DataError("neighborhood_stats: all member similarities non-positive");
        }
        throw DataError("neighborhood_stats: neighborhood members have no training ratings");
    }
    return sufficient_stats(events);
}

namespace {
constexpr std::uint64_t kFeatureMagic = 0x5342524543554631ULL;  // "SBRECUF1"
}

void save_features(const UserFeatures& features, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_features: cannot open " + path.string());
    const auto write_u64 = [&out](std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    write_u64(kFeatureMagic);
    write_u64(static_cast<std::uint64_t>(features.rank));
    write_u64(features.features.size());
    write_u64(features.training_fingerprint);
    for (const auto& [user, vec] : features.features) {
        out.write(reinterpret_cast<const char*>(&user), sizeof(user));
        out.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(vec.size() * sizeof(double)));
    }
    if (!out) throw DataError("save_features: write failed for " + path.string());
}

UserFeatures load_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_features: cannot open " + path.string());
    const auto read_u64 = [&in, &path]() {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw DataError("load_features: truncated file " + path.string());
        return v;
    };
    if (read_u64() != kFeatureMagic) {
        throw DataError("load_features: not a feature cache file: " + path.string());
    }
    UserFeatures features;
    features.rank = static_cast<int>(read_u64());
    const std::uint64_t count = read_u64();
    features.training_fingerprint = read_u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        UserId user = 0;
        in.read(reinterpret_cast<char*>(&user), sizeof(user));
        std::vector<double> vec(static_cast<std::size_t>(features.rank));
        in.read(reinterpret_cast<char*>(vec.data()),
                static_cast<std::streamsize>(vec.size() * sizeof(double)));
        if (!in) throw DataError("load_features: truncated file " + path.string());
        features.features.emplace(user, std::move(vec));
    }
    return features;
}

}  // namespace sbrec
