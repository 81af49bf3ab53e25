#include "sbrec/deming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sbrec/rng.hpp"

namespace sbrec {

std::vector<TlsPoint> tls_points(const ItemStats& stats) {
    if (stats.counts.empty()) throw std::invalid_argument("tls_points: empty statistics");
    std::vector<TlsPoint> points;
    points.reserve(stats.counts.size());
    for (const auto& [item, count] : stats.counts) {
        const double sum = stats.sums.at(item);
        points.push_back({std::log(count / stats.total_n), sum / count, 1.0 / count,
                          stats.sigma2 / count});
    }
    return points;
}

namespace {

// Distance of each point to the line {y*cos(phi) - x*sin(phi) = c} measured
// along the normal in the weight metric: residual^2 / (vy*cos^2 + vx*sin^2).
// For fixed phi the optimal offset c is the weighted mean of the rotated
// coordinates, so the outer search is one-dimensional.
double angle_objective(std::span<const TlsPoint> points, double phi, double* offset_out) {
    const double cos_phi = std::cos(phi);
    const double sin_phi = std::sin(phi);
    const double cos2 = cos_phi * cos_phi;
    const double sin2 = sin_phi * sin_phi;
    double weight_total = 0.0;
    double weighted_z = 0.0;
    for (const auto& p : points) {
        const double u = 1.0 / (p.vy * cos2 + p.vx * sin2);
        weight_total += u;
        weighted_z += u * (p.y * cos_phi - p.x * sin_phi);
    }
    const double c = weighted_z / weight_total;
    double objective = 0.0;
    for (const auto& p : points) {
        const double u = 1.0 / (p.vy * cos2 + p.vx * sin2);
        const double residual = p.y * cos_phi - p.x * sin_phi - c;
        objective += u * residual * residual;
    }
    if (offset_out) *offset_out = c;
    return objective;
}

double golden_section(std::span<const TlsPoint> points, double lo, double hi, double tol) {
    constexpr double kRatio = 0.6180339887498949;  // (sqrt(5)-1)/2
    double a = lo, b = hi;
    double c = b - kRatio * (b - a);
    double d = a + kRatio * (b - a);
    double fc = angle_objective(points, c, nullptr);
    double fd = angle_objective(points, d, nullptr);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kRatio * (b - a);
            fc = angle_objective(points, c, nullptr);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kRatio * (b - a);
            fd = angle_objective(points, d, nullptr);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

double tls_objective(std::span<const TlsPoint> points, double slope, double intercept) {
    double total = 0.0;
    for (const auto& p : points) {
        const double residual = p.y - slope * p.x - intercept;
        total += residual * residual / (p.vy + slope * slope * p.vx);
    }
    return total;
}

BiasLine fit_weighted_tls(std::span<const TlsPoint> points) {
    if (points.size() < 2) throw std::invalid_argument("fit_weighted_tls: need at least 2 points");
    double x_min = points[0].x, x_max = points[0].x;
    double y_min = points[0].y, y_max = points[0].y;
    for (const auto& p : points) {
        if (!(p.vx > 0.0) || !(p.vy > 0.0)) {
            throw std::invalid_argument("fit_weighted_tls: variance weights must be > 0");
        }
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    const double x_spread = x_max - x_min;
    const double y_spread = y_max - y_min;
    const double scale = std::max({std::abs(x_min), std::abs(x_max), std::abs(y_min),
                                   std::abs(y_max), 1.0});
    if (x_spread <= 1e-12 * scale && y_spread <= 1e-12 * scale) {
        throw std::invalid_argument("fit_weighted_tls: all points coincident");
    }
    if (x_spread <= 1e-12 * scale) {
        throw VerticalLineError("fit_weighted_tls: optimum is a vertical line (all x identical)");
    }

    // The objective is pi-periodic in the angle; search 16 brackets covering
    // one period, then keep the best refined minimum.
    constexpr double kPi = 3.14159265358979323846;
    constexpr int kBrackets = 16;
    double best_phi = 0.0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kBrackets; ++i) {
        const double lo = -kPi / 2 + kPi * i / kBrackets;
        const double hi = -kPi / 2 + kPi * (i + 1) / kBrackets;
        const double phi = golden_section(points, lo, hi, 1e-10);
        const double value = angle_objective(points, phi, nullptr);
        if (value < best_value) {
            best_value = value;
            best_phi = phi;
        }
    }

    const double cos_phi = std::cos(best_phi);
    if (std::abs(cos_phi) < 1e-12) {
        throw VerticalLineError("fit_weighted_tls: optimum is a vertical line");
    }
    double offset = 0.0;
    angle_objective(points, best_phi, &offset);
    BiasLine line;
    line.slope = std::tan(best_phi);
    line.intercept = offset / cos_phi;
    line.objective = tls_objective(points, line.slope, line.intercept);
    return line;
}

SubsetSlopes subset_slopes(std::span<const RatingEvent> events, int subset_user_count,
                           int num_subsets, std::uint64_t seed) {
    if (subset_user_count < 1) {
        throw std::invalid_argument("subset_slopes: subset_user_count must be >= 1");
    }
    const UserIndex index(events);
    const std::vector<UserId> users = index.users();
    if (users.size() < static_cast<std::size_t>(subset_user_count)) {
        throw std::invalid_argument("subset_slopes: dataset has fewer users than subset size");
    }

    SubsetSlopes result;
    result.slopes.reserve(static_cast<std::size_t>(std::max(num_subsets, 0)));
    std::vector<RatingEvent> subset;
    for (int j = 0; j < num_subsets; ++j) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
        const auto chosen = rng.sample_without_replacement(std::span<const UserId>(users),
                                                           static_cast<std::size_t>(subset_user_count));
        subset.clear();
        for (const UserId user : chosen) {
            for (const std::uint32_t idx : *index.indices_of(user)) {
                subset.push_back(events[idx]);
            }
        }
        if (subset.empty()) {
            ++result.skipped;
            continue;
        }
        const ItemStats stats = sufficient_stats(subset);
        if (stats.num_items() < 2) {
            ++result.skipped;
            continue;
        }
        try {
            const auto points = tls_points(stats);
            result.slopes.push_back(fit_weighted_tls(points).slope);
        } catch (const VerticalLineError&) {
            ++result.skipped;
        } catch (const std::invalid_argument&) {
            ++result.skipped;
        }
    }
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
    return 0.5 * (values[mid - 1] + upper);
}

}  // namespace sbrec
