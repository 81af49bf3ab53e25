#pragma once

#include <span>
#include <vector>

#include "sbrec/data.hpp"

namespace sbrec {

// Per-item point for the bias regression: x = ln(N_k/n), y = S_k/N_k, with
// variance weights vx = 1/N_k and vy = sigma^2/N_k.
struct TlsPoint {
    double x;
    double y;
    double vx;
    double vy;
};

// Fitted line y = slope*x + intercept together with the minimized weighted
// orthogonal-residual sum.
struct BiasLine {
    double slope;
    double intercept;
    double objective;
};

// The optimum is a vertical line (all x identical, y varying); no finite
// slope exists.
struct VerticalLineError : NumericError {
    using NumericError::NumericError;
};

std::vector<TlsPoint> tls_points(const ItemStats& stats);

// Weighted total least squares (Deming) fit. The line is parametrized by its
// angle; the outer 1-D problem is solved by golden-section search restarted
// from 16 equispaced brackets.
BiasLine fit_weighted_tls(std::span<const TlsPoint> points);

// Evaluates the weighted orthogonal-residual sum at a given line. Each point
// contributes (y - a*x - b)^2 / (vy + a^2 * vx), the residual at its closest
// point on the line in the weight metric.
double tls_objective(std::span<const TlsPoint> points, double slope, double intercept);

struct SubsetSlopes {
    std::vector<double> slopes;
    int skipped = 0;  // subsets with too few rated items or a degenerate fit
};

// Slope distribution over random sub-populations of `subset_user_count`
// users. Deterministic given the seed; subset j uses sub-seed mix(seed, j).
SubsetSlopes subset_slopes(std::span<const RatingEvent> events, int subset_user_count,
                           int num_subsets, std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace sbrec
