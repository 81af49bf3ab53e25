#include "sbrec/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "sbrec/data.hpp"

namespace sbrec {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double inf_norm(std::span<const double> v) {
    double max_abs = 0.0;
    for (const double x : v) max_abs = std::max(max_abs, std::abs(x));
    return max_abs;
}

struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

// phi(alpha) = f(x + alpha*d); evaluates objective and directional derivative.
struct LineEval {
    double alpha;
    double value;
    double slope;
};

class LineFunction {
public:
    LineFunction(const ObjectiveFn& f, std::span<const double> x, std::span<const double> d)
        : f_(f), x_(x), d_(d), trial_(x.size()), grad_(x.size()) {}

    LineEval operator()(double alpha) {
        for (std::size_t i = 0; i < x_.size(); ++i) trial_[i] = x_[i] + alpha * d_[i];
        const double value = f_(trial_, grad_);
        return {alpha, value, dot(grad_, d_)};
    }

    const std::vector<double>& point() const { return trial_; }
    const std::vector<double>& gradient() const { return grad_; }

private:
    const ObjectiveFn& f_;
    std::span<const double> x_;
    std::span<const double> d_;
    std::vector<double> trial_;
    std::vector<double> grad_;
};

constexpr double kArmijo = 1e-4;
constexpr double kWolfe = 0.9;

// Interpolating zoom (Nocedal & Wright alg. 3.6, bisection variant).
bool zoom(LineFunction& phi, LineEval lo, LineEval hi, const LineEval& origin, int max_steps,
          LineEval* out) {
    for (int i = 0; i < max_steps; ++i) {
        const double alpha = 0.5 * (lo.alpha + hi.alpha);
        const LineEval trial = phi(alpha);
        if (trial.value > origin.value + kArmijo * alpha * origin.slope || trial.value >= lo.value) {
            hi = trial;
        } else {
            if (std::abs(trial.slope) <= -kWolfe * origin.slope) {
                *out = trial;
                return true;
            }
            if (trial.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = trial;
        }
        if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    }
    // fall back to the best sufficient-decrease point found
    if (lo.alpha > 0.0 && lo.value < origin.value) {
        *out = phi(lo.alpha);
        return true;
    }
    return false;
}

bool line_search(LineFunction& phi, const LineEval& origin, double initial_step, int max_steps,
                 LineEval* out) {
    LineEval prev = origin;
    double alpha = initial_step;
    for (int i = 0; i < max_steps; ++i) {
        const LineEval trial = phi(alpha);
        if (trial.value > origin.value + kArmijo * alpha * origin.slope ||
            (i > 0 && trial.value >= prev.value)) {
            return zoom(phi, prev, trial, origin, max_steps, out);
        }
        if (std::abs(trial.slope) <= -kWolfe * origin.slope) {
            *out = trial;
            return true;
        }
        if (trial.slope >= 0.0) {
            return zoom(phi, trial, prev, origin, max_steps, out);
        }
        prev = trial;
        alpha = std::min(alpha * 2.0, 1e10);
    }
    return false;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& f, std::vector<double> x0,
                           const LbfgsOptions& options) {
    const std::size_t dim = x0.size();
    LbfgsResult result;
    result.x = std::move(x0);
    std::vector<double> grad(dim);
    double fx = f(result.x, grad);
    if (!std::isfinite(fx)) throw NumericError("lbfgs: objective not finite at start");
    result.objective_trace.push_back(fx);

    std::deque<CurvaturePair> history;
    std::vector<double> direction(dim), alpha_buffer;

    double g_inf = inf_norm(grad);
    int iteration = 0;
    while (g_inf > options.gradient_tolerance && iteration < options.max_iterations) {
        // two-loop recursion: direction = -H * grad
        direction.assign(grad.begin(), grad.end());
        alpha_buffer.assign(history.size(), 0.0);
        for (std::size_t i = history.size(); i-- > 0;) {
            const auto& pair = history[i];
            alpha_buffer[i] = pair.rho * dot(pair.s, direction);
            for (std::size_t j = 0; j < dim; ++j) direction[j] -= alpha_buffer[i] * pair.y[j];
        }
        if (!history.empty()) {
            const auto& last = history.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& v : direction) v *= gamma;
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            const auto& pair = history[i];
            const double beta = pair.rho * dot(pair.y, direction);
            for (std::size_t j = 0; j < dim; ++j) direction[j] += (alpha_buffer[i] - beta) * pair.s[j];
        }
        for (double& v : direction) v = -v;

        double slope = dot(grad, direction);
        if (!(slope < 0.0)) {
            // not a descent direction (can only happen from numeric noise);
            // fall back to steepest descent
            for (std::size_t j = 0; j < dim; ++j) direction[j] = -grad[j];
            slope = -dot(grad, grad);
            history.clear();
            if (!(slope < 0.0)) break;
        }

        LineFunction phi(f, result.x, direction);
        const LineEval origin{0.0, fx, slope};
        const double initial_step =
            history.empty() ? std::min(1.0, 1.0 / std::max(std::sqrt(-slope), 1e-12)) : 1.0;
        LineEval accepted{};
        if (!line_search(phi, origin, initial_step, options.max_line_search_steps, &accepted)) {
            break;  // no further progress possible at working precision
        }
        if (!std::isfinite(accepted.value)) throw NumericError("lbfgs: objective overflow");

        CurvaturePair pair;
        pair.s.resize(dim);
        pair.y.resize(dim);
        const auto& x_new = phi.point();
        const auto& g_new = phi.gradient();
        for (std::size_t j = 0; j < dim; ++j) {
            pair.s[j] = x_new[j] - result.x[j];
            pair.y[j] = g_new[j] - grad[j];
        }
        const double sy = dot(pair.s, pair.y);
        const double s_norm = std::sqrt(dot(pair.s, pair.s));
        const double y_norm = std::sqrt(dot(pair.y, pair.y));
        if (sy > 1e-10 * s_norm * y_norm) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (history.size() > static_cast<std::size_t>(std::max(options.memory, 1))) {
                history.pop_front();
            }
        }

        result.x = x_new;
        grad.assign(g_new.begin(), g_new.end());
        fx = accepted.value;
        result.objective_trace.push_back(fx);
        g_inf = inf_norm(grad);
        ++iteration;
    }

    result.objective = fx;
    result.gradient_inf_norm = g_inf;
    result.iterations = iteration;
    result.converged = g_inf <= options.gradient_tolerance;
    return result;
}

}  // namespace sbrec
