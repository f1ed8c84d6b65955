#include "cathrod/cantilever.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cathrod {

namespace {
constexpr double kPi = 3.14159265358979323846;

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                           -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
                           0.7966664774136267, 0.9602898564975363};
constexpr double kGw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                           0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss(F&& f, double a, double b, int panels) {
    const double hw = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * hw;
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) acc += kGw[i] * f(mid + 0.5 * hw * kGx[i]);
        total += 0.5 * hw * acc;
    }
    return total;
}

// integral_0^phi0 dphi / sqrt(sin phi0 - sin phi), with the endpoint
// singularity removed by sin phi = sin phi0 sin^2 theta.
double load_integral(double phi0) {
    const double s0 = std::sin(phi0);
    return gauss(
        [s0](double th) {
            const double p = s0 * std::sin(th) * std::sin(th);
            return 2.0 * std::sqrt(s0) * std::sin(th) / std::sqrt(std::max(1.0 - p * p, 1e-300));
        },
        0.0, kPi / 2.0, 16);
}
}  // namespace

CantileverProblem CantileverProblem::make(double force, double length, double youngs, double radius) {
    CantileverProblem p;
    p.load = force;
    p.length = length;
    p.youngs = youngs;
    p.area_moment = kPi * radius * radius * radius * radius / 4.0;
    p.load_parameter = force * length * length / (2.0 * youngs * p.area_moment);
    p.validate();
    return p;
}

void CantileverProblem::validate() const {
    if (!(load > 0.0)) throw ConfigError("cantilever load must be positive");
    if (!(length > 0.0)) throw ConfigError("cantilever length must be positive");
    if (!(youngs > 0.0)) throw ConfigError("cantilever youngs modulus must be positive");
    if (!(area_moment > 0.0)) throw ConfigError("cantilever area moment must be positive");
    const double alpha = load * length * length / (2.0 * youngs * area_moment);
    if (std::abs(alpha - load_parameter) > 1e-12 * std::max(1.0, std::abs(alpha)))
        throw ConfigError("load_parameter inconsistent with F, L, E, I");
}

double cantilever_load_residual(double phi0, double alpha) {
    return load_integral(phi0) - 2.0 * std::sqrt(alpha);
}

CantileverTable::CantileverTable(int grid_size) {
    if (grid_size < 3) throw ConfigError("cantilever table needs at least 3 grid points");
    phi0_.resize(grid_size);
    alpha_.resize(grid_size);
    const double dphi = (kPi / 2.0) / (grid_size + 1);
    for (int i = 0; i < grid_size; ++i) {
        phi0_[i] = (i + 1) * dphi;
        const double val = load_integral(phi0_[i]);
        alpha_[i] = 0.25 * val * val;
    }
}

double CantileverTable::phi0_from_alpha(double alpha) const {
    if (!(alpha > 0.0) || alpha < alpha_.front() || alpha > alpha_.back())
        throw std::out_of_range("alpha outside tabulated range [" + std::to_string(alpha_.front()) +
                                ", " + std::to_string(alpha_.back()) + "]");
    const auto it = std::lower_bound(alpha_.begin(), alpha_.end(), alpha);
    size_t hi = std::distance(alpha_.begin(), it);
    if (hi == 0) hi = 1;
    const size_t lo = hi - 1;

    double a = phi0_[lo], b = phi0_[hi];
    const double t = (alpha - alpha_[lo]) / (alpha_[hi] - alpha_[lo]);
    double phi = a + t * (b - a);
    // Bisection refinement inside the bracketing cell.
    double fa = cantilever_load_residual(a, alpha);
    for (int it2 = 0; it2 < 60; ++it2) {
        const double fm = cantilever_load_residual(phi, alpha);
        if (std::abs(fm) < 1e-10) return phi;
        if ((fa < 0.0) == (fm < 0.0)) {
            a = phi;
            fa = fm;
        } else {
            b = phi;
        }
        phi = 0.5 * (a + b);
    }
    return phi;
}

double phi0_from_alpha(double alpha, int grid_size) {
    if (grid_size == 20001) {
        static const CantileverTable table(20001);
        return table.phi0_from_alpha(alpha);
    }
    return CantileverTable(grid_size).phi0_from_alpha(alpha);
}

DeflectionCurve deflection_curve(const CantileverProblem& problem, double phi0, int samples) {
    problem.validate();
    if (samples < 2) throw ConfigError("deflection curve needs at least 2 samples");
    if (!(phi0 > 0.0 && phi0 < kPi / 2.0)) throw ConfigError("phi0 must lie in (0, pi/2)");

    const double ei = problem.youngs * problem.area_moment;
    const double f = problem.load;
    const double s0 = std::sin(phi0);
    const double cx = std::sqrt(2.0 * ei / f);
    const double cy = std::sqrt(ei / (2.0 * f));

    const auto y_integrand = [s0](double th) {
        const double st = std::sin(th);
        const double p = s0 * st * st;
        return 2.0 * std::pow(s0, 1.5) * st * st * st / std::sqrt(std::max(1.0 - p * p, 1e-300));
    };

    DeflectionCurve curve;
    curve.tip_angle = phi0;
    curve.samples.resize(samples);
    double y = 0.0;
    double theta_prev = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double phi = phi0 * k / (samples - 1);
        const double sp = std::sin(phi);
        const double theta = std::asin(std::clamp(std::sqrt(sp / s0), 0.0, 1.0));
        y += cy * gauss(y_integrand, theta_prev, theta, 4);
        theta_prev = theta;
        curve.samples[k] = {phi, cx * (std::sqrt(s0) - std::sqrt(std::max(s0 - sp, 0.0))), y};
    }
    return curve;
}

double euler_bernoulli_tip(const CantileverProblem& problem) {
    return problem.load * std::pow(problem.length, 3) / (3.0 * problem.youngs * problem.area_moment);
}

}  // namespace cathrod
