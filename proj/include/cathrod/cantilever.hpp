#ifndef CATHROD_CANTILEVER_HPP
#define CATHROD_CANTILEVER_HPP

#include <vector>

#include "cathrod/rod.hpp"

namespace cathrod {

// Analytical large-deflection cantilever: clamped rod of length L with a
// constant transverse endpoint load F. The deflection angle phi runs from 0
// at the clamp to phi0 at the free tip.
struct CantileverProblem {
    double load = 0.0;         // N
    double length = 0.0;       // m
    double youngs = 0.0;       // Pa
    double area_moment = 0.0;  // m^4, pi r^4/4 for a cylinder
    double load_parameter = 0.0;  // alpha = F L^2 / (2 E I)

    static CantileverProblem make(double force, double length, double youngs, double radius);
    void validate() const;  // throws ConfigError, checks alpha consistency
};

struct DeflectionSample {
    double phi = 0.0;  // rad
    double x = 0.0;    // m, along the undeformed axis
    double y = 0.0;    // m, along the load
};

struct DeflectionCurve {
    std::vector<DeflectionSample> samples;  // clamp first, tip last
    double tip_angle = 0.0;                 // phi0
};

// Residual of the load equation: integral(phi0) - 2 sqrt(alpha).
double cantilever_load_residual(double phi0, double alpha);

// Tabulated alpha(phi0) over (0, pi/2) with inverse lookup. Construction is
// the expensive part; the default-sized table is cached process-wide.
class CantileverTable {
  public:
    explicit CantileverTable(int grid_size = 20001);

    // Inverse lookup, refined inside the bracketing cell until the load
    // equation residual drops below 1e-10. Throws std::out_of_range with the
    // achievable bounds when alpha is outside the table.
    double phi0_from_alpha(double alpha) const;

    double alpha_min() const { return alpha_.front(); }
    double alpha_max() const { return alpha_.back(); }
    const std::vector<double>& alphas() const { return alpha_; }
    const std::vector<double>& phi0s() const { return phi0_; }

  private:
    std::vector<double> phi0_;
    std::vector<double> alpha_;
};

double phi0_from_alpha(double alpha, int grid_size = 20001);

// Samples the deflected shape on a uniform phi grid; phi0 must come from
// phi0_from_alpha for the arc length to equal the rod length.
DeflectionCurve deflection_curve(const CantileverProblem& problem, double phi0, int samples);

// Small-deflection tip transverse displacement F L^3 / (3 E I).
double euler_bernoulli_tip(const CantileverProblem& problem);

}  // namespace cathrod

#endif
