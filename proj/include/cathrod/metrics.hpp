#ifndef CATHROD_METRICS_HPP
#define CATHROD_METRICS_HPP

#include <string>
#include <vector>

#include "cathrod/rod.hpp"

namespace cathrod {

// Planar centerline samples in the fronto-parallel comparison plane,
// x along the undeformed axis and y along the load.
struct Centerline2D {
    std::vector<Eigen::Vector2d> points;
    std::string label;

    void validate() const;  // >= 2 finite samples
};

struct ErrorReport {
    double tip_error_fraction = 0.0;  // |tip_a - tip_b| / L
    double area_error = 0.0;          // enclosed area / L, m
    double rod_length = 0.0;
};

// Endpoint displacement difference normalized by rod length.
double tip_error(const Centerline2D& a, const Centerline2D& b, double length);

// Area of the polygon bounded by a forward and b reversed, divided by the
// rod length. Crossing curves are split at their intersections and the
// absolute sub-areas summed.
double area_error(const Centerline2D& a, const Centerline2D& b, double length);

// CSV interchange: header "index,x_m,y_m[,z_m]", UTF-8, LF, '.' decimal.
// A z column is accepted, dropped, and noted in *warnings. unit_scale
// converts file units to meters (1e-3 for digitized mm data).
Centerline2D read_centerline(const std::string& path, double unit_scale = 1.0,
                             std::vector<std::string>* warnings = nullptr);
void write_centerline(const Centerline2D& curve, const std::string& path);

}  // namespace cathrod

#endif
