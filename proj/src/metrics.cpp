#include "cathrod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cathrod {

using Eigen::Vector2d;

void Centerline2D::validate() const {
    if (points.size() < 2) throw ConfigError("centerline needs at least 2 samples");
    for (const auto& p : points)
        if (!p.allFinite()) throw ConfigError("centerline contains non-finite coordinates");
}

double tip_error(const Centerline2D& a, const Centerline2D& b, double length) {
    if (!(length > 0.0)) throw ConfigError("tip_error needs a positive rod length");
    a.validate();
    b.validate();
    return (a.points.back() - b.points.back()).norm() / length;
}

namespace {
double cross2(const Vector2d& u, const Vector2d& v) { return u.x() * v.y() - u.y() * v.x(); }

double shoelace(const std::vector<Vector2d>& poly) {
    double s = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vector2d& p = poly[i];
        const Vector2d& q = poly[(i + 1) % poly.size()];
        s += cross2(p, q);
    }
    return 0.5 * s;
}

struct Crossing {
    int seg_a = 0, seg_b = 0;
    double t = 0.0, u = 0.0;
    Vector2d point = Vector2d::Zero();
};

// Transversal interior intersections between the two chains; touching or
// collinear overlaps do not split anything.
std::vector<Crossing> find_crossings(const Centerline2D& a, const Centerline2D& b) {
    std::vector<Crossing> out;
    constexpr double eps = 1e-12;
    for (int i = 0; i + 1 < static_cast<int>(a.points.size()); ++i) {
        const Vector2d p = a.points[i];
        const Vector2d r = a.points[i + 1] - p;
        for (int j = 0; j + 1 < static_cast<int>(b.points.size()); ++j) {
            const Vector2d q = b.points[j];
            const Vector2d s = b.points[j + 1] - q;
            const double denom = cross2(r, s);
            if (std::abs(denom) < eps * r.norm() * s.norm()) continue;
            const double t = cross2(q - p, s) / denom;
            const double u = cross2(q - p, r) / denom;
            if (t <= eps || t >= 1.0 - eps || u <= eps || u >= 1.0 - eps) continue;
            out.push_back({i, j, t, u, p + t * r});
        }
    }
    std::sort(out.begin(), out.end(), [](const Crossing& x, const Crossing& y) {
        return x.seg_a != y.seg_a ? x.seg_a < y.seg_a : x.t < y.t;
    });
    return out;
}
}  // namespace

double area_error(const Centerline2D& a, const Centerline2D& b, double length) {
    if (!(length > 0.0)) throw ConfigError("area_error needs a positive rod length");
    a.validate();
    b.validate();
    if ((a.points.front() - b.points.front()).norm() > 1e-6)
        throw ConfigError("area_error expects curves sharing their start point within 1e-6 m");

    const std::vector<Crossing> crossings = find_crossings(a, b);

    // Walk sub-loops between consecutive split points (the shared start,
    // each crossing, the tip gap), each bounded by a forward and b reversed.
    double total = 0.0;
    int ia = 0, ib = 0;  // segment the walk currently stands on, per chain
    Vector2d entry_a = a.points.front();
    Vector2d entry_b = b.points.front();
    for (size_t k = 0; k <= crossings.size(); ++k) {
        const bool last = k == crossings.size();
        const int stop_a = last ? static_cast<int>(a.points.size()) - 1 : crossings[k].seg_a;
        const int stop_b = last ? static_cast<int>(b.points.size()) - 1 : crossings[k].seg_b;
        std::vector<Vector2d> poly;
        poly.push_back(entry_a);
        for (int i = ia + 1; i <= stop_a; ++i) poly.push_back(a.points[i]);
        if (!last) poly.push_back(crossings[k].point);
        for (int j = stop_b; j >= ib + 1; --j) poly.push_back(b.points[j]);
        poly.push_back(entry_b);
        total += std::abs(shoelace(poly));
        if (!last) {
            entry_a = entry_b = crossings[k].point;
            ia = crossings[k].seg_a;
            ib = crossings[k].seg_b;
        }
    }
    return total / length;
}

Centerline2D read_centerline(const std::string& path, double unit_scale,
                             std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open centerline file: " + path);

    Centerline2D curve;
    curve.label = path;
    std::string line;
    int line_no = 0;
    long prev_index = -1;
    bool dropped_z = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("index", 0) == 0) continue;  // header
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ','))
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("parse error at line " + std::to_string(line_no) + " of " + path);
            }
        if (vals.size() != 3 && vals.size() != 4)
            throw ConfigError("parse error at line " + std::to_string(line_no) + " of " + path +
                              ": expected index,x_m,y_m[,z_m]");
        const long idx = static_cast<long>(vals[0]);
        if (idx <= prev_index)
            throw ConfigError("format error at line " + std::to_string(line_no) + " of " + path +
                              ": sample index must increase");
        prev_index = idx;
        if (vals.size() == 4) dropped_z = true;
        curve.points.emplace_back(unit_scale * vals[1], unit_scale * vals[2]);
    }
    if (curve.points.empty()) throw ConfigError("no samples in centerline file: " + path);
    if (dropped_z && warnings)
        warnings->push_back(path + ": 3D input projected to the fronto-parallel plane (z dropped)");
    curve.validate();
    return curve;
}

void write_centerline(const Centerline2D& curve, const std::string& path) {
    curve.validate();
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw ConfigError("cannot write centerline file: " + path);
    out << "index,x_m,y_m\n";
    char buf[96];
    for (size_t i = 0; i < curve.points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, curve.points[i].x(),
                      curve.points[i].y());
        out << buf;
    }
}

}  // namespace cathrod
