#include "cathrod/frame.hpp"

#include <cmath>
#include <stdexcept>

namespace cathrod {

double Quaternion::norm() const { return std::sqrt(squared_norm()); }

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n <= 0.0 || !std::isfinite(n)) throw std::domain_error("cannot normalize zero-norm quaternion");
    return Quaternion(q1 / n, q2 / n, q3 / n, q4 / n);
}

Quaternion Quaternion::operator*(const Quaternion& r) const {
    const Vec3 v1(q1, q2, q3), v2(r.q1, r.q2, r.q3);
    const Vec3 v = q4 * v2 + r.q4 * v1 + v1.cross(v2);
    return Quaternion(v[0], v[1], v[2], q4 * r.q4 - v1.dot(v2));
}

DirectorFrame directors_from_quaternion(const Quaternion& q) {
    const double s = q.squared_norm();
    if (s <= 0.0 || !std::isfinite(s)) throw std::domain_error("zero-norm quaternion has no director frame");
    const double inv = 1.0 / s;
    const double q1 = q.q1, q2 = q.q2, q3 = q.q3, q4 = q.q4;
    DirectorFrame f;
    f.d1 = inv * Vec3(q1 * q1 - q2 * q2 - q3 * q3 + q4 * q4, 2.0 * (q1 * q2 + q3 * q4), 2.0 * (q1 * q3 - q2 * q4));
    f.d2 = inv * Vec3(2.0 * (q1 * q2 - q3 * q4), -q1 * q1 + q2 * q2 - q3 * q3 + q4 * q4, 2.0 * (q2 * q3 + q1 * q4));
    f.d3 = inv * Vec3(2.0 * (q1 * q3 + q2 * q4), 2.0 * (q2 * q3 - q1 * q4), -q1 * q1 - q2 * q2 + q3 * q3 + q4 * q4);
    return f;
}

const std::array<Mat4, 6>& b_matrices() {
    static const std::array<Mat4, 6> mats = [] {
        std::array<Mat4, 6> m;
        m[0] << 0, 0, 0, 1,
                0, 0, 1, 0,
                0, -1, 0, 0,
                -1, 0, 0, 0;
        m[1] << 0, 0, -1, 0,
                0, 0, 0, 1,
                1, 0, 0, 0,
                0, -1, 0, 0;
        m[2] << 0, 1, 0, 0,
                -1, 0, 0, 0,
                0, 0, 0, 1,
                0, 0, -1, 0;
        m[3] << 0, 0, 0, 1,
                0, 0, -1, 0,
                0, 1, 0, 0,
                -1, 0, 0, 0;
        m[4] << 0, 0, 1, 0,
                0, 0, 0, 1,
                -1, 0, 0, 0,
                0, -1, 0, 0;
        m[5] << 0, -1, 0, 0,
                1, 0, 0, 0,
                0, 0, 0, 1,
                0, 0, -1, 0;
        return m;
    }();
    return mats;
}

Vec4 bk_times(int k, const Vec4& q) {
    switch (k) {
        case 0: return Vec4(q[3], q[2], -q[1], -q[0]);
        case 1: return Vec4(-q[2], q[3], q[0], -q[1]);
        default: return Vec4(q[1], -q[0], q[3], -q[2]);
    }
}

Vec4 bk0_times(int k, const Vec4& q) {
    switch (k) {
        case 0: return Vec4(q[3], -q[2], q[1], -q[0]);
        case 1: return Vec4(q[2], q[3], -q[0], -q[1]);
        default: return Vec4(-q[1], q[0], q[3], -q[2]);
    }
}

MaterialRates material_rates(const Quaternion& q, const Vec4& dq_dsigma, const Vec4& dq_dt) {
    const double s = q.squared_norm();
    if (s <= 0.0 || !std::isfinite(s)) throw std::domain_error("zero-norm quaternion has no material rates");
    const double c = 2.0 / s;
    const Vec4 qv = q.vec();
    MaterialRates r;
    for (int k = 0; k < 3; ++k) {
        r.u[k] = c * bk_times(k, qv).dot(dq_dsigma);
        r.omega[k] = c * bk_times(k, qv).dot(dq_dt);
        r.omega0[k] = c * bk0_times(k, qv).dot(dq_dt);
    }
    return r;
}

}  // namespace cathrod
