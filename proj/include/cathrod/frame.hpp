#ifndef CATHROD_FRAME_HPP
#define CATHROD_FRAME_HPP

#include <Eigen/Dense>
#include <array>

namespace cathrod {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rotation state of one rod element. Components (q1,q2,q3,q4) with q4 the
// real part. Unit norm is expected wherever the frame is read as a rotation,
// but all maps below divide by |q|^2 so mild integrator drift stays harmless.
struct Quaternion {
    double q1 = 0.0, q2 = 0.0, q3 = 0.0, q4 = 1.0;

    Quaternion() = default;
    Quaternion(double a, double b, double c, double d) : q1(a), q2(b), q3(c), q4(d) {}
    explicit Quaternion(const Vec4& v) : q1(v[0]), q2(v[1]), q3(v[2]), q4(v[3]) {}

    Vec4 vec() const { return Vec4(q1, q2, q3, q4); }
    double squared_norm() const { return q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4; }
    double norm() const;
    Quaternion normalized() const;

    // Hamilton product; composing rotations so that directors(a*b) = R(a)*directors(b).
    Quaternion operator*(const Quaternion& rhs) const;
};

// Right-handed orthonormal director triad; d3 is the axis the centerline
// tangent is penalized toward.
struct DirectorFrame {
    Vec3 d1, d2, d3;
};

// Spatial strain rates u (per unit length) and angular velocities in the
// body (omega) and reference (omega0) frames. omega/omega0 are diagnostics;
// the integrator advances generalized quaternion coordinates directly.
struct MaterialRates {
    Vec3 u;
    Vec3 omega;
    Vec3 omega0;
};

// Director basis from a quaternion, normalized by |q|^2.
// Throws std::domain_error on a zero-norm quaternion.
DirectorFrame directors_from_quaternion(const Quaternion& q);

// The six constant skew matrices B1,B2,B3 (body) and B1_0,B2_0,B3_0 (reference)
// mapping quaternion derivatives to rotation rates.
const std::array<Mat4, 6>& b_matrices();

// u_k = 2/|q|^2 (B_k q . q'), omega_k = 2/|q|^2 (B_k q . qdot),
// omega0_k likewise with the reference-frame matrices.
MaterialRates material_rates(const Quaternion& q, const Vec4& dq_dsigma, const Vec4& dq_dt);

// B_k q as signed permutations (no matrix product); k in {0,1,2}.
Vec4 bk_times(int k, const Vec4& q);
Vec4 bk0_times(int k, const Vec4& q);

}  // namespace cathrod

#endif
