#include "cathrod/rod.hpp"

#include <cmath>

#include "cathrod/kernels/rod_kernels.hpp"

namespace cathrod {

namespace {
constexpr double kPi = 3.14159265358979323846;

const double* pts_flat(const RodState& s) { return s.points.data()->data(); }
const double* quats_flat_begin(const RodState& s, std::vector<double>& buf) {
    buf.resize(4 * s.quaternions.size());
    for (size_t i = 0; i < s.quaternions.size(); ++i) {
        buf[4 * i] = s.quaternions[i].q1;
        buf[4 * i + 1] = s.quaternions[i].q2;
        buf[4 * i + 2] = s.quaternions[i].q3;
        buf[4 * i + 3] = s.quaternions[i].q4;
    }
    return buf.data();
}

std::vector<double> rest_lengths(const RodParameters& p) {
    return std::vector<double>(p.num_elements(), p.rest_length());
}

// Bending junction between the fixed wall frame and the first element
// quaternion, spanning the clamped half-element. Returns the energy and
// accumulates the gradient on q0 when grad_q0 is given.
double wall_junction(const Quaternion& wall, const Quaternion& q0, double spacing, double weight,
                     const Vec3& kdiag, const Vec3& uhat, Vec4* grad_q0) {
    const Vec4 qa = wall.vec();
    const Vec4 qb = q0.vec();
    const Vec4 qbar = 0.5 * (qa + qb);
    const Vec4 qp = (qb - qa) / spacing;
    const double s = qbar.squaredNorm();
    double energy = 0.0;
    for (int k = 0; k < 3; ++k) {
        const Vec4 bq = bk_times(k, qbar);
        const double u = 2.0 / s * bq.dot(qp);
        const double err = u - uhat[k];
        energy += 0.5 * weight * kdiag[k] * err * err;
        if (grad_q0) {
            const Vec4 bqp = bk_times(k, qp);
            const Vec4 du = (2.0 / s) * (bq / spacing - 0.5 * bqp) - (u / s) * qbar;
            *grad_q0 += weight * kdiag[k] * err * du;
        }
    }
    return energy;
}
}  // namespace

double RodParameters::stretch_stiffness() const { return youngs_stretch * kPi * radius * radius; }

Vec3 RodParameters::stiffness_tensor() const {
    const double r4 = radius * radius * radius * radius;
    const double g = effective_shear_modulus();
    Vec3 k(youngs_bend * kPi * r4 / 4.0, youngs_bend * kPi * r4 / 4.0, g * kPi * r4 / 2.0);
    if (stiffness_variant == StiffnessVariant::CordeOriginal) k *= 2.0;
    return k;
}

void RodParameters::validate() const {
    if (!(youngs_bend > 0.0)) throw ConfigError("youngs_bend must be positive");
    if (!(youngs_stretch > 0.0)) throw ConfigError("youngs_stretch must be positive");
    if (!(density > 0.0)) throw ConfigError("density must be positive");
    if (!(radius > 0.0)) throw ConfigError("radius must be positive");
    if (!(length > 0.0)) throw ConfigError("length must be positive");
    if (!(penalty_constant >= 0.0)) throw ConfigError("penalty_constant must be non-negative");
    if (num_points < 3) throw ConfigError("num_points must be at least 3");
    if (!intrinsic_curvature.allFinite()) throw ConfigError("intrinsic_curvature must be finite");
}

void BoundaryConditions::validate(int num_points) const {
    for (const auto& pl : point_loads) {
        if (pl.index < 0 || pl.index >= num_points) throw ConfigError("point load index out of range");
        if (!pl.force.allFinite()) throw ConfigError("point load force must be finite");
    }
    if (gravity && !gravity->allFinite()) throw ConfigError("gravity must be finite");
}

RodState make_rod(const RodParameters& params, const BasePose& base) {
    params.validate();
    const Quaternion q = base.orientation;
    if (!(q.squared_norm() > 0.0)) throw ConfigError("base orientation quaternion has zero norm");
    const Vec3 axis = directors_from_quaternion(q).d3;

    RodState s;
    const int n = params.num_points;
    const double l0 = params.rest_length();
    s.points.resize(n);
    s.point_velocities.assign(n, Vec3::Zero());
    s.quaternions.assign(n - 1, q);
    s.quaternion_rates.assign(n - 1, Vec4::Zero());
    for (int i = 0; i < n; ++i) s.points[i] = base.position + (i * l0) * axis;
    return s;
}

double stretch_energy(const RodState& state, const RodParameters& params) {
    const auto rest = rest_lengths(params);
    return kernels::active_kernels().stretch_energy_grad(pts_flat(state), rest.data(),
                                                         params.num_elements(),
                                                         params.stretch_stiffness(), nullptr);
}

double bend_energy(const RodState& state, const RodParameters& params) {
    const auto rest = rest_lengths(params);
    std::vector<double> qbuf;
    const double* quats = quats_flat_begin(state, qbuf);
    const Vec3 k = params.stiffness_tensor();
    return kernels::active_kernels().bend_energy_grad(quats, rest.data(), params.num_elements(),
                                                      k.data(), params.intrinsic_curvature.data(),
                                                      true, true, nullptr);
}

double penalty_energy(const RodState& state, const RodParameters& params) {
    const auto rest = rest_lengths(params);
    std::vector<double> qbuf;
    const double* quats = quats_flat_begin(state, qbuf);
    return kernels::active_kernels().penalty_energy_grad(pts_flat(state), quats, rest.data(),
                                                         params.num_elements(),
                                                         params.penalty_constant, nullptr, nullptr);
}

double total_energy(const RodState& state, const RodParameters& params) {
    return stretch_energy(state, params) + bend_energy(state, params) + penalty_energy(state, params);
}

double boundary_energy(const RodState& state, const RodParameters& params,
                       const BoundaryConditions& bc) {
    if (!bc.clamped_base) return 0.0;
    const double half = 0.5 * params.rest_length();
    return wall_junction(bc.clamp_orientation, state.quaternions[0], half, half,
                         params.stiffness_tensor(), params.intrinsic_curvature, nullptr);
}

double system_energy(const RodState& state, const RodParameters& params,
                     const BoundaryConditions& bc) {
    return total_energy(state, params) + boundary_energy(state, params, bc);
}

GeneralizedForces assemble_forces(const RodState& state, const RodParameters& params,
                                  const BoundaryConditions& bc) {
    const int n = state.num_points();
    const int ne = state.num_elements();
    bc.validate(n);

    const auto rest = rest_lengths(params);
    std::vector<double> qbuf;
    const double* quats = quats_flat_begin(state, qbuf);

    std::vector<double> grad_pts(3 * n, 0.0);
    std::vector<double> grad_quats(4 * ne, 0.0);

    const auto& k = kernels::active_kernels();
    k.stretch_energy_grad(pts_flat(state), rest.data(), ne, params.stretch_stiffness(), grad_pts.data());
    k.penalty_energy_grad(pts_flat(state), quats, rest.data(), ne, params.penalty_constant,
                          grad_pts.data(), grad_quats.data());
    const Vec3 kt = params.stiffness_tensor();
    k.bend_energy_grad(quats, rest.data(), ne, kt.data(), params.intrinsic_curvature.data(),
                       !bc.clamped_base, true, grad_quats.data());

    GeneralizedForces f;
    f.on_points.resize(n);
    f.on_quats.resize(ne);
    for (int i = 0; i < n; ++i)
        f.on_points[i] = -Vec3(grad_pts[3 * i], grad_pts[3 * i + 1], grad_pts[3 * i + 2]);
    for (int j = 0; j < ne; ++j)
        f.on_quats[j] = -Vec4(grad_quats[4 * j], grad_quats[4 * j + 1], grad_quats[4 * j + 2],
                              grad_quats[4 * j + 3]);

    if (bc.clamped_base) {
        Vec4 grad_q0 = Vec4::Zero();
        const double half = 0.5 * params.rest_length();
        wall_junction(bc.clamp_orientation, state.quaternions[0], half, half,
                      params.stiffness_tensor(), params.intrinsic_curvature, &grad_q0);
        f.on_quats[0] -= grad_q0;
    }

    for (const auto& pl : bc.point_loads) f.on_points[pl.index] += pl.force;
    if (bc.gravity) {
        const MassDiagonal m = mass_matrix(params);
        for (int i = 0; i < n; ++i) f.on_points[i] += m.point_mass[i] * (*bc.gravity);
    }

    if (bc.clamped_base) f.on_points[0].setZero();
    return f;
}

MassDiagonal mass_matrix(const RodParameters& params) {
    params.validate();
    const int n = params.num_points;
    const double l0 = params.rest_length();
    const double mu = params.density * kPi * params.radius * params.radius;  // mass per length

    MassDiagonal m;
    m.point_mass.assign(n, mu * l0);
    m.point_mass.front() = 0.5 * mu * l0;
    m.point_mass.back() = 0.5 * mu * l0;

    // Rotational lumping: polar gyration r^2/2 for thick elements; slender
    // elements (hair-like tendons) take the transverse l^2/12 instead, which
    // keeps the implicit system's quaternion rows conditioned.
    const double gyr2 = std::max(params.radius * params.radius / 2.0, l0 * l0 / 12.0);
    m.quat_mass.assign(n - 1, mu * l0 * gyr2);
    return m;
}

double centerline_length(const RodState& state) {
    double len = 0.0;
    for (int i = 0; i + 1 < state.num_points(); ++i) len += (state.points[i + 1] - state.points[i]).norm();
    return len;
}

double max_tangent_defect(const RodState& state) {
    double worst = 0.0;
    for (int e = 0; e < state.num_elements(); ++e) {
        const Vec3 d = state.points[e + 1] - state.points[e];
        const Vec3 t = d / d.norm();
        const Vec3 d3 = directors_from_quaternion(state.quaternions[e]).d3;
        worst = std::max(worst, (t - d3).norm());
    }
    return worst;
}

Eigen::VectorXd pack_positions(const RodState& state) {
    const int n = state.num_points();
    Eigen::VectorXd x(rod_coord_count(n));
    for (int i = 0; i < n; ++i) x.segment<3>(rod_point_offset(n, i)) = state.points[i];
    for (int j = 0; j < n - 1; ++j) x.segment<4>(rod_quat_offset(n, j)) = state.quaternions[j].vec();
    return x;
}

Eigen::VectorXd pack_velocities(const RodState& state) {
    const int n = state.num_points();
    Eigen::VectorXd v(rod_coord_count(n));
    for (int i = 0; i < n; ++i) v.segment<3>(rod_point_offset(n, i)) = state.point_velocities[i];
    for (int j = 0; j < n - 1; ++j) v.segment<4>(rod_quat_offset(n, j)) = state.quaternion_rates[j];
    return v;
}

void unpack_positions(const Eigen::VectorXd& x, RodState& state) {
    const int n = state.num_points();
    for (int i = 0; i < n; ++i) state.points[i] = x.segment<3>(rod_point_offset(n, i));
    for (int j = 0; j < n - 1; ++j) state.quaternions[j] = Quaternion(Vec4(x.segment<4>(rod_quat_offset(n, j))));
}

void unpack_velocities(const Eigen::VectorXd& v, RodState& state) {
    const int n = state.num_points();
    for (int i = 0; i < n; ++i) state.point_velocities[i] = v.segment<3>(rod_point_offset(n, i));
    for (int j = 0; j < n - 1; ++j) state.quaternion_rates[j] = v.segment<4>(rod_quat_offset(n, j));
}

Eigen::VectorXd pack_forces(const GeneralizedForces& f) {
    const int n = static_cast<int>(f.on_points.size());
    Eigen::VectorXd out(rod_coord_count(n));
    for (int i = 0; i < n; ++i) out.segment<3>(rod_point_offset(n, i)) = f.on_points[i];
    for (int j = 0; j < n - 1; ++j) out.segment<4>(rod_quat_offset(n, j)) = f.on_quats[j];
    return out;
}

Eigen::VectorXd pack_mass(const MassDiagonal& m) {
    const int n = static_cast<int>(m.point_mass.size());
    Eigen::VectorXd out(rod_coord_count(n));
    for (int i = 0; i < n; ++i) out.segment<3>(rod_point_offset(n, i)).setConstant(m.point_mass[i]);
    for (int j = 0; j < n - 1; ++j) out.segment<4>(rod_quat_offset(n, j)).setConstant(m.quat_mass[j]);
    return out;
}

}  // namespace cathrod
