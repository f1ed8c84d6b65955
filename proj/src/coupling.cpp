#include "cathrod/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace cathrod {

namespace {
constexpr double kCoincident = 1e-12;

Vec3 unit_or_zero(const Vec3& v) {
    const double n = v.norm();
    return n > kCoincident ? Vec3(v / n) : Vec3(Vec3::Zero());
}
}  // namespace

void CouplingConfig::validate() const {
    if (!(lumen_offset >= 0.0)) throw ConfigError("lumen_offset must be non-negative");
    if (std::abs(weight_d1 * weight_d1 + weight_d2 * weight_d2 - 1.0) > 1e-9)
        throw ConfigError("direction weights must satisfy w1^2 + w2^2 = 1");
    if (!(lumen_constant >= 0.0) || !(endpoint_compliance_constant >= 0.0) ||
        !(endpoint_coupling_constant >= 0.0))
        throw ConfigError("coupling constants must be non-negative");
}

Vec3 tendon_direction(const Quaternion& q, const CouplingConfig& coupling) {
    const DirectorFrame f = directors_from_quaternion(q);
    return coupling.weight_d1 * f.d1 + coupling.weight_d2 * f.d2;
}

std::vector<Vec3> lumen_points(const RodState& catheter, const CouplingConfig& coupling) {
    const int n = catheter.num_points();
    const int ne = catheter.num_elements();
    std::vector<Vec3> lumen(n);
    for (int i = 0; i < n; ++i) {
        const int e = std::min(i, ne - 1);
        lumen[i] = catheter.points[i] +
                   coupling.lumen_offset * tendon_direction(catheter.quaternions[e], coupling);
    }
    return lumen;
}

Registration register_tendon(const RodState& tendon, const std::vector<Vec3>& lumen,
                             const RodState& catheter, const CouplingConfig& coupling) {
    Registration reg;
    const int nt = tendon.num_points();
    const int ne = catheter.num_elements();
    reg.entries.reserve(nt - 1);
    for (int i = 0; i + 1 < nt; ++i) {  // endpoint handled by the endpoint constraints
        int best = 0;
        double best_d2 = (lumen[0] - tendon.points[i]).squaredNorm();
        for (int j = 1; j < static_cast<int>(lumen.size()); ++j) {
            const double d2 = (lumen[j] - tendon.points[i]).squaredNorm();
            if (d2 < best_d2) {  // strict: ties keep the lower index
                best_d2 = d2;
                best = j;
            }
        }
        Registration::Entry e;
        e.tendon_point = i;
        e.nearest_lumen = best;
        e.parent_element = std::min(best, ne - 1);
        e.direction = tendon_direction(catheter.quaternions[e.parent_element], coupling);
        e.compliance = (lumen[best] - tendon.points[i]).dot(e.direction);
        reg.entries.push_back(e);
    }
    return reg;
}

void refresh_registration(Registration& reg, const RodState& tendon, const RodState& catheter,
                          const CouplingConfig& coupling) {
    const int ne = catheter.num_elements();
    for (auto& e : reg.entries) {
        const int adj = std::min(e.nearest_lumen, ne - 1);
        const Vec3 lum = catheter.points[e.nearest_lumen] +
                         coupling.lumen_offset *
                             tendon_direction(catheter.quaternions[adj], coupling);
        e.direction = tendon_direction(catheter.quaternions[e.parent_element], coupling);
        e.compliance = (lum - tendon.points[e.tendon_point]).dot(e.direction);
    }
}

CouplingForces lumen_forces(const Registration& reg, const CouplingConfig& coupling,
                            int num_tendon_points, int num_catheter_points) {
    CouplingForces out;
    out.on_tendon_points.assign(num_tendon_points, Vec3::Zero());
    out.on_catheter_points.assign(num_catheter_points, Vec3::Zero());

    std::vector<Vec3> parent_sum(num_catheter_points, Vec3::Zero());
    std::vector<int> parent_count(num_catheter_points, 0);
    for (const auto& e : reg.entries) {
        const Vec3 f = coupling.lumen_constant * e.compliance * e.direction;
        out.on_tendon_points[e.tendon_point] += f;
        parent_sum[e.parent_element] += f;
        parent_count[e.parent_element] += 1;
    }
    for (int p = 0; p < num_catheter_points; ++p) {
        if (parent_count[p] == 0) continue;
        const double scale = coupling.reaction_mode == ReactionMode::Average
                                 ? 1.0 / parent_count[p]
                                 : 1.0;
        out.on_catheter_points[p] -= scale * parent_sum[p];
    }
    return out;
}

void endpoint_forces(const CoupledSystem& system, CouplingForces& out) {
    const CouplingConfig& c = system.coupling;
    const int nt = system.tendon.num_points();
    const int nc = system.catheter.num_points();
    const Vec3 t_end = system.tendon.points[nt - 1];
    const Vec3 r_end = system.catheter.points[nc - 1];
    const Vec3 lumen_end =
        r_end + c.lumen_offset *
                    tendon_direction(system.catheter.quaternions[nc - 2], system.coupling);

    // Tether pulling the tendon endpoint to the lumen endpoint.
    const Vec3 gap = lumen_end - t_end;
    out.compliance_e = gap.norm();
    const Vec3 f_e = c.endpoint_compliance_constant * gap;
    out.on_tendon_points[nt - 1] += f_e;
    if (c.reaction_mode == ReactionMode::Sum) out.on_catheter_points[nc - 1] -= f_e;

    // Coupling spring holding the endpoints at the lumen offset.
    const Vec3 sep = t_end - r_end;
    const Vec3 dir = unit_or_zero(sep);
    out.compliance_c = sep.norm() > kCoincident ? sep.norm() - c.lumen_offset : 0.0;
    const Vec3 f_c = c.endpoint_coupling_constant * out.compliance_c * dir;
    out.on_tendon_points[nt - 1] -= f_c;
    out.on_catheter_points[nc - 1] += f_c;
}

CouplingForces coupling_forces(const CoupledSystem& system, const Registration& reg,
                               double actuation_scale) {
    CouplingForces out = lumen_forces(reg, system.coupling, system.tendon.num_points(),
                                      system.catheter.num_points());
    endpoint_forces(system, out);

    const double fa = system.actuation_force * actuation_scale;
    if (fa != 0.0) {
        const int nt = system.tendon.num_points();
        if (system.actuation_site == ActuationSite::Proximal) {
            const Vec3 tangent = unit_or_zero(system.tendon.points[1] - system.tendon.points[0]);
            out.on_tendon_points[0] -= fa * tangent;
        } else {
            // Pull the tendon endpoint back along the lumen axis at the tip.
            const int nc = system.catheter.num_points();
            const Vec3 tangent =
                unit_or_zero(system.catheter.points[nc - 1] - system.catheter.points[nc - 2]);
            out.on_tendon_points[nt - 1] -= fa * tangent;
        }
    }
    return out;
}

Vec3 coupling_force_balance(const CoupledSystem& system, const Registration& reg) {
    CouplingForces f = lumen_forces(reg, system.coupling, system.tendon.num_points(),
                                    system.catheter.num_points());
    endpoint_forces(system, f);
    Vec3 net = Vec3::Zero();
    for (const auto& v : f.on_tendon_points) net += v;
    for (const auto& v : f.on_catheter_points) net += v;
    return net;
}

Eigen::VectorXd coupled_forces(const CoupledSystem& system, const Registration& reg,
                               double actuation_scale) {
    GeneralizedForces fc = assemble_forces(system.catheter, system.catheter_params, system.catheter_bc);
    GeneralizedForces ft = assemble_forces(system.tendon, system.tendon_params, system.tendon_bc);
    const CouplingForces cf = coupling_forces(system, reg, actuation_scale);
    for (int i = 0; i < system.catheter.num_points(); ++i) fc.on_points[i] += cf.on_catheter_points[i];
    for (int i = 0; i < system.tendon.num_points(); ++i) ft.on_points[i] += cf.on_tendon_points[i];
    if (system.catheter_bc.clamped_base) fc.on_points[0].setZero();

    const int nc = rod_coord_count(system.catheter.num_points());
    const int nt = rod_coord_count(system.tendon.num_points());
    Eigen::VectorXd out(nc + nt);
    out.head(nc) = pack_forces(fc);
    out.tail(nt) = pack_forces(ft);
    return out;
}

SparsityPattern coupled_sparsity(const CoupledSystem& system, const Registration& reg) {
    const int ncp = system.catheter.num_points();
    const int ntp = system.tendon.num_points();
    const bool clamped = system.catheter_bc.clamped_base;

    SparsityPattern p;
    const int nb = ncp + ntp;
    p.block_width.resize(nb);
    p.block_offset.resize(nb);
    int off = 0;
    for (int i = 0; i < ncp; ++i) {
        int w = (i + 1 < ncp) ? 7 : 3;
        if (clamped && i == 0) w = 4;
        p.block_width[i] = w;
        p.block_offset[i] = off;
        off += w;
    }
    for (int i = 0; i < ntp; ++i) {
        p.block_width[ncp + i] = (i + 1 < ntp) ? 7 : 3;
        p.block_offset[ncp + i] = off;
        off += p.block_width[ncp + i];
    }

    std::vector<std::pair<int, int>> blocks;
    auto add = [&blocks](int r, int c) { blocks.emplace_back(r, c); };
    auto band = [&](int base, int n) {
        for (int i = 0; i < n; ++i) {
            add(base + i, base + i);
            if (i + 1 < n) {
                add(base + i, base + i + 1);
                add(base + i + 1, base + i);
            }
        }
    };
    band(0, ncp);
    band(ncp, ntp);

    const CouplingConfig& c = system.coupling;
    if (c.lumen_constant > 0.0) {
        for (const auto& e : reg.entries) {
            const int t = ncp + e.tendon_point;
            add(t, e.nearest_lumen);
            add(t, e.parent_element);
            add(e.parent_element, t);
            add(e.parent_element, e.nearest_lumen);
        }
    }
    if (c.endpoint_compliance_constant > 0.0 || c.endpoint_coupling_constant > 0.0) {
        const int t_end = ncp + ntp - 1;
        add(t_end, ncp - 1);
        add(t_end, ncp - 2);
        add(ncp - 1, t_end);
        add(ncp - 1, ncp - 2);
    }
    if (system.actuation_force != 0.0 && system.actuation_site == ActuationSite::Distal) {
        const int t_end = ncp + ntp - 1;
        add(t_end, ncp - 1);
        add(t_end, ncp - 2);
    }

    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    for (const auto& [r, cidx] : blocks)
        if (p.block_width[r] > 0 && p.block_width[cidx] > 0) p.blocks.emplace_back(r, cidx);
    return p;
}

CoupledSystem make_coupled_system(const RodParameters& catheter, const RodParameters& tendon,
                                  const CouplingConfig& coupling, double actuation_force,
                                  const BasePose& base) {
    catheter.validate();
    tendon.validate();
    coupling.validate();

    CoupledSystem sys;
    sys.catheter_params = catheter;
    sys.tendon_params = tendon;
    sys.coupling = coupling;
    sys.actuation_force = actuation_force;
    sys.catheter = make_rod(catheter, base);
    sys.catheter_bc.clamped_base = true;
    sys.catheter_bc.clamp_orientation = base.orientation;

    // Tendon starts exactly on the straight lumen line, at rest.
    sys.tendon = make_rod(tendon, base);
    const Vec3 offset =
        coupling.lumen_offset * tendon_direction(base.orientation, coupling);
    for (auto& pt : sys.tendon.points) pt += offset;
    return sys;
}

int coupled_coord_count(const CoupledSystem& system) {
    return rod_coord_count(system.catheter.num_points()) +
           rod_coord_count(system.tendon.num_points());
}

Eigen::VectorXd pack_coupled_positions(const CoupledSystem& system) {
    Eigen::VectorXd x(coupled_coord_count(system));
    const int nc = rod_coord_count(system.catheter.num_points());
    x.head(nc) = pack_positions(system.catheter);
    x.tail(x.size() - nc) = pack_positions(system.tendon);
    return x;
}

Eigen::VectorXd pack_coupled_velocities(const CoupledSystem& system) {
    Eigen::VectorXd v(coupled_coord_count(system));
    const int nc = rod_coord_count(system.catheter.num_points());
    v.head(nc) = pack_velocities(system.catheter);
    v.tail(v.size() - nc) = pack_velocities(system.tendon);
    return v;
}

void unpack_coupled_positions(const Eigen::VectorXd& x, CoupledSystem& system) {
    const int nc = rod_coord_count(system.catheter.num_points());
    unpack_positions(x.head(nc), system.catheter);
    unpack_positions(x.tail(x.size() - nc), system.tendon);
}

void unpack_coupled_velocities(const Eigen::VectorXd& v, CoupledSystem& system) {
    const int nc = rod_coord_count(system.catheter.num_points());
    unpack_velocities(v.head(nc), system.catheter);
    unpack_velocities(v.tail(v.size() - nc), system.tendon);
}

ImplicitSystem make_coupled_implicit(CoupledSystem& system) {
    system.catheter_params.validate();
    system.tendon_params.validate();
    system.coupling.validate();
    system.catheter_bc.validate(system.catheter.num_points());
    system.tendon_bc.validate(system.tendon.num_points());

    const int ncp = system.catheter.num_points();
    const int ntp = system.tendon.num_points();
    const int nc = rod_coord_count(ncp);
    const int nt = rod_coord_count(ntp);

    ImplicitSystem sys;
    sys.mass.resize(nc + nt);
    sys.mass.head(nc) = pack_mass(mass_matrix(system.catheter_params));
    sys.mass.tail(nt) = pack_mass(mass_matrix(system.tendon_params));

    sys.coord_scale = Eigen::VectorXd::Ones(nc + nt);
    for (int i = 0; i < ncp; ++i)
        sys.coord_scale.segment<3>(rod_point_offset(ncp, i))
            .setConstant(5.0 * system.catheter_params.rest_length());
    for (int i = 0; i < ntp; ++i)
        sys.coord_scale.segment<3>(nc + rod_point_offset(ntp, i))
            .setConstant(5.0 * system.tendon_params.rest_length());

    const int start = system.catheter_bc.clamped_base ? 3 : 0;
    for (int i = start; i < nc + nt; ++i) sys.free_indices.push_back(i);
    for (int i = 0; i < ncp; ++i) sys.point_offsets.push_back(rod_point_offset(ncp, i));
    for (int i = 0; i < ntp; ++i) sys.point_offsets.push_back(nc + rod_point_offset(ntp, i));
    for (int j = 0; j + 1 < ncp; ++j) sys.quat_offsets.push_back(rod_quat_offset(ncp, j));
    for (int j = 0; j + 1 < ntp; ++j) sys.quat_offsets.push_back(nc + rod_quat_offset(ntp, j));

    // The assignment is rebuilt once per step and shared between the force
    // and sparsity callbacks, keeping the residual smooth within one solve.
    struct StepContext {
        Registration reg;
        int step = 0;
        double ramp = 1.0;
    };
    auto ctx = std::make_shared<StepContext>();
    CoupledSystem* sp = &system;
    sys.pre_step = [sp, ctx](const Eigen::VectorXd& x) {
        unpack_coupled_positions(x, *sp);
        ctx->reg = register_tendon(sp->tendon, lumen_points(sp->catheter, sp->coupling),
                                   sp->catheter, sp->coupling);
        ctx->step += 1;
        ctx->ramp = sp->actuation_ramp_steps > 0
                        ? std::min(1.0, static_cast<double>(ctx->step) / sp->actuation_ramp_steps)
                        : 1.0;
    };
    sys.force = [sp, ctx](const Eigen::VectorXd& x) {
        unpack_coupled_positions(x, *sp);
        refresh_registration(ctx->reg, sp->tendon, sp->catheter, sp->coupling);
        return coupled_forces(*sp, ctx->reg, ctx->ramp);
    };
    sys.sparsity = [sp, ctx] { return coupled_sparsity(*sp, ctx->reg); };
    return sys;
}

EquilibriumResult simulate_coupled(CoupledSystem& system, const IntegratorConfig& config) {
    ImplicitSystem impl = make_coupled_implicit(system);
    Eigen::VectorXd x = pack_coupled_positions(system);
    Eigen::VectorXd v = pack_coupled_velocities(system);
    const int ncp = system.catheter.num_points();
    const int tip_off = rod_point_offset(ncp, ncp - 1);
    EquilibriumResult result = run_system(impl, x, v, config, [tip_off](const Eigen::VectorXd& xx) {
        return Vec3(xx.segment<3>(tip_off));
    });
    unpack_coupled_positions(x, system);
    unpack_coupled_velocities(v, system);
    return result;
}

double max_lumen_compliance(const CoupledSystem& system) {
    const Registration reg = register_tendon(
        system.tendon, lumen_points(system.catheter, system.coupling), system.catheter,
        system.coupling);
    double worst = 0.0;
    for (const auto& e : reg.entries) worst = std::max(worst, std::abs(e.compliance));
    return worst;
}

}  // namespace cathrod
