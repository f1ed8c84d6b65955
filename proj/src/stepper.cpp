#include "cathrod/stepper.hpp"
#include <limits>

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <set>
#include <cstdlib>
#include <cstdio>

namespace cathrod {

namespace {
constexpr double kFdStep = 1.4901161193847656e-08;  // sqrt(machine epsilon)

double scaled_inf_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& x) {
    const double denom = 1.0 + (x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0);
    return (f.size() ? f.lpNorm<Eigen::Infinity>() : 0.0) / denom;
}
}  // namespace

void IntegratorConfig::validate() const {
    if (!(timestep > 0.0)) throw ConfigError("timestep must be positive");
    if (!(damping >= 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in [0, 1]");
    if (!(residual_tol > 0.0)) throw ConfigError("residual_tol must be positive");
    if (max_newton_iters < 1) throw ConfigError("max_newton_iters must be at least 1");
    if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
    if (!(convergence_velocity_tol > 0.0)) throw ConfigError("convergence_velocity_tol must be positive");
}

int SparsityPattern::dim() const {
    int d = 0;
    for (int w : block_width) d += w;
    return d;
}

bool SparsityPattern::has_block(int row, int col) const {
    return std::find(blocks.begin(), blocks.end(), std::make_pair(row, col)) != blocks.end();
}

std::vector<std::pair<int, int>> SparsityPattern::scalar_entries() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [r, c] : blocks)
        for (int i = 0; i < block_width[r]; ++i)
            for (int j = 0; j < block_width[c]; ++j)
                out.emplace_back(block_offset[r] + i, block_offset[c] + j);
    return out;
}

Eigen::VectorXd residual(const Eigen::VectorXd& x_next, const Eigen::VectorXd& x_now,
                         const Eigen::VectorXd& xdot_now, const Eigen::VectorXd& mass_diag,
                         const ForceFn& force_fn, const IntegratorConfig& config) {
    const double h = config.timestep;
    Eigen::VectorXd f = x_now + (config.damping * h) * xdot_now - x_next;
    f += (h * h) * force_fn(x_next).cwiseQuotient(mass_diag);
    return f;
}

SparsityPattern single_rod_sparsity(int num_points, bool clamped_base) {
    if (num_points < 3) throw ConfigError("num_points must be at least 3");
    SparsityPattern p;
    p.block_width.resize(num_points);
    p.block_offset.resize(num_points);
    int off = 0;
    for (int i = 0; i < num_points; ++i) {
        int w = (i + 1 < num_points) ? 7 : 3;
        if (clamped_base && i == 0) w = 4;  // point pinned, quaternion free
        p.block_width[i] = w;
        p.block_offset[i] = off;
        off += w;
    }
    for (int i = 0; i < num_points; ++i) {
        if (p.block_width[i] == 0) continue;
        p.blocks.emplace_back(i, i);
        if (i + 1 < num_points && p.block_width[i + 1] > 0) {
            p.blocks.emplace_back(i, i + 1);
            p.blocks.emplace_back(i + 1, i);
        }
    }
    return p;
}

std::vector<std::vector<int>> color_blocks(const SparsityPattern& pattern) {
    const int nb = pattern.num_blocks();
    // Columns sharing any row block must land in different groups.
    std::vector<std::set<int>> row_cols(nb);
    for (const auto& [r, c] : pattern.blocks) row_cols[r].insert(c);
    std::vector<std::set<int>> conflicts(nb);
    for (const auto& cols : row_cols)
        for (int a : cols)
            for (int b : cols)
                if (a != b) conflicts[a].insert(b);

    std::vector<int> color(nb, -1);
    int ncolors = 0;
    for (int b = 0; b < nb; ++b) {
        if (pattern.block_width[b] == 0) continue;
        std::set<int> used;
        for (int other : conflicts[b])
            if (color[other] >= 0) used.insert(color[other]);
        int c = 0;
        while (used.count(c)) ++c;
        color[b] = c;
        ncolors = std::max(ncolors, c + 1);
    }
    std::vector<std::vector<int>> groups(ncolors);
    for (int b = 0; b < nb; ++b)
        if (color[b] >= 0) groups[color[b]].push_back(b);
    return groups;
}

Eigen::SparseMatrix<double> fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& f0, const SparsityPattern& pattern) {
    const int n = pattern.dim();
    std::vector<std::vector<int>> rows_of_col(pattern.num_blocks());
    for (const auto& [r, c] : pattern.blocks) rows_of_col[c].push_back(r);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(pattern.scalar_entries().size());

    Eigen::VectorXd xp(n), fp(n);
    for (const auto& group : color_blocks(pattern)) {
        int max_w = 0;
        for (int b : group) max_w = std::max(max_w, pattern.block_width[b]);
        for (int s = 0; s < max_w; ++s) {
            xp = x;
            std::vector<std::pair<int, double>> perturbed;  // (block, step)
            for (int b : group) {
                if (s >= pattern.block_width[b]) continue;
                const int col = pattern.block_offset[b] + s;
                const double step = kFdStep * (1.0 + std::abs(x[col]));
                xp[col] += step;
                perturbed.emplace_back(b, step);
            }
            if (perturbed.empty()) continue;
            fp = f(xp);
            for (const auto& [b, step] : perturbed) {
                const int col = pattern.block_offset[b] + s;
                const double inv = 1.0 / step;
                for (int rb : rows_of_col[b])
                    for (int i = 0; i < pattern.block_width[rb]; ++i) {
                        const int row = pattern.block_offset[rb] + i;
                        trip.emplace_back(row, col, (fp[row] - f0[row]) * inv);
                    }
            }
        }
    }
    Eigen::SparseMatrix<double> jac(n, n);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
}

// Newton globalized by a trust-region dogleg (the Powell hybrid): full Newton
// steps near the root, blended steepest-descent steps when the quadratic
// model is untrustworthy. The stiff penalty terms make plain Newton diverge
// at load onset. The merit function uses row-weighted residuals (weights in
// mass units give the force-balance form), since raw rows differ in
// sensitivity by ~1e6 and would blind the descent machinery; the convergence
// test stays on the raw residual.
NewtonResult newton_solve(const ResidualFn& residual_fn, const Eigen::VectorXd& x_guess,
                          const SparsityPattern& pattern, const IntegratorConfig& config,
                          const Eigen::VectorXd* coord_scale, const Eigen::VectorXd* row_weight) {
    NewtonResult out;
    out.x = x_guess;
    out.report.h_used = config.timestep;

    Eigen::VectorXd f0 = residual_fn(out.x);
    double norm = scaled_inf_norm(f0, out.x);
    if (!f0.allFinite()) {
        out.report.residual_norm = norm;
        return out;
    }
    if (norm <= config.residual_tol) {
        out.report.accepted = true;
        out.report.residual_norm = norm;
        return out;
    }

    const int n = static_cast<int>(out.x.size());
    const Eigen::VectorXd scale = coord_scale ? *coord_scale : Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd weight = row_weight ? *row_weight : Eigen::VectorXd::Ones(n);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Eigen::SparseMatrix<double> jac, jac_w;  // raw and row-weighted
    bool jac_fresh = false;
    double delta = 100.0;  // trust radius in scale units; generous start keeps warm solves pure Newton
    double best_norm = norm, norm_at_best_iter = norm;
    int best_iter = 0;

    for (int it = 1; it <= config.max_newton_iters; ++it) {
        out.report.newton_iterations = it;
        if (!jac_fresh) {
            jac = fd_jacobian(residual_fn, out.x, f0, pattern);
            lu.compute(jac);
            if (lu.info() != Eigen::Success) break;
            jac_w = weight.asDiagonal() * jac;
            jac_fresh = true;
        }
        const Eigen::VectorXd p_newton = lu.solve(-f0);
        if (!p_newton.allFinite()) break;
        const Eigen::VectorXd fw = f0.cwiseProduct(weight);

        // Dogleg in the scaled step space ps = p / scale.
        const Eigen::VectorXd pn_s = p_newton.cwiseQuotient(scale);
        const double pn_norm = pn_s.norm();
        Eigen::VectorXd step;
        if (pn_norm <= delta) {
            step = p_newton;
        } else {
            const Eigen::VectorXd g_s = (jac_w.transpose() * fw).cwiseProduct(scale);
            const Eigen::VectorXd jg = jac_w * g_s.cwiseProduct(scale);
            const double g2 = g_s.squaredNorm();
            const double jg2 = jg.squaredNorm();
            Eigen::VectorXd pc_s = (jg2 > 0.0) ? Eigen::VectorXd(-(g2 / jg2) * g_s)
                                               : Eigen::VectorXd(-g_s);
            const double pc_norm = pc_s.norm();
            Eigen::VectorXd ps;
            if (pc_norm >= delta) {
                ps = (delta / pc_norm) * pc_s;
            } else {
                const Eigen::VectorXd d = pn_s - pc_s;
                const double a = d.squaredNorm();
                const double b = 2.0 * pc_s.dot(d);
                const double c = pc_s.squaredNorm() - delta * delta;
                const double t = (-b + std::sqrt(std::max(b * b - 4.0 * a * c, 0.0))) / (2.0 * a);
                ps = pc_s + t * d;
            }
            step = ps.cwiseProduct(scale);
        }

        const Eigen::VectorXd x_try = out.x + step;
        const Eigen::VectorXd f_try = residual_fn(x_try);
        const double merit0 = fw.squaredNorm();
        const double merit_try = f_try.allFinite() ? f_try.cwiseProduct(weight).squaredNorm()
                                                   : std::numeric_limits<double>::infinity();
        const double predicted = merit0 - (fw + jac_w * step).squaredNorm();
        const double rho = predicted > 0.0 ? (merit0 - merit_try) / predicted : -1.0;
        const double used = step.cwiseQuotient(scale).norm();

        const bool improved = merit_try < merit0;
        if (std::getenv("CATHROD_NEWTON_TRACE"))
            fprintf(stderr, "  it=%d h=%.4g delta=%.3e rho=%.3f used=%.3e fnorm=%.3e pn=%.3e\n", it,
                    config.timestep, delta, rho, used, norm, pn_norm);
        if (rho < 0.05 && !improved) {
            delta = 0.25 * used;
            if (delta < 1e-12) break;
            continue;  // reject, reuse the factorization
        }
        out.x = x_try;
        f0 = f_try;
        jac_fresh = false;
        if (rho > 0.75 && used > 0.8 * delta) delta = std::min(2.0 * delta, 1e6);
        else if (rho < 0.05) delta = std::max(0.25 * used, 1e-12);
        norm = scaled_inf_norm(f0, out.x);
        if (norm <= config.residual_tol) {
            out.report.accepted = true;
            break;
        }
        // Crawling trust-region progress means the time step is too large;
        // bail out and let the caller halve h instead.
        best_norm = std::min(best_norm, norm);
        if (it - best_iter >= 15) break;
        if (norm < 0.5 * norm_at_best_iter) {
            best_iter = it;
            norm_at_best_iter = norm;
        }
    }
    out.report.residual_norm = norm;
    return out;
}

StepReport advance_system(const ImplicitSystem& sys, Eigen::VectorXd& x_full,
                          Eigen::VectorXd& v_full, const IntegratorConfig& config,
                          int* ladder_level) {
    config.validate();
    if (sys.pre_step) sys.pre_step(x_full);
    const SparsityPattern pattern = sys.sparsity();
    const int nf = static_cast<int>(sys.free_indices.size());

    Eigen::VectorXd xf(nf), vf(nf), mf(nf), sf(nf);
    const bool have_scale = sys.coord_scale.size() == x_full.size();
    for (int i = 0; i < nf; ++i) {
        xf[i] = x_full[sys.free_indices[i]];
        vf[i] = v_full[sys.free_indices[i]];
        mf[i] = sys.mass[sys.free_indices[i]];
        sf[i] = have_scale ? sys.coord_scale[sys.free_indices[i]] : 1.0;
    }

    Eigen::VectorXd scratch = x_full;
    const ForceFn force_free = [&sys, scratch](const Eigen::VectorXd& xfree) mutable {
        for (int i = 0; i < static_cast<int>(sys.free_indices.size()); ++i)
            scratch[sys.free_indices[i]] = xfree[i];
        const Eigen::VectorXd f = sys.force(scratch);
        Eigen::VectorXd out(xfree.size());
        for (int i = 0; i < static_cast<int>(sys.free_indices.size()); ++i)
            out[i] = f[sys.free_indices[i]];
        return out;
    };

    StepReport report;
    StepReport best_failure;
    best_failure.residual_norm = std::numeric_limits<double>::infinity();
    IntegratorConfig attempt = config;
    constexpr int kMaxHalvings = 8;
    const int start = ladder_level ? std::clamp(*ladder_level, 0, kMaxHalvings) : 0;
    for (int halving = start; halving <= kMaxHalvings; ++halving) {
        attempt.timestep = config.timestep / static_cast<double>(1 << halving);
        const ResidualFn res = [&](const Eigen::VectorXd& xn) {
            return residual(xn, xf, vf, mf, force_free, attempt);
        };
        const Eigen::VectorXd guess = xf + (attempt.damping * attempt.timestep) * vf;
        NewtonResult nr =
            newton_solve(res, guess, pattern, attempt, have_scale ? &sf : nullptr, &mf);
        if (!nr.report.accepted) {
            if (nr.report.residual_norm < best_failure.residual_norm) {
                best_failure = nr.report;
                best_failure.h_used = attempt.timestep;
            }
            continue;
        }
        if (ladder_level)
            *ladder_level = (nr.report.newton_iterations <= 8) ? std::max(halving - 1, 0) : halving;

        const double h = attempt.timestep;
        for (int i = 0; i < nf; ++i) {
            const int gi = sys.free_indices[i];
            v_full[gi] = (nr.x[i] - xf[i]) / h;
            x_full[gi] = nr.x[i];
        }
        for (int qo : sys.quat_offsets) {
            const double n = x_full.segment<4>(qo).norm();
            if (n <= 0.0) continue;
            x_full.segment<4>(qo) /= n;
            // Drop the radial (norm-drift) component of the rate: it carries no
            // angular velocity and would re-inject jitter after the projection.
            const Eigen::Vector4d q = x_full.segment<4>(qo);
            Eigen::Vector4d qdot = v_full.segment<4>(qo) / n;
            qdot -= qdot.dot(q) * q;
            v_full.segment<4>(qo) = qdot;
        }
        report = nr.report;
        report.h_used = h;
        double vmax = 0.0;
        for (int po : sys.point_offsets) vmax = std::max(vmax, v_full.segment<3>(po).norm());
        report.max_velocity = vmax;
        return report;
    }
    best_failure.accepted = false;
    return best_failure;
}

EquilibriumResult run_system(const ImplicitSystem& sys, Eigen::VectorXd& x_full,
                             Eigen::VectorXd& v_full, const IntegratorConfig& config,
                             const std::function<Vec3(const Eigen::VectorXd&)>& tip_probe) {
    config.validate();
    EquilibriumResult result;
    int quiet_steps = 0;
    int ladder_level = 0;
    for (int k = 1; k <= config.max_steps; ++k) {
        const StepReport rep = advance_system(sys, x_full, v_full, config, &ladder_level);
        result.steps = k;
        result.trace.push_back(TraceEntry{k, tip_probe(x_full), rep.max_velocity,
                                          rep.newton_iterations, rep.residual_norm, rep.h_used});
        if (!rep.accepted) {
            result.failure = "step " + std::to_string(k) +
                             " failed: Newton did not converge after 4 step halvings (residual " +
                             std::to_string(rep.residual_norm) + ")";
            return result;
        }
        quiet_steps = (rep.max_velocity < config.convergence_velocity_tol) ? quiet_steps + 1 : 0;
        if (quiet_steps >= 3) {
            result.converged = true;
            return result;
        }
    }
    return result;  // max_steps exhausted, converged stays false
}

ImplicitSystem make_rod_system(const RodState& state, const RodParameters& params,
                               const BoundaryConditions& bc) {
    params.validate();
    bc.validate(state.num_points());
    const int n = state.num_points();

    ImplicitSystem sys;
    sys.mass = pack_mass(mass_matrix(params));
    sys.coord_scale = Eigen::VectorXd::Ones(rod_coord_count(n));
    for (int i = 0; i < n; ++i)
        sys.coord_scale.segment<3>(rod_point_offset(n, i)).setConstant(5.0 * params.rest_length());
    const int start = bc.clamped_base ? 3 : 0;  // drop the pinned base point only
    for (int i = start; i < rod_coord_count(n); ++i) sys.free_indices.push_back(i);
    for (int i = 0; i < n; ++i) sys.point_offsets.push_back(rod_point_offset(n, i));
    for (int j = 0; j < n - 1; ++j) sys.quat_offsets.push_back(rod_quat_offset(n, j));

    RodState scratch = state;
    sys.force = [scratch, params, bc](const Eigen::VectorXd& x) mutable {
        unpack_positions(x, scratch);
        return pack_forces(assemble_forces(scratch, params, bc));
    };
    const bool clamped = bc.clamped_base;
    sys.sparsity = [n, clamped] { return single_rod_sparsity(n, clamped); };
    return sys;
}

StepReport step(RodState& state, const RodParameters& params, const BoundaryConditions& bc,
                const IntegratorConfig& config) {
    const ImplicitSystem sys = make_rod_system(state, params, bc);
    Eigen::VectorXd x = pack_positions(state);
    Eigen::VectorXd v = pack_velocities(state);
    const StepReport rep = advance_system(sys, x, v, config);
    if (rep.accepted) {
        unpack_positions(x, state);
        unpack_velocities(v, state);
    }
    return rep;
}

EquilibriumResult run_to_equilibrium(RodState& state, const RodParameters& params,
                                     const BoundaryConditions& bc, const IntegratorConfig& config) {
    const ImplicitSystem sys = make_rod_system(state, params, bc);
    Eigen::VectorXd x = pack_positions(state);
    Eigen::VectorXd v = pack_velocities(state);
    const int n = state.num_points();
    const int tip_off = rod_point_offset(n, n - 1);
    EquilibriumResult result = run_system(sys, x, v, config, [tip_off](const Eigen::VectorXd& xx) {
        return Vec3(xx.segment<3>(tip_off));
    });
    unpack_positions(x, state);
    unpack_velocities(v, state);
    return result;
}

}  // namespace cathrod
