#ifndef CATHROD_STEPPER_HPP
#define CATHROD_STEPPER_HPP

#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "cathrod/rod.hpp"

namespace cathrod {

struct IntegratorConfig {
    double timestep = 0.1;   // s
    double damping = 0.9;    // xi in [0, 1]
    double residual_tol = 1e-10;
    int max_newton_iters = 50;
    int max_steps = 5000;
    double convergence_velocity_tol = 1e-6;  // m/s

    void validate() const;
};

// Structural nonzeros of the residual Jacobian, kept at coordinate-block
// granularity (one block per node). Width-0 blocks stand for fully clamped
// nodes and never generate entries.
struct SparsityPattern {
    std::vector<int> block_offset;
    std::vector<int> block_width;
    std::vector<std::pair<int, int>> blocks;  // (row_block, col_block)

    int num_blocks() const { return static_cast<int>(block_width.size()); }
    int dim() const;
    bool has_block(int row, int col) const;
    std::vector<std::pair<int, int>> scalar_entries() const;
};

struct StepReport {
    int newton_iterations = 0;
    double residual_norm = 0.0;  // ||f||_inf / (1 + ||x||_inf) at exit
    double max_velocity = 0.0;   // largest monitored point speed, m/s
    bool accepted = false;
    double h_used = 0.0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ForceFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// f = x_now + xi*h*xdot_now + h^2 M^-1 F(x_next) - x_next
Eigen::VectorXd residual(const Eigen::VectorXd& x_next, const Eigen::VectorXd& x_now,
                         const Eigen::VectorXd& xdot_now, const Eigen::VectorXd& mass_diag,
                         const ForceFn& force_fn, const IntegratorConfig& config);

// Block-tridiagonal pattern of a single rod (self, previous, next). With
// clamped_base the first node's coordinates are removed from the unknowns.
SparsityPattern single_rod_sparsity(int num_points, bool clamped_base = false);

// Structurally orthogonal column-block groups (greedy distance-2 coloring).
std::vector<std::vector<int>> color_blocks(const SparsityPattern& pattern);

// Forward-difference Jacobian compressed through the pattern: all columns of
// one color group are perturbed in a single residual evaluation.
Eigen::SparseMatrix<double> fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& f0, const SparsityPattern& pattern);

struct NewtonResult {
    Eigen::VectorXd x;
    StepReport report;
};

// Newton iteration with sparse-LU solves, globalized by a trust-region dogleg;
// stops when ||f||_inf <= residual_tol * (1 + ||x||_inf). Failure is reported,
// not thrown. coord_scale sets the trust-region step metric; row_weight
// rescales residual rows for the descent machinery only (the mass-weighted
// force-balance form keeps the merit function conditioned), never the
// convergence test.
NewtonResult newton_solve(const ResidualFn& residual_fn, const Eigen::VectorXd& x_guess,
                          const SparsityPattern& pattern, const IntegratorConfig& config,
                          const Eigen::VectorXd* coord_scale = nullptr,
                          const Eigen::VectorXd* row_weight = nullptr);

// A mechanical system presented to the integrator as flat coordinate vectors.
struct ImplicitSystem {
    Eigen::VectorXd mass;                    // full-layout diagonal
    Eigen::VectorXd coord_scale;             // full-layout typical magnitudes
    std::vector<int> free_indices;           // unknown coordinates (full-layout)
    std::vector<int> point_offsets;          // xyz triplets monitored for convergence
    std::vector<int> quat_offsets;           // 4-wide segments renormalized after steps
    ForceFn force;                           // F_net over the full layout
    std::function<SparsityPattern()> sparsity;               // over the free layout
    std::function<void(const Eigen::VectorXd&)> pre_step;    // optional per-step refresh
};

// One semi-implicit Euler step with a step-halving retry ladder (down to
// h/256). On acceptance x/v are advanced, velocities set to (x_new - x_old)/h
// and quaternions renormalized. The optional ladder level carries the last
// working halving depth across steps so stiff transients do not re-pay failed
// full-h solves every step; it relaxes back toward full h on easy solves.
StepReport advance_system(const ImplicitSystem& sys, Eigen::VectorXd& x_full,
                          Eigen::VectorXd& v_full, const IntegratorConfig& config,
                          int* ladder_level = nullptr);

struct TraceEntry {
    int step = 0;
    Vec3 tip = Vec3::Zero();
    double max_velocity = 0.0;
    int newton_iterations = 0;
    double residual_norm = 0.0;
    double h_used = 0.0;
};

struct EquilibriumResult {
    bool converged = false;
    int steps = 0;
    std::vector<TraceEntry> trace;
    std::string failure;  // set when a step fails outright
};

// Steps until the monitored point speed stays below the tolerance for three
// consecutive steps, or max_steps is reached (flagged, not thrown).
EquilibriumResult run_system(const ImplicitSystem& sys, Eigen::VectorXd& x_full,
                             Eigen::VectorXd& v_full, const IntegratorConfig& config,
                             const std::function<Vec3(const Eigen::VectorXd&)>& tip_probe);

// Single-rod wrappers.
ImplicitSystem make_rod_system(const RodState& state, const RodParameters& params,
                               const BoundaryConditions& bc);
StepReport step(RodState& state, const RodParameters& params, const BoundaryConditions& bc,
                const IntegratorConfig& config);
EquilibriumResult run_to_equilibrium(RodState& state, const RodParameters& params,
                                     const BoundaryConditions& bc, const IntegratorConfig& config);

}  // namespace cathrod

#endif
