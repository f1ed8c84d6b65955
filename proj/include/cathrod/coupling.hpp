#ifndef CATHROD_COUPLING_HPP
#define CATHROD_COUPLING_HPP

#include "cathrod/stepper.hpp"

namespace cathrod {

enum class ReactionMode { Average, Sum };
enum class ActuationSite { Distal, Proximal };

// Tendon-catheter coupling constants. The lumen line is offset from the
// catheter centerline by lumen_offset along d_t = w1*d1 + w2*d2.
struct CouplingConfig {
    double lumen_offset = 0.0;   // r_L, m
    double weight_d1 = 1.0;      // direction weights, w1^2 + w2^2 = 1
    double weight_d2 = 0.0;
    double lumen_constant = 0.0;              // K_L
    double endpoint_compliance_constant = 0.0;  // K_E
    double endpoint_coupling_constant = 0.0;    // K_C
    ReactionMode reaction_mode = ReactionMode::Average;

    void validate() const;
};

// Parent assignment of tendon points to catheter elements via nearest lumen
// points. The tendon endpoint is excluded: it is governed by the endpoint
// constraints instead, which keeps the two penalty families from fighting
// over the same node. Assignments are frozen for one time step and rebuilt
// before the next; compliances are re-evaluated from current coordinates.
struct Registration {
    struct Entry {
        int tendon_point = 0;
        int nearest_lumen = 0;
        int parent_element = 0;
        double compliance = 0.0;  // C_L, m
        Vec3 direction = Vec3::Zero();  // d_t of the parent element
    };
    std::vector<Entry> entries;
};

struct CoupledSystem {
    RodParameters catheter_params;
    RodParameters tendon_params;
    RodState catheter;
    RodState tendon;
    BoundaryConditions catheter_bc;  // base clamped by default
    BoundaryConditions tendon_bc;    // free; the tendon must slide
    CouplingConfig coupling;
    double actuation_force = 0.0;    // F_A, N, pulls the tendon proximally
    ActuationSite actuation_site = ActuationSite::Distal;
    // The pull ramps up linearly over this many steps. A step load on the
    // near-massless tendon tip drags the solve across the endpoint-constraint
    // sphere in one go, which no time-step refinement can tame; the
    // equilibrium itself is ramp-invariant.
    int actuation_ramp_steps = 20;
};

// Forces produced by the three coupling constraints plus actuation, indexed
// like the rods' point arrays.
struct CouplingForces {
    std::vector<Vec3> on_tendon_points;
    std::vector<Vec3> on_catheter_points;
    double compliance_e = 0.0;  // |L_end - t_end|
    double compliance_c = 0.0;  // |t_end - r_end| - r_L
};

// d_t for one catheter element quaternion.
Vec3 tendon_direction(const Quaternion& q, const CouplingConfig& coupling);

// One lumen point per catheter point, offset along the adjacent element's
// d_t (the last point reuses its single adjacent element).
std::vector<Vec3> lumen_points(const RodState& catheter, const CouplingConfig& coupling);

// Nearest-lumen-point assignment (ties break to the lower index).
Registration register_tendon(const RodState& tendon, const std::vector<Vec3>& lumen,
                             const RodState& catheter, const CouplingConfig& coupling);

// Refresh compliances and directions of an existing assignment against
// current coordinates.
void refresh_registration(Registration& reg, const RodState& tendon, const RodState& catheter,
                          const CouplingConfig& coupling);

// Lumen spring forces on tendon points and their parent-point reactions
// (negated mean per parent in Average mode, negated sum in Sum mode).
CouplingForces lumen_forces(const Registration& reg, const CouplingConfig& coupling,
                            int num_tendon_points, int num_catheter_points);

// Endpoint tether (K_E, toward the lumen endpoint) and endpoint coupling
// (K_C, holding |t_end - r_end| at r_L) forces, accumulated into out.
// In Sum mode the K_E force also reacts on the catheter endpoint so the
// coupling forces balance exactly.
void endpoint_forces(const CoupledSystem& system, CouplingForces& out);

// All coupling + actuation forces for the current coordinates under a frozen
// assignment. actuation_scale is the ramp factor in [0, 1].
CouplingForces coupling_forces(const CoupledSystem& system, const Registration& reg,
                               double actuation_scale = 1.0);

// Net coupling force over both rods (excluding actuation); ~0 in Sum mode.
Vec3 coupling_force_balance(const CoupledSystem& system, const Registration& reg);

// Internal rod forces plus coupling and actuation, concatenated catheter
// first then tendon.
Eigen::VectorXd coupled_forces(const CoupledSystem& system, const Registration& reg,
                               double actuation_scale = 1.0);

// Union of both rods' banded patterns, the tendon-parent blocks of the
// frozen assignment, and the endpoint block; over free coordinates.
SparsityPattern coupled_sparsity(const CoupledSystem& system, const Registration& reg);

// Straight catheter along the base frame's d3 with the tendon initialized on
// the lumen line at rest.
CoupledSystem make_coupled_system(const RodParameters& catheter, const RodParameters& tendon,
                                  const CouplingConfig& coupling, double actuation_force,
                                  const BasePose& base = {});

int coupled_coord_count(const CoupledSystem& system);
Eigen::VectorXd pack_coupled_positions(const CoupledSystem& system);
Eigen::VectorXd pack_coupled_velocities(const CoupledSystem& system);
void unpack_coupled_positions(const Eigen::VectorXd& x, CoupledSystem& system);
void unpack_coupled_velocities(const Eigen::VectorXd& v, CoupledSystem& system);

// Implicit view of the coupled system; the assignment refresh happens in
// pre_step, once per time step.
ImplicitSystem make_coupled_implicit(CoupledSystem& system);

EquilibriumResult simulate_coupled(CoupledSystem& system, const IntegratorConfig& config);

// Largest |C_L| over a fresh registration of the current state.
double max_lumen_compliance(const CoupledSystem& system);

}  // namespace cathrod

#endif
