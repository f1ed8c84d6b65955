#ifndef CATHROD_ROD_HPP
#define CATHROD_ROD_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "cathrod/frame.hpp"

namespace cathrod {

// Invalid parameters, malformed configs, bad indices.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class StiffnessVariant { Corrected, CordeOriginal };

// Material and geometric constants of one rod. Stiffnesses are derived from
// the physical inputs; the legacy CORDE tensor (uniformly twice as stiff,
// polar moment in place of the area moment) is kept for regression runs.
struct RodParameters {
    double youngs_bend = 0.0;      // Pa
    double youngs_stretch = 0.0;   // Pa
    double shear_modulus = 0.0;    // Pa; <= 0 means default E_b/3 (nu = 0.5)
    double density = 0.0;          // kg/m^3
    double radius = 0.0;           // m
    double length = 0.0;           // m
    double penalty_constant = 0.0; // force-like scale on the tangent defect
    Vec3 intrinsic_curvature = Vec3::Zero();  // 1/m
    int num_points = 0;
    StiffnessVariant stiffness_variant = StiffnessVariant::Corrected;

    double effective_shear_modulus() const { return shear_modulus > 0.0 ? shear_modulus : youngs_bend / 3.0; }
    double stretch_stiffness() const;        // K_s = E_s pi r^2
    Vec3 stiffness_tensor() const;           // (K11, K22, K33)
    int num_elements() const { return num_points - 1; }
    double rest_length() const { return length / (num_points - 1); }

    void validate() const;  // throws ConfigError
};

// Discrete rod state: N centerline points, N-1 element quaternions, and their
// generalized velocities.
struct RodState {
    std::vector<Vec3> points;
    std::vector<Quaternion> quaternions;
    std::vector<Vec3> point_velocities;
    std::vector<Vec4> quaternion_rates;

    int num_points() const { return static_cast<int>(points.size()); }
    int num_elements() const { return static_cast<int>(quaternions.size()); }
};

struct PointLoad {
    int index = 0;
    Vec3 force = Vec3::Zero();
};

struct BoundaryConditions {
    // Pins point 0 and anchors the first element quaternion to
    // clamp_orientation through a half-element bending junction. Freezing the
    // quaternion outright would rigidify the whole first element and biases
    // the tip stiff by O(1/N).
    bool clamped_base = false;
    Quaternion clamp_orientation;
    std::vector<PointLoad> point_loads;
    std::optional<Vec3> gravity;  // m/s^2; off by default

    void validate(int num_points) const;
};

struct BasePose {
    Vec3 position = Vec3::Zero();
    Quaternion orientation;
};

// Forces conjugate to the state coordinates.
struct GeneralizedForces {
    std::vector<Vec3> on_points;
    std::vector<Vec4> on_quats;
};

// Lumped diagonal mass: translational per point, rotational per element
// quaternion (all four components share one generalized mass).
struct MassDiagonal {
    std::vector<double> point_mass;
    std::vector<double> quat_mass;
};

// Straight rod along the base frame's d3, equally spaced, at rest.
RodState make_rod(const RodParameters& params, const BasePose& base);

double stretch_energy(const RodState& state, const RodParameters& params);
double bend_energy(const RodState& state, const RodParameters& params);
double penalty_energy(const RodState& state, const RodParameters& params);
double total_energy(const RodState& state, const RodParameters& params);

// Clamp anchor term: bending of the first element quaternion against the
// wall frame over the clamped half-element. Zero when not clamped.
double boundary_energy(const RodState& state, const RodParameters& params,
                       const BoundaryConditions& bc);

// total_energy plus boundary_energy; assemble_forces is its negative gradient
// up to the external loads.
double system_energy(const RodState& state, const RodParameters& params,
                     const BoundaryConditions& bc);

// Negative gradient of the internal energies plus external loads; entries for
// clamped coordinates are zeroed.
GeneralizedForces assemble_forces(const RodState& state, const RodParameters& params,
                                  const BoundaryConditions& bc);

MassDiagonal mass_matrix(const RodParameters& params);

double centerline_length(const RodState& state);

// Largest tangent defect |unit(r_{i+1}-r_i) - d3(q_i)| over the elements.
double max_tangent_defect(const RodState& state);

// --- generalized coordinate packing -------------------------------------
// Node-interleaved layout: node i < N-1 owns [p_i(3), q_i(4)]; the last node
// owns its point only. This keeps the residual Jacobian block-tridiagonal.

inline int rod_coord_count(int num_points) { return 7 * num_points - 4; }
inline int rod_point_offset(int /*num_points*/, int i) { return 7 * i; }
inline int rod_quat_offset(int /*num_points*/, int i) { return 7 * i + 3; }

Eigen::VectorXd pack_positions(const RodState& state);
Eigen::VectorXd pack_velocities(const RodState& state);
void unpack_positions(const Eigen::VectorXd& x, RodState& state);
void unpack_velocities(const Eigen::VectorXd& v, RodState& state);
Eigen::VectorXd pack_forces(const GeneralizedForces& f);
Eigen::VectorXd pack_mass(const MassDiagonal& m);

}  // namespace cathrod

#endif
