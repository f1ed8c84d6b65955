#ifndef CATHROD_SCENARIO_HPP
#define CATHROD_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "cathrod/cantilever.hpp"
#include "cathrod/coupling.hpp"
#include "cathrod/metrics.hpp"

namespace cathrod {

enum class Topology { Single, Coupled };

struct EndpointLoad {
    double mass_kg = 0.0;             // converted with g = 9.80665 m/s^2
    Vec3 direction = Vec3(1, 0, 0);   // unit load direction
};

struct OutputOptions {
    bool trace = true;
    bool svg = true;
    std::string reference;  // "", "oracle", or a centerline csv path
};

struct SweepSpec {
    std::string parameter;  // K_p N xi K_L K_E K_C N_T N_C
    std::vector<double> values;
};

// Declarative experiment description parsed from a YAML file; all physical
// quantities in SI units.
struct ScenarioConfig {
    std::string name = "scenario";
    Topology topology = Topology::Single;

    RodParameters rod;              // single rod / catheter
    RodParameters tendon;           // coupled only
    BasePose base;
    BoundaryConditions boundary;    // single-rod boundary + loads
    std::optional<EndpointLoad> endpoint_load;

    CouplingConfig coupling;        // coupled only
    double actuation_force = 0.0;
    ActuationSite actuation_site = ActuationSite::Distal;
    int actuation_ramp_steps = 20;

    IntegratorConfig integrator;
    OutputOptions outputs;
    std::optional<SweepSpec> sweep;

    void validate() const;
};

struct RunResult {
    std::string name;
    Topology topology = Topology::Single;
    bool converged = false;
    int steps = 0;
    int newton_iterations_total = 0;
    double wall_time_s = 0.0;
    Vec3 tip_position = Vec3::Zero();
    Eigen::Vector2d tip_2d = Eigen::Vector2d::Zero();  // (axial, lateral)
    double tip_deflection = 0.0;                       // lateral tip displacement, m
    double rod_length = 0.0;
    int plateau_steps = 0;  // first step after which the tip stays within 1% of L of its final value

    std::optional<double> tip_error_fraction;  // vs the requested reference
    std::optional<double> area_error;          // m

    double max_tangent_defect = 0.0;
    std::optional<double> max_lumen_compliance;  // coupled
    std::optional<double> endpoint_compliance;
    std::optional<double> coupling_compliance;

    Centerline2D centerline;          // projected rod / catheter
    std::optional<Centerline2D> tendon_centerline;
    std::vector<TraceEntry> trace;
    std::vector<std::string> files;   // everything written
};

ScenarioConfig load_scenario(const std::string& path);

// Executes one scenario to equilibrium and writes centerline CSVs,
// result.json, and the optional trace.csv / plot.svg under out_dir.
RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir);

// One run per sweep value (worker pool); per-value outputs under
// out_dir/value_<k>/ plus an order-preserving summary.csv.
std::vector<RunResult> sweep_scenario(const ScenarioConfig& config, const std::string& out_dir,
                                      int threads = 0);

// Analytical reference curve in the same (axial, lateral) frame the runner
// writes; samples from the clamp to the tip.
Centerline2D oracle_curve(double force, double length, double youngs, double radius, int samples);

std::string result_json(const RunResult& result);

}  // namespace cathrod

#endif
