#include "cathrod/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "cathrod/svg.hpp"

namespace cathrod {

namespace {
constexpr double kStandardGravity = 9.80665;  // m/s^2, for hanging-mass loads

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

Vec3 parse_vec3(const YAML::Node& n, const char* what) {
    if (!n.IsSequence() || n.size() != 3) throw ConfigError(std::string(what) + " must be [x, y, z]");
    return Vec3(n[0].as<double>(), n[1].as<double>(), n[2].as<double>());
}

RodParameters parse_rod(const YAML::Node& n, const char* what) {
    if (!n || !n.IsMap()) throw ConfigError(std::string("missing ") + what + " block");
    RodParameters p;
    p.youngs_bend = n["youngs_bend"].as<double>();
    p.youngs_stretch = n["youngs_stretch"] ? n["youngs_stretch"].as<double>() : p.youngs_bend;
    if (n["shear_modulus"]) p.shear_modulus = n["shear_modulus"].as<double>();
    p.density = n["density"].as<double>();
    p.radius = n["radius"].as<double>();
    p.length = n["length"].as<double>();
    p.penalty_constant = n["penalty_constant"].as<double>();
    p.num_points = n["num_points"].as<int>();
    if (n["intrinsic_curvature"]) p.intrinsic_curvature = parse_vec3(n["intrinsic_curvature"], "intrinsic_curvature");
    if (n["stiffness_variant"]) {
        const auto v = n["stiffness_variant"].as<std::string>();
        if (v == "corrected") p.stiffness_variant = StiffnessVariant::Corrected;
        else if (v == "corde-original") p.stiffness_variant = StiffnessVariant::CordeOriginal;
        else throw ConfigError("stiffness_variant must be corrected or corde-original");
    }
    return p;
}
}  // namespace

void ScenarioConfig::validate() const {
    rod.validate();
    integrator.validate();
    if (topology == Topology::Coupled) {
        tendon.validate();
        coupling.validate();
        if (outputs.reference == "oracle")
            throw ConfigError("the analytical reference applies to the single-rod topology only");
    }
    if (endpoint_load) {
        if (!(endpoint_load->mass_kg > 0.0)) throw ConfigError("endpoint load mass must be positive");
        if (endpoint_load->direction.norm() < 1e-12) throw ConfigError("endpoint load direction is zero");
    }
    if (sweep) {
        if (sweep->values.empty()) throw ConfigError("sweep needs at least one value");
        for (double v : sweep->values)
            if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
        static const char* known[] = {"K_p", "N", "xi", "K_L", "K_E", "K_C", "N_T", "N_C"};
        bool ok = false;
        for (const char* k : known) ok = ok || sweep->parameter == k;
        if (!ok) throw ConfigError("unknown sweep parameter: " + sweep->parameter);
    }
}

ScenarioConfig load_scenario(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse config " + path + ": " + e.what());
    }
    try {
        ScenarioConfig cfg;
        const YAML::Node sc = root["scenario"];
        if (sc) {
            if (sc["name"]) cfg.name = sc["name"].as<std::string>();
            if (sc["topology"]) {
                const auto t = sc["topology"].as<std::string>();
                if (t == "single") cfg.topology = Topology::Single;
                else if (t == "coupled") cfg.topology = Topology::Coupled;
                else throw ConfigError("topology must be single or coupled");
            }
        }

        cfg.rod = parse_rod(root["catheter"] ? root["catheter"] : root["rod"],
                            cfg.topology == Topology::Coupled ? "catheter" : "rod");
        if (cfg.topology == Topology::Coupled) cfg.tendon = parse_rod(root["tendon"], "tendon");

        if (const YAML::Node b = root["base"]) {
            if (b["position"]) cfg.base.position = parse_vec3(b["position"], "base position");
            if (b["orientation"]) {
                const YAML::Node q = b["orientation"];
                if (!q.IsSequence() || q.size() != 4)
                    throw ConfigError("base orientation must be [q1, q2, q3, q4]");
                cfg.base.orientation = Quaternion(q[0].as<double>(), q[1].as<double>(),
                                                  q[2].as<double>(), q[3].as<double>());
            }
        }

        cfg.boundary.clamped_base = true;
        if (const YAML::Node b = root["boundary"]) {
            if (b["clamped_base"]) cfg.boundary.clamped_base = b["clamped_base"].as<bool>();
            if (b["gravity"]) cfg.boundary.gravity = parse_vec3(b["gravity"], "gravity");
            if (b["endpoint_load"]) {
                EndpointLoad el;
                el.mass_kg = b["endpoint_load"]["mass_kg"].as<double>();
                if (b["endpoint_load"]["direction"])
                    el.direction = parse_vec3(b["endpoint_load"]["direction"], "load direction");
                cfg.endpoint_load = el;
            }
            if (b["point_loads"])
                for (const auto& pl : b["point_loads"])
                    cfg.boundary.point_loads.push_back(
                        {pl["index"].as<int>(), parse_vec3(pl["force"], "point load force")});
        }
        cfg.boundary.clamp_orientation = cfg.base.orientation;

        if (const YAML::Node c = root["coupling"]) {
            cfg.coupling.lumen_offset = c["lumen_offset"].as<double>();
            if (c["direction_weights"]) {
                cfg.coupling.weight_d1 = c["direction_weights"][0].as<double>();
                cfg.coupling.weight_d2 = c["direction_weights"][1].as<double>();
            }
            cfg.coupling.lumen_constant = c["lumen_constant"].as<double>();
            cfg.coupling.endpoint_compliance_constant = c["endpoint_compliance_constant"].as<double>();
            cfg.coupling.endpoint_coupling_constant = c["endpoint_coupling_constant"].as<double>();
            if (c["reaction_mode"]) {
                const auto m = c["reaction_mode"].as<std::string>();
                if (m == "average") cfg.coupling.reaction_mode = ReactionMode::Average;
                else if (m == "sum") cfg.coupling.reaction_mode = ReactionMode::Sum;
                else throw ConfigError("reaction_mode must be average or sum");
            }
        }
        if (const YAML::Node a = root["actuation"]) {
            cfg.actuation_force = a["force"].as<double>();
            if (a["site"]) {
                const auto s = a["site"].as<std::string>();
                if (s == "distal") cfg.actuation_site = ActuationSite::Distal;
                else if (s == "proximal") cfg.actuation_site = ActuationSite::Proximal;
                else throw ConfigError("actuation site must be distal or proximal");
            }
            if (a["ramp_steps"]) cfg.actuation_ramp_steps = a["ramp_steps"].as<int>();
        }

        if (const YAML::Node n = root["integrator"]) {
            if (n["timestep"]) cfg.integrator.timestep = n["timestep"].as<double>();
            if (n["damping"]) cfg.integrator.damping = n["damping"].as<double>();
            if (n["residual_tol"]) cfg.integrator.residual_tol = n["residual_tol"].as<double>();
            if (n["max_newton_iters"]) cfg.integrator.max_newton_iters = n["max_newton_iters"].as<int>();
            if (n["max_steps"]) cfg.integrator.max_steps = n["max_steps"].as<int>();
            if (n["convergence_velocity_tol"])
                cfg.integrator.convergence_velocity_tol = n["convergence_velocity_tol"].as<double>();
        }

        if (const YAML::Node o = root["outputs"]) {
            if (o["trace"]) cfg.outputs.trace = o["trace"].as<bool>();
            if (o["svg"]) cfg.outputs.svg = o["svg"].as<bool>();
            if (o["reference"]) cfg.outputs.reference = o["reference"].as<std::string>();
        }

        if (const YAML::Node s = root["sweep"]) {
            SweepSpec sw;
            sw.parameter = s["parameter"].as<std::string>();
            for (const auto& v : s["values"]) sw.values.push_back(v.as<double>());
            cfg.sweep = sw;
        }

        cfg.validate();
        return cfg;
    } catch (const YAML::Exception& e) {
        throw ConfigError("invalid config " + path + ": " + e.what());
    }
}

namespace {

Vec3 lateral_direction(const ScenarioConfig& cfg) {
    const DirectorFrame f = directors_from_quaternion(cfg.base.orientation);
    if (cfg.topology == Topology::Coupled)
        return (cfg.coupling.weight_d1 * f.d1 + cfg.coupling.weight_d2 * f.d2).normalized();
    Vec3 dir = Vec3::Zero();
    if (cfg.endpoint_load) dir = cfg.endpoint_load->direction;
    else if (!cfg.boundary.point_loads.empty()) dir = cfg.boundary.point_loads.front().force;
    dir -= dir.dot(f.d3) * f.d3;
    return dir.norm() > 1e-12 ? Vec3(dir.normalized()) : f.d1;
}

Centerline2D project_centerline(const std::vector<Vec3>& pts, const Vec3& origin, const Vec3& axis,
                                const Vec3& lateral, const std::string& label) {
    Centerline2D c;
    c.label = label;
    c.points.reserve(pts.size());
    for (const auto& p : pts) c.points.emplace_back((p - origin).dot(axis), (p - origin).dot(lateral));
    return c;
}

int plateau_steps_of(const std::vector<TraceEntry>& trace, double length) {
    if (trace.empty()) return 0;
    const Vec3 fin = trace.back().tip;
    int k = static_cast<int>(trace.size()) - 1;
    while (k > 0 && (trace[k - 1].tip - fin).norm() <= 0.01 * length) --k;
    return k + 1;  // 1-based step index
}

BoundaryConditions effective_bc(const ScenarioConfig& cfg) {
    BoundaryConditions bc = cfg.boundary;
    bc.clamp_orientation = cfg.base.orientation;
    if (cfg.endpoint_load) {
        const Vec3 f = kStandardGravity * cfg.endpoint_load->mass_kg *
                       cfg.endpoint_load->direction.normalized();
        bc.point_loads.push_back({cfg.rod.num_points - 1, f});
    }
    return bc;
}

void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "step,time_s,h_used_s,tip_x_m,tip_y_m,tip_z_m,max_velocity_m_s,newton_iterations,residual_norm\n";
    char buf[256];
    double t = 0.0;
    for (const auto& e : trace) {
        t += e.h_used;
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.6g,%d,%.6g\n", e.step, t,
                      e.h_used, e.tip.x(), e.tip.y(), e.tip.z(), e.max_velocity,
                      e.newton_iterations, e.residual_norm);
        out << buf;
    }
}
}  // namespace

Centerline2D oracle_curve(double force, double length, double youngs, double radius, int samples) {
    const CantileverProblem prob = CantileverProblem::make(force, length, youngs, radius);
    const double phi0 = phi0_from_alpha(prob.load_parameter);
    const DeflectionCurve curve = deflection_curve(prob, phi0, samples);
    Centerline2D out;
    out.label = "analytical";
    out.points.reserve(curve.samples.size());
    for (const auto& s : curve.samples) out.points.emplace_back(s.x, s.y);
    return out;
}

RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir) {
    config.validate();
    fs::create_directories(out_dir);

    RunResult res;
    res.name = config.name;
    res.topology = config.topology;
    res.rod_length = config.rod.length;

    const Vec3 axis = directors_from_quaternion(config.base.orientation).d3;
    const Vec3 lateral = lateral_direction(config);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Vec3> rod_points, tendon_points;
    if (config.topology == Topology::Single) {
        RodState state = make_rod(config.rod, config.base);
        const BoundaryConditions bc = effective_bc(config);
        const EquilibriumResult eq = run_to_equilibrium(state, config.rod, bc, config.integrator);
        res.converged = eq.converged;
        res.steps = eq.steps;
        res.trace = eq.trace;
        res.max_tangent_defect = max_tangent_defect(state);
        rod_points = state.points;
    } else {
        CoupledSystem sys = make_coupled_system(config.rod, config.tendon, config.coupling,
                                                config.actuation_force, config.base);
        sys.actuation_site = config.actuation_site;
        sys.actuation_ramp_steps = config.actuation_ramp_steps;
        const EquilibriumResult eq = simulate_coupled(sys, config.integrator);
        res.converged = eq.converged;
        res.steps = eq.steps;
        res.trace = eq.trace;
        res.max_tangent_defect = max_tangent_defect(sys.catheter);
        res.max_lumen_compliance = max_lumen_compliance(sys);
        CouplingForces cf;
        cf.on_tendon_points.assign(sys.tendon.num_points(), Vec3::Zero());
        cf.on_catheter_points.assign(sys.catheter.num_points(), Vec3::Zero());
        endpoint_forces(sys, cf);
        res.endpoint_compliance = cf.compliance_e;
        res.coupling_compliance = cf.compliance_c;
        rod_points = sys.catheter.points;
        tendon_points = sys.tendon.points;
    }
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& e : res.trace) res.newton_iterations_total += e.newton_iterations;

    res.tip_position = rod_points.back();
    res.centerline = project_centerline(rod_points, config.base.position, axis, lateral,
                                        config.topology == Topology::Single ? "rod" : "catheter");
    res.tip_2d = res.centerline.points.back();
    res.tip_deflection = res.tip_2d.y();
    res.plateau_steps = plateau_steps_of(res.trace, config.rod.length);
    if (!tendon_points.empty())
        res.tendon_centerline =
            project_centerline(tendon_points, config.base.position, axis, lateral, "tendon");

    std::vector<Centerline2D> plot_curves{res.centerline};
    if (res.tendon_centerline) plot_curves.push_back(*res.tendon_centerline);

    if (!config.outputs.reference.empty()) {
        Centerline2D ref;
        if (config.outputs.reference == "oracle") {
            if (!config.endpoint_load)
                throw ConfigError("oracle reference needs an endpoint hanging-mass load");
            const double f = kStandardGravity * config.endpoint_load->mass_kg;
            ref = oracle_curve(f, config.rod.length, config.rod.youngs_bend, config.rod.radius, 400);
        } else {
            ref = read_centerline(config.outputs.reference);
            ref.label = "reference";
        }
        res.tip_error_fraction = tip_error(res.centerline, ref, config.rod.length);
        res.area_error = area_error(res.centerline, ref, config.rod.length);
        const std::string ref_path = out_dir + "/centerline_reference.csv";
        write_centerline(ref, ref_path);
        res.files.push_back(ref_path);
        plot_curves.push_back(ref);
    }

    const std::string main_path =
        out_dir + (config.topology == Topology::Single ? "/centerline_rod.csv"
                                                       : "/centerline_catheter.csv");
    write_centerline(res.centerline, main_path);
    res.files.push_back(main_path);
    if (res.tendon_centerline) {
        const std::string tpath = out_dir + "/centerline_tendon.csv";
        write_centerline(*res.tendon_centerline, tpath);
        res.files.push_back(tpath);
    }
    if (config.outputs.trace) {
        const std::string tpath = out_dir + "/trace.csv";
        write_trace_csv(tpath, res.trace);
        res.files.push_back(tpath);
    }
    if (config.outputs.svg) {
        const std::string spath = out_dir + "/plot.svg";
        write_svg_plot(spath, plot_curves, config.name);
        res.files.push_back(spath);
    }
    const std::string jpath = out_dir + "/result.json";
    std::ofstream(jpath, std::ios::binary) << result_json(res) << "\n";
    res.files.push_back(jpath);
    return res;
}

namespace {
void apply_sweep_value(ScenarioConfig& cfg, const std::string& param, double value) {
    const bool coupled = cfg.topology == Topology::Coupled;
    if (param == "K_p") cfg.rod.penalty_constant = value;
    else if (param == "N") cfg.rod.num_points = static_cast<int>(value);
    else if (param == "xi") cfg.integrator.damping = value;
    else if (param == "N_C") cfg.rod.num_points = static_cast<int>(value);
    else if (param == "K_L" || param == "K_E" || param == "K_C" || param == "N_T") {
        if (!coupled) throw ConfigError("sweep parameter " + param + " needs the coupled topology");
        if (param == "K_L") cfg.coupling.lumen_constant = value;
        else if (param == "K_E") cfg.coupling.endpoint_compliance_constant = value;
        else if (param == "K_C") cfg.coupling.endpoint_coupling_constant = value;
        else cfg.tendon.num_points = static_cast<int>(value);
    } else {
        throw ConfigError("unknown sweep parameter: " + param);
    }
}

std::string csv_opt(const std::optional<double>& v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", *v);
    return buf;
}
}  // namespace

std::vector<RunResult> sweep_scenario(const ScenarioConfig& config, const std::string& out_dir,
                                      int threads) {
    config.validate();
    if (!config.sweep) throw ConfigError("config has no sweep block");
    const SweepSpec& sw = *config.sweep;
    fs::create_directories(out_dir);

    const int n = static_cast<int>(sw.values.size());
    std::vector<RunResult> results(n);
    std::vector<std::string> errors(n);
    std::atomic<int> next{0};
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, n));

    auto work = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                ScenarioConfig c = config;
                c.sweep.reset();
                apply_sweep_value(c, sw.parameter, sw.values[i]);
                c.name = config.name + "_" + sw.parameter + "_" + std::to_string(sw.values[i]);
                results[i] = run_scenario(c, out_dir + "/value_" + std::to_string(i));
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (int i = 0; i < n; ++i)
        if (!errors[i].empty())
            throw ConfigError("sweep value " + std::to_string(sw.values[i]) + " failed: " + errors[i]);

    std::ofstream out(out_dir + "/summary.csv", std::ios::binary);
    if (!out) throw ConfigError("cannot write sweep summary");
    out << "parameter,value,converged,steps,plateau_steps,tip_axial_m,tip_lateral_m,"
           "tip_error_fraction,max_tangent_defect,max_lumen_compliance_m\n";
    char buf[320];
    for (int i = 0; i < n; ++i) {
        const RunResult& r = results[i];
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%d,%d,%d,%.10g,%.10g,%s,%.6g,%s\n",
                      sw.parameter.c_str(), sw.values[i], r.converged ? 1 : 0, r.steps,
                      r.plateau_steps, r.tip_2d.x(), r.tip_2d.y(),
                      csv_opt(r.tip_error_fraction).c_str(), r.max_tangent_defect,
                      csv_opt(r.max_lumen_compliance).c_str());
        out << buf;
    }
    return results;
}

std::string result_json(const RunResult& r) {
    ordered_json j;
    j["name"] = r.name;
    j["topology"] = r.topology == Topology::Single ? "single" : "coupled";
    j["converged"] = r.converged;
    j["steps"] = r.steps;
    j["plateau_steps"] = r.plateau_steps;
    j["newton_iterations_total"] = r.newton_iterations_total;
    j["rod_length_m"] = r.rod_length;
    j["tip_position_m"] = {r.tip_position.x(), r.tip_position.y(), r.tip_position.z()};
    j["tip_2d_m"] = {r.tip_2d.x(), r.tip_2d.y()};
    j["tip_deflection_m"] = r.tip_deflection;
    ordered_json metrics = ordered_json::object();
    if (r.tip_error_fraction) metrics["tip_error_fraction"] = *r.tip_error_fraction;
    if (r.area_error) metrics["area_error_m"] = *r.area_error;
    j["metrics"] = metrics;
    ordered_json resid = ordered_json::object();
    resid["max_tangent_defect"] = r.max_tangent_defect;
    if (r.max_lumen_compliance) resid["max_lumen_compliance_m"] = *r.max_lumen_compliance;
    if (r.endpoint_compliance) resid["endpoint_compliance_m"] = *r.endpoint_compliance;
    if (r.coupling_compliance) resid["coupling_compliance_m"] = *r.coupling_compliance;
    j["residuals"] = resid;
    j["files"] = r.files;
    j["wall_time_s"] = r.wall_time_s;
    return j.dump(2);
}

}  // namespace cathrod
