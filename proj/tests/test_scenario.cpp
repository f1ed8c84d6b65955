#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "cathrod/scenario.hpp"

using namespace cathrod;
namespace fs = std::filesystem;

namespace {
std::string write_temp(const char* name, const std::string& text) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream(path) << text;
    return path;
}

const char* kSmallSingle = R"(
scenario:
  name: smoke_single
  topology: single
rod:
  youngs_bend: 5.9e6
  youngs_stretch: 5.9e6
  density: 11040.0
  radius: 0.006
  length: 0.12
  penalty_constant: 1.0e4
  num_points: 10
boundary:
  clamped_base: true
  endpoint_load:
    mass_kg: 0.05
    direction: [1.0, 0.0, 0.0]
integrator:
  timestep: 0.3
  damping: 0.9
  residual_tol: 3.0e-8
  max_steps: 2000
outputs:
  trace: true
  svg: true
  reference: oracle
)";
}  // namespace

TEST_CASE("scenario parses with defaults and validates") {
    const std::string path = write_temp("cathrod_cfg1.yaml", kSmallSingle);
    const ScenarioConfig cfg = load_scenario(path);
    CHECK(cfg.name == "smoke_single");
    CHECK(cfg.topology == Topology::Single);
    CHECK(cfg.rod.num_points == 10);
    CHECK(cfg.rod.shear_modulus <= 0.0);  // defaulted to E_b/3 at use
    CHECK(cfg.rod.effective_shear_modulus() == doctest::Approx(5.9e6 / 3.0));
    CHECK(cfg.integrator.timestep == 0.3);
    CHECK(cfg.endpoint_load.has_value());
    fs::remove(path);
}

TEST_CASE("invalid configs are rejected") {
    std::string broken(kSmallSingle);
    broken.replace(broken.find("num_points: 10"), 14, "num_points: 2 ");
    const std::string path = write_temp("cathrod_cfg2.yaml", broken);
    CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains("num_points"), ConfigError);
    fs::remove(path);

    std::string bad_sweep(kSmallSingle);
    bad_sweep += "\nsweep:\n  parameter: K_zz\n  values: [1, 2]\n";
    const std::string path2 = write_temp("cathrod_cfg3.yaml", bad_sweep);
    CHECK_THROWS_WITH_AS(load_scenario(path2), doctest::Contains("sweep parameter"), ConfigError);
    fs::remove(path2);
}

TEST_CASE("run produces the declared outputs and is reproducible") {
    const std::string path = write_temp("cathrod_cfg4.yaml", kSmallSingle);
    const ScenarioConfig cfg = load_scenario(path);
    const std::string out1 = (fs::temp_directory_path() / "cathrod_run1").string();
    const std::string out2 = (fs::temp_directory_path() / "cathrod_run2").string();
    fs::remove_all(out1);
    fs::remove_all(out2);

    const RunResult r1 = run_scenario(cfg, out1);
    CHECK(r1.converged);
    CHECK(r1.tip_error_fraction.has_value());
    CHECK(*r1.tip_error_fraction < 0.01);
    CHECK(fs::exists(out1 + "/centerline_rod.csv"));
    CHECK(fs::exists(out1 + "/centerline_reference.csv"));
    CHECK(fs::exists(out1 + "/trace.csv"));
    CHECK(fs::exists(out1 + "/plot.svg"));
    CHECK(fs::exists(out1 + "/result.json"));

    const RunResult r2 = run_scenario(cfg, out2);
    auto load_json_without_walltime = [](const std::string& p) {
        std::ifstream in(p + "/result.json");
        nlohmann::ordered_json j;
        in >> j;
        j.erase("wall_time_s");
        j.erase("files");  // paths differ by directory
        return j;
    };
    CHECK(load_json_without_walltime(out1) == load_json_without_walltime(out2));

    fs::remove_all(out1);
    fs::remove_all(out2);
    fs::remove(path);
}

TEST_CASE("sweep writes an order-preserving summary") {
    std::string sweep_cfg(kSmallSingle);
    sweep_cfg += "\nsweep:\n  parameter: K_p\n  values: [1.0e3, 1.0e4]\n";
    const std::string path = write_temp("cathrod_cfg5.yaml", sweep_cfg);
    const ScenarioConfig cfg = load_scenario(path);
    const std::string out = (fs::temp_directory_path() / "cathrod_sweep").string();
    fs::remove_all(out);

    const std::vector<RunResult> rs = sweep_scenario(cfg, out, 2);
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].converged);
    CHECK(rs[1].converged);
    CHECK(rs[1].max_tangent_defect < rs[0].max_tangent_defect);

    std::ifstream in(out + "/summary.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.find("parameter,value") == 0);
    std::getline(in, line);
    CHECK(line.find("K_p,1000") == 0);
    std::getline(in, line);
    CHECK(line.find("K_p,10000") == 0);
    CHECK(fs::exists(out + "/value_0/result.json"));
    CHECK(fs::exists(out + "/value_1/result.json"));

    fs::remove_all(out);
    fs::remove(path);
}

TEST_CASE("oracle curve lands in the runner's comparison frame") {
    const Centerline2D c = oracle_curve(0.4905, 0.12, 5.9e6, 0.006, 100);
    CHECK(c.points.size() == 100);
    CHECK(c.points.front().norm() == 0.0);        // clamp at the origin
    CHECK(c.points.back().x() > 0.1);             // axial reach
    CHECK(c.points.back().y() > 0.03);            // lateral deflection
    CHECK_THROWS(oracle_curve(1e9, 0.12, 5.9e6, 0.006, 100));  // alpha out of range
}

TEST_CASE("coupled scenario config parses") {
    const char* coupled = R"(
scenario: {name: smoke_coupled, topology: coupled}
catheter:
  youngs_bend: 5.9e6
  density: 11040.0
  radius: 0.006
  length: 0.16
  penalty_constant: 1.0e4
  num_points: 12
tendon:
  youngs_bend: 5.9e6
  youngs_stretch: 1.0e3
  density: 10000.0
  radius: 1.0e-4
  length: 0.16
  penalty_constant: 1.0
  num_points: 6
coupling:
  lumen_offset: 0.004
  lumen_constant: 1000.0
  endpoint_compliance_constant: 950.0
  endpoint_coupling_constant: 2.0e5
actuation: {force: 2.0, site: distal, ramp_steps: 15}
integrator: {timestep: 0.2, residual_tol: 3.0e-8, max_steps: 1500}
outputs: {trace: false, svg: false}
)";
    const std::string path = write_temp("cathrod_cfg6.yaml", coupled);
    const ScenarioConfig cfg = load_scenario(path);
    CHECK(cfg.topology == Topology::Coupled);
    CHECK(cfg.tendon.num_points == 6);
    CHECK(cfg.actuation_force == 2.0);
    CHECK(cfg.actuation_ramp_steps == 15);
    CHECK(cfg.coupling.endpoint_coupling_constant == 2e5);

    // oracle reference is a single-topology feature
    std::string bad(coupled);
    bad += "\noutputs: {reference: oracle}\n";
    const std::string path2 = write_temp("cathrod_cfg7.yaml", bad);
    CHECK_THROWS(load_scenario(path2));
    fs::remove(path);
    fs::remove(path2);
}
