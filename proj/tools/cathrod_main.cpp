// cathrod: run and sweep rod/tendon scenarios, emit the analytical reference
// curve, and compare centerlines.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

#include "cathrod/scenario.hpp"

using namespace cathrod;

namespace {
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;

void print_run_summary(const RunResult& r) {
    std::printf("%s: %s in %d steps (%.2fs), tip (%.6g, %.6g) m", r.name.c_str(),
                r.converged ? "converged" : "DID NOT CONVERGE", r.steps, r.wall_time_s,
                r.tip_2d.x(), r.tip_2d.y());
    if (r.tip_error_fraction)
        std::printf(", tip error %.4g%% of L", 100.0 * *r.tip_error_fraction);
    std::printf("\n");
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tendon-driven catheter rod simulator"};
    app.require_subcommand(1);

    std::string out_dir;
    int threads = 0;
    long seed = 0;  // reserved
    std::string units = "m";
    app.add_option("--out-dir", out_dir, "output directory (default cathrod_out/<name>)");
    app.add_option("--threads", threads, "worker threads for sweeps (0 = auto)");
    app.add_option("--seed", seed, "reserved");
    app.add_option("--units", units, "units of centerline files read: m | mm")
        ->check(CLI::IsMember({"m", "mm"}));

    std::string config_path;
    auto* cmd_run = app.add_subcommand("run", "run one scenario to equilibrium");
    cmd_run->add_option("config", config_path, "scenario YAML")->required();

    auto* cmd_sweep = app.add_subcommand("sweep", "run the scenario once per sweep value");
    cmd_sweep->add_option("config", config_path, "scenario YAML with a sweep block")->required();

    double o_force = 0, o_length = 0, o_youngs = 0, o_radius = 0;
    int o_samples = 200;
    bool o_linear_check = false;
    std::string o_out;
    auto* cmd_oracle = app.add_subcommand("oracle", "emit the analytical cantilever curve as CSV");
    cmd_oracle->add_option("--force", o_force, "endpoint load, N")->required();
    cmd_oracle->add_option("--length", o_length, "rod length, m")->required();
    cmd_oracle->add_option("--youngs", o_youngs, "Young's modulus, Pa")->required();
    cmd_oracle->add_option("--radius", o_radius, "rod radius, m")->required();
    cmd_oracle->add_option("--samples", o_samples, "curve samples (default 200)");
    cmd_oracle->add_option("--out", o_out, "output CSV path (default stdout)");
    cmd_oracle->add_flag("--linear-check", o_linear_check,
                         "print tip deflection relative to the small-load limit F L^3/3EI");

    std::string cmp_a, cmp_b, cmp_metric = "tip";
    double cmp_length = 0;
    auto* cmd_compare = app.add_subcommand("compare", "error metrics between two centerlines");
    cmd_compare->add_option("a", cmp_a, "first centerline CSV")->required();
    cmd_compare->add_option("b", cmp_b, "second centerline CSV")->required();
    cmd_compare->add_option("--length", cmp_length, "rod length, m")->required();
    cmd_compare->add_option("--metric", cmp_metric, "tip | area")
        ->check(CLI::IsMember({"tip", "area"}));

    CLI11_PARSE(app, argc, argv);

    try {
        const double unit_scale = units == "mm" ? 1e-3 : 1.0;

        if (*cmd_run) {
            const ScenarioConfig cfg = load_scenario(config_path);
            const std::string dir = out_dir.empty() ? "cathrod_out/" + cfg.name : out_dir;
            const RunResult r = run_scenario(cfg, dir);
            print_run_summary(r);
            std::printf("outputs in %s\n", dir.c_str());
            return r.converged ? 0 : kExitNotConverged;
        }

        if (*cmd_sweep) {
            const ScenarioConfig cfg = load_scenario(config_path);
            const std::string dir = out_dir.empty() ? "cathrod_out/" + cfg.name : out_dir;
            const std::vector<RunResult> rs = sweep_scenario(cfg, dir, threads);
            bool all_converged = true;
            for (const auto& r : rs) {
                print_run_summary(r);
                all_converged = all_converged && r.converged;
            }
            std::printf("summary in %s/summary.csv\n", dir.c_str());
            return all_converged ? 0 : kExitNotConverged;
        }

        if (*cmd_oracle) {
            if (o_force <= 0 || o_length <= 0 || o_youngs <= 0 || o_radius <= 0)
                throw ConfigError("oracle arguments must be positive");
            const Centerline2D curve = oracle_curve(o_force, o_length, o_youngs, o_radius, o_samples);
            if (o_linear_check) {
                const CantileverProblem prob =
                    CantileverProblem::make(o_force, o_length, o_youngs, o_radius);
                std::printf("tip / (F L^3 / 3 E I) = %.6f\n",
                            curve.points.back().y() / euler_bernoulli_tip(prob));
            }
            if (o_out.empty()) {
                std::printf("index,x_m,y_m\n");
                for (size_t i = 0; i < curve.points.size(); ++i)
                    std::printf("%zu,%.17g,%.17g\n", i, curve.points[i].x(), curve.points[i].y());
            } else {
                write_centerline(curve, o_out);
                std::printf("wrote %s\n", o_out.c_str());
            }
            return 0;
        }

        if (*cmd_compare) {
            const Centerline2D a = read_centerline(cmp_a, unit_scale);
            const Centerline2D b = read_centerline(cmp_b, unit_scale);
            nlohmann::ordered_json j;
            j["metric"] = cmp_metric;
            j["rod_length_m"] = cmp_length;
            if (cmp_metric == "tip") j["tip_error_fraction"] = tip_error(a, b, cmp_length);
            else j["area_error_m"] = area_error(a, b, cmp_length);
            std::cout << j.dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
