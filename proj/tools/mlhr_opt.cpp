// mlhr-opt: batch front-end over the sampling, optimizer, map, and vehicle
// pipelines. One JSON config per run; paths inside the config resolve
// relative to the config file. Exit codes: 0 success, 2 configuration or
// precondition, 3 optimizer failure, 4 empty map, 5 ingestion.
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlhr/common.hpp"
#include "mlhr/io.hpp"
#include "mlhr/motor_model.hpp"
#include "mlhr/optimizer.hpp"
#include "mlhr/sampling.hpp"
#include "mlhr/trajectory.hpp"
#include "mlhr/vehicle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("MLHR_OPT_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "quiet") return LogLevel::kQuiet;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) std::cerr << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::kDebug) std::cerr << msg << '\n';
}

// Shared command-line state; config is loaded before dispatch.
struct Cli {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int workers{1};
    std::string out_flag;

    json config;
    fs::path config_dir;
    fs::path out_dir;

    void load() {
        config = json::parse(mlhr::io::read_text(config_path));
        config_dir = fs::path(config_path).parent_path();
        if (!out_flag.empty()) {
            out_dir = out_flag;
        } else if (config.contains("out") && config["out"].is_string()) {
            out_dir = config_dir / config["out"].get<std::string>();
        } else {
            out_dir = ".";
        }
    }

    fs::path resolve(const std::string& rel) const { return config_dir / rel; }
    std::string out_file(const std::string& name) const { return (out_dir / name).string(); }
};

std::uint64_t required_seed(const Cli& cli, const json& block) {
    if (cli.seed) return *cli.seed;
    if (block.contains("seed") && block["seed"].is_number()) {
        return block["seed"].get<std::uint64_t>();
    }
    throw std::invalid_argument("config: seed is required (config field or --seed)");
}

std::vector<double> axis_from_config(const json& cfg, const char* key, double lo, double hi,
                                     double step) {
    if (cfg.contains(key)) {
        const json& a = cfg[key];
        lo = a.value("lo", lo);
        hi = a.value("hi", hi);
        step = a.value("step", step);
    }
    return mlhr::traj::make_axis(lo, hi, step);
}

// Accepts "machine": "reference" | {...} or "design": {...}; exactly one.
mlhr::motor::MachineParams machine_from_config(const json& cfg) {
    const bool has_machine = cfg.contains("machine");
    const bool has_design = cfg.contains("design");
    if (has_machine == has_design) {
        throw std::invalid_argument("config: provide exactly one of 'machine' or 'design'");
    }
    if (has_design) {
        auto m = mlhr::motor::params_from_geometry(mlhr::io::design_from_json(cfg["design"]));
        m.validate();
        return m;
    }
    const json& mj = cfg["machine"];
    if (mj.is_string()) {
        if (mj.get<std::string>() != "reference") {
            throw std::invalid_argument("config: unknown machine preset '" +
                                        mj.get<std::string>() + "'");
        }
        return mlhr::motor::reference_machine();
    }
    return mlhr::io::machine_from_json(mj);
}

int cmd_sample(Cli& cli) {
    const json& cfg = cli.config;
    const auto n = static_cast<std::size_t>(cfg.value("n", 0));
    const auto dims = static_cast<std::size_t>(cfg.value("dims", 0));
    if (n < 2) {
        std::cerr << "sample: need n >= 2\n";
        return 2;
    }
    if (dims < 1) {
        std::cerr << "sample: need dims >= 1\n";
        return 2;
    }
    const int iterations = cfg.value("iterations", 100);
    const double p = cfg.value("p", 50.0);
    const double t = cfg.value("t", 1.0);
    const std::uint64_t seed = required_seed(cli, cfg);

    const auto initial = mlhr::sampling::lhs_init(n, dims, seed);
    const double before = mlhr::sampling::phi_p(initial, p, t);
    const auto optimized = mlhr::sampling::lhs_optimize(initial, iterations, seed, p, t);
    const double after = optimized.trace.back();

    std::vector<std::string> header;
    header.reserve(dims);
    for (std::size_t d = 1; d <= dims; ++d) header.push_back("x" + std::to_string(d));
    const std::string path = cli.out_file("samples.csv");
    mlhr::io::write_csv(path, header, optimized.x);
    log_info("sample: wrote " + path);

    std::cout << "phi_p before=" << mlhr::format9(before)
              << " after=" << mlhr::format9(after) << '\n';
    return 0;
}

int cmd_optimize(Cli& cli) {
    const json& cfg = cli.config;
    const std::string problem_name = cfg.value("problem", "zdt1");
    if (problem_name != "zdt1") {
        std::cerr << "optimize: unknown problem '" << problem_name << "'\n";
        return 2;
    }
    const auto dims = static_cast<std::size_t>(cfg.value("dims", 8));

    mlhr::optimizer::Nsga2Config ncfg;
    if (cfg.contains("nsga2")) ncfg = mlhr::io::nsga2_config_from_json(cfg["nsga2"]);
    ncfg.seed = required_seed(cli, cfg.contains("nsga2") ? cfg["nsga2"] : json::object());

    const std::string sampler_name = cfg.value("sampler", "plain-lhs");
    mlhr::optimizer::Sampler sampler;
    if (sampler_name == "plain-lhs") {
        sampler = mlhr::optimizer::Sampler::kPlain;
    } else if (sampler_name == "mlhr") {
        sampler = mlhr::optimizer::Sampler::kMlhr;
    } else {
        std::cerr << "optimize: unknown sampler '" << sampler_name << "'\n";
        return 2;
    }

    auto problem = mlhr::optimizer::zdt1_problem(dims);
    if (cfg.contains("eval_budget")) {
        const long long budget = cfg["eval_budget"].get<long long>();
        auto base = problem.objectives;
        auto used = std::make_shared<std::atomic<long long>>(0);
        problem.objectives =
            [base, used, budget](const std::vector<double>& x)
            -> std::optional<std::vector<double>> {
            if (used->fetch_add(1) >= budget) return std::nullopt;
            return base(x);
        };
    }

    const auto result = mlhr::optimizer::nsga2_run(problem, ncfg, sampler, cli.workers);

    const std::string history_path = cli.out_file("history.csv");
    mlhr::io::write_history_csv(history_path, result.history);
    log_info("optimize: wrote " + history_path);
    for (const auto& row : result.history) {
        log_debug("optimize: generation " + std::to_string(row.generation) +
                  " hypervolume " + mlhr::format9(row.hypervolume));
    }
    if (result.aborted) {
        std::cerr << "optimize: evaluator failed; partial history retained\n";
        return 3;
    }

    const std::string front_path = cli.out_file("front.json");
    mlhr::io::write_text(front_path, mlhr::io::front_to_json(result).dump(2) + "\n");
    log_info("optimize: wrote " + front_path);

    int generations_to_target = result.history.back().generation;
    if (cfg.contains("hv_target")) {
        const double target = cfg["hv_target"].get<double>();
        generations_to_target = -1;
        for (const auto& row : result.history) {
            if (row.hypervolume >= target) {
                generations_to_target = row.generation;
                break;
            }
        }
    }
    std::cout << "generations_to_target=" << generations_to_target
              << ", true_evals=" << result.true_evals << '\n';
    return 0;
}

int cmd_map(Cli& cli) {
    const json& cfg = cli.config;
    const auto machine = machine_from_config(cfg);
    const auto speed = axis_from_config(cfg, "speed", 0.0, 1000.0, 10.0);
    const auto torque = axis_from_config(cfg, "torque", 0.0, 212.0, 5.0);
    const double threshold = cfg.value("premium_threshold", 0.94);

    const auto map = mlhr::traj::build_map(machine, speed, torque, cli.workers);
    const std::string map_path = cli.out_file("map.csv");
    mlhr::io::write_map_csv(map_path, map);
    log_info("map: wrote " + map_path);

    std::size_t feasible = 0;
    for (const auto& cell : map.cells) feasible += cell.feasible ? 1 : 0;
    if (feasible == 0) {
        std::cerr << "map: no feasible cell on the requested grid\n";
        return 4;
    }

    const auto report = mlhr::traj::tpca(map);
    json tj;
    tj["low"] = mlhr::round9(report.low);
    tj["accelerating"] = mlhr::round9(report.accelerating);
    tj["high"] = mlhr::round9(report.high);
    tj["total"] = mlhr::round9(report.total);
    tj["warnings"] = report.warnings;
    mlhr::io::write_text(cli.out_file("tpca.json"), tj.dump(2) + "\n");

    const auto stats = mlhr::traj::premium_region_stats(map, {}, threshold);
    json pj;
    pj["threshold"] = mlhr::round9(threshold);
    pj["area_fraction"] = mlhr::round9(stats.area_fraction);
    mlhr::io::write_text(cli.out_file("premium.json"), pj.dump(2) + "\n");
    log_info("map: " + std::to_string(feasible) + " feasible cells");
    return 0;
}

int cmd_drive(Cli& cli) {
    const json& cfg = cli.config;
    const auto machine = machine_from_config(cfg);
    if (!cfg.contains("vehicle")) {
        throw std::invalid_argument("config: missing 'vehicle' block");
    }
    const auto vp = mlhr::io::vehicle_from_json(cfg["vehicle"]);
    if (!cfg.contains("cycle") || !cfg["cycle"].is_string()) {
        throw std::invalid_argument("config: missing 'cycle' path");
    }
    const auto cycle =
        mlhr::io::read_drive_cycle_csv(cli.resolve(cfg["cycle"].get<std::string>()).string());

    const auto points = mlhr::vehicle::cycle_operating_points(vp, machine, cycle);
    const std::string points_path = cli.out_file("points.csv");
    mlhr::io::write_points_csv(points_path, points);
    log_info("drive: wrote " + points_path);

    // Premium-region membership is judged against the machine's map grid.
    const auto speed = axis_from_config(cfg, "speed", 0.0, 1000.0, 10.0);
    const auto torque = axis_from_config(cfg, "torque", 0.0, 212.0, 5.0);
    const double threshold = cfg.value("premium_threshold", 0.94);
    const auto map = mlhr::traj::build_map(machine, speed, torque, cli.workers);
    std::vector<mlhr::motor::OperatingPoint> ops;
    ops.reserve(points.size());
    for (const auto& p : points) {
        mlhr::motor::OperatingPoint op;
        op.omega_mech = p.omega_mech;
        op.torque = p.torque;
        ops.push_back(op);
    }
    const auto stats = mlhr::traj::premium_region_stats(map, ops, threshold);

    json dj;
    dj["a_x_max"] = mlhr::round9(mlhr::vehicle::max_acceleration(vp));
    dj["theta_max_deg"] = mlhr::round9(mlhr::vehicle::max_gradient(vp));
    dj["premium_threshold"] = mlhr::round9(threshold);
    dj["premium_count"] = stats.count_in_premium;
    dj["points_total"] = points.size();
    mlhr::io::write_text(cli.out_file("drivability.json"), dj.dump(2) + "\n");
    log_info("drive: wrote " + cli.out_file("drivability.json"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magnet sizing and drive analysis pipelines"};
    app.require_subcommand(1);

    Cli cli;
    auto add_common = [&cli](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "JSON run configuration")->required();
        sub->add_option("--seed", cli.seed, "seed override");
        sub->add_option("--workers", cli.workers, "worker cap (1 = bit-reproducible)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", cli.out_flag, "output directory");
    };
    CLI::App* sample = app.add_subcommand("sample", "space-filling design matrix");
    CLI::App* optimize = app.add_subcommand("optimize", "run the evolutionary search");
    CLI::App* map = app.add_subcommand("map", "torque-speed efficiency map");
    CLI::App* drive = app.add_subcommand("drive", "drive-cycle and drivability analysis");
    for (CLI::App* sub : {sample, optimize, map, drive}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        cli.load();
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 2;
    }

    try {
        if (sample->parsed()) return cmd_sample(cli);
        if (optimize->parsed()) return cmd_optimize(cli);
        if (map->parsed()) return cmd_map(cli);
        return cmd_drive(cli);
    } catch (const mlhr::io::ParseError& e) {
        std::cerr << "ingest: " << e.what() << '\n';
        return 5;
    } catch (const json::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (optimize->parsed()) return 3;
        if (map->parsed()) return 4;
        return 2;
    }
}
