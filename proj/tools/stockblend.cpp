// Command-line front end: solve, generate, experiment, validate, report.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "blend/de.hpp"
#include "blend/harness.hpp"
#include "blend/model.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNoFeasible = 3;

using namespace blend;

int cmd_solve(const std::string& instance_path, const std::string& mode_text, double alpha_cu, double alpha_fl,
              DeConfig cfg, const std::string& log_base, const std::string& out_path) {
    Instance inst = load_instance(instance_path);
    inst.factors.log_base = log_base == "10" ? LogBase::Ten : LogBase::Natural;
    const auto mode = parse_mode(mode_text);
    if (!mode) throw ValidationError("--mode", "unknown mode '" + mode_text + "'");
    cfg.fitness.mode = *mode;
    cfg.fitness.chance = {alpha_cu, alpha_fl};
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ValidationError("solve", e.what());
    }

    const RunResult res = run(inst, cfg);
    const Solution sol = make_solution(inst, cfg, res);
    const auto& f = res.best_fitness;
    fmt::print("instance {}  mode {}  seed {}\n", inst.name, mode_name(cfg.fitness.mode), cfg.seed);
    fmt::print("fitness u={} v={} w={} q={} g={}\n", f.u, f.v, f.w, f.q, f.g);
    fmt::print("objective {:.2f}  feasible {}\n", f.objective, res.feasible ? "yes" : "no");
    for (std::size_t p = 0; p < res.best_plan.parcels.size(); ++p) {
        const auto& po = res.best_plan.parcels[p];
        fmt::print("  parcel {}: duration {:.4f} d  concentrate {:.2f} t  Cu grade {:.4f}  Cu volume {:.2f} t\n", p + 1,
                   po.duration, po.concentrate, po.grades[Material::Cu], po.cu_volume);
    }
    if (!out_path.empty()) write_file(out_path, solution_to_json(sol));
    return res.feasible ? kExitOk : kExitNoFeasible;
}

int cmd_generate(std::uint64_t seed, const std::string& out_path, std::optional<std::size_t> parcels) {
    if (parcels && (*parcels < 3 || *parcels > 5)) throw ValidationError("--parcels", "must be 3, 4 or 5");
    const Instance inst = generate_instance(GeneratorRanges{}, seed, parcels);
    write_file(out_path, instance_to_json(inst));
    fmt::print("wrote {} ({} parcels, {} days)\n", out_path, inst.parcel_count(), inst.months[0].duration_days);
    return kExitOk;
}

int cmd_experiment(const std::string& spec_path, const std::string& out_dir, std::size_t jobs) {
    const ExperimentSpec spec = load_experiment_spec(spec_path);
    const auto cells = run_experiment(spec, jobs);
    write_experiment(cells, spec, out_dir);
    std::cout << report_table(cells);
    const bool any = std::any_of(cells.begin(), cells.end(), [](const Cell& c) { return c.summary.successes > 0; });
    return any ? kExitOk : kExitNoFeasible;
}

int cmd_validate(const std::string& instance_path, const std::string& solution_path, std::size_t samples,
                 double alpha_cu, double alpha_fl, std::uint64_t seed) {
    if (samples < kMinMcSamples) throw ValidationError("--samples", "must be at least 1000");
    if (!(alpha_cu > 0.0 && alpha_cu < 1.0)) throw ValidationError("--alpha-cu", "must lie in (0, 1)");
    if (!(alpha_fl > 0.0 && alpha_fl < 1.0)) throw ValidationError("--alpha-fl", "must lie in (0, 1)");
    const Instance inst = load_instance(instance_path);
    const Solution sol = parse_solution(read_file(solution_path));
    if (sol.genome.parcels() != inst.parcel_count() || sol.genome.stockpiles() != inst.stockpile_count) {
        throw ValidationError("genome", "shape does not match the instance");
    }
    const auto report = validate_solution(inst, sol.genome, {alpha_cu, alpha_fl}, samples, seed);
    fmt::print("{:>6} {:>10} {:>10} {:>10} {:>6} {:>10} {:>10} {:>10} {:>6}\n", "parcel", "bound_cu", "viol_cu", "mc_cu",
               "ok_cu", "bound_fl", "viol_fl", "mc_fl", "ok_fl");
    bool all_pass = true;
    for (const auto& v : report) {
        fmt::print("{:>6} {:>10.6f} {:>10.6f} {:>10.4f} {:>6} {:>10.6f} {:>10.6f} {:>10.4f} {:>6}\n", v.parcel + 1,
                   v.bound_cu, v.violation_cu, v.estimate.p_cu_ok, v.pass_cu ? "pass" : "FAIL", v.bound_fl,
                   v.violation_fl, v.estimate.p_fl_ok, v.pass_fl ? "pass" : "FAIL");
        all_pass = all_pass && v.pass_cu && v.pass_fl;
    }
    fmt::print("{}\n", all_pass ? "all parcels meet their confidence levels" : "some parcels miss their confidence");
    return kExitOk;
}

int cmd_report(const std::string& runs_dir, const std::string& format) {
    const std::filesystem::path dir = runs_dir;
    SuccessRule rule = SuccessRule::BestMember;
    if (std::filesystem::exists(dir / "spec.json")) {
        rule = parse_experiment_spec(read_file(dir / "spec.json")).success;
    }
    const auto cells = cells_from_run_log(read_file(dir / "runs.jsonl"), rule);
    std::cout << (format == "csv" ? report_csv(cells) : report_table(cells));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stockpile blending with chance constraints: differential evolution solver and experiment harness"};
    app.require_subcommand(1);

    std::string instance_path, mode = "det", log_base = "e", out_path;
    double alpha_cu = 0.9, alpha_fl = 0.9;
    DeConfig cfg;
    auto* solve = app.add_subcommand("solve", "Run differential evolution on one instance");
    solve->add_option("--instance", instance_path, "Instance JSON file")->required()->check(CLI::ExistingFile);
    solve->add_option("--mode", mode, "Fitness mode")->check(CLI::IsMember({"det", "cu", "fl", "both"}));
    solve->add_option("--alpha-cu", alpha_cu, "Confidence of the Cu grade chance constraint");
    solve->add_option("--alpha-fl", alpha_fl, "Confidence of the Fl recovery chance constraint");
    solve->add_option("--pop", cfg.pop_size, "Population size");
    solve->add_option("--gens", cfg.generations, "Generation budget");
    solve->add_option("--f", cfg.f_scale, "Scale factor F");
    solve->add_option("--cr", cfg.crossover_rate, "Crossover rate");
    solve->add_option("--log-base", log_base, "Logarithm in the tonnage formula")->check(CLI::IsMember({"e", "10"}));
    solve->add_option("--seed", cfg.seed, "Random seed")->required();
    solve->add_option("--out", out_path, "Write the solution JSON here");

    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::optional<std::size_t> gen_parcels;
    auto* generate = app.add_subcommand("generate", "Sample a random single-month instance");
    generate->add_option("--seed", gen_seed)->required();
    generate->add_option("--out", gen_out)->required();
    generate->add_option("--parcels", gen_parcels, "Parcel count (3, 4 or 5)");

    std::string spec_path, out_dir;
    std::size_t jobs = 1;
    auto* experiment = app.add_subcommand("experiment", "Run a multi-run experiment grid");
    experiment->add_option("--spec", spec_path)->required()->check(CLI::ExistingFile);
    experiment->add_option("--out-dir", out_dir)->required();
    experiment->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string val_instance, val_solution;
    std::size_t samples = 10000;
    double val_alpha_cu = 0.9, val_alpha_fl = 0.9;
    std::uint64_t val_seed = 0;
    auto* validate = app.add_subcommand("validate", "Monte Carlo check of a solution's chance constraints");
    validate->add_option("--instance", val_instance)->required()->check(CLI::ExistingFile);
    validate->add_option("--solution", val_solution)->required()->check(CLI::ExistingFile);
    validate->add_option("--samples", samples);
    validate->add_option("--alpha-cu", val_alpha_cu);
    validate->add_option("--alpha-fl", val_alpha_fl);
    validate->add_option("--seed", val_seed)->required();

    std::string runs_dir, format = "table";
    auto* report = app.add_subcommand("report", "Summarize an experiment's run log");
    report->add_option("--runs-dir", runs_dir)->required()->check(CLI::ExistingDirectory);
    report->add_option("--format", format)->check(CLI::IsMember({"csv", "table"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*solve) return cmd_solve(instance_path, mode, alpha_cu, alpha_fl, cfg, log_base, out_path);
        if (*generate) return cmd_generate(gen_seed, gen_out, gen_parcels);
        if (*experiment) return cmd_experiment(spec_path, out_dir, jobs);
        if (*validate) return cmd_validate(val_instance, val_solution, samples, val_alpha_cu, val_alpha_fl, val_seed);
        if (*report) return cmd_report(runs_dir, format);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
