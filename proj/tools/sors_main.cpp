#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sors/config.hpp"
#include "sors/harness.hpp"
#include "sors/mdp_io.hpp"
#include "sors/verifier.hpp"

namespace {

std::string format_trajectory(const sors::Trajectory& traj) {
    std::string out;
    for (const sors::Step& step : traj.steps)
        out += "(" + std::to_string(step.state) + "," + std::to_string(step.action) + ")";
    return out;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    sors::ExperimentConfig cfg = sors::parse_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    sors::run_experiment(cfg, std::cout);
    return 0;
}

int cmd_verify(const std::string& mdp_path, int horizon, double tol) {
    const sors::MdpFile file = sors::load_mdp_file(mdp_path);
    if (!file.has_r1 || !file.has_r2)
        throw sors::ConfigError(mdp_path + ": verify needs both R1 and R2 reward tables");
    const sors::EquivalenceReport report = sors::verify_theorem(
        file.spec, file.reward1(), file.reward2(), horizon, file.spec.gamma, tol);
    const sors::TrajectorySet set = sors::enumerate_trajectories(file.spec, horizon);

    std::cout << "mdp: " << mdp_path << "\n"
              << "states: " << file.spec.num_states << " actions: " << file.spec.num_actions
              << " gamma: " << sors::format_g9(file.spec.gamma) << "\n"
              << "horizon: " << horizon << " trajectories: " << set.size() << "\n"
              << "equivalent: " << (report.equivalent ? "true" : "false") << "\n";
    if (report.first_violation) {
        const sors::OrderViolation& v = *report.first_violation;
        std::cout << "first_violation:\n"
                  << "  tau_i: " << format_trajectory(set.trajectories[static_cast<size_t>(v.tau_i)])
                  << "\n"
                  << "  tau_j: " << format_trajectory(set.trajectories[static_cast<size_t>(v.tau_j)])
                  << "\n"
                  << "  returns_r1: " << sors::format_g9(v.r1_return_i) << " vs "
                  << sors::format_g9(v.r1_return_j) << "\n"
                  << "  returns_r2: " << sors::format_g9(v.r2_return_i) << " vs "
                  << sors::format_g9(v.r2_return_j) << "\n";
    }
    std::cout << "optimal_sets_equal: " << (report.optimal_sets_equal ? "true" : "false")
              << "\n";
    for (int s = 0; s < file.spec.num_states; ++s) {
        std::cout << "  state " << s << ": r1_optimal={";
        const auto& a1 = report.optimal_r1.per_state_actions[static_cast<size_t>(s)];
        for (size_t i = 0; i < a1.size(); ++i) std::cout << (i ? "," : "") << a1[i];
        std::cout << "} r2_optimal={";
        const auto& a2 = report.optimal_r2.per_state_actions[static_cast<size_t>(s)];
        for (size_t i = 0; i < a2.size(); ++i) std::cout << (i ? "," : "") << a2[i];
        std::cout << "}\n";
    }
    return 0;
}

int cmd_smooth(const std::string& in_path, double half_life) {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw sors::ConfigError("cannot open " + in_path);
    sors::smooth_csv(in, std::cout, half_life);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised online reward shaping laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    CLI::App* run_cmd = app.add_subcommand("run", "Run a seeded experiment from a config file");
    run_cmd->add_option("--config", config_path, "Experiment config file")->required();
    run_cmd->add_option("--out", out_override, "Override the output directory");

    std::string mdp_path;
    int horizon = 0;
    double tol = sors::kTieTolerance;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "Check total-order equivalence of R1/R2 on an MDP spec");
    verify_cmd->add_option("--mdp", mdp_path, "MDP spec file")->required();
    verify_cmd->add_option("--horizon", horizon, "Trajectory enumeration horizon")->required();
    verify_cmd->add_option("--tol", tol, "Return comparison tolerance");

    std::string smooth_in;
    double half_life = 2000;
    CLI::App* smooth_cmd = app.add_subcommand("smooth", "EMA-smooth a learning-curve CSV");
    smooth_cmd->add_option("--in", smooth_in, "Input CSV")->required();
    smooth_cmd->add_option("--half-life", half_life, "Half-life in environment steps")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run_cmd) return cmd_run(config_path, out_override);
        if (*verify_cmd) return cmd_verify(mdp_path, horizon, tol);
        if (*smooth_cmd) return cmd_smooth(smooth_in, half_life);
    } catch (const sors::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
