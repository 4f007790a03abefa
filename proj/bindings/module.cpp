#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sors/config.hpp"
#include "sors/harness.hpp"
#include "sors/mdp_io.hpp"
#include "sors/reward_model.hpp"
#include "sors/verifier.hpp"

namespace py = pybind11;

namespace {

// owning wrapper so python holds any env behind one type
struct PyEnv {
    std::unique_ptr<sors::Env> env;

    py::dict reset() {
        const sors::EnvObservation obs = env->reset();
        py::dict d;
        d["features"] = obs.features;
        d["state"] = obs.state;
        return d;
    }

    py::dict step(int action) {
        const sors::StepResult res = env->step(action);
        py::dict d;
        d["features"] = res.observation.features;
        d["state"] = res.observation.state;
        d["sparse_reward"] = res.sparse_reward;
        d["dense_reward_hand"] = res.dense_reward_hand;
        d["done"] = res.done;
        return d;
    }
};

PyEnv make_env(const std::string& name, int n, int width, int height, int delay,
               double goal_radius, int episode_cap) {
    std::unique_ptr<sors::Env> env;
    if (name == "delayed_chain") {
        env = std::make_unique<sors::DelayedChain>(n, episode_cap);
    } else if (name == "sparse_grid") {
        env = std::make_unique<sors::SparseGrid>(width, height,
                                                 std::vector<std::pair<int, int>>{},
                                                 episode_cap);
    } else if (name == "point_mass") {
        env = std::make_unique<sors::PointMass>(goal_radius,
                                                episode_cap > 0 ? episode_cap : 200);
    } else {
        throw sors::ConfigError("unknown env: " + name);
    }
    if (delay > 1) env = sors::delay_rewards(std::move(env), delay);
    return PyEnv{std::move(env)};
}

sors::Trajectory trajectory_from_rewards(const std::vector<double>& rewards) {
    sors::Trajectory traj;
    for (double r : rewards) traj.steps.push_back({{}, 0, 0, r});
    return traj;
}

py::dict report_to_dict(const sors::EquivalenceReport& report) {
    py::dict d;
    d["equivalent"] = report.equivalent;
    d["optimal_sets_equal"] = report.optimal_sets_equal;
    d["optimal_actions_r1"] = report.optimal_r1.per_state_actions;
    d["optimal_actions_r2"] = report.optimal_r2.per_state_actions;
    if (report.first_violation) {
        const sors::OrderViolation& v = *report.first_violation;
        py::dict viol;
        viol["returns_r1"] = py::make_tuple(v.r1_return_i, v.r1_return_j);
        viol["returns_r2"] = py::make_tuple(v.r2_return_i, v.r2_return_j);
        d["first_violation"] = viol;
    } else {
        d["first_violation"] = py::none();
    }
    return d;
}

} // namespace

PYBIND11_MODULE(sorslab, m) {
    m.doc() = "Self-supervised online reward shaping laboratory";

    py::register_exception<sors::ConfigError>(m, "ConfigError");
    py::register_exception<sors::UnsupportedError>(m, "UnsupportedError");

    m.def("pair_probability", &sors::pair_probability, py::arg("return_i"),
          py::arg("return_j"),
          "Preference probability that the first return is preferred");

    m.def(
        "sparse_return",
        [](const std::vector<double>& rewards, double gamma) {
            return sors::sparse_return(trajectory_from_rewards(rewards), gamma);
        },
        py::arg("rewards"), py::arg("gamma"),
        "Discounted return of a per-step reward sequence");

    m.def(
        "ema_smooth",
        [](const std::vector<std::pair<long, double>>& series, double half_life) {
            return sors::ema_smooth(series, half_life);
        },
        py::arg("series"), py::arg("half_life"),
        "Gap-aware exponential moving average over (step, value) points");

    py::class_<PyEnv>(m, "Env")
        .def("reset", &PyEnv::reset)
        .def("step", &PyEnv::step, py::arg("action"))
        .def_property_readonly("num_actions", [](const PyEnv& e) { return e.env->num_actions(); })
        .def_property_readonly("feature_dim", [](const PyEnv& e) { return e.env->feature_dim(); })
        .def_property_readonly("name", [](const PyEnv& e) { return e.env->name(); });

    m.def("make_env", &make_env, py::arg("name"), py::arg("n") = 8, py::arg("width") = 5,
          py::arg("height") = 5, py::arg("delay") = 1, py::arg("goal_radius") = 0.1,
          py::arg("episode_cap") = 0);

    m.def(
        "verify_file",
        [](const std::string& path, int horizon, double tol) {
            const sors::MdpFile file = sors::load_mdp_file(path);
            if (!file.has_r1 || !file.has_r2)
                throw sors::ConfigError(path + ": verify needs both R1 and R2 tables");
            return report_to_dict(sors::verify_theorem(file.spec, file.reward1(),
                                                       file.reward2(), horizon,
                                                       file.spec.gamma, tol));
        },
        py::arg("path"), py::arg("horizon"), py::arg("tol") = sors::kTieTolerance,
        "Total-order equivalence and optimal-set comparison for an MDP spec file");

    m.def(
        "value_iteration",
        [](const std::string& path, bool use_r2, double tol) {
            const sors::MdpFile file = sors::load_mdp_file(path);
            const auto result = sors::value_iteration(
                file.spec, use_r2 ? file.reward2() : file.reward1(), tol);
            std::vector<std::vector<double>> q(static_cast<size_t>(file.spec.num_states));
            for (int s = 0; s < file.spec.num_states; ++s) {
                const auto row = result.q.row(s);
                q[static_cast<size_t>(s)].assign(row.begin(), row.end());
            }
            py::dict d;
            d["q"] = q;
            d["optimal_actions"] = result.optimal_actions;
            d["iterations"] = result.iterations;
            return d;
        },
        py::arg("path"), py::arg("use_r2") = false, py::arg("tol") = 1e-10);

    m.def(
        "run_experiment",
        [](const std::string& config_path, const std::string& out_override) {
            sors::ExperimentConfig cfg = sors::parse_config(config_path);
            if (!out_override.empty()) cfg.out_dir = out_override;
            std::ostringstream summary;
            const sors::ExperimentResult result = sors::run_experiment(cfg, summary);
            py::dict d;
            d["out_dir"] = result.out_dir;
            d["aggregate_csv"] = result.aggregate_path;
            d["seed_csvs"] = result.seed_paths;
            d["summary"] = summary.str();
            std::vector<double> accuracies;
            for (const sors::SeedRun& run : result.runs)
                accuracies.push_back(run.log.final_holdout_accuracy);
            d["final_holdout_accuracies"] = accuracies;
            return d;
        },
        py::arg("config_path"), py::arg("out") = std::string{},
        "Run a full seeded experiment; writes CSVs and returns file locations");
}
