#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sors/backend.hpp"
#include "sors/env.hpp"
#include "sors/loop.hpp"
#include "sors/reward_model.hpp"

namespace sors {

enum class EnvKind { DelayedChain, SparseGrid, PointMass };
enum class BackendKind { Tabular, Neural };

/// Everything one experiment needs: environment selection and parameters, run
/// mode, loop schedule, reward-model and backend hyperparameters, seeds and
/// output location. Parsed from flat `key = value` text.
struct ExperimentConfig {
    EnvKind env_kind = EnvKind::DelayedChain;
    int chain_n = 8;
    int grid_width = 5;
    int grid_height = 5;
    std::vector<std::pair<int, int>> grid_walls;
    double goal_radius = 0.1;
    int episode_cap = 0; ///< 0 = per-environment default
    int delay = 1;       ///< reward delay period K

    RunMode mode = RunMode::Sors;
    std::vector<int> seeds = {0, 1, 2, 3, 4};
    std::string out_dir = "sors_out";

    long total_steps = 100000;
    long initial_random_steps = 2000;
    long eval_period = 1000;
    int eval_episodes = 1;
    double gamma = 0.99;
    double eval_gamma = 1.0;
    size_t buffer_capacity = 200;
    double tie_tol = kTieTolerance;
    double holdout_fraction = 0.2;
    bool parallel_seeds = true;
    double half_life = 2000;

    int reward_update_period = 1000;
    int reward_updates = 100;
    int pair_batch = 10;
    RewardModelConfig reward{};

    BackendKind backend_kind = BackendKind::Tabular;
    int policy_update_period = 50;
    int policy_updates = 50;
    std::optional<double> policy_lr; ///< default depends on the backend
    double alpha = 0.1;
    int policy_batch = 100;
    std::vector<int> policy_hidden = {64, 64};
    int target_period = 100;
    size_t replay_capacity = 100000;

    /// 0.1 for the tabular backend, the Adam default 3e-4 for the neural one,
    /// unless policy.lr was set explicitly.
    double resolved_policy_lr() const;

    SorsConfig loop_config(int seed) const;
    std::unique_ptr<Env> make_env() const;
    std::unique_ptr<Backend> make_backend(const Env& env, uint64_t seed) const;
    RewardEnsemble make_ensemble(const Env& env, uint64_t seed) const;
    std::string env_label() const;
    void validate() const;
};

/// Strict parser: unknown or duplicate keys, type mismatches and constraint
/// violations raise ConfigError naming the key and line.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// All resolved keys (defaults included) as sorted `key = value` lines; this
/// echo is written next to the experiment output.
std::string config_echo(const ExperimentConfig& cfg);

} // namespace sors
