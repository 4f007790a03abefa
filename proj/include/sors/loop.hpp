#pragma once

#include <functional>
#include <vector>

#include "sors/backend.hpp"
#include "sors/env.hpp"
#include "sors/reward_model.hpp"
#include "sors/trajectory_buffer.hpp"

namespace sors {

/// Reward source the policy trains on. Sparse and HandDense are the baseline
/// modes; Sors replaces the environment reward with the learned dense reward.
enum class RunMode { Sparse, Sors, HandDense };

const char* to_string(RunMode mode);

/// Schedule constants for one run. total_steps is the overall environment
/// interaction budget; the first initial_random_steps of it are spent
/// collecting episodes under a uniform-random policy, and update/eval cadences
/// apply to the remaining steps (gated on the global step index).
struct SorsConfig {
    RunMode mode = RunMode::Sors;
    long total_steps = 100000;
    long initial_random_steps = 2000;
    int reward_update_period = 1000;     ///< P_r
    int reward_updates_per_period = 100; ///< N_r
    int policy_update_period = 50;       ///< P_p
    int policy_updates_per_period = 50;  ///< N_p
    int pair_batch_size = 10;
    size_t buffer_capacity = 200;
    long eval_period = 1000;
    int eval_episodes = 1;
    double gamma = 0.99;     ///< training discount (returns and backends)
    double eval_gamma = 1.0; ///< evaluation metric discount
    /// Episodes are tagged train/holdout at append time; holdout episodes are
    /// never sampled for reward training and back the ranking-accuracy metric.
    double holdout_fraction = 0.2;
    double tie_tol = kTieTolerance;
    bool discounted_reward_returns = true;
    uint64_t seed = 0;

    void validate() const;
    double reward_return_gamma() const { return discounted_reward_returns ? gamma : 1.0; }
};

struct EvalRecord {
    long step = 0;
    double mean_sparse_return = 0.0;
    double mean_learned_return = 0.0;
    double wall_seconds = 0.0; ///< excluded from log equality
    std::vector<double> episode_returns;
};

struct RewardPhaseRecord {
    long step = 0;
    bool skipped = false;
    double mean_pair_loss = 0.0;
    double holdout_accuracy = -1.0; ///< -1 when not measurable
};

struct RunLog {
    std::vector<EvalRecord> evals;
    std::vector<RewardPhaseRecord> reward_phases;
    long reward_phases_attempted = 0;
    long reward_phases_skipped = 0;
    long policy_phases = 0;
    long episodes_completed = 0;
    double final_holdout_accuracy = -1.0;
};

/// Field-wise equality ignoring wall-clock times.
bool logs_equal_ignoring_wall(const RunLog& a, const RunLog& b);

using PolicyFn = std::function<int(const EnvObservation&, Rng&)>;

/// Uniform-random actions for `steps` environment steps; completed episodes
/// land in the buffer, a trailing incomplete episode is discarded.
void collect_initial(Env& env, TrajectoryBuffer& buffer, long steps, Rng& rng);

struct EvalResult {
    double mean_return = 0.0;
    std::vector<double> episode_returns;
    std::vector<Trajectory> episodes;
};

/// Roll out `policy` for full episodes and record the environment's sparse
/// return of each (policy quality is always measured on ground truth).
EvalResult evaluate(const PolicyFn& policy, Env& env, int episodes, double eval_gamma,
                    Rng& rng);

/// The full alternation: initial random collection, experience gathering,
/// periodic reward-shaping phases (Sors mode only), periodic policy phases,
/// periodic greedy evaluation. `ensemble` is required for Sors and ignored
/// otherwise. Deterministic given the config.
RunLog run(const SorsConfig& cfg, Env& env, Backend& backend, RewardEnsemble* ensemble);

} // namespace sors
