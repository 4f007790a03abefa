#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "sors/env.hpp"
#include "sors/mlp.hpp"
#include "sors/rng.hpp"

namespace sors {

struct QTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> values; ///< [s * num_actions + a]

    static QTable zeros(int num_states, int num_actions);
    double& at(int s, int a) { return values[static_cast<size_t>(s) * num_actions + a]; }
    double at(int s, int a) const { return values[static_cast<size_t>(s) * num_actions + a]; }
    std::span<const double> row(int s) const {
        return {values.data() + static_cast<size_t>(s) * num_actions,
                static_cast<size_t>(num_actions)};
    }
};

/// Q-table snapshots reuse the mlp format as a single identity layer whose
/// weight matrix is the [num_actions x num_states] table.
void save_qtable(std::ostream& out, const QTable& table);
QTable load_qtable(std::istream& in);

struct ValueIterationResult {
    QTable q;
    /// Per-state actions within tie tolerance of the state's max; the optimal
    /// deterministic policy set is their Cartesian product.
    std::vector<std::vector<int>> optimal_actions;
    double residual = 0.0;
    int iterations = 0;
};

/// Exact Q* by Bellman iteration to sup-norm residual <= tol. Terminal states
/// absorb with zero value. Throws NumericalError when the iteration cap is hit
/// before convergence.
ValueIterationResult value_iteration(const MdpSpec& mdp, const RewardFn& r, double tol,
                                     int max_iterations = 1000000,
                                     double tie_tol = kTieTolerance);

/// alpha * log sum_a exp(q[a] / alpha), computed stably.
double soft_value(std::span<const double> q_row, double alpha);

/// Boltzmann distribution exp(q/alpha) / sum exp(q/alpha).
std::vector<double> boltzmann_probs(std::span<const double> q_row, double alpha);

/// Lowest index wins ties.
int argmax_lowest(std::span<const double> values);

/// One stored interaction. The learned reward is never stored; it is
/// recomputed from the live ensemble at update time. env_reward records the
/// environment channel (sparse or hand-dense) that baseline runs train on.
struct ReplayTransition {
    std::vector<double> state_features;
    std::vector<double> next_features;
    int state = -1;
    int next_state = -1;
    int action = 0;
    bool done = false;
    double env_reward = 0.0;
};

/// Reward source evaluated per transition at update time.
using TransitionReward = std::function<double(const ReplayTransition&)>;

/// Entropy-regularized soft-Q backup on one tabular transition:
/// Q(s,a) <- (1-lr) Q(s,a) + lr (r + gamma * softvalue(Q(s',.)));
/// terminal transitions use the reward alone.
void soft_q_step(QTable& table, const ReplayTransition& transition, double reward_value,
                 double lr, double gamma, double alpha);

/// Base RL algorithm plug point: act / observe / update. Updates always take
/// the reward source as an argument, so rewards are re-derived per update and
/// never read from storage.
class Backend {
public:
    virtual ~Backend() = default;

    /// Explore mode samples the Boltzmann distribution over Q(s, .); greedy
    /// mode takes the argmax with lowest-index tie-breaking.
    virtual int act(const EnvObservation& obs, bool greedy, Rng& rng) = 0;
    virtual int greedy_action(const EnvObservation& obs) const = 0;

    virtual void observe(ReplayTransition transition) = 0;

    /// One update unit: sample a minibatch from replay and regress against
    /// rewards drawn from `reward` now.
    virtual void update(const TransitionReward& reward, Rng& rng) = 0;

    virtual size_t replay_size() const = 0;
};

/// Tabular soft Q-learning over discrete state ids with minibatch replay.
class TabularSoftQ : public Backend {
public:
    struct Config {
        double lr = 0.1;
        double alpha = 0.1;
        double gamma = 0.99;
        int batch = 100;
        size_t replay_capacity = 100000;
    };

    TabularSoftQ(int num_states, int num_actions, Config cfg);

    int act(const EnvObservation& obs, bool greedy, Rng& rng) override;
    int greedy_action(const EnvObservation& obs) const override;
    void observe(ReplayTransition transition) override;
    void update(const TransitionReward& reward, Rng& rng) override;
    size_t replay_size() const override { return replay_.size(); }

    const QTable& table() const { return table_; }
    const Config& config() const { return cfg_; }

private:
    Config cfg_;
    QTable table_;
    std::vector<ReplayTransition> replay_;
    size_t replay_next_ = 0;
};

struct NeuralQConfig {
    std::vector<int> hidden = {64, 64};
    AdamConfig adam{};
    double alpha = 0.1;
    double gamma = 0.99;
    int batch = 100;
    int target_update_period = 100;
    size_t replay_capacity = 100000;
};

/// Entropy-regularized neural Q-learner: an online MLP mapping state features
/// to one value per action, regressed on the soft-Bellman target computed from
/// a slowly copied target network.
class NeuralSoftQ : public Backend {
public:
    NeuralSoftQ(int feature_dim, int num_actions, NeuralQConfig cfg, uint64_t seed);

    int act(const EnvObservation& obs, bool greedy, Rng& rng) override;
    int greedy_action(const EnvObservation& obs) const override;
    void observe(ReplayTransition transition) override;
    void update(const TransitionReward& reward, Rng& rng) override;
    size_t replay_size() const override { return replay_.size(); }

    /// One Adam step on the squared soft-Bellman residual of `minibatch`, with
    /// rewards recomputed from `reward`; copies online -> target every
    /// target_update_period updates. Exposed for direct testing.
    double update_minibatch(std::span<const ReplayTransition* const> minibatch,
                            const TransitionReward& reward);

    const MlpParams& online() const { return online_; }
    const MlpParams& target() const { return target_; }
    long updates_done() const { return updates_; }
    const NeuralQConfig& config() const { return cfg_; }

private:
    NeuralQConfig cfg_;
    int num_actions_;
    MlpParams online_;
    MlpParams target_;
    AdamState opt_;
    std::vector<ReplayTransition> replay_;
    size_t replay_next_ = 0;
    long updates_ = 0;
};

} // namespace sors
