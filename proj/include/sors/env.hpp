#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sors/mdp.hpp"

namespace sors {

struct EnvObservation {
    std::vector<double> features;
    int state = -1; ///< discrete id when the environment is finite
};

struct StepResult {
    EnvObservation observation; ///< observation after the transition
    double sparse_reward = 0.0;
    /// Hand-designed dense baseline channel. Never visible to reward inference;
    /// exists so the harness can run a dense-reward comparison curve.
    double dense_reward_hand = 0.0;
    bool done = false;
};

/// A finite environment reduced to an explicit MDP plus its sparse reward
/// table, the bridge into the order verifier.
struct FiniteModel {
    MdpSpec spec;
    std::vector<double> sparse_reward; ///< [s * num_actions + a]

    RewardFn reward_fn() const;
    double reward_at(int s, int a) const {
        return sparse_reward[static_cast<size_t>(s) * spec.num_actions + a];
    }
};

/// Episodic environment. Instances are single-owner; stepping a finished
/// episode throws until reset() is called.
class Env {
public:
    virtual ~Env() = default;

    virtual EnvObservation reset() = 0;
    virtual StepResult step(int action) = 0;
    virtual bool is_done() const = 0;

    virtual int num_actions() const = 0;
    virtual int feature_dim() const = 0;
    virtual std::string name() const = 0;

    /// A new instance with the same configuration, at its initial state.
    virtual std::unique_ptr<Env> fresh() const = 0;

    // Finite-environment hooks; the defaults report "not finite".
    virtual bool finite() const { return false; }
    virtual int num_states() const;
    virtual std::vector<double> state_features(int state) const;
    /// Force the current state (finite envs only); clears done status.
    virtual void set_state(int state);
    virtual FiniteModel finite_model() const;
};

/// n states in a line; action 1 moves right, action 0 moves left (the left
/// wall holds). Sparse reward 1 on reaching state n-1; episode cap 4n steps.
/// Feature: position scaled to [0, 1].
class DelayedChain : public Env {
public:
    explicit DelayedChain(int n, int episode_cap = 0);

    EnvObservation reset() override;
    StepResult step(int action) override;
    bool is_done() const override { return done_; }
    int num_actions() const override { return 2; }
    int feature_dim() const override { return 1; }
    std::string name() const override { return "delayed_chain"; }
    std::unique_ptr<Env> fresh() const override;

    bool finite() const override { return true; }
    int num_states() const override { return n_; }
    std::vector<double> state_features(int state) const override;
    void set_state(int state) override;
    FiniteModel finite_model() const override;

    int episode_cap() const { return cap_; }

private:
    EnvObservation observe() const;
    int n_;
    int cap_;
    int state_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

/// w x h grid; actions right/up/left/down, blocked moves (walls, edges) hold
/// position. Sparse reward 1 on entering the goal cell (w-1, h-1); episode cap
/// 4wh steps. Features: (x, y) scaled to [0, 1] each.
class SparseGrid : public Env {
public:
    SparseGrid(int width, int height, std::vector<std::pair<int, int>> walls = {},
               int episode_cap = 0);

    EnvObservation reset() override;
    StepResult step(int action) override;
    bool is_done() const override { return done_; }
    int num_actions() const override { return 4; }
    int feature_dim() const override { return 2; }
    std::string name() const override { return "sparse_grid"; }
    std::unique_ptr<Env> fresh() const override;

    bool finite() const override { return true; }
    int num_states() const override { return width_ * height_; }
    std::vector<double> state_features(int state) const override;
    void set_state(int state) override;
    FiniteModel finite_model() const override;

    int cell_id(int x, int y) const { return y * width_ + x; }
    bool is_wall(int state) const { return wall_[static_cast<size_t>(state)]; }
    int goal_state() const { return cell_id(width_ - 1, height_ - 1); }
    int episode_cap() const { return cap_; }

private:
    int next_cell(int state, int action) const;
    EnvObservation observe() const;
    int width_, height_;
    int cap_;
    std::vector<bool> wall_;
    int state_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

/// 2-D point mass with discrete accelerations {none, -x, +x, -y, +y}. Sparse
/// reward 1 inside the goal radius; hand-dense channel is -|pos - goal|.
/// Features: (px, py, vx, vy).
class PointMass : public Env {
public:
    explicit PointMass(double goal_radius = 0.1, int episode_cap = 200);

    EnvObservation reset() override;
    StepResult step(int action) override;
    bool is_done() const override { return done_; }
    int num_actions() const override { return 5; }
    int feature_dim() const override { return 4; }
    std::string name() const override { return "point_mass"; }
    std::unique_ptr<Env> fresh() const override;

    int episode_cap() const { return cap_; }

private:
    EnvObservation observe() const;
    double distance_to_goal() const;
    double goal_radius_;
    int cap_;
    double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

/// Accumulates the wrapped env's sparse rewards and emits the sum every
/// `period` steps or at episode end, whichever comes first; all other steps
/// emit 0. The hand-dense channel and observations pass through unchanged.
class DelayedRewardWrapper : public Env {
public:
    DelayedRewardWrapper(std::unique_ptr<Env> inner, int period);

    EnvObservation reset() override;
    StepResult step(int action) override;
    bool is_done() const override { return inner_->is_done(); }
    int num_actions() const override { return inner_->num_actions(); }
    int feature_dim() const override { return inner_->feature_dim(); }
    std::string name() const override;
    std::unique_ptr<Env> fresh() const override;

    bool finite() const override { return inner_->finite(); }
    int num_states() const override { return inner_->num_states(); }
    std::vector<double> state_features(int state) const override {
        return inner_->state_features(state);
    }
    void set_state(int state) override;
    /// Only the period-1 wrapper is reward-equivalent to a per-step MDP.
    FiniteModel finite_model() const override;

    int period() const { return period_; }
    double accumulator() const { return accumulator_; }

private:
    std::unique_ptr<Env> inner_;
    int period_;
    double accumulator_ = 0.0;
    int steps_since_emit_ = 0;
};

/// Wrap `env` so sparse rewards arrive in period-`k` lump sums. k = 1 is an
/// identity on rewards.
std::unique_ptr<Env> delay_rewards(std::unique_ptr<Env> env, int k);

/// Reduce a finite deterministic environment to an explicit MDP and sparse
/// reward table. Throws UnsupportedError for continuous environments.
FiniteModel as_mdp_spec(const Env& env);

} // namespace sors
