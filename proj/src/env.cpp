#include "sors/env.hpp"

#include <algorithm>
#include <cmath>

namespace sors {

RewardFn FiniteModel::reward_fn() const {
    const int num_actions = spec.num_actions;
    std::vector<double> table = sparse_reward;
    return [table = std::move(table), num_actions](int s, int a) {
        return table[static_cast<size_t>(s) * num_actions + a];
    };
}

int Env::num_states() const {
    throw UnsupportedError(name() + ": no finite state space");
}

std::vector<double> Env::state_features(int) const {
    throw UnsupportedError(name() + ": no finite state space");
}

void Env::set_state(int) {
    throw UnsupportedError(name() + ": no finite state space");
}

FiniteModel Env::finite_model() const {
    throw UnsupportedError(name() + ": cannot be expressed as a finite MDP");
}

// ---------------------------------------------------------------- DelayedChain

DelayedChain::DelayedChain(int n, int episode_cap)
    : n_(n), cap_(episode_cap > 0 ? episode_cap : 4 * n) {
    if (n < 2) throw ContractViolation("DelayedChain: need at least 2 states");
}

EnvObservation DelayedChain::observe() const {
    return {{static_cast<double>(state_) / (n_ - 1)}, state_};
}

EnvObservation DelayedChain::reset() {
    state_ = 0;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult DelayedChain::step(int action) {
    if (done_) throw ContractViolation("DelayedChain: step after episode end");
    if (action < 0 || action >= 2) throw ContractViolation("DelayedChain: bad action");
    state_ = action == 1 ? std::min(state_ + 1, n_ - 1) : std::max(state_ - 1, 0);
    ++steps_;
    StepResult result;
    result.sparse_reward = state_ == n_ - 1 ? 1.0 : 0.0;
    result.done = state_ == n_ - 1 || steps_ >= cap_;
    // hand-dense: negative distance to the goal, scaled to [-1, 0]
    result.dense_reward_hand = -static_cast<double>(n_ - 1 - state_) / (n_ - 1);
    done_ = result.done;
    result.observation = observe();
    return result;
}

std::unique_ptr<Env> DelayedChain::fresh() const {
    return std::make_unique<DelayedChain>(n_, cap_);
}

std::vector<double> DelayedChain::state_features(int state) const {
    if (state < 0 || state >= n_) throw ContractViolation("DelayedChain: state out of range");
    return {static_cast<double>(state) / (n_ - 1)};
}

void DelayedChain::set_state(int state) {
    if (state < 0 || state >= n_) throw ContractViolation("DelayedChain: state out of range");
    state_ = state;
    steps_ = 0;
    done_ = false;
}

FiniteModel DelayedChain::finite_model() const {
    FiniteModel model;
    model.spec = MdpSpec::make(n_, 2, 1.0);
    model.spec.initial_state = 0;
    model.spec.mark_terminal(n_ - 1);
    model.sparse_reward.assign(static_cast<size_t>(n_) * 2, 0.0);
    for (int s = 0; s < n_; ++s) {
        if (s == n_ - 1) {
            model.spec.set_deterministic_transition(s, 0, s);
            model.spec.set_deterministic_transition(s, 1, s);
            continue;
        }
        model.spec.set_deterministic_transition(s, 0, std::max(s - 1, 0));
        model.spec.set_deterministic_transition(s, 1, s + 1);
        if (s + 1 == n_ - 1) model.sparse_reward[static_cast<size_t>(s) * 2 + 1] = 1.0;
    }
    model.spec.finalize();
    return model;
}

// ------------------------------------------------------------------ SparseGrid

SparseGrid::SparseGrid(int width, int height, std::vector<std::pair<int, int>> walls,
                       int episode_cap)
    : width_(width), height_(height),
      cap_(episode_cap > 0 ? episode_cap : 4 * width * height) {
    if (width < 2 || height < 2)
        throw ContractViolation("SparseGrid: need at least a 2x2 grid");
    wall_.assign(static_cast<size_t>(width_) * height_, false);
    for (auto [x, y] : walls) {
        if (x < 0 || x >= width_ || y < 0 || y >= height_)
            throw ContractViolation("SparseGrid: wall outside the grid");
        const int id = cell_id(x, y);
        if (id == 0 || id == goal_state())
            throw ContractViolation("SparseGrid: wall on start or goal cell");
        wall_[static_cast<size_t>(id)] = true;
    }
}

int SparseGrid::next_cell(int state, int action) const {
    int x = state % width_;
    int y = state / width_;
    switch (action) {
        case 0: ++x; break; // right
        case 1: ++y; break; // up
        case 2: --x; break; // left
        case 3: --y; break; // down
        default: throw ContractViolation("SparseGrid: bad action");
    }
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return state;
    const int target = cell_id(x, y);
    return wall_[static_cast<size_t>(target)] ? state : target;
}

EnvObservation SparseGrid::observe() const {
    const int x = state_ % width_;
    const int y = state_ / width_;
    return {{static_cast<double>(x) / (width_ - 1),
             static_cast<double>(y) / (height_ - 1)},
            state_};
}

EnvObservation SparseGrid::reset() {
    state_ = 0;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult SparseGrid::step(int action) {
    if (done_) throw ContractViolation("SparseGrid: step after episode end");
    state_ = next_cell(state_, action);
    ++steps_;
    StepResult result;
    result.sparse_reward = state_ == goal_state() ? 1.0 : 0.0;
    result.done = state_ == goal_state() || steps_ >= cap_;
    const int gx = width_ - 1, gy = height_ - 1;
    const int x = state_ % width_, y = state_ / width_;
    result.dense_reward_hand =
        -static_cast<double>(std::abs(gx - x) + std::abs(gy - y)) / (gx + gy);
    done_ = result.done;
    result.observation = observe();
    return result;
}

std::unique_ptr<Env> SparseGrid::fresh() const {
    std::vector<std::pair<int, int>> walls;
    for (int s = 0; s < num_states(); ++s)
        if (wall_[static_cast<size_t>(s)]) walls.emplace_back(s % width_, s / width_);
    return std::make_unique<SparseGrid>(width_, height_, std::move(walls), cap_);
}

std::vector<double> SparseGrid::state_features(int state) const {
    if (state < 0 || state >= num_states())
        throw ContractViolation("SparseGrid: state out of range");
    return {static_cast<double>(state % width_) / (width_ - 1),
            static_cast<double>(state / width_) / (height_ - 1)};
}

void SparseGrid::set_state(int state) {
    if (state < 0 || state >= num_states())
        throw ContractViolation("SparseGrid: state out of range");
    if (wall_[static_cast<size_t>(state)])
        throw ContractViolation("SparseGrid: cannot occupy a wall cell");
    state_ = state;
    steps_ = 0;
    done_ = false;
}

FiniteModel SparseGrid::finite_model() const {
    FiniteModel model;
    const int S = num_states();
    model.spec = MdpSpec::make(S, 4, 1.0);
    model.spec.initial_state = 0;
    model.spec.mark_terminal(goal_state());
    model.sparse_reward.assign(static_cast<size_t>(S) * 4, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < 4; ++a) {
            if (s == goal_state() || wall_[static_cast<size_t>(s)]) {
                model.spec.set_deterministic_transition(s, a, s);
                continue;
            }
            const int next = next_cell(s, a);
            model.spec.set_deterministic_transition(s, a, next);
            if (next == goal_state())
                model.sparse_reward[static_cast<size_t>(s) * 4 + a] = 1.0;
        }
    }
    model.spec.finalize();
    return model;
}

// ------------------------------------------------------------------- PointMass

namespace {
constexpr double kDt = 0.1;
constexpr double kAccel = 0.5;
constexpr double kVelLimit = 0.5;
constexpr double kPosLimit = 1.0;
constexpr double kGoalX = 0.8;
constexpr double kGoalY = 0.8;
} // namespace

PointMass::PointMass(double goal_radius, int episode_cap)
    : goal_radius_(goal_radius), cap_(episode_cap) {
    if (goal_radius <= 0.0) throw ContractViolation("PointMass: goal radius must be positive");
    if (episode_cap <= 0) throw ContractViolation("PointMass: episode cap must be positive");
}

EnvObservation PointMass::observe() const { return {{px_, py_, vx_, vy_}, -1}; }

double PointMass::distance_to_goal() const {
    return std::hypot(px_ - kGoalX, py_ - kGoalY);
}

EnvObservation PointMass::reset() {
    px_ = py_ = vx_ = vy_ = 0.0;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult PointMass::step(int action) {
    if (done_) throw ContractViolation("PointMass: step after episode end");
    double ax = 0.0, ay = 0.0;
    switch (action) {
        case 0: break;
        case 1: ax = -kAccel; break;
        case 2: ax = kAccel; break;
        case 3: ay = -kAccel; break;
        case 4: ay = kAccel; break;
        default: throw ContractViolation("PointMass: bad action");
    }
    vx_ = std::clamp(vx_ + ax * kDt, -kVelLimit, kVelLimit);
    vy_ = std::clamp(vy_ + ay * kDt, -kVelLimit, kVelLimit);
    px_ = std::clamp(px_ + vx_ * kDt, -kPosLimit, kPosLimit);
    py_ = std::clamp(py_ + vy_ * kDt, -kPosLimit, kPosLimit);
    ++steps_;
    StepResult result;
    const double dist = distance_to_goal();
    result.sparse_reward = dist <= goal_radius_ ? 1.0 : 0.0;
    result.done = dist <= goal_radius_ || steps_ >= cap_;
    result.dense_reward_hand = -dist;
    done_ = result.done;
    result.observation = observe();
    return result;
}

std::unique_ptr<Env> PointMass::fresh() const {
    return std::make_unique<PointMass>(goal_radius_, cap_);
}

// ---------------------------------------------------------- DelayedRewardWrapper

DelayedRewardWrapper::DelayedRewardWrapper(std::unique_ptr<Env> inner, int period)
    : inner_(std::move(inner)), period_(period) {
    if (!inner_) throw ContractViolation("DelayedRewardWrapper: null env");
    if (period < 1) throw ContractViolation("DelayedRewardWrapper: period must be >= 1");
}

EnvObservation DelayedRewardWrapper::reset() {
    accumulator_ = 0.0;
    steps_since_emit_ = 0;
    return inner_->reset();
}

StepResult DelayedRewardWrapper::step(int action) {
    StepResult result = inner_->step(action);
    accumulator_ += result.sparse_reward;
    ++steps_since_emit_;
    if (steps_since_emit_ == period_ || result.done) {
        result.sparse_reward = accumulator_;
        accumulator_ = 0.0;
        steps_since_emit_ = 0;
    } else {
        result.sparse_reward = 0.0;
    }
    return result;
}

std::string DelayedRewardWrapper::name() const {
    return inner_->name() + "/delay" + std::to_string(period_);
}

std::unique_ptr<Env> DelayedRewardWrapper::fresh() const {
    return std::make_unique<DelayedRewardWrapper>(inner_->fresh(), period_);
}

void DelayedRewardWrapper::set_state(int state) {
    accumulator_ = 0.0;
    steps_since_emit_ = 0;
    inner_->set_state(state);
}

FiniteModel DelayedRewardWrapper::finite_model() const {
    if (period_ != 1)
        throw UnsupportedError(name() + ": delayed rewards are not a per-step (s,a) function");
    return inner_->finite_model();
}

std::unique_ptr<Env> delay_rewards(std::unique_ptr<Env> env, int k) {
    return std::make_unique<DelayedRewardWrapper>(std::move(env), k);
}

FiniteModel as_mdp_spec(const Env& env) {
    if (!env.finite())
        throw UnsupportedError(env.name() + ": continuous features; no finite MDP view");
    return env.finite_model();
}

} // namespace sors
