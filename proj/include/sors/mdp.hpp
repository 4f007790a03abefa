#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sors/errors.hpp"

namespace sors {

/// Default equality tolerance on sparse returns. Sparse returns are
/// small-integer-valued in the shipped environments, so ties are exact; the
/// tolerance only absorbs float drift.
constexpr double kTieTolerance = 1e-9;

/// Deterministic evaluable reward r(s, a) over discrete ids. Table-backed,
/// closure-backed, and model-backed implementations all fit.
using RewardFn = std::function<double(int state, int action)>;

enum class Ordering { Less, Equal, Greater };

/// One trajectory step: the observation features and discrete id of the state
/// the action was taken in, the action, and the sparse reward emitted for it.
struct Step {
    std::vector<double> features;
    int state = -1; ///< discrete id; -1 when the environment has none
    int action = 0;
    double sparse_reward = 0.0;
};

/// A whole episode. Time is indexed from start_index (t = 1 by convention);
/// the discount weight of step k is gamma^(k).
struct Trajectory {
    std::vector<Step> steps;
    int start_index = 1;

    double cached_sparse_return = 0.0;
    double cache_gamma = 1.0;
    bool cached = false;

    size_t length() const { return steps.size(); }

    /// Compute and store the sparse return under `gamma`.
    void finalize(double gamma);
};

/// A reward-free finite MDP: state/action counts, transition distributions,
/// terminal set and discount. Deterministic MDPs use point-mass distributions.
struct MdpSpec {
    int num_states = 0;
    int num_actions = 0;
    /// transition[s][a]: list of (next state, probability) summing to 1.
    std::vector<std::vector<std::vector<std::pair<int, double>>>> transition;
    int initial_state = 0;
    std::vector<bool> terminal;
    double gamma = 1.0;
    /// True iff every distribution is a point mass; maintained by finalize().
    bool deterministic = false;

    static MdpSpec make(int num_states, int num_actions, double gamma);

    void set_deterministic_transition(int s, int a, int next);
    void set_distribution(int s, int a, std::vector<std::pair<int, double>> dist);
    void mark_terminal(int s);
    bool is_terminal(int s) const { return terminal[static_cast<size_t>(s)]; }

    /// Successor under point-mass dynamics. Requires a deterministic MDP.
    int deterministic_next(int s, int a) const;

    /// Recompute the deterministic flag, then validate all invariants:
    /// distributions sum to 1 within 1e-9, ids in bounds, gamma in (0, 1].
    /// Throws ContractViolation on any violation.
    void finalize();
    void validate() const;
};

/// Discounted return sum_t gamma^(t-1) r(s_t, a_t) over the trajectory's own
/// time origin. Requires a nonempty trajectory with discrete state ids.
double discounted_return(const Trajectory& traj, const RewardFn& r, double gamma);

/// Discounted return over the recorded sparse rewards.
double sparse_return(const Trajectory& traj, double gamma);

Ordering compare_returns(double lhs, double rhs, double tol);

/// Order two trajectories by their returns under `r`: Less when
/// R(a) < R(b) - tol, Greater when R(a) > R(b) + tol, Equal otherwise.
Ordering order_compare(const Trajectory& a, const Trajectory& b, const RewardFn& r,
                       double gamma, double tol);

const char* to_string(Ordering o);

} // namespace sors
