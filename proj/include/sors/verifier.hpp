#pragma once

#include <optional>
#include <vector>

#include "sors/backend.hpp"
#include "sors/mdp.hpp"

namespace sors {

/// Exhaustive set of action-sequence trajectories of length <= horizon from
/// every (s, a) start under deterministic dynamics, with early stop at
/// terminal states. All prefixes are included, so a terminal-free MDP holds
/// |S| |A| (|A|^H - 1) / (|A| - 1) trajectories.
struct TrajectorySet {
    int horizon = 0;
    std::vector<Trajectory> trajectories;
    /// by_start[s][a]: indices into `trajectories` for trajectories starting
    /// with action a in state s.
    std::vector<std::vector<std::vector<int>>> by_start;

    size_t size() const { return trajectories.size(); }
};

TrajectorySet enumerate_trajectories(const MdpSpec& mdp, int horizon,
                                     size_t cap = 1000000);

/// All deterministic policies attaining the per-state max of the
/// horizon-limited Q (max trajectory return from each (s, a)) within tol,
/// factorized as per-state optimal action sets.
struct OptimalPolicySet {
    std::vector<std::vector<int>> per_state_actions; ///< sorted action ids per state
    QTable q;

    /// Explicit policies (state -> action vectors) in lexicographic order.
    /// Throws CapacityError when the product exceeds `cap`.
    std::vector<std::vector<int>> enumerate(size_t cap = 100000) const;

    bool same_policies(const OptimalPolicySet& other) const {
        return per_state_actions == other.per_state_actions;
    }
};

OptimalPolicySet optimal_policy_set(const MdpSpec& mdp, const RewardFn& r, int horizon,
                                    double gamma, double tol,
                                    size_t cap = 1000000);

struct OrderViolation {
    int tau_i = 0; ///< indices into the TrajectorySet
    int tau_j = 0;
    double r1_return_i = 0, r1_return_j = 0;
    double r2_return_i = 0, r2_return_j = 0;
};

/// Definition check: r1 and r2 are total-order equivalent iff every trajectory
/// pair compares identically (Equal must match Equal). Implemented by sorting
/// both return lists and checking that tie blocks and the strict order
/// coincide; degenerate tie structure (a tie chain wider than tol) falls back
/// to the O(n^2) pairwise scan, so the result always matches the pairwise
/// definition exactly.
std::pair<bool, std::optional<OrderViolation>>
total_order_equivalent(const TrajectorySet& set, const RewardFn& r1, const RewardFn& r2,
                       double gamma, double tol);

struct EquivalenceReport {
    bool equivalent = false;
    bool optimal_sets_equal = false;
    std::optional<OrderViolation> first_violation;
    OptimalPolicySet optimal_r1;
    OptimalPolicySet optimal_r2;
};

/// Run the full check for one (mdp, r1, r2) instance. The theorem direction
/// (equivalent implies equal optimal sets) is asserted: a report that would
/// contradict it throws instead of being returned.
EquivalenceReport verify_theorem(const MdpSpec& mdp, const RewardFn& r1, const RewardFn& r2,
                                 int horizon, double gamma, double tol);

} // namespace sors
