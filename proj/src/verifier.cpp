#include "sors/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sors {

namespace {

void append_continuations(const MdpSpec& mdp, Trajectory& prefix, int from_state,
                          int remaining, std::vector<Trajectory>& out,
                          std::vector<int>& indices, size_t cap) {
    indices.push_back(static_cast<int>(out.size()));
    out.push_back(prefix);
    if (out.size() > cap)
        throw CapacityError("enumerate_trajectories: cap of " + std::to_string(cap) +
                            " trajectories exceeded");
    if (remaining == 0 || mdp.is_terminal(from_state)) return;
    for (int a = 0; a < mdp.num_actions; ++a) {
        const int next = mdp.deterministic_next(from_state, a);
        prefix.steps.push_back({{}, from_state, a, 0.0});
        append_continuations(mdp, prefix, next, remaining - 1, out, indices, cap);
        prefix.steps.pop_back();
    }
}

} // namespace

TrajectorySet enumerate_trajectories(const MdpSpec& mdp, int horizon, size_t cap) {
    mdp.validate();
    if (!mdp.deterministic)
        throw UnsupportedError("enumerate_trajectories: dynamics must be deterministic");
    if (horizon < 1) throw ContractViolation("enumerate_trajectories: horizon must be >= 1");

    TrajectorySet set;
    set.horizon = horizon;
    set.by_start.assign(static_cast<size_t>(mdp.num_states),
                        std::vector<std::vector<int>>(static_cast<size_t>(mdp.num_actions)));
    for (int s = 0; s < mdp.num_states; ++s) {
        for (int a = 0; a < mdp.num_actions; ++a) {
            Trajectory prefix;
            prefix.steps.push_back({{}, s, a, 0.0});
            const int next = mdp.deterministic_next(s, a);
            append_continuations(mdp, prefix, next, horizon - 1, set.trajectories,
                                 set.by_start[static_cast<size_t>(s)][static_cast<size_t>(a)],
                                 cap);
        }
    }
    return set;
}

std::vector<std::vector<int>> OptimalPolicySet::enumerate(size_t cap) const {
    size_t total = 1;
    for (const auto& actions : per_state_actions) {
        total *= actions.size();
        if (total > cap)
            throw CapacityError("OptimalPolicySet: more than " + std::to_string(cap) +
                                " policies");
    }
    std::vector<std::vector<int>> policies;
    policies.reserve(total);
    std::vector<size_t> cursor(per_state_actions.size(), 0);
    for (size_t k = 0; k < total; ++k) {
        std::vector<int> policy(per_state_actions.size());
        for (size_t s = 0; s < per_state_actions.size(); ++s)
            policy[s] = per_state_actions[s][cursor[s]];
        policies.push_back(std::move(policy));
        for (size_t s = per_state_actions.size(); s-- > 0;) {
            if (++cursor[s] < per_state_actions[s].size()) break;
            cursor[s] = 0;
        }
    }
    return policies;
}

OptimalPolicySet optimal_policy_set(const MdpSpec& mdp, const RewardFn& r, int horizon,
                                    double gamma, double tol, size_t cap) {
    const TrajectorySet set = enumerate_trajectories(mdp, horizon, cap);
    OptimalPolicySet result;
    result.q = QTable::zeros(mdp.num_states, mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s) {
        for (int a = 0; a < mdp.num_actions; ++a) {
            double best = -std::numeric_limits<double>::infinity();
            for (int idx : set.by_start[static_cast<size_t>(s)][static_cast<size_t>(a)])
                best = std::max(best,
                                discounted_return(set.trajectories[static_cast<size_t>(idx)],
                                                  r, gamma));
            result.q.at(s, a) = best;
        }
    }
    result.per_state_actions.resize(static_cast<size_t>(mdp.num_states));
    for (int s = 0; s < mdp.num_states; ++s) {
        const auto row = result.q.row(s);
        const double best = *std::max_element(row.begin(), row.end());
        for (int a = 0; a < mdp.num_actions; ++a)
            if (row[static_cast<size_t>(a)] >= best - tol)
                result.per_state_actions[static_cast<size_t>(s)].push_back(a);
    }
    return result;
}

namespace {

std::optional<OrderViolation> pairwise_scan(const std::vector<double>& ret1,
                                            const std::vector<double>& ret2, double tol) {
    const size_t n = ret1.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (compare_returns(ret1[i], ret1[j], tol) !=
                compare_returns(ret2[i], ret2[j], tol))
                return OrderViolation{static_cast<int>(i), static_cast<int>(j),
                                      ret1[i], ret1[j], ret2[i], ret2[j]};
    return std::nullopt;
}

} // namespace

std::pair<bool, std::optional<OrderViolation>>
total_order_equivalent(const TrajectorySet& set, const RewardFn& r1, const RewardFn& r2,
                       double gamma, double tol) {
    if (set.trajectories.empty())
        throw ContractViolation("total_order_equivalent: empty trajectory set");

    const size_t n = set.trajectories.size();
    std::vector<double> ret1(n), ret2(n);
    for (size_t i = 0; i < n; ++i) {
        ret1[i] = discounted_return(set.trajectories[i], r1, gamma);
        ret2[i] = discounted_return(set.trajectories[i], r2, gamma);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return ret1[static_cast<size_t>(a)] < ret1[static_cast<size_t>(b)]; });

    // Group the sorted r1 returns into tie clusters. If any cluster spans more
    // than tol, tie-equality under r1 is not transitive and the cluster
    // summary is unsound; fall back to the literal pairwise definition.
    std::vector<std::pair<size_t, size_t>> clusters; // [begin, end) into order
    size_t begin = 0;
    for (size_t k = 1; k <= n; ++k) {
        if (k == n || ret1[static_cast<size_t>(order[k])] -
                              ret1[static_cast<size_t>(order[k - 1])] > tol) {
            clusters.emplace_back(begin, k);
            begin = k;
        }
    }
    for (auto [lo, hi] : clusters) {
        const double span = ret1[static_cast<size_t>(order[hi - 1])] -
                            ret1[static_cast<size_t>(order[lo])];
        if (span > tol) {
            auto violation = pairwise_scan(ret1, ret2, tol);
            return {!violation.has_value(), violation};
        }
    }

    // Within a cluster every r1 pair is Equal, so every r2 pair must be Equal:
    // the cluster's r2 span must stay within tol.
    for (auto [lo, hi] : clusters) {
        size_t min_at = lo, max_at = lo;
        for (size_t k = lo; k < hi; ++k) {
            const size_t idx = static_cast<size_t>(order[k]);
            if (ret2[idx] < ret2[static_cast<size_t>(order[min_at])]) min_at = k;
            if (ret2[idx] > ret2[static_cast<size_t>(order[max_at])]) max_at = k;
        }
        const int i = order[min_at], j = order[max_at];
        if (compare_returns(ret2[static_cast<size_t>(i)], ret2[static_cast<size_t>(j)], tol) !=
            Ordering::Equal) {
            return {false, OrderViolation{i, j, ret1[static_cast<size_t>(i)],
                                          ret1[static_cast<size_t>(j)],
                                          ret2[static_cast<size_t>(i)],
                                          ret2[static_cast<size_t>(j)]}};
        }
    }

    // Across adjacent clusters r1 is strictly increasing; the tightest r2
    // cross pair (max of the lower cluster vs min of the upper) must be
    // strictly increasing too. Adjacent separation implies separation for all
    // non-adjacent cluster pairs.
    for (size_t c = 0; c + 1 < clusters.size(); ++c) {
        auto [lo_a, hi_a] = clusters[c];
        auto [lo_b, hi_b] = clusters[c + 1];
        size_t max_at = lo_a;
        for (size_t k = lo_a; k < hi_a; ++k)
            if (ret2[static_cast<size_t>(order[k])] >
                ret2[static_cast<size_t>(order[max_at])]) max_at = k;
        size_t min_at = lo_b;
        for (size_t k = lo_b; k < hi_b; ++k)
            if (ret2[static_cast<size_t>(order[k])] <
                ret2[static_cast<size_t>(order[min_at])]) min_at = k;
        const int i = order[max_at], j = order[min_at];
        if (compare_returns(ret2[static_cast<size_t>(i)], ret2[static_cast<size_t>(j)], tol) !=
            Ordering::Less) {
            return {false, OrderViolation{i, j, ret1[static_cast<size_t>(i)],
                                          ret1[static_cast<size_t>(j)],
                                          ret2[static_cast<size_t>(i)],
                                          ret2[static_cast<size_t>(j)]}};
        }
    }
    return {true, std::nullopt};
}

EquivalenceReport verify_theorem(const MdpSpec& mdp, const RewardFn& r1, const RewardFn& r2,
                                 int horizon, double gamma, double tol) {
    const TrajectorySet set = enumerate_trajectories(mdp, horizon);
    EquivalenceReport report;
    auto [equivalent, violation] = total_order_equivalent(set, r1, r2, gamma, tol);
    report.equivalent = equivalent;
    report.first_violation = violation;
    report.optimal_r1 = optimal_policy_set(mdp, r1, horizon, gamma, tol);
    report.optimal_r2 = optimal_policy_set(mdp, r2, horizon, gamma, tol);
    report.optimal_sets_equal = report.optimal_r1.same_policies(report.optimal_r2);
    if (report.equivalent && !report.optimal_sets_equal)
        throw std::logic_error(
            "verify_theorem: equivalent rewards produced different optimal sets; "
            "this contradicts the theorem and indicates an implementation bug");
    return report;
}

} // namespace sors
