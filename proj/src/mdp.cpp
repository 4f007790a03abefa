#include "sors/mdp.hpp"

#include <cmath>
#include <cstdlib>

namespace sors {

void Trajectory::finalize(double gamma) {
    cached_sparse_return = sparse_return(*this, gamma);
    cache_gamma = gamma;
    cached = true;
}

MdpSpec MdpSpec::make(int num_states, int num_actions, double gamma) {
    if (num_states <= 0 || num_actions <= 0)
        throw ContractViolation("MdpSpec: state and action counts must be positive");
    MdpSpec m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.gamma = gamma;
    m.transition.assign(static_cast<size_t>(num_states),
                        std::vector<std::vector<std::pair<int, double>>>(
                            static_cast<size_t>(num_actions)));
    m.terminal.assign(static_cast<size_t>(num_states), false);
    return m;
}

void MdpSpec::set_deterministic_transition(int s, int a, int next) {
    transition.at(static_cast<size_t>(s)).at(static_cast<size_t>(a)) = {{next, 1.0}};
}

void MdpSpec::set_distribution(int s, int a, std::vector<std::pair<int, double>> dist) {
    transition.at(static_cast<size_t>(s)).at(static_cast<size_t>(a)) = std::move(dist);
}

void MdpSpec::mark_terminal(int s) { terminal.at(static_cast<size_t>(s)) = true; }

int MdpSpec::deterministic_next(int s, int a) const {
    const auto& dist = transition[static_cast<size_t>(s)][static_cast<size_t>(a)];
    if (dist.size() != 1 || dist[0].second != 1.0)
        throw ContractViolation("deterministic_next called on a non-point-mass distribution");
    return dist[0].first;
}

void MdpSpec::finalize() {
    deterministic = true;
    for (const auto& row : transition)
        for (const auto& dist : row)
            if (dist.size() != 1 || dist[0].second != 1.0) deterministic = false;
    validate();
}

void MdpSpec::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw ContractViolation("MdpSpec: state and action counts must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ContractViolation("MdpSpec: gamma must be in (0, 1]");
    if (initial_state < 0 || initial_state >= num_states)
        throw ContractViolation("MdpSpec: initial state out of bounds");
    if (transition.size() != static_cast<size_t>(num_states) ||
        terminal.size() != static_cast<size_t>(num_states))
        throw ContractViolation("MdpSpec: table sizes do not match num_states");
    bool point_mass_everywhere = true;
    for (int s = 0; s < num_states; ++s) {
        if (transition[static_cast<size_t>(s)].size() != static_cast<size_t>(num_actions))
            throw ContractViolation("MdpSpec: action table size mismatch at state " +
                                    std::to_string(s));
        for (int a = 0; a < num_actions; ++a) {
            const auto& dist = transition[static_cast<size_t>(s)][static_cast<size_t>(a)];
            if (dist.empty())
                throw ContractViolation("MdpSpec: missing distribution for (s=" +
                                        std::to_string(s) + ", a=" + std::to_string(a) + ")");
            double total = 0.0;
            for (const auto& [next, p] : dist) {
                if (next < 0 || next >= num_states)
                    throw ContractViolation("MdpSpec: successor out of bounds at (s=" +
                                            std::to_string(s) + ", a=" + std::to_string(a) + ")");
                if (p < 0.0)
                    throw ContractViolation("MdpSpec: negative transition probability");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw ContractViolation("MdpSpec: distribution at (s=" + std::to_string(s) +
                                        ", a=" + std::to_string(a) + ") sums to " +
                                        std::to_string(total));
            if (dist.size() != 1 || dist[0].second != 1.0) point_mass_everywhere = false;
        }
    }
    if (deterministic != point_mass_everywhere)
        throw ContractViolation("MdpSpec: deterministic flag inconsistent with transitions");
}

double discounted_return(const Trajectory& traj, const RewardFn& r, double gamma) {
    if (traj.steps.empty())
        throw ContractViolation("discounted_return: empty trajectory");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ContractViolation("discounted_return: gamma must be in (0, 1]");
    double total = 0.0;
    double weight = 1.0;
    for (const Step& step : traj.steps) {
        total += weight * r(step.state, step.action);
        weight *= gamma;
    }
    return total;
}

double sparse_return(const Trajectory& traj, double gamma) {
    if (traj.steps.empty())
        throw ContractViolation("sparse_return: empty trajectory");
    double total = 0.0;
    double weight = 1.0;
    for (const Step& step : traj.steps) {
        total += weight * step.sparse_reward;
        weight *= gamma;
    }
    return total;
}

Ordering compare_returns(double lhs, double rhs, double tol) {
    if (lhs < rhs - tol) return Ordering::Less;
    if (lhs > rhs + tol) return Ordering::Greater;
    return Ordering::Equal;
}

Ordering order_compare(const Trajectory& a, const Trajectory& b, const RewardFn& r,
                       double gamma, double tol) {
    if (tol < 0.0) throw ContractViolation("order_compare: tol must be non-negative");
    return compare_returns(discounted_return(a, r, gamma),
                           discounted_return(b, r, gamma), tol);
}

const char* to_string(Ordering o) {
    switch (o) {
        case Ordering::Less: return "Less";
        case Ordering::Equal: return "Equal";
        case Ordering::Greater: return "Greater";
    }
    return "?";
}

} // namespace sors
