#include "sors/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace sors {

namespace {

void check_member_shapes(const RewardNet& net) {
    if (net.trunk.input_dim() != net.state_dim + net.num_actions)
        throw ContractViolation("RewardNet: trunk input does not match state+action dims");
    if (static_cast<int>(net.output_weight.size()) != net.trunk.output_dim())
        throw ContractViolation("RewardNet: output weight size does not match trunk output");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// -log sigmoid(d), stable for any finite d.
double logistic_loss(double d) {
    return d > 0.0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
}

void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ConfigError("reward ensemble snapshot: truncated");
    return v;
}

} // namespace

std::vector<double> RewardNet::input_for(const Step& step) const {
    if (static_cast<int>(step.features.size()) != state_dim)
        throw ContractViolation("RewardNet: step feature size mismatch");
    if (step.action < 0 || step.action >= num_actions)
        throw ContractViolation("RewardNet: action id out of range");
    std::vector<double> input(static_cast<size_t>(state_dim + num_actions), 0.0);
    std::copy(step.features.begin(), step.features.end(), input.begin());
    input[static_cast<size_t>(state_dim + step.action)] = 1.0;
    return input;
}

double RewardNet::reward(std::span<const double> state_features,
                         std::span<const double> action_features) const {
    if (static_cast<int>(state_features.size()) != state_dim ||
        static_cast<int>(action_features.size()) != num_actions)
        throw ContractViolation("RewardNet: feature dims do not match trunk input");
    std::vector<double> input(state_features.begin(), state_features.end());
    input.insert(input.end(), action_features.begin(), action_features.end());
    return dot(forward(trunk, input), output_weight);
}

double RewardNet::reward(const Step& step) const {
    return dot(forward(trunk, input_for(step)), output_weight);
}

double RewardNet::trajectory_return(const Trajectory& traj, double gamma) const {
    if (traj.steps.empty())
        throw ContractViolation("RewardNet: empty trajectory");
    double total = 0.0;
    double weight = 1.0;
    for (const Step& step : traj.steps) {
        total += weight * reward(step);
        weight *= gamma;
    }
    return total;
}

double pair_probability(double return_i, double return_j) {
    if (!std::isfinite(return_i) || !std::isfinite(return_j))
        throw ContractViolation("pair_probability: non-finite return");
    if (return_i == return_j) return 0.5;
    // Evaluate the logistic on the small side; 1 - p then rounds back to an
    // exact complement, so p(a,b) + p(b,a) == 1 bitwise.
    const double t = std::exp(-std::abs(return_i - return_j));
    const double p_small = t / (1.0 + t);
    return return_i > return_j ? 1.0 - p_small : p_small;
}

double pair_loss(const RewardNet& member, std::span<const LabeledPair> pairs, double gamma) {
    if (pairs.empty()) throw ContractViolation("pair_loss: empty batch");
    check_member_shapes(member);
    std::unordered_map<const Trajectory*, double> returns;
    returns.reserve(pairs.size() * 2);
    auto ret = [&](const Trajectory* t) {
        auto it = returns.find(t);
        if (it != returns.end()) return it->second;
        const double r = member.trajectory_return(*t, gamma);
        returns.emplace(t, r);
        return r;
    };
    double total = 0.0;
    for (const LabeledPair& p : pairs) {
        const double r_first = ret(p.first);
        const double r_second = ret(p.second);
        const double gap = p.first_preferred ? r_first - r_second : r_second - r_first;
        total += logistic_loss(gap);
    }
    return total / static_cast<double>(pairs.size());
}

double pair_loss_grad(const RewardNet& member, std::span<const LabeledPair> pairs,
                      double gamma, MlpGrads& trunk_grads, std::span<double> w_grads) {
    if (pairs.empty()) throw ContractViolation("pair_loss_grad: empty batch");
    check_member_shapes(member);
    if (w_grads.size() != member.output_weight.size())
        throw ContractViolation("pair_loss_grad: w_grads size mismatch");

    // Forward every distinct trajectory once, keeping per-step traces so the
    // backward pass can reuse them.
    struct TrajWork {
        const Trajectory* traj;
        std::vector<ForwardTrace> traces;
        double learned_return = 0.0;
        double coeff = 0.0; ///< d(loss)/d(learned return)
    };
    std::vector<TrajWork> work;
    std::unordered_map<const Trajectory*, size_t> index;
    work.reserve(pairs.size() * 2);
    index.reserve(pairs.size() * 2);

    auto intern = [&](const Trajectory* t) -> size_t {
        auto it = index.find(t);
        if (it != index.end()) return it->second;
        TrajWork tw;
        tw.traj = t;
        tw.traces.resize(t->steps.size());
        double total = 0.0;
        double weight = 1.0;
        for (size_t k = 0; k < t->steps.size(); ++k) {
            const auto phi = forward(member.trunk, member.input_for(t->steps[k]), tw.traces[k]);
            total += weight * dot(phi, member.output_weight);
            weight *= gamma;
        }
        tw.learned_return = total;
        work.push_back(std::move(tw));
        index.emplace(t, work.size() - 1);
        return work.size() - 1;
    };

    const double inv_batch = 1.0 / static_cast<double>(pairs.size());
    double total_loss = 0.0;
    for (const LabeledPair& p : pairs) {
        const size_t pref = intern(p.first_preferred ? p.first : p.second);
        const size_t other = intern(p.first_preferred ? p.second : p.first);
        const double gap = work[pref].learned_return - work[other].learned_return;
        total_loss += logistic_loss(gap);
        // d(-log sigmoid(gap))/d(gap) = sigmoid(gap) - 1 = -sigmoid(-gap)
        const double slope = pair_probability(work[other].learned_return,
                                              work[pref].learned_return);
        work[pref].coeff -= slope * inv_batch;
        work[other].coeff += slope * inv_batch;
    }

    const int feat = member.trunk.output_dim();
    std::vector<double> upstream(static_cast<size_t>(feat));
    for (TrajWork& tw : work) {
        if (tw.coeff == 0.0) continue;
        double weight = tw.coeff;
        for (size_t k = 0; k < tw.traces.size(); ++k) {
            const auto& phi = tw.traces[k].activations.back();
            for (int f = 0; f < feat; ++f) {
                w_grads[static_cast<size_t>(f)] += weight * phi[static_cast<size_t>(f)];
                upstream[static_cast<size_t>(f)] =
                    weight * member.output_weight[static_cast<size_t>(f)];
            }
            backprop(member.trunk, tw.traces[k], upstream, trunk_grads);
            weight *= gamma;
        }
    }
    return total_loss * inv_batch;
}

RewardEnsemble RewardEnsemble::create(int state_dim, int num_actions,
                                      const RewardModelConfig& cfg, uint64_t seed) {
    if (state_dim <= 0 || num_actions <= 0)
        throw ContractViolation("RewardEnsemble: dims must be positive");
    if (cfg.ensemble_size <= 0 || cfg.feature_dim <= 0)
        throw ContractViolation("RewardEnsemble: ensemble size and feature dim must be positive");
    RewardEnsemble ens;
    ens.adam_cfg_ = cfg.adam;
    for (int k = 0; k < cfg.ensemble_size; ++k) {
        Rng rng(derive_stream(seed, 0x5245574ull + static_cast<uint64_t>(k)));
        RewardNet net;
        net.state_dim = state_dim;
        net.num_actions = num_actions;
        net.trunk = MlpParams::create_stack(state_dim + num_actions, cfg.hidden,
                                            cfg.feature_dim, Activation::Tanh,
                                            Activation::Tanh, rng);
        net.output_weight.resize(static_cast<size_t>(cfg.feature_dim));
        double norm = 0.0;
        do {
            for (double& w : net.output_weight) w = rng.uniform(-1.0, 1.0);
            norm = std::sqrt(dot(net.output_weight, net.output_weight));
        } while (norm < 1e-3);
        for (double& w : net.output_weight) w /= norm;
        ens.trunk_opt_.push_back(AdamState::for_params(net.trunk, cfg.adam));
        ens.w_opt_.push_back(VecAdamState::for_size(net.output_weight.size(), cfg.adam));
        ens.members_.push_back(std::move(net));
    }
    return ens;
}

double RewardEnsemble::reward(std::span<const double> state_features,
                              std::span<const double> action_features) const {
    double total = 0.0;
    for (const RewardNet& net : members_) total += net.reward(state_features, action_features);
    return total / static_cast<double>(members_.size());
}

double RewardEnsemble::reward(const Step& step) const {
    double total = 0.0;
    for (const RewardNet& net : members_) total += net.reward(step);
    return total / static_cast<double>(members_.size());
}

double RewardEnsemble::trajectory_return(const Trajectory& traj, double gamma) const {
    double total = 0.0;
    for (const RewardNet& net : members_) total += net.trajectory_return(traj, gamma);
    return total / static_cast<double>(members_.size());
}

double RewardEnsemble::update(std::span<const std::vector<LabeledPair>> member_batches,
                              double gamma) {
    if (member_batches.size() != members_.size())
        throw ContractViolation("RewardEnsemble::update: need one batch per member");
    double loss_sum = 0.0;
    for (size_t k = 0; k < members_.size(); ++k) {
        if (member_batches[k].empty())
            throw ContractViolation("RewardEnsemble::update: empty batch");
        RewardNet& net = members_[k];
        MlpGrads trunk_grads = MlpGrads::zeros_like(net.trunk);
        std::vector<double> w_grads(net.output_weight.size(), 0.0);
        loss_sum += pair_loss_grad(net, member_batches[k], gamma, trunk_grads, w_grads);
        adam_step(net.trunk, trunk_grads, trunk_opt_[k]);
        adam_step(net.output_weight, w_grads, w_opt_[k]);
        const double norm = std::sqrt(dot(net.output_weight, net.output_weight));
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw NumericalError("RewardEnsemble: output weight collapsed");
        for (double& w : net.output_weight) w /= norm;
    }
    ++version_;
    return loss_sum / static_cast<double>(members_.size());
}

void RewardEnsemble::save(std::ostream& out) const {
    write_u32(out, static_cast<uint32_t>(members_.size()));
    for (const RewardNet& net : members_) {
        write_u32(out, static_cast<uint32_t>(net.state_dim));
        write_u32(out, static_cast<uint32_t>(net.num_actions));
        save_mlp(out, net.trunk);
        write_u32(out, static_cast<uint32_t>(net.output_weight.size()));
        out.write(reinterpret_cast<const char*>(net.output_weight.data()),
                  static_cast<std::streamsize>(net.output_weight.size() * sizeof(double)));
    }
}

RewardEnsemble RewardEnsemble::load(std::istream& in) {
    RewardEnsemble ens;
    const uint32_t count = read_u32(in);
    if (count == 0 || count > 4096)
        throw ConfigError("reward ensemble snapshot: implausible member count");
    for (uint32_t k = 0; k < count; ++k) {
        RewardNet net;
        net.state_dim = static_cast<int>(read_u32(in));
        net.num_actions = static_cast<int>(read_u32(in));
        net.trunk = load_mlp(in);
        const uint32_t feat = read_u32(in);
        net.output_weight.resize(feat);
        in.read(reinterpret_cast<char*>(net.output_weight.data()),
                static_cast<std::streamsize>(feat * sizeof(double)));
        if (!in) throw ConfigError("reward ensemble snapshot: truncated weight block");
        check_member_shapes(net);
        ens.trunk_opt_.push_back(AdamState::for_params(net.trunk));
        ens.w_opt_.push_back(VecAdamState::for_size(net.output_weight.size()));
        ens.members_.push_back(std::move(net));
    }
    return ens;
}

double ranking_accuracy(const RewardEnsemble& ensemble,
                        std::span<const BufferEntry* const> entries, double gamma,
                        double tie_tol) {
    std::vector<double> learned(entries.size());
    for (size_t i = 0; i < entries.size(); ++i)
        learned[i] = ensemble.trajectory_return(entries[i]->traj, gamma);
    long total = 0;
    long correct = 0;
    for (size_t i = 0; i < entries.size(); ++i) {
        for (size_t j = i + 1; j < entries.size(); ++j) {
            const double gap = entries[i]->sparse_ret() - entries[j]->sparse_ret();
            if (std::abs(gap) <= tie_tol) continue;
            ++total;
            const double learned_gap = learned[i] - learned[j];
            if ((gap > 0.0 && learned_gap > 0.0) || (gap < 0.0 && learned_gap < 0.0))
                ++correct;
        }
    }
    if (total == 0) return -1.0;
    return static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace sors
