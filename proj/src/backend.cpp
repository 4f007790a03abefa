#include "sors/backend.hpp"

#include <algorithm>
#include <cmath>

namespace sors {

QTable QTable::zeros(int num_states, int num_actions) {
    if (num_states <= 0 || num_actions <= 0)
        throw ContractViolation("QTable: dims must be positive");
    QTable t;
    t.num_states = num_states;
    t.num_actions = num_actions;
    t.values.assign(static_cast<size_t>(num_states) * num_actions, 0.0);
    return t;
}

void save_qtable(std::ostream& out, const QTable& table) {
    MlpParams as_mlp;
    Layer layer;
    layer.in = table.num_states;
    layer.out = table.num_actions;
    layer.act = Activation::Identity;
    layer.w.resize(table.values.size());
    for (int s = 0; s < table.num_states; ++s)
        for (int a = 0; a < table.num_actions; ++a)
            layer.w[static_cast<size_t>(a) * table.num_states + s] = table.at(s, a);
    layer.b.assign(static_cast<size_t>(table.num_actions), 0.0);
    as_mlp.layers.push_back(std::move(layer));
    save_mlp(out, as_mlp);
}

QTable load_qtable(std::istream& in) {
    const MlpParams as_mlp = load_mlp(in);
    if (as_mlp.layers.size() != 1 || as_mlp.layers[0].act != Activation::Identity)
        throw ConfigError("qtable snapshot: expected a single identity layer");
    const Layer& layer = as_mlp.layers[0];
    QTable t = QTable::zeros(layer.in, layer.out);
    for (int s = 0; s < t.num_states; ++s)
        for (int a = 0; a < t.num_actions; ++a)
            t.at(s, a) = layer.w[static_cast<size_t>(a) * t.num_states + s];
    return t;
}

ValueIterationResult value_iteration(const MdpSpec& mdp, const RewardFn& r, double tol,
                                     int max_iterations, double tie_tol) {
    mdp.validate();
    if (tol <= 0.0) throw ContractViolation("value_iteration: tol must be positive");

    ValueIterationResult result;
    result.q = QTable::zeros(mdp.num_states, mdp.num_actions);
    QTable next = result.q;
    std::vector<double> state_value(static_cast<size_t>(mdp.num_states), 0.0);

    double residual = 0.0;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        for (int s = 0; s < mdp.num_states; ++s) {
            state_value[static_cast<size_t>(s)] = mdp.is_terminal(s)
                ? 0.0
                : *std::max_element(result.q.row(s).begin(), result.q.row(s).end());
        }
        residual = 0.0;
        for (int s = 0; s < mdp.num_states; ++s) {
            for (int a = 0; a < mdp.num_actions; ++a) {
                double backup = 0.0;
                if (!mdp.is_terminal(s)) {
                    backup = r(s, a);
                    for (const auto& [next_state, p] :
                         mdp.transition[static_cast<size_t>(s)][static_cast<size_t>(a)])
                        backup += mdp.gamma * p * state_value[static_cast<size_t>(next_state)];
                }
                residual = std::max(residual, std::abs(backup - result.q.at(s, a)));
                next.at(s, a) = backup;
            }
        }
        std::swap(result.q.values, next.values);
        if (residual <= tol) break;
    }
    if (residual > tol)
        throw NumericalError("value_iteration: no convergence after " +
                             std::to_string(max_iterations) + " iterations (residual " +
                             std::to_string(residual) + ")");

    result.residual = residual;
    result.iterations = iter + 1;
    result.optimal_actions.resize(static_cast<size_t>(mdp.num_states));
    for (int s = 0; s < mdp.num_states; ++s) {
        const auto row = result.q.row(s);
        const double best = *std::max_element(row.begin(), row.end());
        for (int a = 0; a < mdp.num_actions; ++a)
            if (row[static_cast<size_t>(a)] >= best - tie_tol)
                result.optimal_actions[static_cast<size_t>(s)].push_back(a);
    }
    return result;
}

double soft_value(std::span<const double> q_row, double alpha) {
    if (q_row.empty()) throw ContractViolation("soft_value: empty row");
    if (alpha <= 0.0) throw ContractViolation("soft_value: alpha must be positive");
    const double m = *std::max_element(q_row.begin(), q_row.end());
    double acc = 0.0;
    for (double q : q_row) acc += std::exp((q - m) / alpha);
    return m + alpha * std::log(acc);
}

std::vector<double> boltzmann_probs(std::span<const double> q_row, double alpha) {
    if (q_row.empty()) throw ContractViolation("boltzmann_probs: empty row");
    if (alpha <= 0.0) throw ContractViolation("boltzmann_probs: alpha must be positive");
    const double m = *std::max_element(q_row.begin(), q_row.end());
    std::vector<double> probs(q_row.size());
    double total = 0.0;
    for (size_t i = 0; i < q_row.size(); ++i) {
        probs[i] = std::exp((q_row[i] - m) / alpha);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw ContractViolation("argmax_lowest: empty input");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[static_cast<size_t>(i)] > values[static_cast<size_t>(best)]) best = i;
    return best;
}

namespace {

int sample_index(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace

void soft_q_step(QTable& table, const ReplayTransition& transition, double reward_value,
                 double lr, double gamma, double alpha) {
    if (!(lr > 0.0 && lr <= 1.0)) throw ContractViolation("soft_q_step: lr must be in (0, 1]");
    if (transition.state < 0 || transition.state >= table.num_states ||
        transition.action < 0 || transition.action >= table.num_actions)
        throw ContractViolation("soft_q_step: transition out of table bounds");
    double target = reward_value;
    if (!transition.done) {
        if (transition.next_state < 0 || transition.next_state >= table.num_states)
            throw ContractViolation("soft_q_step: next state out of bounds");
        target += gamma * soft_value(table.row(transition.next_state), alpha);
    }
    double& q = table.at(transition.state, transition.action);
    q = (1.0 - lr) * q + lr * target;
}

// ----------------------------------------------------------------- TabularSoftQ

TabularSoftQ::TabularSoftQ(int num_states, int num_actions, Config cfg)
    : cfg_(cfg), table_(QTable::zeros(num_states, num_actions)) {
    if (cfg.batch <= 0 || cfg.replay_capacity == 0)
        throw ContractViolation("TabularSoftQ: batch and replay capacity must be positive");
    replay_.reserve(std::min<size_t>(cfg.replay_capacity, 4096));
}

int TabularSoftQ::act(const EnvObservation& obs, bool greedy, Rng& rng) {
    if (greedy) return greedy_action(obs);
    const auto probs = boltzmann_probs(table_.row(obs.state), cfg_.alpha);
    return sample_index(probs, rng);
}

int TabularSoftQ::greedy_action(const EnvObservation& obs) const {
    if (obs.state < 0 || obs.state >= table_.num_states)
        throw ContractViolation("TabularSoftQ: observation lacks a valid state id");
    return argmax_lowest(table_.row(obs.state));
}

void TabularSoftQ::observe(ReplayTransition transition) {
    if (replay_.size() < cfg_.replay_capacity) {
        replay_.push_back(std::move(transition));
    } else {
        replay_[replay_next_] = std::move(transition);
        replay_next_ = (replay_next_ + 1) % cfg_.replay_capacity;
    }
}

void TabularSoftQ::update(const TransitionReward& reward, Rng& rng) {
    if (replay_.empty()) return;
    for (int k = 0; k < cfg_.batch; ++k) {
        const ReplayTransition& t =
            replay_[static_cast<size_t>(rng.uniform_int(static_cast<int>(replay_.size())))];
        soft_q_step(table_, t, reward(t), cfg_.lr, cfg_.gamma, cfg_.alpha);
    }
}

// ------------------------------------------------------------------ NeuralSoftQ

NeuralSoftQ::NeuralSoftQ(int feature_dim, int num_actions, NeuralQConfig cfg, uint64_t seed)
    : cfg_(cfg), num_actions_(num_actions) {
    if (feature_dim <= 0 || num_actions <= 0)
        throw ContractViolation("NeuralSoftQ: dims must be positive");
    if (cfg.batch <= 0 || cfg.target_update_period <= 0 || cfg.replay_capacity == 0)
        throw ContractViolation("NeuralSoftQ: bad config");
    Rng rng(derive_stream(seed, 0x514e4554ull));
    online_ = MlpParams::create_stack(feature_dim, cfg.hidden, num_actions,
                                      Activation::Relu, Activation::Identity, rng);
    target_ = online_;
    opt_ = AdamState::for_params(online_, cfg.adam);
}

int NeuralSoftQ::act(const EnvObservation& obs, bool greedy, Rng& rng) {
    if (greedy) return greedy_action(obs);
    const auto q = forward(online_, obs.features);
    return sample_index(boltzmann_probs(q, cfg_.alpha), rng);
}

int NeuralSoftQ::greedy_action(const EnvObservation& obs) const {
    return argmax_lowest(forward(online_, obs.features));
}

void NeuralSoftQ::observe(ReplayTransition transition) {
    if (replay_.size() < cfg_.replay_capacity) {
        replay_.push_back(std::move(transition));
    } else {
        replay_[replay_next_] = std::move(transition);
        replay_next_ = (replay_next_ + 1) % cfg_.replay_capacity;
    }
}

void NeuralSoftQ::update(const TransitionReward& reward, Rng& rng) {
    if (replay_.empty()) return;
    std::vector<const ReplayTransition*> batch(static_cast<size_t>(cfg_.batch));
    for (auto& slot : batch)
        slot = &replay_[static_cast<size_t>(rng.uniform_int(static_cast<int>(replay_.size())))];
    update_minibatch(batch, reward);
}

double NeuralSoftQ::update_minibatch(std::span<const ReplayTransition* const> minibatch,
                                     const TransitionReward& reward) {
    if (minibatch.empty()) throw ContractViolation("NeuralSoftQ: empty minibatch");
    MlpGrads grads = MlpGrads::zeros_like(online_);
    std::vector<double> upstream(static_cast<size_t>(num_actions_), 0.0);
    ForwardTrace trace;
    const double scale = 1.0 / static_cast<double>(minibatch.size());
    double loss = 0.0;
    for (const ReplayTransition* t : minibatch) {
        double target = reward(*t);
        if (!t->done)
            target += cfg_.gamma * soft_value(forward(target_, t->next_features), cfg_.alpha);
        const auto q = forward(online_, t->state_features, trace);
        const double err = q[static_cast<size_t>(t->action)] - target;
        loss += err * err * scale;
        std::fill(upstream.begin(), upstream.end(), 0.0);
        upstream[static_cast<size_t>(t->action)] = 2.0 * err * scale;
        backprop(online_, trace, upstream, grads);
    }
    adam_step(online_, grads, opt_);
    ++updates_;
    if (updates_ % cfg_.target_update_period == 0) target_ = online_;
    return loss;
}

} // namespace sors
