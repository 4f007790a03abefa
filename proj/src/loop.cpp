#include "sors/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace sors {

namespace {

// rng stream ids
constexpr uint64_t kStreamActions = 1;
constexpr uint64_t kStreamPairs = 2;
constexpr uint64_t kStreamEval = 3;
constexpr uint64_t kStreamPolicy = 4;
constexpr uint64_t kStreamHoldout = 5;

bool is_holdout(uint64_t holdout_seed, uint64_t insertion_index, double fraction) {
    const double u =
        static_cast<double>(mix64(holdout_seed ^ insertion_index) >> 11) * 0x1.0p-53;
    return u < fraction;
}

struct HoldoutViews {
    std::vector<const BufferEntry*> train;
    std::vector<const BufferEntry*> eval;
};

HoldoutViews split_by_tag(const TrajectoryBuffer& buffer, uint64_t holdout_seed,
                          double fraction) {
    HoldoutViews views;
    for (size_t i = 0; i < buffer.size(); ++i) {
        const BufferEntry& e = buffer.entry(i);
        (is_holdout(holdout_seed, e.insertion_index, fraction) ? views.eval : views.train)
            .push_back(&e);
    }
    return views;
}

bool has_rankable_pair(std::span<const BufferEntry* const> entries, double tol) {
    if (entries.size() < 2) return false;
    double lo = entries.front()->sparse_ret();
    double hi = lo;
    for (const BufferEntry* e : entries) {
        lo = std::min(lo, e->sparse_ret());
        hi = std::max(hi, e->sparse_ret());
    }
    return hi - lo > tol;
}

/// Reward source for policy updates. In Sors mode rewards come from the live
/// ensemble; finite environments get a per-(s,a) memo that is invalidated
/// whenever the ensemble version moves, so "latest shaped reward" semantics
/// are kept without re-running the networks per replayed transition.
class RewardSource {
public:
    RewardSource(RunMode mode, const RewardEnsemble* ensemble, const Env& env)
        : mode_(mode), ensemble_(ensemble) {
        if (mode_ == RunMode::Sors) {
            if (!ensemble_) throw ContractViolation("run: Sors mode requires an ensemble");
            if (env.finite()) {
                num_actions_ = env.num_actions();
                features_.reserve(static_cast<size_t>(env.num_states()));
                for (int s = 0; s < env.num_states(); ++s)
                    features_.push_back(env.state_features(s));
                memo_.assign(features_.size() * static_cast<size_t>(num_actions_),
                             std::numeric_limits<double>::quiet_NaN());
            }
        }
    }

    TransitionReward fn() {
        if (mode_ != RunMode::Sors)
            return [](const ReplayTransition& t) { return t.env_reward; };
        if (memo_.empty()) {
            return [this](const ReplayTransition& t) {
                Step step{t.state_features, t.state, t.action, 0.0};
                return ensemble_->reward(step);
            };
        }
        return [this](const ReplayTransition& t) {
            if (ensemble_->version() != memo_version_) {
                std::fill(memo_.begin(), memo_.end(),
                          std::numeric_limits<double>::quiet_NaN());
                memo_version_ = ensemble_->version();
            }
            double& slot =
                memo_[static_cast<size_t>(t.state) * num_actions_ + t.action];
            if (std::isnan(slot)) {
                Step step{features_[static_cast<size_t>(t.state)], t.state, t.action, 0.0};
                slot = ensemble_->reward(step);
            }
            return slot;
        };
    }

private:
    RunMode mode_;
    const RewardEnsemble* ensemble_;
    int num_actions_ = 0;
    std::vector<std::vector<double>> features_;
    std::vector<double> memo_;
    uint64_t memo_version_ = ~0ull;
};

} // namespace

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Sparse: return "sparse";
        case RunMode::Sors: return "sors";
        case RunMode::HandDense: return "hand_dense";
    }
    return "?";
}

void SorsConfig::validate() const {
    if (total_steps <= 0) throw ContractViolation("SorsConfig: total_steps must be positive");
    if (initial_random_steps < 0 || initial_random_steps > total_steps)
        throw ContractViolation("SorsConfig: need 0 <= initial_random_steps <= total_steps");
    if (reward_update_period <= 0 || reward_updates_per_period <= 0 ||
        policy_update_period <= 0 || policy_updates_per_period <= 0 || eval_period <= 0 ||
        eval_episodes <= 0 || pair_batch_size <= 0)
        throw ContractViolation("SorsConfig: periods and counts must be positive");
    if (buffer_capacity == 0)
        throw ContractViolation("SorsConfig: buffer capacity must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0) || !(eval_gamma > 0.0 && eval_gamma <= 1.0))
        throw ContractViolation("SorsConfig: discounts must be in (0, 1]");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ContractViolation("SorsConfig: holdout fraction must be in (0, 1)");
    if (tie_tol < 0.0) throw ContractViolation("SorsConfig: tie_tol must be non-negative");
}

bool logs_equal_ignoring_wall(const RunLog& a, const RunLog& b) {
    if (a.evals.size() != b.evals.size() ||
        a.reward_phases.size() != b.reward_phases.size() ||
        a.reward_phases_attempted != b.reward_phases_attempted ||
        a.reward_phases_skipped != b.reward_phases_skipped ||
        a.policy_phases != b.policy_phases || a.episodes_completed != b.episodes_completed ||
        a.final_holdout_accuracy != b.final_holdout_accuracy)
        return false;
    for (size_t i = 0; i < a.evals.size(); ++i) {
        const EvalRecord& x = a.evals[i];
        const EvalRecord& y = b.evals[i];
        if (x.step != y.step || x.mean_sparse_return != y.mean_sparse_return ||
            x.mean_learned_return != y.mean_learned_return ||
            x.episode_returns != y.episode_returns)
            return false;
    }
    for (size_t i = 0; i < a.reward_phases.size(); ++i) {
        const RewardPhaseRecord& x = a.reward_phases[i];
        const RewardPhaseRecord& y = b.reward_phases[i];
        if (x.step != y.step || x.skipped != y.skipped ||
            x.mean_pair_loss != y.mean_pair_loss ||
            x.holdout_accuracy != y.holdout_accuracy)
            return false;
    }
    return true;
}

void collect_initial(Env& env, TrajectoryBuffer& buffer, long steps, Rng& rng) {
    if (steps < 0) throw ContractViolation("collect_initial: steps must be non-negative");
    if (steps == 0) return;
    EnvObservation cur = env.reset();
    Trajectory episode;
    for (long k = 0; k < steps; ++k) {
        const int action = rng.uniform_int(env.num_actions());
        const StepResult res = env.step(action);
        episode.steps.push_back({cur.features, cur.state, action, res.sparse_reward});
        if (res.done) {
            buffer.append(std::move(episode));
            episode = {};
            cur = env.reset();
        } else {
            cur = res.observation;
        }
    }
    // trailing incomplete episode is discarded
}

EvalResult evaluate(const PolicyFn& policy, Env& env, int episodes, double eval_gamma,
                    Rng& rng) {
    if (episodes <= 0) throw ContractViolation("evaluate: episodes must be positive");
    EvalResult result;
    for (int e = 0; e < episodes; ++e) {
        EnvObservation cur = env.reset();
        Trajectory episode;
        bool done = false;
        while (!done) {
            const int action = policy(cur, rng);
            const StepResult res = env.step(action);
            episode.steps.push_back({cur.features, cur.state, action, res.sparse_reward});
            done = res.done;
            cur = res.observation;
        }
        result.episode_returns.push_back(sparse_return(episode, eval_gamma));
        result.episodes.push_back(std::move(episode));
    }
    for (double r : result.episode_returns) result.mean_return += r;
    result.mean_return /= static_cast<double>(episodes);
    return result;
}

RunLog run(const SorsConfig& cfg, Env& env, Backend& backend, RewardEnsemble* ensemble) {
    cfg.validate();
    if (cfg.mode == RunMode::Sors && !ensemble)
        throw ContractViolation("run: Sors mode requires a reward ensemble");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Rng action_rng(derive_stream(cfg.seed, kStreamActions));
    Rng pair_rng(derive_stream(cfg.seed, kStreamPairs));
    Rng eval_rng(derive_stream(cfg.seed, kStreamEval));
    Rng policy_rng(derive_stream(cfg.seed, kStreamPolicy));
    const uint64_t holdout_seed = derive_stream(cfg.seed, kStreamHoldout);

    TrajectoryBuffer buffer(cfg.buffer_capacity, cfg.gamma, cfg.tie_tol);
    RunLog log;

    collect_initial(env, buffer, cfg.initial_random_steps, action_rng);
    log.episodes_completed = static_cast<long>(buffer.size());

    const std::unique_ptr<Env> eval_env = env.fresh();
    RewardSource reward_source(cfg.mode, ensemble, env);
    const TransitionReward reward_fn = reward_source.fn();
    const PolicyFn greedy = [&backend](const EnvObservation& obs, Rng&) {
        return backend.greedy_action(obs);
    };
    const double reward_gamma = cfg.reward_return_gamma();

    EnvObservation cur = env.reset();
    Trajectory episode;
    for (long step = cfg.initial_random_steps + 1; step <= cfg.total_steps; ++step) {
        const int action = backend.act(cur, /*greedy=*/false, action_rng);
        const StepResult res = env.step(action);
        episode.steps.push_back({cur.features, cur.state, action, res.sparse_reward});
        ReplayTransition transition;
        transition.state_features = cur.features;
        transition.next_features = res.observation.features;
        transition.state = cur.state;
        transition.next_state = res.observation.state;
        transition.action = action;
        transition.done = res.done;
        transition.env_reward =
            cfg.mode == RunMode::HandDense ? res.dense_reward_hand : res.sparse_reward;
        backend.observe(std::move(transition));
        if (res.done) {
            buffer.append(std::move(episode));
            episode = {};
            ++log.episodes_completed;
            cur = env.reset();
        } else {
            cur = res.observation;
        }

        if (cfg.mode == RunMode::Sors && step % cfg.reward_update_period == 0) {
            ++log.reward_phases_attempted;
            RewardPhaseRecord record;
            record.step = step;
            const HoldoutViews views =
                split_by_tag(buffer, holdout_seed, cfg.holdout_fraction);
            if (!has_rankable_pair(views.train, cfg.tie_tol)) {
                record.skipped = true;
                ++log.reward_phases_skipped;
            } else {
                try {
                    double loss_sum = 0.0;
                    std::vector<std::vector<LabeledPair>> batches(
                        static_cast<size_t>(ensemble->size()));
                    for (int u = 0; u < cfg.reward_updates_per_period; ++u) {
                        for (auto& batch : batches)
                            batch = sample_labeled_pairs(views.train, cfg.pair_batch_size,
                                                         cfg.tie_tol, pair_rng);
                        loss_sum += ensemble->update(batches, reward_gamma);
                    }
                    record.mean_pair_loss =
                        loss_sum / static_cast<double>(cfg.reward_updates_per_period);
                    record.holdout_accuracy =
                        ranking_accuracy(*ensemble, views.eval, reward_gamma, cfg.tie_tol);
                } catch (const NoRankablePairs&) {
                    record.skipped = true;
                    ++log.reward_phases_skipped;
                }
            }
            log.reward_phases.push_back(record);
        }

        if (step % cfg.policy_update_period == 0) {
            ++log.policy_phases;
            for (int u = 0; u < cfg.policy_updates_per_period; ++u)
                backend.update(reward_fn, policy_rng);
        }

        if (step % cfg.eval_period == 0) {
            EvalResult eval =
                evaluate(greedy, *eval_env, cfg.eval_episodes, cfg.eval_gamma, eval_rng);
            EvalRecord record;
            record.step = step;
            record.mean_sparse_return = eval.mean_return;
            record.episode_returns = std::move(eval.episode_returns);
            if (cfg.mode == RunMode::Sors) {
                double learned = 0.0;
                for (const Trajectory& ep : eval.episodes)
                    learned += ensemble->trajectory_return(ep, reward_gamma);
                record.mean_learned_return = learned / static_cast<double>(eval.episodes.size());
            }
            record.wall_seconds = elapsed();
            log.evals.push_back(std::move(record));
        }
    }

    if (cfg.mode == RunMode::Sors) {
        const HoldoutViews views = split_by_tag(buffer, holdout_seed, cfg.holdout_fraction);
        log.final_holdout_accuracy =
            ranking_accuracy(*ensemble, views.eval, reward_gamma, cfg.tie_tol);
    }
    return log;
}

} // namespace sors
