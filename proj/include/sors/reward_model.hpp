#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sors/mlp.hpp"
#include "sors/trajectory_buffer.hpp"

namespace sors {

struct RewardModelConfig {
    std::vector<int> hidden = {32, 32}; ///< trunk hidden sizes
    int feature_dim = 4;                ///< size of the trunk's output feature vector
    int ensemble_size = 4;
    AdamConfig adam{};
    /// Learned returns inside the pairwise loss use the MDP's discount; set
    /// false for undiscounted sums.
    bool discounted_returns = true;
};

/// One reward network: a tanh trunk producing a feature vector phi(s, a) and a
/// unit-norm output weight, so the reward w . phi is bounded by sqrt(F).
struct RewardNet {
    MlpParams trunk;
    std::vector<double> output_weight;
    int state_dim = 0;
    int num_actions = 0;

    double reward(std::span<const double> state_features,
                  std::span<const double> action_features) const;
    double reward(const Step& step) const;
    double trajectory_return(const Trajectory& traj, double gamma) const;

    /// Concatenated (state features, one-hot action) model input.
    std::vector<double> input_for(const Step& step) const;
};

/// Bradley-Terry preference probability P(i preferred over j) =
/// exp(Ri) / (exp(Ri) + exp(Rj)), computed so that p(a,b) + p(b,a) == 1
/// exactly and no difference overflows.
double pair_probability(double return_i, double return_j);

/// Mean negative log-likelihood of the labels under pair_probability applied
/// to the member's learned returns (discounted with `gamma`).
double pair_loss(const RewardNet& member, std::span<const LabeledPair> pairs, double gamma);

/// pair_loss plus its exact gradients. `trunk_grads` must be zeroed and shaped
/// like the trunk; `w_grads` sized like the output weight.
double pair_loss_grad(const RewardNet& member, std::span<const LabeledPair> pairs,
                      double gamma, MlpGrads& trunk_grads, std::span<double> w_grads);

/// Ensemble of independently initialized reward networks; the inferred dense
/// reward is the arithmetic mean of the member outputs.
class RewardEnsemble {
public:
    static RewardEnsemble create(int state_dim, int num_actions,
                                 const RewardModelConfig& cfg, uint64_t seed);

    double reward(std::span<const double> state_features,
                  std::span<const double> action_features) const;
    double reward(const Step& step) const;
    double trajectory_return(const Trajectory& traj, double gamma) const;

    int size() const { return static_cast<int>(members_.size()); }
    const RewardNet& member(int k) const { return members_[static_cast<size_t>(k)]; }
    RewardNet& member(int k) { return members_[static_cast<size_t>(k)]; }

    /// One Adam step per member on its own batch, then project each output
    /// weight back to the unit sphere. Returns the mean member loss.
    double update(std::span<const std::vector<LabeledPair>> member_batches, double gamma);

    /// Bumps on every update; callers memoizing rewards key on this.
    uint64_t version() const { return version_; }

    const AdamConfig& adam_config() const { return adam_cfg_; }

    /// Snapshot: u32 member count, then per member the trunk in the mlp
    /// format followed by u32 F and the f64 output weight block.
    void save(std::ostream& out) const;
    static RewardEnsemble load(std::istream& in);

private:
    std::vector<RewardNet> members_;
    std::vector<AdamState> trunk_opt_;
    std::vector<VecAdamState> w_opt_;
    AdamConfig adam_cfg_;
    uint64_t version_ = 0;
};

/// Fraction of strictly sparse-ordered pairs in `entries` whose learned-return
/// order matches, over all unordered pairs; -1 when no rankable pair exists.
double ranking_accuracy(const RewardEnsemble& ensemble,
                        std::span<const BufferEntry* const> entries, double gamma,
                        double tie_tol);

} // namespace sors
