#include "sors/trajectory_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace sors {

namespace {
constexpr int kMaxSampleAttempts = 1000;
}

std::vector<LabeledPair> sample_labeled_pairs(std::span<const BufferEntry* const> entries,
                                              int n, double tie_tol, Rng& rng) {
    if (n <= 0) throw ContractViolation("sample_labeled_pairs: n must be positive");
    if (entries.size() < 2)
        throw NoRankablePairs("fewer than two stored trajectories");

    std::vector<LabeledPair> pairs;
    pairs.reserve(static_cast<size_t>(n));
    const int count = static_cast<int>(entries.size());
    for (int k = 0; k < n; ++k) {
        bool found = false;
        for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
            const int i = rng.uniform_int(count);
            int j = rng.uniform_int(count - 1);
            if (j >= i) ++j;
            const double ri = entries[static_cast<size_t>(i)]->sparse_ret();
            const double rj = entries[static_cast<size_t>(j)]->sparse_ret();
            if (std::abs(ri - rj) <= tie_tol) continue;
            pairs.push_back({&entries[static_cast<size_t>(i)]->traj,
                             &entries[static_cast<size_t>(j)]->traj, ri > rj});
            found = true;
            break;
        }
        if (!found)
            throw NoRankablePairs("all sampled sparse returns tied within tolerance");
    }
    return pairs;
}

TrajectoryBuffer::TrajectoryBuffer(size_t capacity, double gamma, double tie_tol)
    : capacity_(capacity), gamma_(gamma), tie_tol_(tie_tol) {
    if (capacity == 0) throw ContractViolation("TrajectoryBuffer: capacity must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ContractViolation("TrajectoryBuffer: gamma must be in (0, 1]");
}

void TrajectoryBuffer::append(Trajectory traj) {
    if (traj.steps.empty())
        throw ContractViolation("TrajectoryBuffer: cannot append an empty episode");
    traj.finalize(gamma_);
    entries_.push_back({std::move(traj), next_index_++});
    if (entries_.size() > capacity_) entries_.pop_front();
}

std::vector<const BufferEntry*> TrajectoryBuffer::all() const {
    std::vector<const BufferEntry*> view;
    view.reserve(entries_.size());
    for (const BufferEntry& e : entries_) view.push_back(&e);
    return view;
}

std::vector<LabeledPair> TrajectoryBuffer::sample_pairs(int n, Rng& rng) const {
    const auto view = all();
    return sample_labeled_pairs(view, n, tie_tol_, rng);
}

std::pair<std::vector<const BufferEntry*>, std::vector<const BufferEntry*>>
TrajectoryBuffer::holdout_split(double fraction, Rng& rng) const {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ContractViolation("holdout_split: fraction must be in (0, 1)");
    if (entries_.size() < 2)
        throw ContractViolation("holdout_split: need at least two entries");

    std::vector<size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);

    size_t n_eval = static_cast<size_t>(std::floor(fraction * static_cast<double>(order.size())));
    n_eval = std::clamp<size_t>(n_eval, 1, order.size() - 1);

    std::vector<const BufferEntry*> train, eval;
    eval.reserve(n_eval);
    train.reserve(order.size() - n_eval);
    for (size_t k = 0; k < order.size(); ++k)
        (k < n_eval ? eval : train).push_back(&entries_[order[k]]);
    return {std::move(train), std::move(eval)};
}

void TrajectoryBuffer::dump(std::ostream& out) const {
    for (const BufferEntry& e : entries_) {
        for (const Step& step : e.traj.steps) {
            for (size_t i = 0; i < step.features.size(); ++i) {
                if (i) out << ',';
                out << step.features[i];
            }
            out << ' ' << step.action << ' ' << step.sparse_reward << '\n';
        }
        out << '\n';
    }
}

} // namespace sors
