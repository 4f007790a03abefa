#pragma once

#include <deque>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "sors/mdp.hpp"
#include "sors/rng.hpp"

namespace sors {

/// Two trajectories plus the direction of the strict sparse-return order
/// between them. Pointers stay valid while the buffer is not mutated; the
/// single-writer alternation contract guarantees that during an update phase.
struct LabeledPair {
    const Trajectory* first = nullptr;
    const Trajectory* second = nullptr;
    bool first_preferred = false; ///< true: R(first) > R(second) + tol
};

struct BufferEntry {
    Trajectory traj; ///< finalized with the buffer's gamma
    uint64_t insertion_index = 0;

    double sparse_ret() const { return traj.cached_sparse_return; }
};

/// Draw `n` labeled pairs uniformly from `entries` (distinct members per pair,
/// with replacement across pairs). Tied pairs are rejected and redrawn, up to
/// 1000 attempts per pair before NoRankablePairs.
std::vector<LabeledPair> sample_labeled_pairs(std::span<const BufferEntry* const> entries,
                                              int n, double tie_tol, Rng& rng);

/// FIFO store of complete episodes with cached sparse returns; the
/// self-supervision source that ranks trajectory pairs.
class TrajectoryBuffer {
public:
    TrajectoryBuffer(size_t capacity, double gamma, double tie_tol = kTieTolerance);

    /// Store a complete episode; evicts the oldest entry beyond capacity.
    void append(Trajectory traj);

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    size_t capacity() const { return capacity_; }
    double gamma() const { return gamma_; }
    double tie_tol() const { return tie_tol_; }
    const BufferEntry& entry(size_t i) const { return entries_[i]; }
    std::vector<const BufferEntry*> all() const;

    std::vector<LabeledPair> sample_pairs(int n, Rng& rng) const;

    /// Disjoint (train, eval) views over the current entries. The eval view
    /// gets floor(fraction * size) entries, clamped so both sides are
    /// nonempty; the remainder trains. Deterministic in the rng seed.
    std::pair<std::vector<const BufferEntry*>, std::vector<const BufferEntry*>>
    holdout_split(double fraction, Rng& rng) const;

    /// Line-delimited episode dump: one step per line as comma-joined state
    /// features, action id, sparse reward; episodes separated by blank lines.
    void dump(std::ostream& out) const;

private:
    std::deque<BufferEntry> entries_;
    size_t capacity_;
    double gamma_;
    double tie_tol_;
    uint64_t next_index_ = 0;
};

} // namespace sors
