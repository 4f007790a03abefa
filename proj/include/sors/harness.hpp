#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sors/config.hpp"
#include "sors/loop.hpp"

namespace sors {

/// Gap-aware exponential moving average with the stated half-life in steps:
/// y_k = beta^dk * y_(k-1) + (1 - beta^dk) * x_k with beta = 2^(-1/half_life)
/// and dk the step gap; y_0 = x_0. Steps must be strictly increasing.
std::vector<std::pair<long, double>>
ema_smooth(std::span<const std::pair<long, double>> series, double half_life);

/// %.9g, the fixed numeric formatting of all CSV output.
std::string format_g9(double value);

struct SeedRun {
    int seed = 0;
    RunLog log;
};

struct ExperimentResult {
    std::vector<SeedRun> runs;
    std::string out_dir;
    std::string aggregate_path;
    std::vector<std::string> seed_paths;
};

/// Run every seed (optionally on worker threads), write one CSV per seed plus
/// the cross-seed aggregate and the resolved-config echo into cfg.out_dir, and
/// print a short summary to `summary`. Deterministic given the config.
///
/// Per-seed schema:  step,seed,raw_return,smoothed_return,mode,env
/// Aggregate schema: step,mean_return,std_return,mode,env,n_seeds
/// (std_return is the population standard deviation of the per-seed smoothed
/// values; curves are smoothed per seed first, then aggregated.)
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& summary);

/// Apply ema_smooth to a CSV: uses the `step` and `raw_return` columns when
/// the header names them, or the first two columns otherwise. Output schema:
/// step,raw_return,smoothed_return.
void smooth_csv(std::istream& in, std::ostream& out, double half_life);

/// Minimal CSV reader for round-trip checks: rows of unquoted cells.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace sors
