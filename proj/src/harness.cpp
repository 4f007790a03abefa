#include "sors/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace sors {

namespace fs = std::filesystem;

std::vector<std::pair<long, double>>
ema_smooth(std::span<const std::pair<long, double>> series, double half_life) {
    if (series.empty()) throw ContractViolation("ema_smooth: empty series");
    if (!(half_life > 0.0)) throw ContractViolation("ema_smooth: half_life must be positive");
    std::vector<std::pair<long, double>> out;
    out.reserve(series.size());
    double y = series.front().second;
    out.emplace_back(series.front().first, y);
    for (size_t k = 1; k < series.size(); ++k) {
        const long gap = series[k].first - series[k - 1].first;
        if (gap <= 0) throw ContractViolation("ema_smooth: steps must be strictly increasing");
        const double keep = std::exp2(-static_cast<double>(gap) / half_life);
        y = keep * y + (1.0 - keep) * series[k].second;
        out.emplace_back(series[k].first, y);
    }
    return out;
}

std::string format_g9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

namespace {

std::vector<std::pair<long, double>> eval_series(const RunLog& log) {
    std::vector<std::pair<long, double>> series;
    series.reserve(log.evals.size());
    for (const EvalRecord& e : log.evals) series.emplace_back(e.step, e.mean_sparse_return);
    return series;
}

void write_seed_csv(const std::string& path, int seed, const RunLog& log,
                    double half_life, const std::string& mode, const std::string& env) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "step,seed,raw_return,smoothed_return,mode,env\n";
    const auto series = eval_series(log);
    if (series.empty()) return;
    const auto smoothed = ema_smooth(series, half_life);
    for (size_t k = 0; k < series.size(); ++k)
        out << series[k].first << ',' << seed << ',' << format_g9(series[k].second) << ','
            << format_g9(smoothed[k].second) << ',' << mode << ',' << env << '\n';
}

void write_aggregate_csv(const std::string& path, const std::vector<SeedRun>& runs,
                         double half_life, const std::string& mode,
                         const std::string& env) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "step,mean_return,std_return,mode,env,n_seeds\n";
    if (runs.empty() || runs.front().log.evals.empty()) return;

    std::vector<std::vector<std::pair<long, double>>> smoothed;
    smoothed.reserve(runs.size());
    for (const SeedRun& run : runs) {
        smoothed.push_back(ema_smooth(eval_series(run.log), half_life));
        if (smoothed.back().size() != smoothed.front().size())
            throw ContractViolation("aggregate: seeds disagree on evaluation steps");
    }
    const size_t rows = smoothed.front().size();
    const double n = static_cast<double>(runs.size());
    for (size_t k = 0; k < rows; ++k) {
        const long step = smoothed.front()[k].first;
        double mean = 0.0;
        for (const auto& s : smoothed) {
            if (s[k].first != step)
                throw ContractViolation("aggregate: seeds disagree on evaluation steps");
            mean += s[k].second;
        }
        mean /= n;
        double var = 0.0;
        for (const auto& s : smoothed) var += (s[k].second - mean) * (s[k].second - mean);
        var /= n;
        out << step << ',' << format_g9(mean) << ',' << format_g9(std::sqrt(var)) << ','
            << mode << ',' << env << ',' << runs.size() << '\n';
    }
}

RunLog run_one_seed(const ExperimentConfig& cfg, int seed) {
    const auto env = cfg.make_env();
    const auto backend = cfg.make_backend(*env, static_cast<uint64_t>(seed));
    if (cfg.mode == RunMode::Sors) {
        RewardEnsemble ensemble = cfg.make_ensemble(*env, static_cast<uint64_t>(seed));
        return run(cfg.loop_config(seed), *env, *backend, &ensemble);
    }
    return run(cfg.loop_config(seed), *env, *backend, nullptr);
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& summary) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream echo(fs::path(cfg.out_dir) / "config_echo.txt", std::ios::binary);
        if (!echo) throw ConfigError("cannot write config echo in " + cfg.out_dir);
        echo << config_echo(cfg);
    }

    ExperimentResult result;
    result.out_dir = cfg.out_dir;
    result.runs.resize(cfg.seeds.size());
    std::vector<std::exception_ptr> failures(cfg.seeds.size());

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t workers =
        cfg.parallel_seeds ? std::min<size_t>(cfg.seeds.size(), hw) : size_t{1};

    auto run_index = [&](size_t i) {
        try {
            result.runs[i] = {cfg.seeds[i], run_one_seed(cfg, cfg.seeds[i])};
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };

    if (workers <= 1) {
        for (size_t i = 0; i < cfg.seeds.size(); ++i) run_index(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < cfg.seeds.size();
                     i = next.fetch_add(1))
                    run_index(i);
            });
        for (auto& t : pool) t.join();
    }

    for (size_t i = 0; i < failures.size(); ++i) {
        if (!failures[i]) continue;
        try {
            std::rethrow_exception(failures[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("seed " + std::to_string(cfg.seeds[i]) +
                                     " failed: " + e.what());
        }
    }

    const std::string mode = to_string(cfg.mode);
    const std::string env = cfg.env_label();
    for (const SeedRun& run : result.runs) {
        const std::string path =
            (fs::path(cfg.out_dir) / ("seed_" + std::to_string(run.seed) + ".csv")).string();
        write_seed_csv(path, run.seed, run.log, cfg.half_life, mode, env);
        result.seed_paths.push_back(path);
    }
    result.aggregate_path = (fs::path(cfg.out_dir) / "aggregate.csv").string();
    write_aggregate_csv(result.aggregate_path, result.runs, cfg.half_life, mode, env);

    summary << "experiment: env=" << env << " mode=" << mode << " seeds=" << cfg.seeds.size()
            << "\n";
    for (const SeedRun& run : result.runs) {
        const auto series = eval_series(run.log);
        const double final_raw = series.empty() ? 0.0 : series.back().second;
        summary << "  seed " << run.seed << ": evals=" << run.log.evals.size()
                << " final_return=" << format_g9(final_raw);
        if (cfg.mode == RunMode::Sors)
            summary << " holdout_accuracy=" << format_g9(run.log.final_holdout_accuracy);
        summary << "\n";
    }
    summary << "wrote " << result.aggregate_path << "\n";
    return result;
}

void smooth_csv(std::istream& in, std::ostream& out, double half_life) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("smooth: empty input");
    std::vector<std::string> header;
    {
        std::istringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) header.push_back(cell);
    }
    size_t step_col = 0, value_col = 1;
    bool named = false;
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "step") { step_col = i; named = true; }
        if (header[i] == "raw_return") value_col = i;
    }
    if (!named && header.size() < 2)
        throw ConfigError("smooth: need `step`/`raw_return` columns or two plain columns");

    std::vector<std::pair<long, double>> series;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        if (cells.size() <= std::max(step_col, value_col))
            throw ConfigError("smooth: line " + std::to_string(line_no) + ": too few columns");
        try {
            series.emplace_back(std::stol(cells[step_col]), std::stod(cells[value_col]));
        } catch (const std::exception&) {
            throw ConfigError("smooth: line " + std::to_string(line_no) + ": bad number");
        }
    }
    if (series.empty()) throw ConfigError("smooth: no data rows");
    const auto smoothed = ema_smooth(series, half_life);
    out << "step,raw_return,smoothed_return\n";
    for (size_t k = 0; k < series.size(); ++k)
        out << series[k].first << ',' << format_g9(series[k].second) << ','
            << format_g9(smoothed[k].second) << '\n';
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace sors
