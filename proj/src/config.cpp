#include "sors/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sors {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail_key(const std::string& origin, int line, const std::string& key,
                           const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": key `" + key + "`: " + msg);
}

long parse_long(const std::string& origin, int line, const std::string& key,
                const std::string& value) {
    long out = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        fail_key(origin, line, key, "expected an integer, got `" + value + "`");
    return out;
}

double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& value) {
    try {
        size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        fail_key(origin, line, key, "expected a number, got `" + value + "`");
    }
}

bool parse_bool(const std::string& origin, int line, const std::string& key,
                const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    fail_key(origin, line, key, "expected true or false, got `" + value + "`");
}

std::vector<int> parse_int_list(const std::string& origin, int line, const std::string& key,
                                const std::string& value) {
    std::vector<int> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ','))
        out.push_back(static_cast<int>(parse_long(origin, line, key, trim(item))));
    if (out.empty()) fail_key(origin, line, key, "expected a comma-separated integer list");
    return out;
}

std::vector<std::pair<int, int>> parse_walls(const std::string& origin, int line,
                                             const std::string& key,
                                             const std::string& value) {
    std::vector<std::pair<int, int>> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            fail_key(origin, line, key, "wall cells are `x:y` pairs separated by `;`");
        out.emplace_back(
            static_cast<int>(parse_long(origin, line, key, trim(item.substr(0, colon)))),
            static_cast<int>(parse_long(origin, line, key, trim(item.substr(colon + 1)))));
    }
    return out;
}

std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

double ExperimentConfig::resolved_policy_lr() const {
    if (policy_lr) return *policy_lr;
    return backend_kind == BackendKind::Tabular ? 0.1 : AdamConfig{}.lr;
}

SorsConfig ExperimentConfig::loop_config(int seed) const {
    SorsConfig cfg;
    cfg.mode = mode;
    cfg.total_steps = total_steps;
    cfg.initial_random_steps = initial_random_steps;
    cfg.reward_update_period = reward_update_period;
    cfg.reward_updates_per_period = reward_updates;
    cfg.policy_update_period = policy_update_period;
    cfg.policy_updates_per_period = policy_updates;
    cfg.pair_batch_size = pair_batch;
    cfg.buffer_capacity = buffer_capacity;
    cfg.eval_period = eval_period;
    cfg.eval_episodes = eval_episodes;
    cfg.gamma = gamma;
    cfg.eval_gamma = eval_gamma;
    cfg.holdout_fraction = holdout_fraction;
    cfg.tie_tol = tie_tol;
    cfg.discounted_reward_returns = reward.discounted_returns;
    cfg.seed = static_cast<uint64_t>(seed);
    return cfg;
}

std::unique_ptr<Env> ExperimentConfig::make_env() const {
    std::unique_ptr<Env> env;
    switch (env_kind) {
        case EnvKind::DelayedChain:
            env = std::make_unique<DelayedChain>(chain_n, episode_cap);
            break;
        case EnvKind::SparseGrid:
            env = std::make_unique<SparseGrid>(grid_width, grid_height, grid_walls,
                                               episode_cap);
            break;
        case EnvKind::PointMass:
            env = std::make_unique<PointMass>(goal_radius,
                                              episode_cap > 0 ? episode_cap : 200);
            break;
    }
    if (delay > 1) env = delay_rewards(std::move(env), delay);
    return env;
}

std::unique_ptr<Backend> ExperimentConfig::make_backend(const Env& env, uint64_t seed) const {
    if (backend_kind == BackendKind::Tabular) {
        if (!env.finite())
            throw ConfigError("policy.backend = tabular requires a finite environment; "
                              "use policy.backend = neural for " + env.name());
        TabularSoftQ::Config cfg;
        cfg.lr = resolved_policy_lr();
        cfg.alpha = alpha;
        cfg.gamma = gamma;
        cfg.batch = policy_batch;
        cfg.replay_capacity = replay_capacity;
        return std::make_unique<TabularSoftQ>(env.num_states(), env.num_actions(), cfg);
    }
    NeuralQConfig cfg;
    cfg.hidden = policy_hidden;
    cfg.adam.lr = resolved_policy_lr();
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    cfg.batch = policy_batch;
    cfg.target_update_period = target_period;
    cfg.replay_capacity = replay_capacity;
    return std::make_unique<NeuralSoftQ>(env.feature_dim(), env.num_actions(), cfg, seed);
}

RewardEnsemble ExperimentConfig::make_ensemble(const Env& env, uint64_t seed) const {
    return RewardEnsemble::create(env.feature_dim(), env.num_actions(), reward, seed);
}

std::string ExperimentConfig::env_label() const {
    std::string label;
    switch (env_kind) {
        case EnvKind::DelayedChain: label = "delayed_chain_n" + std::to_string(chain_n); break;
        case EnvKind::SparseGrid:
            label = "sparse_grid_" + std::to_string(grid_width) + "x" +
                    std::to_string(grid_height);
            break;
        case EnvKind::PointMass: label = "point_mass"; break;
    }
    return label + "_d" + std::to_string(delay);
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError("config constraint violated: " + msg);
    };
    require(chain_n >= 2, "env.n must be >= 2");
    require(grid_width >= 2 && grid_height >= 2, "env.width and env.height must be >= 2");
    require(goal_radius > 0.0, "env.goal_radius must be positive");
    require(episode_cap >= 0, "env.episode_cap must be >= 0 (0 = default)");
    require(delay >= 1, "env.delay must be >= 1");
    require(!seeds.empty(), "seeds must be nonempty");
    require(std::set<int>(seeds.begin(), seeds.end()).size() == seeds.size(),
            "seeds must be distinct");
    require(half_life > 0.0, "smoothing.half_life must be positive");
    require(reward.ensemble_size > 0, "reward.ensemble_size must be positive");
    require(reward.feature_dim > 0, "reward.feature_dim must be positive");
    require(!reward.hidden.empty() &&
                std::all_of(reward.hidden.begin(), reward.hidden.end(),
                            [](int h) { return h > 0; }),
            "reward.hidden must be positive sizes");
    require(reward.adam.lr >= 0.0, "reward.lr must be >= 0");
    require(pair_batch > 0, "reward.batch_pairs must be positive");
    require(policy_batch > 0, "policy.batch must be positive");
    require(!policy_hidden.empty() &&
                std::all_of(policy_hidden.begin(), policy_hidden.end(),
                            [](int h) { return h > 0; }),
            "policy.hidden must be positive sizes");
    require(target_period > 0, "policy.target_period must be positive");
    require(replay_capacity > 0, "policy.replay_capacity must be positive");
    require(alpha > 0.0, "policy.alpha must be positive");
    if (backend_kind == BackendKind::Tabular)
        require(resolved_policy_lr() > 0.0 && resolved_policy_lr() <= 1.0,
                "policy.lr must be in (0, 1] for the tabular backend");
    else
        require(resolved_policy_lr() >= 0.0, "policy.lr must be >= 0");
    for (auto [x, y] : grid_walls)
        require(x >= 0 && x < grid_width && y >= 0 && y < grid_height,
                "env.walls cells must lie inside the grid");
    loop_config(seeds.front()).validate();
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    bool saw_env = false, saw_mode = false;

    using Handler = std::function<void(const std::string&, int)>;
    const std::map<std::string, Handler> handlers = {
        {"env",
         [&](const std::string& v, int ln) {
             if (v == "delayed_chain") cfg.env_kind = EnvKind::DelayedChain;
             else if (v == "sparse_grid") cfg.env_kind = EnvKind::SparseGrid;
             else if (v == "point_mass") cfg.env_kind = EnvKind::PointMass;
             else fail_key(origin, ln, "env",
                           "expected delayed_chain, sparse_grid or point_mass");
             saw_env = true;
         }},
        {"mode",
         [&](const std::string& v, int ln) {
             if (v == "sparse") cfg.mode = RunMode::Sparse;
             else if (v == "sors") cfg.mode = RunMode::Sors;
             else if (v == "hand_dense") cfg.mode = RunMode::HandDense;
             else fail_key(origin, ln, "mode", "expected sparse, sors or hand_dense");
             saw_mode = true;
         }},
        {"env.n", [&](const std::string& v, int ln) {
             cfg.chain_n = static_cast<int>(parse_long(origin, ln, "env.n", v)); }},
        {"env.width", [&](const std::string& v, int ln) {
             cfg.grid_width = static_cast<int>(parse_long(origin, ln, "env.width", v)); }},
        {"env.height", [&](const std::string& v, int ln) {
             cfg.grid_height = static_cast<int>(parse_long(origin, ln, "env.height", v)); }},
        {"env.walls", [&](const std::string& v, int ln) {
             cfg.grid_walls = parse_walls(origin, ln, "env.walls", v); }},
        {"env.goal_radius", [&](const std::string& v, int ln) {
             cfg.goal_radius = parse_double(origin, ln, "env.goal_radius", v); }},
        {"env.episode_cap", [&](const std::string& v, int ln) {
             cfg.episode_cap = static_cast<int>(parse_long(origin, ln, "env.episode_cap", v)); }},
        {"env.delay", [&](const std::string& v, int ln) {
             cfg.delay = static_cast<int>(parse_long(origin, ln, "env.delay", v)); }},
        {"seeds", [&](const std::string& v, int ln) {
             cfg.seeds = parse_int_list(origin, ln, "seeds", v); }},
        {"out", [&](const std::string& v, int) { cfg.out_dir = v; }},
        {"total_steps", [&](const std::string& v, int ln) {
             cfg.total_steps = parse_long(origin, ln, "total_steps", v); }},
        {"initial_random_steps", [&](const std::string& v, int ln) {
             cfg.initial_random_steps = parse_long(origin, ln, "initial_random_steps", v); }},
        {"eval_period", [&](const std::string& v, int ln) {
             cfg.eval_period = parse_long(origin, ln, "eval_period", v); }},
        {"eval_episodes", [&](const std::string& v, int ln) {
             cfg.eval_episodes = static_cast<int>(parse_long(origin, ln, "eval_episodes", v)); }},
        {"gamma", [&](const std::string& v, int ln) {
             cfg.gamma = parse_double(origin, ln, "gamma", v); }},
        {"eval_gamma", [&](const std::string& v, int ln) {
             cfg.eval_gamma = parse_double(origin, ln, "eval_gamma", v); }},
        {"buffer_capacity", [&](const std::string& v, int ln) {
             cfg.buffer_capacity = static_cast<size_t>(parse_long(origin, ln, "buffer_capacity", v)); }},
        {"tie_tol", [&](const std::string& v, int ln) {
             cfg.tie_tol = parse_double(origin, ln, "tie_tol", v); }},
        {"holdout_fraction", [&](const std::string& v, int ln) {
             cfg.holdout_fraction = parse_double(origin, ln, "holdout_fraction", v); }},
        {"parallel_seeds", [&](const std::string& v, int ln) {
             cfg.parallel_seeds = parse_bool(origin, ln, "parallel_seeds", v); }},
        {"smoothing.half_life", [&](const std::string& v, int ln) {
             cfg.half_life = parse_double(origin, ln, "smoothing.half_life", v); }},
        {"reward.update_period", [&](const std::string& v, int ln) {
             cfg.reward_update_period = static_cast<int>(parse_long(origin, ln, "reward.update_period", v)); }},
        {"reward.updates_per_period", [&](const std::string& v, int ln) {
             cfg.reward_updates = static_cast<int>(parse_long(origin, ln, "reward.updates_per_period", v)); }},
        {"reward.batch_pairs", [&](const std::string& v, int ln) {
             cfg.pair_batch = static_cast<int>(parse_long(origin, ln, "reward.batch_pairs", v)); }},
        {"reward.ensemble_size", [&](const std::string& v, int ln) {
             cfg.reward.ensemble_size = static_cast<int>(parse_long(origin, ln, "reward.ensemble_size", v)); }},
        {"reward.feature_dim", [&](const std::string& v, int ln) {
             cfg.reward.feature_dim = static_cast<int>(parse_long(origin, ln, "reward.feature_dim", v)); }},
        {"reward.hidden", [&](const std::string& v, int ln) {
             cfg.reward.hidden = parse_int_list(origin, ln, "reward.hidden", v); }},
        {"reward.lr", [&](const std::string& v, int ln) {
             cfg.reward.adam.lr = parse_double(origin, ln, "reward.lr", v); }},
        {"reward.discounted_returns", [&](const std::string& v, int ln) {
             cfg.reward.discounted_returns = parse_bool(origin, ln, "reward.discounted_returns", v); }},
        {"policy.backend",
         [&](const std::string& v, int ln) {
             if (v == "tabular") cfg.backend_kind = BackendKind::Tabular;
             else if (v == "neural") cfg.backend_kind = BackendKind::Neural;
             else fail_key(origin, ln, "policy.backend", "expected tabular or neural");
         }},
        {"policy.update_period", [&](const std::string& v, int ln) {
             cfg.policy_update_period = static_cast<int>(parse_long(origin, ln, "policy.update_period", v)); }},
        {"policy.updates_per_period", [&](const std::string& v, int ln) {
             cfg.policy_updates = static_cast<int>(parse_long(origin, ln, "policy.updates_per_period", v)); }},
        {"policy.batch", [&](const std::string& v, int ln) {
             cfg.policy_batch = static_cast<int>(parse_long(origin, ln, "policy.batch", v)); }},
        {"policy.lr", [&](const std::string& v, int ln) {
             cfg.policy_lr = parse_double(origin, ln, "policy.lr", v); }},
        {"policy.alpha", [&](const std::string& v, int ln) {
             cfg.alpha = parse_double(origin, ln, "policy.alpha", v); }},
        {"policy.hidden", [&](const std::string& v, int ln) {
             cfg.policy_hidden = parse_int_list(origin, ln, "policy.hidden", v); }},
        {"policy.target_period", [&](const std::string& v, int ln) {
             cfg.target_period = static_cast<int>(parse_long(origin, ln, "policy.target_period", v)); }},
        {"policy.replay_capacity", [&](const std::string& v, int ln) {
             cfg.replay_capacity = static_cast<size_t>(parse_long(origin, ln, "policy.replay_capacity", v)); }},
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected `key = value`, got `" + line + "`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        const auto it = handlers.find(key);
        if (it == handlers.end())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key `" +
                              key + "`");
        if (!seen.insert(key).second)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key `" +
                              key + "`");
        it->second(value, line_no);
    }
    if (!saw_env) throw ConfigError(origin + ": missing required key `env`");
    if (!saw_mode) throw ConfigError(origin + ": missing required key `mode`");
    cfg.validate();
    return cfg;
}

std::string config_echo(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    switch (cfg.env_kind) {
        case EnvKind::DelayedChain: kv["env"] = "delayed_chain"; break;
        case EnvKind::SparseGrid: kv["env"] = "sparse_grid"; break;
        case EnvKind::PointMass: kv["env"] = "point_mass"; break;
    }
    kv["mode"] = to_string(cfg.mode);
    kv["env.n"] = std::to_string(cfg.chain_n);
    kv["env.width"] = std::to_string(cfg.grid_width);
    kv["env.height"] = std::to_string(cfg.grid_height);
    {
        std::string walls;
        for (size_t i = 0; i < cfg.grid_walls.size(); ++i) {
            if (i) walls += ';';
            walls += std::to_string(cfg.grid_walls[i].first) + ":" +
                     std::to_string(cfg.grid_walls[i].second);
        }
        kv["env.walls"] = walls;
    }
    kv["env.goal_radius"] = g9(cfg.goal_radius);
    kv["env.episode_cap"] = std::to_string(cfg.episode_cap);
    kv["env.delay"] = std::to_string(cfg.delay);
    kv["seeds"] = join_ints(cfg.seeds);
    kv["out"] = cfg.out_dir;
    kv["total_steps"] = std::to_string(cfg.total_steps);
    kv["initial_random_steps"] = std::to_string(cfg.initial_random_steps);
    kv["eval_period"] = std::to_string(cfg.eval_period);
    kv["eval_episodes"] = std::to_string(cfg.eval_episodes);
    kv["gamma"] = g9(cfg.gamma);
    kv["eval_gamma"] = g9(cfg.eval_gamma);
    kv["buffer_capacity"] = std::to_string(cfg.buffer_capacity);
    kv["tie_tol"] = g9(cfg.tie_tol);
    kv["holdout_fraction"] = g9(cfg.holdout_fraction);
    kv["parallel_seeds"] = cfg.parallel_seeds ? "true" : "false";
    kv["smoothing.half_life"] = g9(cfg.half_life);
    kv["reward.update_period"] = std::to_string(cfg.reward_update_period);
    kv["reward.updates_per_period"] = std::to_string(cfg.reward_updates);
    kv["reward.batch_pairs"] = std::to_string(cfg.pair_batch);
    kv["reward.ensemble_size"] = std::to_string(cfg.reward.ensemble_size);
    kv["reward.feature_dim"] = std::to_string(cfg.reward.feature_dim);
    kv["reward.hidden"] = join_ints(cfg.reward.hidden);
    kv["reward.lr"] = g9(cfg.reward.adam.lr);
    kv["reward.discounted_returns"] = cfg.reward.discounted_returns ? "true" : "false";
    kv["policy.backend"] = cfg.backend_kind == BackendKind::Tabular ? "tabular" : "neural";
    kv["policy.update_period"] = std::to_string(cfg.policy_update_period);
    kv["policy.updates_per_period"] = std::to_string(cfg.policy_updates);
    kv["policy.batch"] = std::to_string(cfg.policy_batch);
    kv["policy.lr"] = g9(cfg.resolved_policy_lr());
    kv["policy.alpha"] = g9(cfg.alpha);
    kv["policy.hidden"] = join_ints(cfg.policy_hidden);
    kv["policy.target_period"] = std::to_string(cfg.target_period);
    kv["policy.replay_capacity"] = std::to_string(cfg.replay_capacity);

    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

} // namespace sors
