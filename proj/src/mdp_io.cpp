#include "sors/mdp_io.hpp"

#include <fstream>
#include <sstream>

namespace sors {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

} // namespace

RewardFn MdpFile::reward1() const {
    const int na = spec.num_actions;
    return [table = r1, na](int s, int a) { return table[static_cast<size_t>(s) * na + a]; };
}

RewardFn MdpFile::reward2() const {
    const int na = spec.num_actions;
    return [table = r2, na](int s, int a) { return table[static_cast<size_t>(s) * na + a]; };
}

MdpFile load_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open MDP spec file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_mdp_text(buffer.str(), path);
}

MdpFile parse_mdp_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    int num_states = -1, num_actions = -1;
    double gamma = 1.0;
    // (s, a) -> successor; -1 = unset
    std::vector<int> successor;
    std::vector<bool> terminal;
    MdpFile file;

    auto require_header = [&](int at_line) {
        if (num_states < 0) fail(origin, at_line, "directive before the `states ...` header");
    };
    auto check_state = [&](int s, int at_line) {
        if (s < 0 || s >= num_states)
            fail(origin, at_line, "state " + std::to_string(s) + " out of range");
    };
    auto check_action = [&](int a, int at_line) {
        if (a < 0 || a >= num_actions)
            fail(origin, at_line, "action " + std::to_string(a) + " out of range");
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string directive;
        if (!(fields >> directive)) continue;

        if (directive == "states") {
            if (num_states >= 0) fail(origin, line_no, "duplicate header");
            std::string actions_kw, gamma_kw;
            if (!(fields >> num_states >> actions_kw >> num_actions >> gamma_kw >> gamma) ||
                actions_kw != "actions" || gamma_kw != "gamma")
                fail(origin, line_no, "header must be `states N actions M gamma G`");
            if (num_states <= 0 || num_actions <= 0)
                fail(origin, line_no, "state and action counts must be positive");
            if (!(gamma > 0.0 && gamma <= 1.0))
                fail(origin, line_no, "gamma must be in (0, 1]");
            successor.assign(static_cast<size_t>(num_states) * num_actions, -1);
            terminal.assign(static_cast<size_t>(num_states), false);
            file.r1.assign(static_cast<size_t>(num_states) * num_actions, 0.0);
            file.r2.assign(static_cast<size_t>(num_states) * num_actions, 0.0);
        } else if (directive == "T") {
            require_header(line_no);
            int s, a, next;
            if (!(fields >> s >> a >> next))
                fail(origin, line_no, "transition must be `T s a s'`");
            check_state(s, line_no);
            check_action(a, line_no);
            check_state(next, line_no);
            int& slot = successor[static_cast<size_t>(s) * num_actions + a];
            if (slot != -1 && slot != next)
                throw UnsupportedError(origin + ":" + std::to_string(line_no) +
                                       ": nondeterministic dynamics for (s=" +
                                       std::to_string(s) + ", a=" + std::to_string(a) + ")");
            slot = next;
        } else if (directive == "terminal") {
            require_header(line_no);
            int s;
            if (!(fields >> s)) fail(origin, line_no, "terminal must be `terminal s`");
            check_state(s, line_no);
            terminal[static_cast<size_t>(s)] = true;
        } else if (directive == "R1" || directive == "R2") {
            require_header(line_no);
            int s, a;
            double v;
            if (!(fields >> s >> a >> v))
                fail(origin, line_no, "reward must be `" + directive + " s a v`");
            check_state(s, line_no);
            check_action(a, line_no);
            auto& table = directive == "R1" ? file.r1 : file.r2;
            table[static_cast<size_t>(s) * num_actions + a] = v;
            (directive == "R1" ? file.has_r1 : file.has_r2) = true;
        } else {
            fail(origin, line_no, "unknown directive `" + directive + "`");
        }
        std::string extra;
        if (fields >> extra) fail(origin, line_no, "trailing content `" + extra + "`");
    }
    if (num_states < 0) fail(origin, line_no, "missing `states ...` header");

    file.spec = MdpSpec::make(num_states, num_actions, gamma);
    for (int s = 0; s < num_states; ++s) {
        if (terminal[static_cast<size_t>(s)]) file.spec.mark_terminal(s);
        for (int a = 0; a < num_actions; ++a) {
            int next = successor[static_cast<size_t>(s) * num_actions + a];
            if (next == -1) {
                if (!terminal[static_cast<size_t>(s)])
                    throw ConfigError(origin + ": no transition for non-terminal (s=" +
                                      std::to_string(s) + ", a=" + std::to_string(a) + ")");
                next = s; // terminals absorb
            }
            file.spec.set_deterministic_transition(s, a, next);
        }
    }
    file.spec.finalize();
    return file;
}

} // namespace sors
