#include <doctest.h>

#include <cmath>

#include "sors/mdp.hpp"
#include "sors/mdp_io.hpp"
#include "sors/rng.hpp"

using namespace sors;

namespace {

Trajectory traj_from_rewards(const std::vector<double>& rewards) {
    Trajectory t;
    for (size_t i = 0; i < rewards.size(); ++i)
        t.steps.push_back({{}, static_cast<int>(i), 0, rewards[i]});
    return t;
}

} // namespace

TEST_CASE("sparse_return examples") {
    CHECK(sparse_return(traj_from_rewards({1, 2, 3}), 1.0) == doctest::Approx(6.0));
    CHECK(sparse_return(traj_from_rewards({1, 2}), 0.5) == doctest::Approx(2.0));
    CHECK(sparse_return(traj_from_rewards({5}), 0.3) == doctest::Approx(5.0));
    CHECK(sparse_return(traj_from_rewards({0, 0, 3}), 1.0) == doctest::Approx(3.0));
    CHECK(sparse_return(traj_from_rewards({0, 0, 0}), 0.9) == doctest::Approx(0.0));
    CHECK(sparse_return(traj_from_rewards({0, 0, 3}), 0.9) == doctest::Approx(2.43));
}

TEST_CASE("discounted_return uses the trajectory's own time origin") {
    Trajectory t;
    t.steps.push_back({{}, 2, 1, 0.0});
    t.steps.push_back({{}, 1, 0, 0.0});
    const RewardFn r = [](int s, int a) { return s + 10.0 * a; };
    CHECK(discounted_return(t, r, 0.5) == doctest::Approx(12.0 + 0.5 * 1.0));
}

TEST_CASE("empty trajectory is a contract violation") {
    Trajectory t;
    CHECK_THROWS_AS(sparse_return(t, 1.0), ContractViolation);
    CHECK_THROWS_AS(discounted_return(t, [](int, int) { return 0.0; }, 1.0),
                    ContractViolation);
}

TEST_CASE("discounted_return is linear in the reward") {
    Rng rng(7);
    const RewardFn r1 = [](int s, int a) { return 0.3 * s - 0.7 * a; };
    const RewardFn r2 = [](int s, int a) { return std::sin(s + 2.0 * a); };
    for (int trial = 0; trial < 50; ++trial) {
        Trajectory t;
        const int len = 1 + rng.uniform_int(8);
        for (int k = 0; k < len; ++k)
            t.steps.push_back({{}, rng.uniform_int(5), rng.uniform_int(3), 0.0});
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        const double gamma = rng.uniform(0.1, 1.0);
        const RewardFn mix = [&](int s, int ac) { return a * r1(s, ac) + b * r2(s, ac); };
        const double lhs = discounted_return(t, mix, gamma);
        const double rhs =
            a * discounted_return(t, r1, gamma) + b * discounted_return(t, r2, gamma);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("constant reward at gamma=1 gives c * length") {
    const RewardFn c = [](int, int) { return 2.5; };
    Trajectory t = traj_from_rewards({0, 0, 0, 0});
    CHECK(discounted_return(t, c, 1.0) == 4 * 2.5);
}

TEST_CASE("order_compare examples and inverse symmetry") {
    const RewardFn r = [](int s, int) { return static_cast<double>(s); };
    Trajectory low, high;
    low.steps.push_back({{}, 1, 0, 0.0});
    high.steps.push_back({{}, 2, 0, 0.0});
    CHECK(order_compare(low, high, r, 1.0, 0.0) == Ordering::Less);
    CHECK(order_compare(high, low, r, 1.0, 0.0) == Ordering::Greater);
    CHECK(order_compare(low, low, r, 1.0, 0.0) == Ordering::Equal);

    SUBCASE("near ties collapse to Equal under tolerance") {
        const RewardFn tiny = [](int s, int) { return s == 2 ? 2.0 + 1e-9 : 2.0; };
        CHECK(order_compare(low, high, tiny, 1.0, 1e-6) == Ordering::Equal);
    }

    SUBCASE("mutual inverses on random pairs") {
        Rng rng(3);
        for (int trial = 0; trial < 100; ++trial) {
            Trajectory a, b;
            for (int k = 0, n = 1 + rng.uniform_int(5); k < n; ++k)
                a.steps.push_back({{}, rng.uniform_int(4), rng.uniform_int(2), 0.0});
            for (int k = 0, n = 1 + rng.uniform_int(5); k < n; ++k)
                b.steps.push_back({{}, rng.uniform_int(4), rng.uniform_int(2), 0.0});
            const Ordering ab = order_compare(a, b, r, 0.9, 1e-9);
            const Ordering ba = order_compare(b, a, r, 0.9, 1e-9);
            if (ab == Ordering::Less) CHECK(ba == Ordering::Greater);
            if (ab == Ordering::Greater) CHECK(ba == Ordering::Less);
            if (ab == Ordering::Equal) CHECK(ba == Ordering::Equal);
        }
    }
}

TEST_CASE("trajectory cache matches recomputation") {
    Trajectory t = traj_from_rewards({0, 1, 0, 2});
    t.finalize(0.9);
    CHECK(t.cached);
    CHECK(t.cached_sparse_return == doctest::Approx(sparse_return(t, 0.9)).epsilon(1e-12));
}

TEST_CASE("MdpSpec invariants") {
    MdpSpec m = MdpSpec::make(3, 2, 0.9);
    m.set_deterministic_transition(0, 0, 0);
    m.set_deterministic_transition(0, 1, 1);
    m.set_deterministic_transition(1, 0, 0);
    m.set_deterministic_transition(1, 1, 2);
    m.set_deterministic_transition(2, 0, 2);
    m.set_deterministic_transition(2, 1, 2);
    m.mark_terminal(2);
    m.finalize();
    CHECK(m.deterministic);
    CHECK(m.deterministic_next(0, 1) == 1);
    CHECK(m.is_terminal(2));

    SUBCASE("bad distribution sum rejected") {
        m.set_distribution(1, 1, {{0, 0.5}, {2, 0.4}});
        CHECK_THROWS_AS(m.finalize(), ContractViolation);
    }
    SUBCASE("stochastic distribution clears the deterministic flag") {
        m.set_distribution(1, 1, {{0, 0.5}, {2, 0.5}});
        m.finalize();
        CHECK_FALSE(m.deterministic);
    }
    SUBCASE("out-of-range successor rejected") {
        m.set_deterministic_transition(1, 1, 7);
        CHECK_THROWS_AS(m.finalize(), ContractViolation);
    }
    SUBCASE("inconsistent deterministic flag rejected") {
        m.deterministic = false;
        CHECK_THROWS_AS(m.validate(), ContractViolation);
    }
}

TEST_CASE("mdp file format round trip") {
    const std::string text =
        "# 3-state chain\n"
        "states 3 actions 2 gamma 0.9\n"
        "T 0 0 0\n"
        "T 0 1 1\n"
        "T 1 0 0\n"
        "T 1 1 2\n"
        "terminal 2\n"
        "R1 1 1 1.0\n"
        "R2 1 1 2.0\n";
    const MdpFile file = parse_mdp_text(text, "inline");
    CHECK(file.spec.num_states == 3);
    CHECK(file.spec.num_actions == 2);
    CHECK(file.spec.gamma == doctest::Approx(0.9));
    CHECK(file.spec.deterministic);
    CHECK(file.spec.is_terminal(2));
    CHECK(file.has_r1);
    CHECK(file.has_r2);
    CHECK(file.reward1()(1, 1) == 1.0);
    CHECK(file.reward2()(1, 1) == 2.0);
    CHECK(file.reward1()(0, 0) == 0.0);
    // terminal absorbs even without T lines
    CHECK(file.spec.deterministic_next(2, 0) == 2);

    SUBCASE("unknown directive") {
        CHECK_THROWS_AS(parse_mdp_text("states 2 actions 1 gamma 1\nQ 0 0 0\n", "x"),
                        ConfigError);
    }
    SUBCASE("nondeterministic transitions unsupported") {
        CHECK_THROWS_AS(
            parse_mdp_text("states 2 actions 1 gamma 1\nT 0 0 0\nT 0 0 1\nterminal 1\n", "x"),
            UnsupportedError);
    }
    SUBCASE("missing transition for non-terminal state") {
        CHECK_THROWS_AS(parse_mdp_text("states 2 actions 1 gamma 1\nT 0 0 1\n", "x"),
                        ConfigError);
    }
    SUBCASE("error messages carry line numbers") {
        try {
            parse_mdp_text("states 2 actions 1 gamma 1\nT 0 9 1\n", "spec.txt");
            CHECK(false);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("spec.txt:2") != std::string::npos);
        }
    }
}
