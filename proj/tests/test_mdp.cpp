#include "fixtures.hpp"

#include "mmdp/domains.hpp"
#include "mmdp/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace mmdp;
using fixtures::chain3;
using fixtures::chain4;

namespace {

std::vector<int> all_states(const Mdp& m) {
    std::vector<int> s(m.n_states());
    std::iota(s.begin(), s.end(), 0);
    return s;
}

// Dense (s, a, s') copy used as a naive oracle.
struct Dense3 {
    int n, na;
    std::vector<double> v;
    double& at(int s, int a, int t) { return v[(s * na + a) * n + t]; }
};

Dense3 dense(const Mdp& m, Field f) {
    Dense3 d{m.n_states(), m.n_actions(), std::vector<double>(m.n_states() * m.n_actions() * m.n_states(), 0.0)};
    for (const auto& t : m.transitions()) d.at(t.s, t.a, t.next) = f == Field::p ? t.p : f == Field::r ? t.r : t.g;
    return d;
}

} // namespace

TEST_CASE("mdp construction enforces invariants") {
    CHECK_NOTHROW(chain3());
    std::vector<Transition> bad = {{0, 0, 0, 0.5, 0, 0.9}};
    CHECK_THROWS_AS(Mdp(1, 1, bad, {{0}}, {false}), InvalidInput);
    std::vector<Transition> g1 = {{0, 0, 0, 1.0, 0, 1.0}};
    CHECK_THROWS_AS(Mdp(1, 1, g1, {{0}}, {false}), InvalidInput);
    CHECK_NOTHROW(Mdp(1, 1, g1, {{0}}, {false}, DiscountCheck::allow_one));
    // terminal must be absorbing
    std::vector<Transition> leak = {{0, 0, 1, 1.0, 0, 0.9}, {1, 0, 1, 1.0, 0, 0.9}};
    CHECK_THROWS_AS(Mdp(2, 1, leak, {{0}, {0}}, {true, false}), InvalidInput);
    // infeasible pair with entries
    std::vector<Transition> inf = {{0, 1, 0, 1.0, 0, 0.9}, {0, 0, 0, 1.0, 0, 0.9}};
    CHECK_THROWS_AS(Mdp(1, 2, inf, {{0}}, {false}), InvalidInput);
}

TEST_CASE("policy_average") {
    SUBCASE("point mass on a one-action mdp gives the action slice") {
        Mdp m = chain3();
        auto avg = policy_average(m, StochasticPolicy::uniform(m));
        CHECK(avg.p(0, 1) == doctest::Approx(1.0));
        CHECK(avg.p(1, 0) == doctest::Approx(0.5));
        CHECK(avg.p(1, 2) == doctest::Approx(0.5));
    }
    SUBCASE("uniform over two deterministic actions splits mass") {
        std::vector<Transition> t = {{0, 0, 1, 1, 0, .9}, {0, 1, 2, 1, 0, .9}, {1, 0, 1, 1, 0, .9}, {2, 0, 2, 1, 0, .9}};
        Mdp m(3, 2, t, {{0, 1}, {0}, {0}}, {false, false, false});
        auto avg = policy_average(m, StochasticPolicy::uniform(m));
        CHECK(avg.p(0, 1) == doctest::Approx(0.5));
        CHECK(avg.p(0, 2) == doctest::Approx(0.5));
    }
    SUBCASE("random mdp matches a naive triple loop") {
        std::mt19937_64 rng(5);
        Mdp m = fixtures::random_mdp(5, 3, rng);
        auto pi = fixtures::random_policy(m, rng);
        auto avg = policy_average(m, pi);
        auto P = dense(m, Field::p), R = dense(m, Field::r);
        for (int s = 0; s < 5; ++s) {
            CHECK(avg.p.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
            for (int t = 0; t < 5; ++t) {
                double p = 0, r = 0;
                for (int a = 0; a < 3; ++a) {
                    p += P.at(s, a, t) * pi(s, a);
                    r += P.at(s, a, t) * R.at(s, a, t) * pi(s, a);
                }
                CHECK(avg.p(s, t) == doctest::Approx(p).epsilon(1e-14));
                CHECK(avg.r(s, t) == doctest::Approx(r).epsilon(1e-14));
            }
        }
    }
    SUBCASE("shape mismatch") {
        Mdp m = chain3();
        CHECK_THROWS_AS(policy_average(m, StochasticPolicy(Mat::Ones(2, 1))), InvalidInput);
    }
}

TEST_CASE("hadamard_average") {
    std::mt19937_64 rng(11);
    Mdp m = fixtures::random_mdp(6, 3, rng);
    auto pi = fixtures::random_policy(m, rng);
    auto P = field_tensor(m, Field::p), R = field_tensor(m, Field::r), G = field_tensor(m, Field::g);
    SUBCASE("unit factor gives policy_average") {
        SparseTensor one = P;
        for (auto& e : one.entries) e.value = 1.0;
        CHECK((hadamard_average(P, one, pi) - policy_average(m, pi).p).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("symmetric") {
        CHECK((hadamard_average(R, G, pi) - hadamard_average(G, R, pi)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("uniform discount factors out on CHAIN3") {
        Mdp c = chain3(0.9);
        auto pu = StochasticPolicy::uniform(c);
        Mat gp = hadamard_average(field_tensor(c, Field::g), field_tensor(c, Field::p), pu);
        CHECK((gp - 0.9 * policy_average(c, pu).p).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((Mat(discounted_chain(c, pu)) - gp).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("mismatched index spaces") {
        SparseTensor small = P;
        small.n_states = 2;
        CHECK_THROWS_AS(hadamard_average(P, small, pi), InvalidInput);
    }
}

TEST_CASE("value_determination") {
    SUBCASE("one step then absorption") {
        std::vector<Transition> t = {{0, 0, 1, 1.0, 1.0, 0.9}, {1, 0, 1, 1.0, 0.0, 0.9}};
        Mdp m(2, 1, t, {{0}, {0}}, {false, true});
        auto v = value_determination(m, StochasticPolicy::uniform(m));
        CHECK(v[0] == doctest::Approx(1.0));
        CHECK(v[1] == doctest::Approx(0.0));
    }
    SUBCASE("CHAIN4 against a truncated sum") {
        Mdp m = chain4();
        auto v = value_determination(m, StochasticPolicy::uniform(m));
        // truncated-horizon oracle: propagate state distribution and discount for 10^4 steps
        Vec dist = Vec::Zero(3);
        dist[0] = 1.0;
        double total = 0.0, disc = 1.0;
        auto avg = policy_average(m, StochasticPolicy::uniform(m));
        for (int k = 0; k < 10000; ++k) {
            total += disc * (dist.transpose() * avg.r.rowwise().sum())(0);
            dist = (dist.transpose() * avg.p).transpose();
            disc *= 0.9;
        }
        CHECK(v[0] == doctest::Approx(total).epsilon(1e-12));
        CHECK(v[0] == doctest::Approx(1.0 + 0.9 / 0.55).epsilon(1e-12));
        CHECK(v[0] == doctest::Approx(2.63636).epsilon(1e-5));
    }
    SUBCASE("residual is a fixed point of the backup") {
        std::mt19937_64 rng(3);
        Mdp m = fixtures::random_mdp(30, 3, rng);
        auto pi = fixtures::random_policy(m, rng);
        auto v = value_determination(m, pi);
        auto all = all_states(m);
        CHECK((bellman_backup(m, pi, v, all) - v).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("singular system") {
        std::vector<Transition> t = {{0, 0, 0, 1.0, 1.0, 1.0}};
        Mdp m(1, 1, t, {{0}}, {false}, DiscountCheck::allow_one);
        CHECK_THROWS_AS(value_determination(m, StochasticPolicy::uniform(m)), NumericalFailure);
    }
}

TEST_CASE("bellman_backup") {
    Mdp m = chain4();
    auto pi = StochasticPolicy::uniform(m);
    auto v = value_determination(m, pi);
    auto all = all_states(m);
    CHECK((bellman_backup(m, pi, v, all) - v).cwiseAbs().maxCoeff() < 1e-10);
    Vec x = Vec::Constant(3, 7.0);
    CHECK(bellman_backup(m, pi, x, {}) == x);
    Vec w = Vec::Zero(3);
    int sweeps = 0;
    while ((w - v).cwiseAbs().maxCoeff() > 1e-8 && sweeps < 400) {
        w = bellman_backup(m, pi, w, all);
        ++sweeps;
    }
    CHECK(sweeps <= 400);
    CHECK((w - v).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("greedy_policy") {
    SUBCASE("forced choice") {
        Mdp m = chain3();
        auto g = greedy_policy(m, Vec::Zero(3), all_states(m));
        CHECK(g(1, 0) == 1.0);
    }
    SUBCASE("dominant action") {
        std::vector<Transition> t = {{0, 0, 1, 1, 0, .9}, {0, 1, 2, 1, 0, .9}, {1, 0, 1, 1, 0, .9}, {2, 0, 2, 1, 0, .9}};
        Mdp m(3, 2, t, {{0, 1}, {0}, {0}}, {false, false, false});
        Vec v(3);
        v << 0, 0, 10;
        CHECK(greedy_policy(m, v, std::vector<int>{0}).argmax(0) == 1);
        v << 0, 10, 10;
        CHECK(greedy_action(m, v, 0) == 0); // tie -> lowest id
    }
    SUBCASE("exhaustive argmax oracle") {
        std::mt19937_64 rng(17);
        Mdp m = fixtures::random_mdp(6, 4, rng);
        auto v = value_determination(m, fixtures::random_policy(m, rng));
        auto g = greedy_policy(m, v, all_states(m));
        for (int s = 0; s < 6; ++s) {
            int best = 0;
            double bq = -1e300;
            for (int a = 0; a < 4; ++a) {
                double q = 0;
                for (const auto& t : m.outcomes(s, a)) q += t.p * (t.r + t.g * v[t.next]);
                if (q > bq + 1e-10 * std::abs(bq)) {
                    bq = q;
                    best = a;
                }
            }
            CHECK(g.argmax(s) == best);
            CHECK(g.is_deterministic(s));
        }
    }
    SUBCASE("constant shift of V keeps the argmax under uniform discount") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 20; ++trial) {
            Mdp base = fixtures::random_mdp(8, 3, rng);
            std::vector<Transition> t = base.transitions();
            for (auto& x : t) x.g = 0.9;
            Mdp m(8, 3, t, base.feasible(), base.terminal());
            Vec v = Vec::Random(8) * 5;
            Vec shifted = v.array() + 3.7;
            auto all = all_states(m);
            CHECK(greedy_policy(m, v, all).argmax_all() == greedy_policy(m, shifted, all).argmax_all());
        }
    }
    SUBCASE("state without actions") {
        // an Mdp cannot hold such a state, so the error surfaces at construction
        std::vector<Transition> t = {{0, 0, 0, 1, 0, .9}};
        CHECK_THROWS_AS(Mdp(2, 1, t, {{0}, {}}, {false, false}), InvalidInput);
    }
}

TEST_CASE("blend and regularize") {
    std::vector<Transition> t;
    for (int a = 0; a < 4; ++a) t.push_back({0, a, 0, 1.0, 0.0, 0.9});
    Mdp m(1, 4, t, {{0, 1, 2, 3}}, {false});
    auto a0 = StochasticPolicy::deterministic(m, {0});
    auto a1 = StochasticPolicy::deterministic(m, {1});
    CHECK(blend_policy(a0, a1, 1.0) == a0);
    CHECK(blend_policy(a0, a0, 0.3) == a0);
    auto half = blend_policy(a0, a1, 0.5);
    CHECK(half(0, 0) == doctest::Approx(0.5));
    CHECK(half(0, 1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(blend_policy(a0, a1, 0.0), InvalidInput);
    CHECK_THROWS_AS(blend_policy(a0, a1, 1.5), InvalidInput);

    auto r = regularize_policy(m, a0, 0.01);
    CHECK(r(0, 0) == doctest::Approx(0.9925));
    for (int a = 1; a < 4; ++a) CHECK(r(0, a) == doctest::Approx(0.0025));
    auto u = StochasticPolicy::uniform(m);
    CHECK((regularize_policy(m, u, 0.2).probs() - u.probs()).cwiseAbs().maxCoeff() < 1e-15);

    std::mt19937_64 rng(2);
    Mdp big = fixtures::random_mdp(20, 4, rng);
    for (int trial = 0; trial < 10; ++trial) {
        auto pi = fixtures::random_policy(big, rng);
        auto reg = regularize_policy(big, pi, 0.05);
        for (int s = 0; s < 20; ++s) {
            CHECK(reg.probs().row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
            for (int a : big.feasible(s)) CHECK(reg(s, a) >= 0.05 / 4 - 1e-15);
        }
    }
}

TEST_CASE("restrict") {
    SUBCASE("full set is the identity") {
        std::mt19937_64 rng(4);
        Mdp m = fixtures::random_mdp(7, 2, rng);
        Mdp r = restrict(m, all_states(m));
        REQUIRE(r.transitions().size() == m.transitions().size());
        CHECK(r.feasible() == m.feasible());
        for (std::size_t i = 0; i < r.transitions().size(); ++i) {
            const auto &x = r.transitions()[i], &y = m.transitions()[i];
            CHECK((x.s == y.s && x.a == y.a && x.next == y.next && x.r == y.r && x.g == y.g));
            CHECK(std::abs(x.p - y.p) < 1e-15);
        }
    }
    SUBCASE("mass folds onto the diagonal") {
        Mdp m = chain3();
        Mdp r = restrict(m, std::vector<int>{0, 1});
        auto o = r.outcomes(1, 0);
        double self = 0;
        for (const auto& t : o)
            if (t.next == 1) self = t.p;
        CHECK(self == doctest::Approx(0.5));
    }
    SUBCASE("rows stay stochastic; restriction and averaging do not commute") {
        std::mt19937_64 rng(8);
        bool found = false;
        for (int trial = 0; trial < 20; ++trial) {
            Mdp m = fixtures::random_mdp(10, 3, rng);
            auto pi = fixtures::random_policy(m, rng);
            std::vector<int> c = {0, 2, 3, 5, 7};
            Mdp r = restrict(m, c);
            auto pr = restrict_policy(pi, c);
            auto avg_r = policy_average(r, pr);
            for (int k = 0; k < 5; ++k) CHECK(avg_r.p.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
            // average first, then restrict the reward-weighted chain by the same rule
            auto avg = policy_average(m, pi);
            for (int i = 0; i < 5; ++i) {
                double folded_r = avg.r(c[i], c[i]);
                for (int j = 0; j < 10; ++j)
                    if (std::find(c.begin(), c.end(), j) == c.end()) folded_r += avg.r(c[i], j);
                if (std::abs(folded_r - avg_r.r(i, i)) > 1e-9) found = true;
            }
        }
        CHECK(found);
    }
    SUBCASE("unknown states") {
        CHECK_THROWS_AS(restrict(chain3(), std::vector<int>{0, 5}), InvalidInput);
    }
}

TEST_CASE("policy_iteration") {
    SUBCASE("optimal start stops after one improvement") {
        Mdp m = chain4();
        auto r = policy_iteration(m, StochasticPolicy::uniform(m));
        CHECK(r.converged);
        CHECK(r.iterations == 1);
    }
    SUBCASE("dominant action") {
        std::vector<Transition> t = {{0, 0, 0, 1, 0, .9}, {0, 1, 1, 1, 5, .9}, {1, 0, 1, 1, 1, .9}, {1, 1, 0, 1, -5, .9}};
        Mdp m(2, 2, t, {{0, 1}, {0, 1}}, {false, false});
        auto r = policy_iteration(m, StochasticPolicy::uniform(m));
        CHECK(r.policy.argmax(0) == 1);
        CHECK(r.policy.argmax(1) == 0);
    }
    SUBCASE("10x10 gridworld agrees with value iteration; values nondecreasing") {
        GridSpec g;
        g.width = g.height = 10;
        g.goal = {9, 9};
        Mdp m = build_gridworld(g).mdp;
        auto r = policy_iteration(m, StochasticPolicy::uniform(m));
        auto vi = value_iteration(m, 1e-12);
        CHECK(vi.converged);
        CHECK((r.values - vi.values).cwiseAbs().maxCoeff() < 1e-9);
        for (std::size_t k = 1; k < r.value_trace.size(); ++k)
            CHECK((r.value_trace[k] - r.value_trace[k - 1]).minCoeff() >= -1e-9);
    }
    SUBCASE("iteration budget exhausted") {
        GridSpec g;
        g.width = g.height = 8;
        g.goal = {7, 7};
        Mdp m = build_gridworld(g).mdp;
        auto r = policy_iteration(m, StochasticPolicy::uniform(m), 1);
        CHECK_FALSE(r.converged);
    }
}
