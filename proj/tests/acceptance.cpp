// Acceptance suite: one PASS/FAIL line per criterion. Exit code is nonzero when any
// asserted criterion fails; criterion 11 is reported but not asserted.

#include "fixtures.hpp"

#include "mmdp/compress.hpp"
#include "mmdp/domains.hpp"
#include "mmdp/partition.hpp"
#include "mmdp/solver.hpp"
#include "mmdp/transfer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace mmdp;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail, bool asserted = true) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : (asserted ? "FAIL" : "INFO"), detail.c_str());
    std::fflush(stdout);
    if (asserted && !ok) ++failures;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Bellman backup values, computed here rather than through the library.
std::vector<double> q_row(const Mdp& m, const ValueFunction& v, int s) {
    std::vector<double> q(m.n_actions(), -1e300);
    for (int a : m.feasible(s)) {
        double x = 0.0;
        for (const auto& t : m.outcomes(s, a)) x += t.p * (t.r + t.g * v(t.next));
        q[a] = x;
    }
    return q;
}

int argmax_unique(const Mdp& m, const ValueFunction& v, int s, double gap) {
    auto q = q_row(m, v, s);
    int best = -1;
    double b1 = -1e300, b2 = -1e300;
    for (int a = 0; a < m.n_actions(); ++a) {
        if (q[a] > b1) {
            b2 = b1;
            b1 = q[a];
            best = a;
        } else if (q[a] > b2) {
            b2 = q[a];
        }
    }
    return b1 - b2 > gap ? best : -1;
}

/// Exact V^π by dense solve, independent of the library's value determination.
Vec dense_values(const Mdp& m, const StochasticPolicy& pi) {
    const int n = m.n_states();
    Mat a = Mat::Identity(n, n);
    Vec b = Vec::Zero(n);
    for (int s = 0; s < n; ++s) {
        if (m.is_terminal(s)) continue;
        for (int act : m.feasible(s)) {
            double w = pi.probs()(s, act);
            for (const auto& t : m.outcomes(s, act)) {
                a(s, t.next) -= w * t.p * t.g;
                b(s) += w * t.p * t.r;
            }
        }
    }
    return a.fullPivLu().solve(b);
}

HierarchyConfig grid_hierarchy(double max_conductance, int max_depth) {
    HierarchyConfig hc;
    hc.partition.max_conductance = max_conductance;
    hc.partition.max_depth = max_depth;
    return hc;
}

struct GridCase {
    std::string name;
    Mdp mdp;
    HierarchyConfig hc;
};

std::vector<GridCase> optimality_fixtures() {
    std::vector<GridCase> out;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        out.push_back({"random15-" + std::to_string(seed), build_gridworld(random_gridworld(15, 15, 0.1, seed)).mdp,
                       HierarchyConfig{}});
    out.push_back({"four-room", build_gridworld(four_room()).mdp, grid_hierarchy(0.05, 3)});
    return out;
}

// 1 and 2 share the fixtures and the flat references.
void criteria_1_2() {
    auto t0 = Clock::now();
    bool ok1 = true, ok2 = true;
    int worst_iters = 0, decided_total = 0, mismatches = 0;
    double worst_err = 0.0;
    std::string first_bad;
    for (const auto& fx : optimality_fixtures()) {
        Hierarchy h = build_hierarchy(fx.mdp, fx.hc);
        PolicyIterationResult flat = policy_iteration(fx.mdp, StochasticPolicy::uniform(fx.mdp));
        for (Variant var : {Variant::oo, Variant::oc, Variant::co, Variant::cc}) {
            SolveConfig sc;
            sc.variant = var;
            sc.tol_global = 1e-10;
            HierarchyResult r = solve_hierarchy(h, sc, &flat.values);
            double err = (r.values - flat.values).cwiseAbs().maxCoeff();
            int it = r.traces.empty() ? 0 : r.traces[0].iterations_to(1e-6);
            worst_err = std::max(worst_err, err);
            worst_iters = std::max(worst_iters, it);
            if (!(err <= 1e-6) || it < 0 || it > 500) {
                ok1 = false;
                if (first_bad.empty()) first_bad = fx.name + "/" + variant_name(var);
            }
        }
        for (Variant var : {Variant::or_, Variant::cr}) {
            SolveConfig sc;
            sc.variant = var;
            HierarchyResult r = solve_hierarchy(h, sc, &flat.values);
            for (int s = 0; s < fx.mdp.n_states(); ++s) {
                if (fx.mdp.is_terminal(s)) continue;
                int a = argmax_unique(fx.mdp, flat.values, s, 1e-9);
                if (a < 0) continue;
                ++decided_total;
                auto q = q_row(fx.mdp, r.values, s);
                int b = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
                if (a != b) ++mismatches;
            }
        }
    }
    double secs = seconds_since(t0);
    ok1 = ok1 && secs < 120.0;
    ok2 = mismatches == 0 && decided_total > 0;
    report(1, ok1,
           "oo/oc/co/cc on 5 random 15x15 + four-room: worst sup error " + fmt("%.2e", worst_err) +
               ", worst iterations to 1e-6 " + std::to_string(worst_iters) + ", " + fmt("%.1f s", secs) +
               (first_bad.empty() ? "" : ", first failure " + first_bad));
    report(2, ok2,
           "or/cr greedy policy vs flat optimum: " + std::to_string(mismatches) + " mismatches on " +
               std::to_string(decided_total) + " unique-argmax states");
}

void criterion_3() {
    double worst = 0.0;
    bool ok = true;
    int min_clusters = 1 << 30;
    for (int k = 0; k < 10; ++k) {
        std::mt19937_64 rng(100 + k);
        auto planted = fixtures::planted_mdp(100, 3, 12, 3 + k % 3, rng);
        StochasticPolicy pi = fixtures::random_policy(planted.mdp, rng);
        Partition part = partition_from_bottlenecks(planted.mdp, pi, planted.bottlenecks);
        min_clusters = std::min(min_clusters, static_cast<int>(part.clusters.size()));
        CoarseMdp c = compress_mdp(planted.mdp, part, fixtures::pools_from_policy(part, pi));
        auto owner = part.owner(planted.mdp.n_states());
        // At a bottleneck the fine policy only ever enters one cluster; follow it.
        std::vector<int> pick(c.mdp.n_states(), -1);
        for (int j = 0; j < c.mdp.n_states(); ++j) {
            int home = owner[planted.mdp.outcomes(c.states[j], 0)[0].next];
            for (int a : c.mdp.feasible(j))
                if (c.actions[a].cluster == home) pick[j] = a;
            if (pick[j] < 0) ok = false;
        }
        if (!ok) break;
        Vec vc = dense_values(c.mdp, StochasticPolicy::deterministic(c.mdp, pick));
        Vec vf = dense_values(planted.mdp, pi);
        for (int j = 0; j < c.mdp.n_states(); ++j) worst = std::max(worst, std::abs(vc[j] - vf[c.states[j]]));
    }
    ok = ok && worst <= 1e-8 && min_clusters >= 3;
    report(3, ok,
           "10 planted 100-state MDPs (>= " + std::to_string(min_clusters) + " clusters): coarse vs fine sup gap " +
               fmt("%.2e", worst));
}

struct McTally {
    long entries = 0;
    long outside = 0;
    double worst_z = 0.0;
};

void tally_block(const CoarseBlock& a, const ClusterEstimate& e, McTally& t) {
    auto check = [&](double analytic, double mean, double se) {
        ++t.entries;
        double dev = std::abs(analytic - mean);
        double slack = 1e-9 * (1.0 + std::abs(analytic));
        if (dev > 3.0 * se + slack) ++t.outside;
        if (se > 0) t.worst_z = std::max(t.worst_z, dev / se);
    };
    for (long i = 0; i < a.p.rows(); ++i)
        for (long j = 0; j < a.p.cols(); ++j) {
            check(a.p(i, j), e.mean.p(i, j), e.stderr_.p(i, j));
            if (a.p(i, j) > 1e-9 && e.counts(i, j) > 1) {
                check(a.r(i, j), e.mean.r(i, j), e.stderr_.r(i, j));
                check(a.g(i, j), e.mean.g(i, j), e.stderr_.g(i, j));
                check(a.len(i, j), e.mean.len(i, j), e.stderr_.len(i, j));
            }
        }
}

void criterion_4() {
    McTally tally;
    MonteCarloOptions mc;
    mc.n_traj = 100000;
    mc.seed = 1;
    std::vector<std::pair<Mdp, std::vector<int>>> chains = {{fixtures::chain3(), {0}}, {fixtures::chain4(), {0}}};
    for (auto& [m, bn] : chains) {
        auto pi = StochasticPolicy::uniform(m);
        Partition part = partition_from_bottlenecks(m, pi, bn);
        auto est = monte_carlo_compress(m, part, pi, mc);
        for (std::size_t k = 0; k < est.size(); ++k) {
            ClusterModel model = localize(m, part.clusters[k]);
            tally_block(compress_cluster(model.mdp, StochasticPolicy::uniform(model.mdp), model.boundary_local()), est[k], tally);
        }
    }
    Mdp g = build_gridworld(four_room()).mdp;
    auto pi = StochasticPolicy::uniform(g);
    PartitionConfig pc;
    pc.max_conductance = 0.05;
    Partition part = spectral_partition(g, pi, pc).at(0);
    auto est = monte_carlo_compress(g, part, pi, mc);
    for (std::size_t k = 0; k < est.size(); ++k) {
        ClusterModel model = localize(g, part.clusters[k]);
        tally_block(compress_cluster(model.mdp, StochasticPolicy::uniform(model.mdp), model.boundary_local()), est[k], tally);
    }
    report(4, tally.outside == 0,
           "CHAIN3, CHAIN4, four-room at 1e5 trajectories: " + std::to_string(tally.outside) + " of " +
               std::to_string(tally.entries) + " entries beyond 3 se (largest z " + fmt("%.2f", tally.worst_z) + ")");
}

void criterion_5() {
    double worst = 0.0;
    long checked = 0, rare = 0;
    for (double gamma : {0.9, 0.99}) {
        std::vector<std::pair<Mdp, Partition>> cases;
        for (Mdp m : {fixtures::chain3(gamma), fixtures::chain4(gamma)})
            cases.push_back({m, partition_from_bottlenecks(m, StochasticPolicy::uniform(m), {0})});
        GridSpec fr = four_room();
        fr.gamma = gamma;
        Mdp g = build_gridworld(fr).mdp;
        PartitionConfig pc;
        pc.max_conductance = 0.05;
        cases.push_back({g, spectral_partition(g, StochasticPolicy::uniform(g), pc).at(0)});
        GridSpec rs = random_gridworld(15, 15, 0.1, 3);
        rs.gamma = gamma;
        Mdp r = build_gridworld(rs).mdp;
        cases.push_back({r, spectral_partition(r, StochasticPolicy::uniform(r), PartitionConfig{}).at(0)});
        for (auto& [m, part] : cases)
            for (const PolicyPool& pools : {algorithm3_pool(m, part), diffusion_pool(m, part)}) {
                for (std::size_t k = 0; k < part.clusters.size(); ++k) {
                    ClusterModel model = localize(m, part.clusters[k]);
                    for (const auto& pp : pools[k]) {
                        CoarseBlock b = compress_cluster(model.mdp, pp.pi, model.boundary_local());
                        for (long i = 0; i < b.p.rows(); ++i)
                            for (long j = 0; j < b.p.cols(); ++j) {
                                if (b.p(i, j) <= 0.0) continue;
                                // Conditioning on a hit this rare divides roundoff by roundoff.
                                if (b.p(i, j) < 1e-8) {
                                    ++rare;
                                    continue;
                                }
                                ++checked;
                                worst = std::max(worst, std::pow(gamma, b.len(i, j)) - b.g(i, j));
                            }
                    }
                }
            }
    }
    report(5, worst <= 1e-12 && checked > 0,
           "gamma in {0.9, 0.99}: max(gamma^L - discount) = " + fmt("%.2e", worst) + " over " +
               std::to_string(checked) + " coarse entries (" + std::to_string(rare) +
               " with hit probability below 1e-8 skipped)");
}

void criterion_6() {
    bool ok = true;
    std::string detail;
    for (double g : {0.5, 0.9, 0.96, 0.99}) {
        int n = auto_boundary_updates(g);
        ok = ok && std::pow(g, n) < 0.5 && !(std::pow(g, n - 1) < 0.5);
        detail += fmt("%.2f", g) + "->" + std::to_string(n) + " ";
    }
    ok = ok && auto_boundary_updates(0.9) == 7;
    report(6, ok, "N(gamma): " + detail);
}

void criterion_7() {
    Mdp bridge = fixtures::two_clique_bridge();
    Mat p = policy_average(bridge, StochasticPolicy::uniform(bridge)).p;
    Cut c = sweep_cut(chain_embedding(p, 0.01, 3).eigenvectors.rightCols(3), p);
    double best = fixtures::min_conductance_bruteforce(p);
    bool bridge_ok = std::abs(c.conductance - best) <= 1e-12 && c.in_z[0] == c.in_z[2] && c.in_z[2] != c.in_z[3];

    Gridworld g = build_gridworld(four_room());
    PartitionConfig pc;
    pc.max_conductance = 0.05;
    pc.max_depth = 3;
    Partition part = spectral_partition(g.mdp, StochasticPolicy::uniform(g.mdp), pc).at(0);
    std::vector<Cell> doors = four_room_doorways();
    auto near = [](const Cell& a, const Cell& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) <= 1; };
    bool all_adjacent = true;
    std::set<int> doors_hit;
    for (int b : part.bottlenecks) {
        if (g.mdp.is_terminal(b)) continue;
        bool adj = false;
        for (std::size_t d = 0; d < doors.size(); ++d)
            if (near(g.cells[b], doors[d])) {
                adj = true;
                doors_hit.insert(static_cast<int>(d));
            }
        all_adjacent = all_adjacent && adj;
    }
    bool rooms_ok = all_adjacent && doors_hit.size() == doors.size() && part.clusters.size() == 4;
    report(7, bridge_ok && rooms_ok,
           "bridge cut conductance " + fmt("%.6f", c.conductance) + " vs enumerated " + fmt("%.6f", best) +
               "; four-room: " + std::to_string(part.bottlenecks.size()) + " bottlenecks, " +
               std::to_string(doors_hit.size()) + "/4 doorways covered, all doorway-adjacent: " +
               (all_adjacent ? "yes" : "no"));
}

void criterion_8() {
    auto [src_spec, dst_spec] = mirrored_gridworld_pair();
    Gridworld src = build_gridworld(src_spec), dst = build_gridworld(dst_spec);
    HierarchyConfig hc = grid_hierarchy(0.02, 2);
    Hierarchy h1 = build_hierarchy(src.mdp, hc), h2 = build_hierarchy(dst.mdp, hc);
    PolicyIterationResult flat2 = policy_iteration(dst.mdp, StochasticPolicy::uniform(dst.mdp));
    SolvedHierarchy solved = solve_levels(h1);
    TransferConfig tc;
    tc.mode = TransferMode::policy;
    tc.correspondence = Correspondence::ordinal;
    TransferPlan plan = execute_transfer(solved, h2, tc);

    // Ground truth per destination cluster: does the source policy, carried over, beat
    // the uniform default on the interior when everything else plays optimally?
    std::set<int> helps, accepted, rejected;
    StochasticPolicy uni = StochasticPolicy::uniform(dst.mdp);
    for (const auto& cp : match_clusters(h1, h2, 0)) {
        const Cluster& c1 = h1.levels[0].partition.clusters[cp.c1];
        const Cluster& c2 = h2.levels[0].partition.clusters[cp.c2];
        auto eta = match_states(src.mdp, c1, dst.mdp, c2, Correspondence::ordinal);
        StateMap sm = StateMap::from_pair(src.mdp.n_states(), dst.mdp.n_states(), c1, c2, eta);
        auto tp = transfer_policy(solved.levels[0].policy, src.mdp, dst.mdp, c2, sm, uni);
        StochasticPolicy with = flat2.policy, without = flat2.policy;
        for (int w : c2.interior) {
            with.probs().row(w) = tp.policy.probs().row(w);
            without.probs().row(w) = uni.probs().row(w);
        }
        Vec vw = dense_values(dst.mdp, with), vo = dense_values(dst.mdp, without);
        double gain = 0.0;
        for (int w : c2.interior) gain += vw[w] - vo[w];
        if (gain > 0) helps.insert(cp.c2);
    }
    for (const auto& p : plan.pairs) {
        if (p.scale != 0) continue;
        (p.mode != PairMode::none ? accepted : rejected).insert(p.c2);
    }
    bool sound = accepted == helps;

    SolveConfig sc;
    sc.variant = Variant::cc;
    HierarchyResult r0 = solve_hierarchy(h2, sc, &flat2.values);
    HierarchyResult r1 = solve_hierarchy(h2, sc, &flat2.values, plan.init);
    double l2_0 = *r0.traces[0].rows.at(0).l2_error, l2_1 = *r1.traces[0].rows.at(0).l2_error;
    int it0 = r0.traces[0].iterations_to(1e-6), it1 = r1.traces[0].iterations_to(1e-6);
    bool ok = !accepted.empty() && !rejected.empty() && sound && l2_1 < l2_0 && it1 >= 0 && it0 >= 0 && it1 <= it0;
    report(8, ok,
           "mirrored 20x20: accepted " + std::to_string(accepted.size()) + ", rejected " +
               std::to_string(rejected.size()) + " (matches exact-value oracle: " + (sound ? "yes" : "no") +
               "); iteration-1 L2 " + fmt("%.3f", l2_1) + " vs " + fmt("%.3f", l2_0) + "; iterations to 1e-6 " +
               std::to_string(it1) + " vs " + std::to_string(it0));
}

void criterion_9() {
    std::mt19937_64 rng(9);
    auto planted = fixtures::planted_mdp(60, 3, 8, 3, rng);
    Partition part = partition_from_bottlenecks(planted.mdp, StochasticPolicy::uniform(planted.mdp), planted.bottlenecks);
    PolicyIterationResult opt = policy_iteration(planted.mdp, StochasticPolicy::uniform(planted.mdp));
    StochasticPolicy uni = StochasticPolicy::uniform(planted.mdp);
    ValueFunction v0 = dense_values(planted.mdp, uni);

    std::vector<Transition> neg;
    for (auto t : planted.mdp.transitions()) {
        t.r = -t.r;
        neg.push_back(t);
    }
    Mdp negated(planted.mdp.n_states(), planted.mdp.n_actions(), neg, planted.mdp.feasible(), planted.mdp.terminal());
    ValueFunction vn = dense_values(negated, uni);

    bool self_ok = true, neg_ok = true;
    double min_self = 1e300, max_neg = -1e300;
    for (const auto& c : part.clusters) {
        Detection self = detect_policy_transfer(planted.mdp, c, opt.policy, uni, v0, false);
        Detection other = detect_policy_transfer(negated, c, opt.policy, uni, vn, false);
        min_self = std::min(min_self, self.T);
        max_neg = std::max(max_neg, other.T);
        self_ok = self_ok && self.accept && self.T > 0;
        neg_ok = neg_ok && !other.accept && other.T < 0;
    }
    Vec u = Vec::LinSpaced(20, 1.0, 3.0);
    Vec w = u;
    w[7] += 0.5;
    bool zero_ok = transfer_statistic(u, u) == 0.0 && transfer_statistic(w, u) != 0.0 && transfer_statistic(u, w) != 0.0;
    report(9, self_ok && neg_ok && zero_ok,
           "self-transfer min T " + fmt("%.3f", min_self) + ", negated rewards max T " + fmt("%.3f", max_neg) +
               ", T(u,u) = 0 and T != 0 off the diagonal: " + (zero_ok ? "yes" : "no"));
}

void criterion_10() {
    HierarchyConfig hc;
    hc.depth = 1;
    hc.partition.max_depth = 1;
    hc.pool_mode = PoolMode::diffusion;
    double worst = 0.0;
    bool built = true;
    for (PlayroomVariant v : {PlayroomVariant::default_, PlayroomVariant::transfer}) {
        PlayroomSpec ps;
        ps.variant = v;
        Playroom pr = build_playroom(ps);
        Hierarchy h = build_hierarchy(pr.mdp, hc);
        built = built && h.n_mdps() == 2;
        PolicyIterationResult flat = policy_iteration(pr.mdp, StochasticPolicy::uniform(pr.mdp));
        for (Variant var : {Variant::oo, Variant::oc, Variant::co, Variant::cc}) {
            SolveConfig sc;
            sc.variant = var;
            HierarchyResult r = solve_hierarchy(h, sc, &flat.values);
            worst = std::max(worst, (r.values - flat.values).cwiseAbs().maxCoeff());
        }
    }

    PlayroomSpec a, b;
    a.variant = PlayroomVariant::partial_default;
    b.variant = PlayroomVariant::partial_transfer;
    Playroom p1 = build_playroom(a), p2 = build_playroom(b);
    Hierarchy h1 = build_hierarchy(p1.mdp, hc), h2 = build_hierarchy(p2.mdp, hc);
    PolicyIterationResult f2 = policy_iteration(p2.mdp, StochasticPolicy::uniform(p2.mdp));
    TransferConfig tc;
    tc.mode = TransferMode::policy;
    tc.correspondence = Correspondence::identity;
    TransferPlan plan = execute_transfer(solve_levels(h1), h2, tc);
    int accepted = 0, moved = 0, agree = 0;
    bool music_off = true;
    for (const auto& p : plan.pairs) {
        if (p.mode == PairMode::none) continue;
        ++accepted;
        for (int s : h2.levels[0].partition.clusters[p.c2].interior) music_off = music_off && !p2.states[s].music;
        for (auto [s, act] : p.policy) {
            ++moved;
            // Flat optimum by exact q-values; accept any action tied for best.
            auto q = q_row(p2.mdp, f2.values, s);
            double best = *std::max_element(q.begin(), q.end());
            agree += q[act] >= best - 1e-9;
        }
    }
    bool ok = built && worst <= 1e-6 && accepted == 1 && music_off && moved > 0 && agree == moved;
    report(10, ok,
           "playroom 2-level sup error " + fmt("%.2e", worst) + "; partial transfer accepted " +
               std::to_string(accepted) + " cluster(s), music off there: " + (music_off ? "yes" : "no") + ", " +
               std::to_string(agree) + "/" + std::to_string(moved) + " actions flat-optimal");
}

void criterion_11() {
    std::vector<double> logn, logt;
    std::string detail;
    for (int side : {15, 25, 35}) {
        Mdp m = build_gridworld(random_gridworld(side, side, 0.1, 11)).mdp;
        Hierarchy h = build_hierarchy(m, HierarchyConfig{});
        SolveConfig sc;
        sc.variant = Variant::oo;
        auto t0 = Clock::now();
        HierarchyResult r = solve_hierarchy(h, sc);
        double per_iter = seconds_since(t0) / std::max<std::size_t>(1, r.traces[0].rows.size());
        logn.push_back(std::log(static_cast<double>(m.n_states())));
        logt.push_back(std::log(per_iter));
        detail += std::to_string(m.n_states()) + " states " + fmt("%.2f ms", 1e3 * per_iter) + "; ";
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
        mx += logn[i] / logn.size();
        my += logt[i] / logt.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
        sxy += (logn[i] - mx) * (logt[i] - my);
        sxx += (logn[i] - mx) * (logn[i] - mx);
    }
    double slope = sxy / sxx;
    report(11, slope < 2.0, detail + "log-log slope " + fmt("%.2f", slope) + " (informational)", false);
}

} // namespace

int main() {
    std::vector<std::function<void()>> checks = {criteria_1_2, criterion_3, criterion_4, criterion_5, criterion_6,
                                                 criterion_7,  criterion_8, criterion_9, criterion_10, criterion_11};
    for (auto& f : checks) {
        try {
            f();
        } catch (const std::exception& e) {
            std::printf("error: %s\n", e.what());
            ++failures;
        }
    }
    std::printf("%s: %d asserted criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
