#include "mmdp/compress.hpp"

#include "mmdp/error.hpp"
#include "mmdp/linalg.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <random>

namespace mmdp {

namespace {

constexpr double kSupport = 1e-14;
// Exit mass tolerance; nearly closed policies lose digits to conditioning.
constexpr double kMassTol = 1e-6;
// Pool policies slower than this to reach the boundary are dropped.
constexpr double kMaxExitTime = 1e8;

std::string fmt_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::vector<bool> boundary_mask(int m, const std::vector<int>& boundary) {
    std::vector<bool> is_b(m, false);
    for (int b : boundary) {
        if (b < 0 || b >= m) throw InvalidInput("compress: boundary id out of range");
        if (is_b[b]) throw InvalidInput("compress: repeated boundary state");
        is_b[b] = true;
    }
    return is_b;
}

std::vector<int> interior_of(int m, const std::vector<bool>& is_b) {
    std::vector<int> out;
    for (int s = 0; s < m; ++s)
        if (!is_b[s]) out.push_back(s);
    return out;
}

enum class Quantity { reward, discount, length };

/**
Conditional expectation E_s[X | exit at target] for the boundary rows, via the
interior system driven by the h-transform kernel.
*/
Vec conditional_expectation(const Mdp& mdp, const ConditionedKernels& k, const std::vector<int>& boundary,
                            const Vec& h, int target, Quantity q, const std::string& context) {
    const int m = mdp.n_states();
    std::vector<int> idx(m, -1);
    std::vector<bool> is_b = boundary_mask(m, boundary);
    int n = 0;
    for (int s = 0; s < m; ++s)
        if (!is_b[s] && h(s) > kSupport) idx[s] = n++;

    auto lookup = [&](const KernelEntry& e) -> const Transition& {
        long t = mdp.find(e.s, e.a, e.next);
        return mdp.transitions()[t];
    };
    auto cont = [&](const Transition& t) { return q == Quantity::length ? 1.0 : t.g; };
    auto immediate = [&](const Transition& t) {
        switch (q) {
        case Quantity::reward: return t.r;
        case Quantity::discount: return t.next == target ? t.g : 0.0;
        case Quantity::length: return 1.0;
        }
        return 0.0;
    };

    Mat a = Mat::Identity(n, n);
    Vec rhs = Vec::Zero(n);
    for (const auto& e : k.interior) {
        int i = idx[e.s];
        if (i < 0) continue;
        const Transition& t = lookup(e);
        if (idx[e.next] >= 0) a(i, idx[e.next]) -= e.w * cont(t);
        rhs(i) += e.w * immediate(t);
    }
    Vec x;
    if (q == Quantity::reward)
        x = solve_dense(a, rhs, context);
    else
        x = solve_nonnegative(a, rhs, context);

    Vec out = Vec::Zero(static_cast<long>(boundary.size()));
    std::vector<int> bpos(m, -1);
    for (std::size_t j = 0; j < boundary.size(); ++j) bpos[boundary[j]] = static_cast<int>(j);
    for (const auto& e : k.boundary) {
        const Transition& t = lookup(e);
        double v = immediate(t);
        if (idx[e.next] >= 0) v += cont(t) * x(idx[e.next]);
        out(bpos[e.s]) += e.w * v;
    }
    return out;
}

} // namespace

std::vector<int> ClusterModel::boundary_local() const {
    std::vector<int> out;
    for (int k = n_interior; k < size(); ++k) out.push_back(k);
    return out;
}

ClusterModel localize(const Mdp& mdp, const Cluster& cluster) {
    ClusterModel m;
    m.states = cluster.states();
    m.n_interior = static_cast<int>(cluster.interior.size());
    m.mdp = restrict(mdp, m.states);
    return m;
}

Mat hitting_probabilities(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    const int m = cluster_mdp.n_states();
    std::vector<bool> is_b = boundary_mask(m, boundary);
    if (boundary.empty()) throw InvalidInput("hitting_probabilities: empty boundary");
    std::vector<int> inner = interior_of(m, is_b);
    Mat p = policy_average(cluster_mdp, pi).p;
    const long ni = static_cast<long>(inner.size()), nb = static_cast<long>(boundary.size());

    Mat q(ni, ni), bq(ni, nb), c(nb, ni), d(nb, nb);
    for (long i = 0; i < ni; ++i) {
        for (long j = 0; j < ni; ++j) q(i, j) = p(inner[i], inner[j]);
        for (long j = 0; j < nb; ++j) bq(i, j) = p(inner[i], boundary[j]);
    }
    for (long i = 0; i < nb; ++i) {
        for (long j = 0; j < ni; ++j) c(i, j) = p(boundary[i], inner[j]);
        for (long j = 0; j < nb; ++j) d(i, j) = p(boundary[i], boundary[j]);
    }
    Mat hq = solve_nonnegative(Mat::Identity(ni, ni) - q, bq, "hitting_probabilities");
    Mat hb = d + c * hq;

    Mat h(m, nb);
    for (long i = 0; i < ni; ++i) h.row(inner[i]) = hq.row(i);
    for (long i = 0; i < nb; ++i) h.row(boundary[i]) = hb.row(i);
    for (long s = 0; s < m; ++s) {
        double sum = h.row(s).sum();
        if (std::abs(sum - 1.0) > kMassTol)
            throw NumericalFailure("hitting_probabilities: boundary not reached almost surely from local state " +
                                   std::to_string(s) + " (mass error " + fmt_g(sum - 1.0) + ")");
    }
    return h;
}

Vec harmonic_h(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary, int target) {
    auto it = std::find(boundary.begin(), boundary.end(), target);
    if (it == boundary.end()) throw InvalidInput("harmonic_h: target is not a boundary state");
    Mat h = hitting_probabilities(cluster_mdp, pi, boundary);
    Vec col = h.col(it - boundary.begin());
    for (int b : boundary) col(b) = b == target ? 1.0 : 0.0;
    return col;
}

ConditionedKernels conditioned_kernels(const Mdp& cluster_mdp, const StochasticPolicy& pi,
                                       const std::vector<int>& boundary, const Vec& h, int target,
                                       const Vec& p_tilde_col) {
    const int m = cluster_mdp.n_states();
    std::vector<bool> is_b = boundary_mask(m, boundary);
    if (!is_b[target]) throw InvalidInput("conditioned_kernels: target is not a boundary state");
    std::vector<int> bpos(m, -1);
    for (std::size_t j = 0; j < boundary.size(); ++j) bpos[boundary[j]] = static_cast<int>(j);
    ConditionedKernels k;
    for (int s = 0; s < m; ++s) {
        double denom;
        std::vector<KernelEntry>* out;
        if (is_b[s]) {
            denom = p_tilde_col(bpos[s]);
            out = &k.boundary;
        } else {
            denom = h(s);
            out = &k.interior;
        }
        if (denom <= kSupport) continue;
        for (int a : cluster_mdp.feasible(s)) {
            double w = pi(s, a);
            if (w == 0.0) continue;
            for (const auto& t : cluster_mdp.outcomes(s, a)) {
                double hn = h(t.next);
                if (hn <= 0.0) continue;
                out->push_back({s, a, t.next, t.p * w * hn / denom});
            }
        }
    }
    return k;
}

namespace {

Mat compress_quantity(const Mdp& mdp, const StochasticPolicy& pi, const std::vector<int>& boundary, Quantity q,
                      double off_support) {
    Mat h = hitting_probabilities(mdp, pi, boundary);
    const long nb = static_cast<long>(boundary.size());
    Mat ptilde(nb, nb);
    for (long i = 0; i < nb; ++i) ptilde.row(i) = h.row(boundary[i]);
    Mat out = Mat::Constant(nb, nb, off_support);
    for (long j = 0; j < nb; ++j) {
        Vec hj = h.col(j);
        for (int b : boundary) hj(b) = b == boundary[j] ? 1.0 : 0.0;
        ConditionedKernels k = conditioned_kernels(mdp, pi, boundary, hj, boundary[j], ptilde.col(j));
        Vec col = conditional_expectation(mdp, k, boundary, hj, boundary[j], q,
                                          "compress (target " + std::to_string(boundary[j]) + ")");
        for (long i = 0; i < nb; ++i)
            if (ptilde(i, j) > kSupport) out(i, j) = col(i);
    }
    return out;
}

} // namespace

Mat compress_rewards(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    return compress_quantity(cluster_mdp, pi, boundary, Quantity::reward, 0.0);
}

Mat compress_discounts(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    return compress_quantity(cluster_mdp, pi, boundary, Quantity::discount, 1.0);
}

Mat expected_path_lengths(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    return compress_quantity(cluster_mdp, pi, boundary, Quantity::length, 0.0);
}

CoarseBlock compress_cluster(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    Mat h = hitting_probabilities(cluster_mdp, pi, boundary);
    const long nb = static_cast<long>(boundary.size());
    CoarseBlock blk{Mat(nb, nb), Mat::Zero(nb, nb), Mat::Ones(nb, nb), Mat::Zero(nb, nb)};
    for (long i = 0; i < nb; ++i) blk.p.row(i) = h.row(boundary[i]);
    for (long j = 0; j < nb; ++j) {
        Vec hj = h.col(j);
        for (int b : boundary) hj(b) = b == boundary[j] ? 1.0 : 0.0;
        ConditionedKernels k = conditioned_kernels(cluster_mdp, pi, boundary, hj, boundary[j], blk.p.col(j));
        std::string ctx = "compress (target " + std::to_string(boundary[j]) + ")";
        Vec r = conditional_expectation(cluster_mdp, k, boundary, hj, boundary[j], Quantity::reward, ctx);
        Vec g = conditional_expectation(cluster_mdp, k, boundary, hj, boundary[j], Quantity::discount, ctx);
        Vec l = conditional_expectation(cluster_mdp, k, boundary, hj, boundary[j], Quantity::length, ctx);
        for (long i = 0; i < nb; ++i) {
            if (blk.p(i, j) <= kSupport) continue;
            blk.r(i, j) = r(i);
            blk.g(i, j) = g(i);
            blk.len(i, j) = l(i);
        }
    }
    return blk;
}

// ---------------------------------------------------------------------------

int support_diameter(const Mdp& cluster_mdp) {
    const int m = cluster_mdp.n_states();
    std::vector<std::vector<int>> adj(m);
    for (const auto& t : cluster_mdp.transitions())
        if (t.next != t.s) adj[t.s].push_back(t.next);
    int diam = 0;
    std::vector<int> dist(m);
    for (int s = 0; s < m; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        std::deque<int> q{s};
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            diam = std::max(diam, dist[u]);
            for (int v : adj[u])
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
        }
    }
    return diam;
}

namespace {

/// Largest expected number of steps to the boundary; infinity when the system is singular.
double max_exit_time(const Mdp& mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    std::vector<bool> is_b = boundary_mask(mdp.n_states(), boundary);
    std::vector<int> inner = interior_of(mdp.n_states(), is_b);
    if (inner.empty()) return 0.0;
    Mat p = policy_average(mdp, pi).p;
    const long n = static_cast<long>(inner.size());
    Mat a = Mat::Identity(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) a(i, j) -= p(inner[i], inner[j]);
    try {
        return solve_dense(a, Vec::Ones(n), "exit time").maxCoeff();
    } catch (const NumericalFailure&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// Cluster MDP with `b` absorbing and a terminal bonus r paid on entering b.
std::vector<int> solve_with_bonus(const Mdp& mdp, int b, double bonus) {
    std::vector<Transition> tr;
    tr.reserve(mdp.transitions().size());
    for (int a : mdp.feasible(b)) {
        double g = 0.0;
        for (const auto& t : mdp.outcomes(b, a)) g = std::max(g, t.g);
        tr.push_back({b, a, b, 1.0, 0.0, g});
    }
    for (const auto& t : mdp.transitions()) {
        if (t.s == b) continue;
        Transition u = t;
        if (u.next == b) u.r += u.g * bonus;
        tr.push_back(u);
    }
    std::vector<std::vector<int>> feas = mdp.feasible();
    Mdp mod(mdp.n_states(), mdp.n_actions(), std::move(tr), std::move(feas), mdp.terminal(),
            mdp.max_discount() >= 1.0 ? DiscountCheck::allow_one : DiscountCheck::open_interval);
    auto res = policy_iteration(mod, StochasticPolicy::uniform(mod));
    return res.policy.argmax_all();
}

} // namespace

ClusterPool policy_pool_for_cluster(const Mdp& cluster_mdp, const std::vector<int>& boundary,
                                    const PoolConfig& config) {
    if (config.n_r_samples < 1) throw InvalidInput("policy_pool: need at least one r sample");
    boundary_mask(cluster_mdp.n_states(), boundary);
    const double gbar = cluster_mdp.max_discount();
    const int diam = support_diameter(cluster_mdp);
    const double scale = gbar < 1.0 ? (1.0 - std::pow(gbar, diam)) / (1.0 - gbar) : static_cast<double>(diam);
    const double lo = scale * std::min(0.0, cluster_mdp.min_reward());
    double hi = scale * std::max(0.0, cluster_mdp.max_reward());
    // Reward-free cluster: a unit bonus range still yields policies steering to each bottleneck.
    if (!(hi > lo)) hi = scale;
    const double tol = config.bisection_tol * (hi - lo);

    struct Found {
        std::vector<int> actions;
        int b;
        double r;
    };
    std::vector<Found> found;
    auto add = [&](const std::vector<int>& acts, int b, double r) {
        for (const auto& f : found)
            if (f.actions == acts) return;
        found.push_back({acts, b, r});
    };

    for (int b : boundary) {
        std::vector<double> rs;
        if (hi > lo && config.n_r_samples > 1) {
            for (int i = 0; i < config.n_r_samples; ++i) rs.push_back(lo + (hi - lo) * i / (config.n_r_samples - 1));
        } else {
            rs.push_back(lo);
        }
        std::vector<std::vector<int>> pols;
        for (double r : rs) {
            pols.push_back(solve_with_bonus(cluster_mdp, b, r));
            add(pols.back(), b, r);
        }
        // Bisection between neighbouring samples whose policies differ.
        std::function<void(double, const std::vector<int>&, double, const std::vector<int>&)> bisect =
            [&](double r0, const std::vector<int>& p0, double r1, const std::vector<int>& p1) {
                if (p0 == p1 || r1 - r0 <= tol) return;
                double mid = 0.5 * (r0 + r1);
                std::vector<int> pm = solve_with_bonus(cluster_mdp, b, mid);
                add(pm, b, mid);
                bisect(r0, p0, mid, pm);
                bisect(mid, pm, r1, p1);
            };
        for (std::size_t i = 0; i + 1 < rs.size(); ++i) bisect(rs[i], pols[i], rs[i + 1], pols[i + 1]);
    }

    ClusterPool pool;
    for (const auto& f : found) {
        StochasticPolicy det = StochasticPolicy::deterministic(cluster_mdp, f.actions);
        StochasticPolicy reg = regularize_policy(cluster_mdp, det, config.lambda);
        if (max_exit_time(cluster_mdp, reg, boundary) <= kMaxExitTime) pool.push_back({reg, f.b, f.r});
    }
    if (pool.empty()) pool.push_back({StochasticPolicy::uniform(cluster_mdp), -1, std::numeric_limits<double>::quiet_NaN()});
    return pool;
}

PolicyPool diffusion_pool(const Mdp& mdp, const Partition& partition) {
    PolicyPool pools;
    for (const auto& c : partition.clusters) {
        ClusterModel m = localize(mdp, c);
        pools.push_back({PoolPolicy{StochasticPolicy::uniform(m.mdp), -1, std::numeric_limits<double>::quiet_NaN()}});
    }
    return pools;
}

PolicyPool algorithm3_pool(const Mdp& mdp, const Partition& partition, const PoolConfig& config) {
    PolicyPool pools;
    for (const auto& c : partition.clusters) {
        ClusterModel m = localize(mdp, c);
        ClusterPool pool = policy_pool_for_cluster(m.mdp, m.boundary_local(), config);
        for (auto& p : pool)
            if (p.bottleneck >= 0) p.bottleneck = m.states[p.bottleneck];
        pools.push_back(std::move(pool));
    }
    return pools;
}

CoarseMdp compress_mdp(const Mdp& mdp, const Partition& partition, const PolicyPool& pools) {
    if (pools.size() != partition.clusters.size()) throw InvalidInput("compress_mdp: one pool per cluster required");
    const int n = mdp.n_states();
    std::vector<int> pos(n, -1);
    CoarseMdp out;
    out.states = partition.bottlenecks;
    for (std::size_t k = 0; k < out.states.size(); ++k) pos[out.states[k]] = static_cast<int>(k);
    const int nc = static_cast<int>(out.states.size());
    if (nc == 0) throw InvalidInput("compress_mdp: empty bottleneck set");

    std::vector<Transition> tr;
    std::vector<std::vector<int>> feasible(nc);
    std::map<std::tuple<int, int, int>, double> lengths;
    for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
        const Cluster& cl = partition.clusters[c];
        ClusterModel model = localize(mdp, cl);
        std::vector<int> bl = model.boundary_local();
        for (std::size_t k = 0; k < pools[c].size(); ++k) {
            const StochasticPolicy& pi = pools[c][k].pi;
            if (pi.n_states() != model.size())
                throw InvalidInput("compress_mdp: pool policy shape does not match cluster " + std::to_string(c));
            const int aid = static_cast<int>(out.actions.size());
            out.actions.push_back({static_cast<int>(c), static_cast<int>(k)});
            CoarseBlock blk;
            try {
                blk = compress_cluster(model.mdp, pi, bl);
            } catch (const NumericalFailure& e) {
                throw NumericalFailure("cluster " + std::to_string(c) + ": " + e.what());
            }
            for (std::size_t i = 0; i < bl.size(); ++i) {
                int s = pos[cl.boundary[i]];
                feasible[s].push_back(aid);
                double row = 0.0;
                for (std::size_t j = 0; j < bl.size(); ++j)
                    if (blk.p(i, j) > kSupport) row += blk.p(i, j);
                for (std::size_t j = 0; j < bl.size(); ++j) {
                    double p = blk.p(i, j);
                    if (p <= kSupport) continue;
                    int s2 = pos[cl.boundary[j]];
                    tr.push_back({s, aid, s2, p / row, blk.r(i, j), std::min(blk.g(i, j), 1.0)});
                    lengths[{s, aid, s2}] = blk.len(i, j);
                }
            }
        }
    }
    std::vector<bool> terminal(nc);
    std::vector<std::string> labels;
    for (int k = 0; k < nc; ++k) {
        terminal[k] = mdp.is_terminal(out.states[k]);
        if (!mdp.labels().empty()) labels.push_back(mdp.labels()[out.states[k]]);
    }
    for (int k = 0; k < nc; ++k)
        if (feasible[k].empty())
            throw InvalidInput("compress_mdp: bottleneck " + std::to_string(out.states[k]) + " has no coarse action");
    const int na = static_cast<int>(out.actions.size());
    out.mdp = Mdp(nc, na, std::move(tr), std::move(feasible), std::move(terminal),
                  mdp.max_discount() >= 1.0 ? DiscountCheck::allow_one : DiscountCheck::open_interval);
    if (!labels.empty()) out.mdp = out.mdp.with_labels(std::move(labels));
    out.path_lengths.reserve(out.mdp.transitions().size());
    for (const auto& t : out.mdp.transitions()) out.path_lengths.push_back(lengths.at({t.s, t.a, t.next}));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<ClusterEstimate> monte_carlo_compress(const Mdp& mdp, const Partition& partition,
                                                  const StochasticPolicy& pi, const MonteCarloOptions& options) {
    if (options.n_traj < 1) throw InvalidInput("monte_carlo_compress: n_traj must be positive");
    pi.validate(mdp);
    std::vector<ClusterEstimate> out;
    for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
        const Cluster& cl = partition.clusters[c];
        ClusterModel model = localize(mdp, cl);
        StochasticPolicy lp = restrict_policy(pi, model.states);
        const int m = model.size();
        const long nb = static_cast<long>(cl.boundary.size());

        // Per-state cumulative table over (action, outcome) pairs.
        std::vector<std::vector<double>> cum(m);
        std::vector<std::vector<const Transition*>> which(m);
        for (int s = 0; s < m; ++s) {
            double acc = 0.0;
            for (int a : model.mdp.feasible(s)) {
                double w = lp(s, a);
                if (w == 0.0) continue;
                for (const auto& t : model.mdp.outcomes(s, a)) {
                    acc += w * t.p;
                    cum[s].push_back(acc);
                    which[s].push_back(&t);
                }
            }
            for (auto& x : cum[s]) x /= acc;
        }

        ClusterEstimate est;
        est.cluster = static_cast<int>(c);
        est.boundary = cl.boundary;
        for (CoarseBlock* b : {&est.mean, &est.stderr_}) {
            b->p = Mat::Zero(nb, nb);
            b->r = Mat::Zero(nb, nb);
            b->g = Mat::Ones(nb, nb);
            b->len = Mat::Zero(nb, nb);
        }
        est.stderr_.g.setZero();
        est.counts = Mat::Zero(nb, nb);

        for (long i = 0; i < nb; ++i) {
            std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                              static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(i)};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            // Welford running means and squared deviations of (r, g, len) per exit state.
            Mat mean = Mat::Zero(nb, 3), m2 = Mat::Zero(nb, 3);
            Vec cnt = Vec::Zero(nb);
            std::int64_t done = 0;
            for (std::int64_t k = 0; k < options.n_traj; ++k) {
                int x = model.n_interior + static_cast<int>(i);
                double reward = 0.0, disc = 1.0;
                std::int64_t steps = 0;
                int exit = -1;
                while (steps < options.step_cap) {
                    double u = unif(rng);
                    const auto& cs = cum[x];
                    std::size_t idx = static_cast<std::size_t>(std::upper_bound(cs.begin(), cs.end(), u) - cs.begin());
                    if (idx >= cs.size()) idx = cs.size() - 1;
                    const Transition* t = which[x][idx];
                    reward += disc * t->r;
                    disc *= t->g;
                    ++steps;
                    x = t->next;
                    if (x >= model.n_interior) {
                        exit = x - model.n_interior;
                        break;
                    }
                }
                if (exit < 0) {
                    est.censored++;
                    continue;
                }
                ++done;
                cnt(exit) += 1.0;
                const double obs[3] = {reward, disc, static_cast<double>(steps)};
                for (int q = 0; q < 3; ++q) {
                    double delta = obs[q] - mean(exit, q);
                    mean(exit, q) += delta / cnt(exit);
                    m2(exit, q) += delta * (obs[q] - mean(exit, q));
                }
            }
            auto stderr_of = [](double m2, double n) { return n < 2 ? 0.0 : std::sqrt(m2 / (n - 1) / n); };
            const double total = static_cast<double>(std::max<std::int64_t>(done, 1));
            for (long j = 0; j < nb; ++j) {
                est.counts(i, j) = cnt(j);
                double p = cnt(j) / total;
                est.mean.p(i, j) = p;
                est.stderr_.p(i, j) = std::sqrt(p * (1.0 - p) / total);
                if (cnt(j) == 0) continue;
                est.mean.r(i, j) = mean(j, 0);
                est.mean.g(i, j) = mean(j, 1);
                est.mean.len(i, j) = mean(j, 2);
                est.stderr_.r(i, j) = stderr_of(m2(j, 0), cnt(j));
                est.stderr_.g(i, j) = stderr_of(m2(j, 1), cnt(j));
                est.stderr_.len(i, j) = stderr_of(m2(j, 2), cnt(j));
            }
        }
        out.push_back(std::move(est));
    }
    return out;
}

} // namespace mmdp
