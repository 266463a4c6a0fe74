#include "mmdp/solver.hpp"

#include "mmdp/error.hpp"
#include "mmdp/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mmdp {

const Mdp& Hierarchy::mdp(int j) const {
    if (j < 0 || j > static_cast<int>(levels.size())) throw InvalidInput("Hierarchy::mdp: level out of range");
    return j == 0 ? root : levels[j - 1].coarse.mdp;
}

namespace {

PolicyPool make_pools(const Mdp& mdp, const Partition& p, PoolMode mode, const PoolConfig& pool) {
    return mode == PoolMode::diffusion ? diffusion_pool(mdp, p) : algorithm3_pool(mdp, p, pool);
}

bool has_cut(const Mdp& mdp, const Partition& p) {
    bool interior = false;
    for (const auto& c : p.clusters)
        if (!c.interior.empty()) interior = true;
    if (!interior) return false;
    for (int b : p.bottlenecks)
        if (!mdp.is_terminal(b)) return true;
    return false;
}

std::vector<int> to_coarse_ids(const std::vector<int>& ids, const std::vector<int>& coarse_states) {
    std::vector<int> pos;
    for (int s : ids) {
        auto it = std::find(coarse_states.begin(), coarse_states.end(), s);
        if (it == coarse_states.end()) throw InvalidInput("hierarchy: coarser bottleneck set is not nested");
        pos.push_back(static_cast<int>(it - coarse_states.begin()));
    }
    std::sort(pos.begin(), pos.end());
    return pos;
}

} // namespace

Hierarchy build_hierarchy(const Mdp& mdp, const HierarchyConfig& config) {
    if (config.depth < 0) throw InvalidInput("build_hierarchy: negative depth");
    Hierarchy h;
    h.root = mdp;
    h.pool_mode = config.pool_mode;
    // Bottleneck sets for the next levels, in ids of the current level.
    std::vector<std::vector<int>> pending;
    for (int j = 0; j < config.depth; ++j) {
        const Mdp& m = h.mdp(j);
        if (config.max_top_states > 0 && m.n_states() <= config.max_top_states) break;
        StochasticPolicy uniform = StochasticPolicy::uniform(m);
        Partition part;
        if (pending.empty()) {
            std::vector<Partition> scales = spectral_partition(m, uniform, config.partition);
            part = scales[0];
            for (std::size_t k = 1; k < scales.size(); ++k) pending.push_back(scales[k].bottlenecks);
        } else {
            part = partition_from_bottlenecks(m, uniform, pending.front());
            pending.erase(pending.begin());
        }
        if (!has_cut(m, part)) {
            h.truncated = true;
            h.note = "no bottlenecks found at level " + std::to_string(j);
            break;
        }
        Level lvl;
        lvl.partition = std::move(part);
        lvl.pools = make_pools(m, lvl.partition, config.pool_mode, config.pool);
        lvl.coarse = compress_mdp(m, lvl.partition, lvl.pools);
        for (auto& b : pending) b = to_coarse_ids(b, lvl.coarse.states);
        h.levels.push_back(std::move(lvl));
    }
    return h;
}

Hierarchy build_hierarchy_from_bottlenecks(const Mdp& mdp, const Partition& level0,
                                           const std::vector<std::vector<int>>& coarser, PoolMode pool_mode,
                                           const PoolConfig& pool) {
    level0.validate(mdp);
    Hierarchy h;
    h.root = mdp;
    h.pool_mode = pool_mode;
    std::vector<std::vector<int>> pending = coarser;
    Partition part = level0;
    for (std::size_t j = 0;; ++j) {
        const Mdp& m = h.mdp(static_cast<int>(j));
        Level lvl;
        lvl.partition = std::move(part);
        lvl.pools = make_pools(m, lvl.partition, pool_mode, pool);
        lvl.coarse = compress_mdp(m, lvl.partition, lvl.pools);
        for (auto& b : pending) b = to_coarse_ids(b, lvl.coarse.states);
        h.levels.push_back(std::move(lvl));
        if (pending.empty()) break;
        const Mdp& next = h.mdp(static_cast<int>(j) + 1);
        part = partition_from_bottlenecks(next, StochasticPolicy::uniform(next), pending.front());
        pending.erase(pending.begin());
    }
    return h;
}

Variant parse_variant(const std::string& s) {
    if (s == "oo") return Variant::oo;
    if (s == "oc") return Variant::oc;
    if (s == "or") return Variant::or_;
    if (s == "co") return Variant::co;
    if (s == "cc") return Variant::cc;
    if (s == "cr") return Variant::cr;
    throw InvalidInput("unknown solver variant '" + s + "'");
}

std::string variant_name(Variant v) {
    switch (v) {
    case Variant::oo: return "oo";
    case Variant::oc: return "oc";
    case Variant::or_: return "or";
    case Variant::co: return "co";
    case Variant::cc: return "cc";
    case Variant::cr: return "cr";
    }
    return "?";
}

void validate(const SolveConfig& c) {
    if (!(c.lambda > 0.0 && c.lambda <= 1.0)) throw InvalidInput("solve: lambda must lie in (0,1]");
    if (!(c.tol_interior > 0.0)) throw InvalidInput("solve: tol_interior must be positive");
    if (!(c.tol_global >= 0.0)) throw InvalidInput("solve: tol_global must be nonnegative");
    if (c.max_outer_iters < 1) throw InvalidInput("solve: max_outer_iters must be positive");
    if (c.n_boundary_updates < 0) throw InvalidInput("solve: n_boundary_updates must be nonnegative");
}

int SolveTrace::iterations_to(double tol) const {
    for (const auto& r : rows)
        if (r.linf_error && *r.linf_error <= tol) return r.iter;
    return -1;
}

int auto_boundary_updates(double gamma_bar) {
    if (!(gamma_bar > 0.0 && gamma_bar < 1.0)) throw InvalidInput("auto_boundary_updates: need 0 < gamma < 1");
    int n = 1;
    double g = gamma_bar;
    while (!(g < 0.5)) {
        g *= gamma_bar;
        ++n;
    }
    return n;
}

namespace {

/// Dense interior system of one cluster; `local` maps level ids to interior indices.
Vec solve_interior(const Mdp& mdp, const std::vector<int>& interior, const std::vector<int>& local,
                   const StochasticPolicy& pi, const ValueFunction& v, const std::string& context) {
    const long n = static_cast<long>(interior.size());
    Mat a = Mat::Identity(n, n);
    Vec rhs = Vec::Zero(n);
    for (long i = 0; i < n; ++i) {
        int s = interior[i];
        for (int act : mdp.feasible(s)) {
            double w = pi(s, act);
            if (w == 0.0) continue;
            for (const auto& t : mdp.outcomes(s, act)) {
                rhs(i) += w * t.p * t.r;
                int j = local[t.next];
                if (j >= 0)
                    a(i, j) -= w * t.p * t.g;
                else
                    rhs(i) += w * t.p * t.g * v(t.next);
            }
        }
    }
    return solve_dense(a, rhs, context);
}

} // namespace

Vec interior_solve(const Mdp& cluster_mdp, int n_interior, const StochasticPolicy& pi, const Vec& v_boundary) {
    const int m = cluster_mdp.n_states();
    if (n_interior < 0 || n_interior > m || v_boundary.size() != m - n_interior)
        throw InvalidInput("interior_solve: boundary value size mismatch");
    pi.validate(cluster_mdp);
    std::vector<int> interior(n_interior), local(m, -1);
    for (int k = 0; k < n_interior; ++k) interior[k] = local[k] = k;
    ValueFunction v = ValueFunction::Zero(m);
    v.tail(m - n_interior) = v_boundary;
    return solve_interior(cluster_mdp, interior, local, pi, v, "interior_solve");
}

Vec cluster_interior_values(const Mdp& mdp, const Cluster& cluster, const StochasticPolicy& pi,
                            const ValueFunction& v) {
    std::vector<int> local(mdp.n_states(), -1);
    for (std::size_t k = 0; k < cluster.interior.size(); ++k) local[cluster.interior[k]] = static_cast<int>(k);
    return solve_interior(mdp, cluster.interior, local, pi, v, "interior solve");
}

ValueFunction boundary_update_averaging(const Mdp& mdp, const StochasticPolicy& pi, const ValueFunction& v,
                                        const std::vector<int>& bottlenecks, int n_updates) {
    ValueFunction out = v;
    for (int k = 0; k < n_updates; ++k) out = bellman_backup(mdp, pi, out, bottlenecks);
    return out;
}

Vec boundary_update_determination(const Mdp& mdp, const StochasticPolicy& pi, const ValueFunction& v,
                                  const std::vector<int>& bottlenecks) {
    const int nb = static_cast<int>(bottlenecks.size());
    std::vector<int> local(mdp.n_states(), -1);
    for (int k = 0; k < nb; ++k) local[bottlenecks[k]] = k;
    std::vector<Eigen::Triplet<double>> trip;
    Vec rhs = Vec::Zero(nb);
    for (int k = 0; k < nb; ++k) {
        int s = bottlenecks[k];
        trip.emplace_back(k, k, 1.0);
        for (int a : mdp.feasible(s)) {
            double w = pi(s, a);
            if (w == 0.0) continue;
            for (const auto& t : mdp.outcomes(s, a)) {
                rhs(k) += w * t.p * t.r;
                int j = local[t.next];
                if (j >= 0)
                    trip.emplace_back(k, j, -w * t.p * t.g);
                else
                    rhs(k) += w * t.p * t.g * v(t.next);
            }
        }
    }
    SpMat a(nb, nb);
    a.setFromTriplets(trip.begin(), trip.end());
    return solve_sparse(a, rhs, "boundary value determination");
}

namespace {

/// Current policy restricted to a cluster, regularized only when it cannot reach the boundary.
StochasticPolicy local_policy(const ClusterModel& model, const StochasticPolicy& pi, double lambda) {
    StochasticPolicy lp = restrict_policy(pi, model.states);
    if (!reachability_check(model.mdp, lp, model.boundary_local()).ok)
        lp = regularize_policy(model.mdp, lp, lambda);
    return lp;
}

} // namespace

RecompressResult boundary_update_recompress(const Hierarchy& h, int level, const StochasticPolicy& current_pi,
                                            bool augment, PolicyPool* accumulated, double lambda) {
    if (level < 0 || level >= static_cast<int>(h.levels.size()))
        throw InvalidInput("boundary_update_recompress: level has no coarser level");
    const Mdp& m = h.mdp(level);
    const Level& lvl = h.levels[level];
    const Partition& part = lvl.partition;
    PolicyPool local_acc;
    PolicyPool& acc = accumulated ? *accumulated : local_acc;
    if (acc.size() != part.clusters.size()) acc.assign(part.clusters.size(), {});

    PolicyPool pools(part.clusters.size());
    for (std::size_t c = 0; c < part.clusters.size(); ++c) {
        ClusterModel model = localize(m, part.clusters[c]);
        StochasticPolicy lp = local_policy(model, current_pi, lambda);
        if (augment) {
            bool seen = false;
            for (const auto& q : acc[c]) seen = seen || q.pi == lp;
            for (const auto& q : lvl.pools[c]) seen = seen || q.pi == lp;
            if (!seen) acc[c].push_back({lp, -1, std::numeric_limits<double>::quiet_NaN()});
            pools[c] = lvl.pools[c];
            pools[c].insert(pools[c].end(), acc[c].begin(), acc[c].end());
        } else {
            pools[c] = {PoolPolicy{lp, -1, std::numeric_limits<double>::quiet_NaN()}};
        }
    }
    RecompressResult out;
    out.coarse = compress_mdp(m, part, pools);
    auto pi = policy_iteration(out.coarse.mdp, StochasticPolicy::uniform(out.coarse.mdp));
    out.values = pi.values;
    return out;
}

LevelResult solve_level(const Hierarchy& h, int level, const Vec& v_coarse, const StochasticPolicy& pi0,
                        const SolveConfig& config, const ValueFunction* reference) {
    validate(config);
    const Mdp& m = h.mdp(level);
    if (level >= static_cast<int>(h.levels.size())) throw InvalidInput("solve_level: level has no partition");
    const Partition& part = h.levels[level].partition;
    const std::vector<int>& B = part.bottlenecks;
    if (v_coarse.size() != static_cast<long>(B.size())) throw InvalidInput("solve_level: v_coarse size mismatch");
    pi0.validate(m);
    if (reference && reference->size() != m.n_states()) throw InvalidInput("solve_level: reference size mismatch");

    const bool interior_to_convergence = config.variant == Variant::co || config.variant == Variant::cc ||
                                         config.variant == Variant::cr;
    const char boundary_rule = variant_name(config.variant)[1];
    const int n_updates =
        config.n_boundary_updates > 0 ? config.n_boundary_updates : auto_boundary_updates(m.max_discount());

    std::vector<std::vector<int>> local(part.clusters.size());
    {
        for (std::size_t c = 0; c < part.clusters.size(); ++c) {
            local[c].assign(m.n_states(), -1);
            const auto& in = part.clusters[c].interior;
            for (std::size_t k = 0; k < in.size(); ++k) local[c][in[k]] = static_cast<int>(k);
        }
    }

    LevelResult res;
    ValueFunction v = ValueFunction::Zero(m.n_states());
    for (std::size_t k = 0; k < B.size(); ++k) v(B[k]) = v_coarse(static_cast<long>(k));
    StochasticPolicy pi = pi0;
    PolicyPool accumulated;
    const auto t0 = std::chrono::steady_clock::now();

    for (int iter = 1; iter <= config.max_outer_iters; ++iter) {
        const ValueFunction v_prev = v;
        const StochasticPolicy pi_prev = pi;

        // Interior pass: clusters only read their own interior and boundary, so order is irrelevant.
        double interior_change = 0.0, interior_scale = 0.0;
        for (std::size_t c = 0; c < part.clusters.size(); ++c) {
            const auto& in = part.clusters[c].interior;
            if (in.empty()) continue;
            Vec vq = solve_interior(m, in, local[c], pi, v, "interior solve (cluster " + std::to_string(c) + ")");
            for (std::size_t k = 0; k < in.size(); ++k) {
                interior_change = std::max(interior_change, std::abs(vq(static_cast<long>(k)) - v(in[k])));
                interior_scale = std::max(interior_scale, std::abs(vq(static_cast<long>(k))));
                v(in[k]) = vq(static_cast<long>(k));
            }
        }
        StochasticPolicy greedy = greedy_policy(m, v, std::vector<int>{});
        for (const auto& cl : part.clusters)
            for (int s : cl.interior) greedy.set_point_mass(s, greedy_action(m, v, s));
        auto blend_rows = [&](const std::vector<int>& states) {
            for (int s : states)
                pi.probs().row(s) =
                    config.lambda * greedy.probs().row(s) + (1.0 - config.lambda) * pi.probs().row(s);
        };
        for (const auto& cl : part.clusters) blend_rows(cl.interior);
        bool interior_stable = true;
        for (const auto& cl : part.clusters)
            for (int s : cl.interior)
                if ((pi.probs().row(s) - pi_prev.probs().row(s)).cwiseAbs().maxCoeff() > 1e-12) interior_stable = false;

        // Interior values start unset, so the first pass is judged by policy stability alone.
        bool interior_done = !interior_to_convergence || interior_stable ||
                             (iter > 1 && interior_change <= config.tol_interior * interior_scale);
        if (interior_done) {
            for (int b : B) greedy.set_point_mass(b, greedy_action(m, v, b));
            blend_rows(B);
            if (boundary_rule == 'o') {
                v = boundary_update_averaging(m, pi, v, B, n_updates);
            } else if (boundary_rule == 'c') {
                Vec vb = boundary_update_determination(m, pi, v, B);
                for (std::size_t k = 0; k < B.size(); ++k) v(B[k]) = vb(static_cast<long>(k));
            } else {
                bool augment = h.pool_mode == PoolMode::pool;
                RecompressResult rc =
                    boundary_update_recompress(h, level, pi, augment, &accumulated, config.recompress_lambda);
                for (std::size_t k = 0; k < B.size(); ++k) v(B[k]) = rc.values(static_cast<long>(k));
            }
        }

        TraceRow row;
        row.iter = iter;
        for (int s = 0; s < m.n_states(); ++s)
            if ((pi.probs().row(s) - pi_prev.probs().row(s)).cwiseAbs().maxCoeff() > 1e-12) ++row.policy_changes;
        if (reference) {
            row.l2_error = (v - *reference).norm();
            row.linf_error = (v - *reference).lpNorm<Eigen::Infinity>();
        }
        row.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        res.trace.rows.push_back(row);
        res.iterations = iter;

        double change = 0.0;
        if (iter == 1) {
            for (int b : B) change = std::max(change, std::abs(v(b) - v_prev(b)));
        } else {
            change = (v - v_prev).lpNorm<Eigen::Infinity>();
        }
        if (interior_done && row.policy_changes == 0 && change <= config.tol_global) {
            res.converged = true;
            break;
        }
    }
    res.policy = std::move(pi);
    res.values = std::move(v);
    return res;
}

HierarchyResult solve_hierarchy(const Hierarchy& h, const SolveConfig& config, const ValueFunction* reference,
                                const SolveInit& init) {
    validate(config);
    const int top = static_cast<int>(h.levels.size());
    HierarchyResult out;
    const Mdp& mt = h.mdp(top);
    auto it0 = init.pi0.find(top);
    out.top = policy_iteration(mt, it0 != init.pi0.end() ? it0->second : StochasticPolicy::uniform(mt));
    out.traces.assign(top, {});
    out.converged.assign(top, true);
    StochasticPolicy pi = out.top.policy;
    ValueFunction v = out.top.values;
    for (int j = top - 1; j >= 0; --j) {
        const Mdp& m = h.mdp(j);
        auto vc = init.v_coarse.find(j);
        Vec v_coarse = vc != init.v_coarse.end() ? vc->second : v;
        if (auto ov = init.v_coarse_overrides.find(j); ov != init.v_coarse_overrides.end())
            for (const auto& [k, val] : ov->second) {
                if (k < 0 || k >= v_coarse.size()) throw InvalidInput("solve_hierarchy: override index out of range");
                v_coarse(k) = val;
            }
        auto pc = init.pi0.find(j);
        StochasticPolicy pi0 = pc != init.pi0.end() ? pc->second : StochasticPolicy::uniform(m);
        LevelResult lr = solve_level(h, j, v_coarse, pi0, config, j == 0 ? reference : nullptr);
        out.traces[j] = std::move(lr.trace);
        out.converged[j] = lr.converged;
        pi = std::move(lr.policy);
        v = std::move(lr.values);
    }
    out.policy = std::move(pi);
    out.values = std::move(v);
    return out;
}

} // namespace mmdp
