#include "mmdp/partition.hpp"

#include "mmdp/error.hpp"
#include "mmdp/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>

namespace mmdp {

std::vector<int> Cluster::states() const {
    std::vector<int> out = interior;
    out.insert(out.end(), boundary.begin(), boundary.end());
    return out;
}

std::vector<int> Partition::owner(int n_states) const {
    std::vector<int> own(n_states, -1);
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (int s : clusters[c].interior) own[s] = static_cast<int>(c);
    return own;
}

void Partition::validate(const Mdp& mdp) const {
    const int n = mdp.n_states();
    std::vector<int> seen(n, 0);
    std::vector<bool> in_b(n, false);
    for (int b : bottlenecks) {
        if (b < 0 || b >= n) throw InvalidInput("partition: bottleneck id out of range");
        if (in_b[b]) throw InvalidInput("partition: repeated bottleneck");
        in_b[b] = true;
        seen[b]++;
    }
    std::vector<bool> attached(n, false);
    for (const auto& c : clusters) {
        for (int s : c.interior) {
            if (s < 0 || s >= n) throw InvalidInput("partition: interior id out of range");
            if (in_b[s]) throw InvalidInput("partition: bottleneck listed as interior");
            seen[s]++;
        }
        for (int b : c.boundary) {
            if (b < 0 || b >= n || !in_b[b]) throw InvalidInput("partition: boundary state is not a bottleneck");
            attached[b] = true;
        }
    }
    for (int s = 0; s < n; ++s) {
        if (seen[s] != 1) throw InvalidInput("partition: state " + std::to_string(s) + " covered " +
                                             std::to_string(seen[s]) + " times");
        if (mdp.is_terminal(s) && !in_b[s]) throw InvalidInput("partition: terminal state outside bottleneck set");
    }
    for (int b : bottlenecks)
        if (!attached[b]) throw InvalidInput("partition: bottleneck " + std::to_string(b) + " has no cluster");
}

// ---------------------------------------------------------------------------

Mat teleport(const Mat& p, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("teleport: eta must lie in (0,1)");
    const double n = static_cast<double>(p.rows());
    return ((1.0 - eta) * p).array() + eta / n;
}

Vec stationary_distribution(const Mat& p) {
    const long n = p.rows();
    if (n == 0 || p.cols() != n) throw InvalidInput("stationary_distribution: square matrix required");
    Mat a = p.transpose() - Mat::Identity(n, n);
    a.row(n - 1).setOnes();
    Vec rhs = Vec::Zero(n);
    rhs(n - 1) = 1.0;
    Vec mu;
    try {
        mu = solve_dense(a, rhs, "stationary_distribution");
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(std::string("stationary_distribution: chain not irreducible? ") + e.what());
    }
    double res = (p.transpose() * mu - mu).lpNorm<Eigen::Infinity>();
    if (res > 1e-10 || mu.minCoeff() <= 0.0)
        throw NumericalFailure("stationary_distribution: residual " + std::to_string(res) + " or non-positive entry");
    return mu / mu.sum();
}

Mat directed_laplacian(const Mat& p, const Vec& mu) {
    const long n = p.rows();
    if (mu.size() != n) throw InvalidInput("directed_laplacian: size mismatch");
    if (mu.minCoeff() <= 0.0) throw InvalidInput("directed_laplacian: stationary distribution has zero entries");
    Vec sq = mu.array().sqrt();
    Vec isq = sq.cwiseInverse();
    Mat a = sq.asDiagonal() * p * isq.asDiagonal();
    Mat l = Mat::Identity(n, n) - 0.5 * (a + a.transpose());
    return 0.5 * (l + l.transpose());
}

DiffusionEmbedding diffusion_map(const Mat& laplacian, int p_dims) {
    const long n = laplacian.rows();
    if (p_dims < 0 || p_dims >= n) throw InvalidInput("diffusion_map: p_dims must be below the state count");
    Eigen::SelfAdjointEigenSolver<Mat> es(laplacian);
    if (es.info() != Eigen::Success) throw NumericalFailure("diffusion_map: eigensolver failed");
    DiffusionEmbedding e;
    e.eigenvalues = es.eigenvalues().head(p_dims + 1);
    e.eigenvectors = es.eigenvectors().leftCols(p_dims + 1);
    e.coords.resize(n, p_dims);
    for (int k = 1; k <= p_dims; ++k) e.coords.col(k - 1) = e.eigenvectors.col(k) * (1.0 - e.eigenvalues(k));
    return e;
}

DiffusionEmbedding chain_embedding(const Mat& p, double eta, int p_dims) {
    Mat pt = teleport(p, eta);
    Vec mu = stationary_distribution(pt);
    return diffusion_map(directed_laplacian(pt, mu), p_dims);
}

double diffusion_distance(const DiffusionEmbedding& e, int i, int j) {
    return (e.coords.row(i) - e.coords.row(j)).norm();
}

std::vector<int> sign_align(const Mat& psi, const Mat& psi_tilde) {
    if (psi.cols() != psi_tilde.cols()) throw InvalidInput("sign_align: column counts differ");
    const long rows = std::min(psi.rows(), psi_tilde.rows());
    std::vector<int> tau(psi.cols(), 1);
    for (long k = 0; k < psi.cols(); ++k) {
        for (long i = 0; i < rows; ++i) {
            double x = psi(i, k), y = psi_tilde(i, k);
            if (std::abs(x) > 1e-9 && std::abs(y) > 1e-9) {
                tau[k] = (x > 0) == (y > 0) ? 1 : -1;
                break;
            }
        }
    }
    return tau;
}

namespace {

bool repeated(const Vec& ev, long k) {
    constexpr double gap = 1e-8;
    if (k > 0 && std::abs(ev(k) - ev(k - 1)) <= gap) return true;
    if (k + 1 < ev.size() && std::abs(ev(k + 1) - ev(k)) <= gap) return true;
    return false;
}

} // namespace

std::vector<int> sign_align(const DiffusionEmbedding& e1, const DiffusionEmbedding& e2) {
    const int p = std::min(e1.dims(), e2.dims());
    std::vector<int> raw = sign_align(e1.eigenvectors.middleCols(1, p), e2.eigenvectors.middleCols(1, p));
    for (int k = 1; k <= p; ++k)
        if (repeated(e1.eigenvalues, k) || repeated(e2.eigenvalues, k)) raw[k - 1] = 1;
    return raw;
}

Mat cross_distance(const DiffusionEmbedding& e1, const DiffusionEmbedding& e2, const std::vector<int>& tau) {
    const int p = std::min(e1.dims(), e2.dims());
    if (static_cast<int>(tau.size()) < p) throw InvalidInput("cross_distance: alignment too short");
    const long n1 = e1.eigenvectors.rows(), n2 = e2.eigenvectors.rows();
    Mat rho = Mat::Zero(n1, n2);
    for (int k = 1; k <= p; ++k) {
        double w = (1.0 - e1.eigenvalues(k)) * (1.0 - e2.eigenvalues(k));
        for (long u = 0; u < n1; ++u) {
            double a = tau[k - 1] * e1.eigenvectors(u, k);
            for (long v = 0; v < n2; ++v) {
                double d = a - e2.eigenvectors(v, k);
                rho(u, v) += w * d * d;
            }
        }
    }
    return rho;
}

// ---------------------------------------------------------------------------

double conductance(const Mat& p, const std::vector<bool>& in_z) {
    const long n = p.rows();
    double cross = 0.0, vz = 0.0, vc = 0.0;
    for (long i = 0; i < n; ++i) {
        double row = p.row(i).sum();
        (in_z[i] ? vz : vc) += row;
        if (!in_z[i]) continue;
        for (long j = 0; j < n; ++j)
            if (!in_z[j]) cross += p(i, j);
    }
    double denom = std::min(vz, vc);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return cross / denom;
}

Cut sweep_cut(const Mat& psi, const Mat& p) {
    const long n = p.rows();
    if (n < 2 || psi.cols() < 1) throw NoCutFound("sweep_cut: fewer than two states or no eigenvectors");
    Vec rows = p.rowwise().sum();
    const double total = rows.sum();
    Cut best;
    best.conductance = std::numeric_limits<double>::infinity();
    std::vector<long> order(n);
    for (long k = 0; k < psi.cols(); ++k) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](long a, long b) { return psi(a, k) < psi(b, k); });
        std::vector<bool> in_z(n, false);
        double cross = 0.0, vz = 0.0;
        for (long t = 0; t + 1 < n; ++t) {
            long v = order[t];
            // Moving v into Z: its edges to the rest now cross; edges from Z into v stop crossing.
            for (long j = 0; j < n; ++j) {
                if (j == v) continue;
                if (in_z[j])
                    cross -= p(j, v);
                else
                    cross += p(v, j);
            }
            in_z[v] = true;
            vz += rows(v);
            if (psi(order[t], k) == psi(order[t + 1], k)) continue;
            double denom = std::min(vz, total - vz);
            if (denom <= 0.0) continue;
            double phi = std::max(cross, 0.0) / denom;
            if (phi < best.conductance) {
                best.conductance = phi;
                best.in_z = in_z;
            }
        }
    }
    if (best.in_z.empty()) throw NoCutFound("sweep_cut: every threshold is degenerate");
    // Z is the lighter side so the result does not depend on eigenvector signs.
    double vz = 0.0;
    long nz = 0;
    for (long i = 0; i < n; ++i)
        if (best.in_z[i]) {
            vz += rows(i);
            ++nz;
        }
    double vc = total - vz;
    if (vz > vc + 1e-12 * total || (std::abs(vz - vc) <= 1e-12 * total && 2 * nz > n)) best.in_z.flip();
    best.conductance = conductance(p, best.in_z);
    return best;
}

std::vector<int> bottlenecks_from_cut(const Mat& p, const std::vector<bool>& in_z) {
    const long n = p.rows();
    std::set<int> side_z, side_c;
    for (long i = 0; i < n; ++i) {
        if (!in_z[i]) continue;
        for (long j = 0; j < n; ++j) {
            if (in_z[j]) continue;
            if (p(i, j) > 0.0 || p(j, i) > 0.0) {
                side_z.insert(static_cast<int>(i));
                side_c.insert(static_cast<int>(j));
            }
        }
    }
    const auto& pick = side_z.size() <= side_c.size() ? side_z : side_c;
    return {pick.begin(), pick.end()};
}

Reachability reachability_check(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary) {
    const int n = cluster_mdp.n_states();
    std::vector<std::vector<int>> rev(n);
    for (const auto& t : cluster_mdp.transitions())
        if (pi(t.s, t.a) > 0.0 && t.next != t.s) rev[t.next].push_back(t.s);
    std::vector<bool> reach(n, false), is_b(n, false);
    std::deque<int> q;
    for (int b : boundary) {
        if (b < 0 || b >= n) throw InvalidInput("reachability_check: boundary id out of range");
        is_b[b] = true;
        reach[b] = true;
        q.push_back(b);
    }
    while (!q.empty()) {
        int s = q.front();
        q.pop_front();
        for (int u : rev[s])
            if (!reach[u]) {
                reach[u] = true;
                q.push_back(u);
            }
    }
    Reachability out;
    for (int s = 0; s < n; ++s)
        if (!reach[s]) out.unreachable.push_back(s);
    out.ok = out.unreachable.empty();
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Support {
    std::vector<std::vector<int>> out; ///< s -> successors (no self loops)
    std::vector<std::vector<int>> in;
    std::vector<bool> absorbing;
};

Support support_graph(const Mdp& mdp, const StochasticPolicy& pi) {
    const int n = mdp.n_states();
    Support g{std::vector<std::vector<int>>(n), std::vector<std::vector<int>>(n), std::vector<bool>(n, true)};
    for (const auto& t : mdp.transitions()) {
        if (pi(t.s, t.a) <= 0.0 || t.next == t.s) continue;
        g.out[t.s].push_back(t.next);
        g.in[t.next].push_back(t.s);
        g.absorbing[t.s] = false;
    }
    for (int s = 0; s < n; ++s) {
        auto& o = g.out[s];
        std::sort(o.begin(), o.end());
        o.erase(std::unique(o.begin(), o.end()), o.end());
        auto& i = g.in[s];
        std::sort(i.begin(), i.end());
        i.erase(std::unique(i.begin(), i.end()), i.end());
    }
    return g;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void join(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

Partition partition_from_bottlenecks(const Mdp& mdp, const StochasticPolicy& pi, std::vector<int> bottlenecks) {
    pi.validate(mdp);
    const int n = mdp.n_states();
    Support g = support_graph(mdp, pi);
    std::vector<bool> in_b(n, false);
    for (int b : bottlenecks) {
        if (b < 0 || b >= n) throw InvalidInput("partition: bottleneck id out of range");
        in_b[b] = true;
    }
    for (int s = 0; s < n; ++s)
        if (mdp.is_terminal(s) || g.absorbing[s]) in_b[s] = true;

    Partition part;
    for (;;) {
        part.clusters.clear();
        std::vector<int> comp(n, -1);
        for (int s = 0; s < n; ++s) {
            if (in_b[s] || comp[s] >= 0) continue;
            int id = static_cast<int>(part.clusters.size());
            Cluster c;
            std::deque<int> q{s};
            comp[s] = id;
            std::set<int> bnd;
            while (!q.empty()) {
                int u = q.front();
                q.pop_front();
                c.interior.push_back(u);
                for (const auto* nb : {&g.out[u], &g.in[u]})
                    for (int v : *nb) {
                        if (in_b[v]) {
                            bnd.insert(v);
                        } else if (comp[v] < 0) {
                            comp[v] = id;
                            q.push_back(v);
                        }
                    }
            }
            std::sort(c.interior.begin(), c.interior.end());
            c.boundary.assign(bnd.begin(), bnd.end());
            part.clusters.push_back(std::move(c));
        }
        // Interior states that cannot reach their cluster boundary become bottlenecks.
        std::vector<bool> reach(n, false);
        std::deque<int> q;
        for (int s = 0; s < n; ++s)
            if (in_b[s]) {
                reach[s] = true;
                q.push_back(s);
            }
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            for (int v : g.in[u])
                if (!reach[v] && !in_b[v]) {
                    reach[v] = true;
                    q.push_back(v);
                }
        }
        // A closed system without any bottleneck stays one boundary-less cluster.
        if (std::none_of(in_b.begin(), in_b.end(), [](bool b) { return b; })) break;
        bool promoted = false;
        for (const auto& c : part.clusters)
            for (int s : c.interior)
                if (!reach[s]) {
                    in_b[s] = true;
                    promoted = true;
                    break;
                }
        if (!promoted) break;
    }

    for (int s = 0; s < n; ++s)
        if (in_b[s]) part.bottlenecks.push_back(s);

    // Cover orphan bottlenecks and bottleneck-to-bottleneck edges that no cluster sees.
    std::vector<std::vector<int>> member(n);
    for (std::size_t c = 0; c < part.clusters.size(); ++c)
        for (int b : part.clusters[c].boundary) member[b].push_back(static_cast<int>(c));
    auto shares_cluster = [&](int a, int b) {
        for (int x : member[a])
            if (std::find(member[b].begin(), member[b].end(), x) != member[b].end()) return true;
        return false;
    };
    UnionFind uf(n);
    std::vector<bool> extra(n, false);
    for (int b : part.bottlenecks) {
        if (member[b].empty()) extra[b] = true;
        for (int v : g.out[b]) {
            if (!in_b[v] || shares_cluster(b, v)) continue;
            extra[b] = extra[v] = true;
            uf.join(b, v);
        }
    }
    std::map<int, std::vector<int>> groups;
    for (int b : part.bottlenecks)
        if (extra[b]) groups[uf.find(b)].push_back(b);
    std::vector<Cluster> edge_clusters;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        edge_clusters.push_back({{}, members});
    }
    std::sort(edge_clusters.begin(), edge_clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.boundary.front() < b.boundary.front(); });
    for (auto& c : edge_clusters) part.clusters.push_back(std::move(c));
    return part;
}

namespace {

/// Dense restriction of P^π to `nodes` with the leaving mass folded onto the diagonal.
Mat restricted_chain(const Mdp& mdp, const StochasticPolicy& pi, const std::vector<int>& nodes,
                     std::vector<int>& local) {
    const long m = static_cast<long>(nodes.size());
    for (long k = 0; k < m; ++k) local[nodes[k]] = static_cast<int>(k);
    Mat p = Mat::Zero(m, m);
    for (long k = 0; k < m; ++k) {
        int s = nodes[k];
        for (int a : mdp.feasible(s)) {
            double w = pi(s, a);
            if (w == 0.0) continue;
            for (const auto& t : mdp.outcomes(s, a)) {
                int j = local[t.next];
                p(k, j >= 0 ? j : k) += w * t.p;
            }
        }
    }
    for (long k = 0; k < m; ++k) local[nodes[k]] = -1;
    return p;
}

std::vector<std::vector<int>> components(const Mat& p, const std::vector<int>& nodes) {
    const long m = static_cast<long>(nodes.size());
    std::vector<int> comp(m, -1);
    std::vector<std::vector<int>> out;
    for (long s = 0; s < m; ++s) {
        if (comp[s] >= 0) continue;
        int id = static_cast<int>(out.size());
        out.emplace_back();
        std::deque<long> q{s};
        comp[s] = id;
        while (!q.empty()) {
            long u = q.front();
            q.pop_front();
            out[id].push_back(nodes[u]);
            for (long v = 0; v < m; ++v)
                if (comp[v] < 0 && (p(u, v) > 0.0 || p(v, u) > 0.0)) {
                    comp[v] = id;
                    q.push_back(v);
                }
        }
        std::sort(out[id].begin(), out[id].end());
    }
    return out;
}

struct Splitter {
    const Mdp& mdp;
    const StochasticPolicy& pi;
    const PartitionConfig& cfg;
    std::vector<int> local;
    std::vector<std::pair<int, std::vector<int>>> cuts; // (depth, bottlenecks)

    void split(const std::vector<int>& nodes, int depth) {
        if (static_cast<int>(nodes.size()) < cfg.min_cluster_size || depth >= cfg.max_depth) return;
        Mat p = restricted_chain(mdp, pi, nodes, local);
        auto comps = components(p, nodes);
        if (comps.size() > 1) {
            for (const auto& c : comps) split(c, depth);
            return;
        }
        const long m = static_cast<long>(nodes.size());
        int k = std::min<long>(cfg.K, m - 1);
        DiffusionEmbedding e = chain_embedding(p, cfg.eta, k);
        Cut cut;
        try {
            cut = sweep_cut(e.eigenvectors.middleCols(1, k), p);
        } catch (const NoCutFound&) {
            return;
        }
        if (cut.conductance > cfg.max_conductance) return;
        std::vector<int> bn_local = bottlenecks_from_cut(p, cut.in_z);
        std::vector<bool> is_bn(m, false);
        std::vector<int> bn;
        for (int i : bn_local) {
            is_bn[i] = true;
            bn.push_back(nodes[i]);
        }
        cuts.emplace_back(depth, bn);
        std::vector<int> z, zc;
        for (long i = 0; i < m; ++i) {
            if (is_bn[i]) continue;
            (cut.in_z[i] ? z : zc).push_back(nodes[i]);
        }
        split(z, depth + 1);
        split(zc, depth + 1);
    }
};

} // namespace

std::vector<Partition> spectral_partition(const Mdp& mdp, const StochasticPolicy& pi, const PartitionConfig& config) {
    pi.validate(mdp);
    if (config.K < 1 || config.max_depth < 0 || !(config.eta > 0.0 && config.eta < 1.0))
        throw InvalidInput("spectral_partition: invalid configuration");
    const int n = mdp.n_states();
    Support g = support_graph(mdp, pi);
    std::vector<int> roots;
    for (int s = 0; s < n; ++s)
        if (!mdp.is_terminal(s) && !g.absorbing[s]) roots.push_back(s);

    Splitter sp{mdp, pi, config, std::vector<int>(n, -1), {}};
    sp.split(roots, 0);

    int deepest = -1;
    for (const auto& c : sp.cuts) deepest = std::max(deepest, c.first);
    const int n_scales = std::max(1, deepest + 1);

    // Coarsest scale first so that finer scales inherit every promoted bottleneck.
    std::vector<Partition> scales(n_scales);
    std::vector<int> inherited;
    for (int j = n_scales - 1; j >= 0; --j) {
        int max_cut_depth = deepest - j;
        std::set<int> b(inherited.begin(), inherited.end());
        for (const auto& [d, bn] : sp.cuts)
            if (d <= max_cut_depth) b.insert(bn.begin(), bn.end());
        scales[j] = partition_from_bottlenecks(mdp, pi, {b.begin(), b.end()});
        inherited = scales[j].bottlenecks;
    }
    return scales;
}

} // namespace mmdp
