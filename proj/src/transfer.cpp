#include "mmdp/transfer.hpp"

#include "mmdp/error.hpp"
#include "mmdp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace mmdp {

Mat cluster_chain(const Mdp& mdp, const Cluster& cluster) {
    std::vector<int> states = cluster.states();
    Mdp local = restrict(mdp, states);
    return policy_average(local, StochasticPolicy::uniform(local)).p;
}

namespace {

int embed_dims(long n1, long n2) { return static_cast<int>(std::min<long>(10, std::min(n1, n2) - 1)); }

struct EmbeddedPair {
    DiffusionEmbedding e1, e2;
    std::vector<int> tau;
};

EmbeddedPair embed_pair(const Mat& p1, const Mat& p2, double eta) {
    if (p1.rows() < 2 || p2.rows() < 2) throw InvalidInput("cluster embedding: clusters need at least 2 states");
    int dims = embed_dims(p1.rows(), p2.rows());
    EmbeddedPair e{chain_embedding(p1, eta, dims), chain_embedding(p2, eta, dims), {}};
    e.tau = sign_align(e.e1, e.e2);
    return e;
}

} // namespace

double cluster_distance(const Mat& p1, const Mat& p2, double eta) {
    EmbeddedPair e = embed_pair(p1, p2, eta);
    Mat x1 = e.e1.coords;
    for (int k = 0; k < x1.cols(); ++k) x1.col(k) *= e.tau[k];
    const Mat& x2 = e.e2.coords;
    double sum = 0.0;
    for (long i = 0; i < x1.rows(); ++i)
        for (long j = 0; j < x2.rows(); ++j) sum += (x1.row(i) - x2.row(j)).norm();
    return sum / static_cast<double>(x1.rows() * x2.rows());
}

double cluster_match_score(const Mat& p1, const Mat& p2, double eta) {
    EmbeddedPair e = embed_pair(p1, p2, eta);
    Mat x1 = e.e1.coords * std::sqrt(static_cast<double>(p1.rows()));
    Mat x2 = e.e2.coords * std::sqrt(static_cast<double>(p2.rows()));
    for (int k = 0; k < x1.cols(); ++k) x1.col(k) *= e.tau[k];
    auto mean_dist = [](const Mat& a, const Mat& b) {
        double sum = 0.0;
        for (long i = 0; i < a.rows(); ++i)
            for (long j = 0; j < b.rows(); ++j) sum += (a.row(i) - b.row(j)).norm();
        return sum / static_cast<double>(a.rows() * b.rows());
    };
    return 2.0 * mean_dist(x1, x2) - mean_dist(x1, x1) - mean_dist(x2, x2);
}


std::vector<ClusterPair> match_clusters(const Hierarchy& h1, const Hierarchy& h2, int j, double eta) {
    if (j < 0 || j >= static_cast<int>(h1.levels.size()) || j >= static_cast<int>(h2.levels.size()))
        throw InvalidInput("match_clusters: scale " + std::to_string(j) + " missing from a hierarchy");
    const Mdp& m1 = h1.mdp(j);
    const Mdp& m2 = h2.mdp(j);
    const auto& cl1 = h1.levels[j].partition.clusters;
    const auto& cl2 = h2.levels[j].partition.clusters;
    std::vector<Mat> chains1;
    for (const auto& c : cl1) chains1.push_back(cluster_chain(m1, c));
    std::vector<ClusterPair> out;
    for (std::size_t b = 0; b < cl2.size(); ++b) {
        Mat p2 = cluster_chain(m2, cl2[b]);
        if (p2.rows() < 2) continue;
        ClusterPair best{-1, static_cast<int>(b), std::numeric_limits<double>::infinity()};
        std::vector<double> scores(cl1.size(), std::numeric_limits<double>::infinity());
        for (std::size_t a = 0; a < cl1.size(); ++a) {
            if (chains1[a].rows() < 2) continue;
            scores[a] = cluster_match_score(chains1[a], p2, eta);
            if (scores[a] < best.distance) best = {static_cast<int>(a), static_cast<int>(b), scores[a]};
        }
        // Congruent clusters score equally up to roundoff; prefer the nearest cluster id.
        if (best.c1 >= 0) {
            const double slack = 1e-9 * (1.0 + std::abs(best.distance));
            for (std::size_t a = 0; a < cl1.size(); ++a)
                if (scores[a] <= best.distance + slack &&
                    std::abs(static_cast<int>(a) - best.c2) < std::abs(best.c1 - best.c2))
                    best.c1 = static_cast<int>(a);
            best.distance = scores[best.c1];
        }
        if (best.c1 >= 0) out.push_back(best);
    }
    return out;
}

Correspondence parse_correspondence(const std::string& s) {
    if (s == "affinity") return Correspondence::affinity;
    if (s == "identity") return Correspondence::identity;
    if (s == "ordinal") return Correspondence::ordinal;
    throw InvalidInput("unknown correspondence '" + s + "'");
}

std::string correspondence_name(Correspondence c) {
    switch (c) {
    case Correspondence::affinity: return "affinity";
    case Correspondence::identity: return "identity";
    case Correspondence::ordinal: return "ordinal";
    }
    return "?";
}

namespace {

bool parse_xy(const std::string& label, int& x, int& y) {
    std::istringstream in(label);
    char comma = 0;
    return static_cast<bool>(in >> x >> comma >> y) && comma == ',' && in.peek() == EOF;
}

/// Local indices [begin, end) of a cluster's states sorted by column scan (x, then y).
std::vector<int> column_scan(const Mdp& m, const std::vector<int>& states, int offset) {
    std::vector<std::tuple<int, int, int, int>> keys;
    for (std::size_t k = 0; k < states.size(); ++k) {
        int x = 0, y = 0;
        if (m.labels().empty() || !parse_xy(m.labels()[states[k]], x, y)) {
            x = states[k];
            y = 0;
        }
        keys.emplace_back(x, y, states[k], offset + static_cast<int>(k));
    }
    std::sort(keys.begin(), keys.end());
    std::vector<int> out;
    for (const auto& key : keys) out.push_back(std::get<3>(key));
    return out;
}

} // namespace

std::vector<int> match_states(const Mdp& m1, const Cluster& c1, const Mdp& m2, const Cluster& c2,
                              Correspondence mode, double eta) {
    std::vector<int> s1 = c1.states(), s2 = c2.states();
    if (s1.empty() || s2.empty()) throw NoCorrespondence("match_states: empty cluster");
    std::vector<int> out(s2.size(), -1);
    switch (mode) {
    case Correspondence::identity: {
        bool labelled = !m1.labels().empty() && !m2.labels().empty();
        for (std::size_t k = 0; k < s2.size(); ++k)
            for (std::size_t i = 0; i < s1.size(); ++i) {
                bool same = labelled ? m1.labels()[s1[i]] == m2.labels()[s2[k]] : s1[i] == s2[k];
                if (same) {
                    out[k] = static_cast<int>(i);
                    break;
                }
            }
        break;
    }
    case Correspondence::ordinal: {
        const int n1 = static_cast<int>(c1.interior.size()), n2 = static_cast<int>(c2.interior.size());
        std::vector<int> a = column_scan(m1, c1.interior, 0), b = column_scan(m2, c2.interior, 0);
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) out[b[k]] = a[k];
        a = column_scan(m1, c1.boundary, n1);
        b = column_scan(m2, c2.boundary, n2);
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) out[b[k]] = a[k];
        break;
    }
    case Correspondence::affinity: {
        if (s1.size() < 2 || s2.size() < 2) throw NoCorrespondence("match_states: affinity needs 2 states per cluster");
        EmbeddedPair e = embed_pair(cluster_chain(m1, c1), cluster_chain(m2, c2), eta);
        Mat rho = cross_distance(e.e1, e.e2, e.tau); // |c1| x |c2|, squared distances
        std::vector<double> d;
        for (long i = 0; i < rho.size(); ++i) d.push_back(std::sqrt(std::max(0.0, rho.data()[i])));
        std::nth_element(d.begin(), d.begin() + static_cast<long>(d.size() / 2), d.end());
        double sigma = d[d.size() / 2];
        if (!(sigma > 0.0)) sigma = 1.0;
        Mat w = (-rho.transpose().array() / (sigma * sigma)).exp().matrix(); // rows: c2
        if (!w.allFinite() || w.maxCoeff() <= 0.0) throw NoCorrespondence("match_states: empty affinity");
        out = max_weight_assignment(w);
        break;
    }
    }
    return out;
}

StateMap StateMap::from_pair(int n1, int n2, const Cluster& c1, const Cluster& c2, const std::vector<int>& eta) {
    std::vector<int> s1 = c1.states(), s2 = c2.states();
    if (eta.size() != s2.size()) throw InvalidInput("StateMap: correspondence size mismatch");
    StateMap m{std::vector<int>(n2, -1), std::vector<int>(n1, -1)};
    for (std::size_t k = 0; k < s2.size(); ++k) {
        if (eta[k] < 0) continue;
        int src = s1.at(eta[k]);
        if (m.from_source[src] >= 0) throw InvalidInput("StateMap: correspondence is not injective");
        m.to_source[s2[k]] = src;
        m.from_source[src] = s2[k];
    }
    return m;
}

StateMap StateMap::identity(int n) {
    StateMap m{std::vector<int>(n), std::vector<int>(n)};
    for (int i = 0; i < n; ++i) m.to_source[i] = m.from_source[i] = i;
    return m;
}

std::optional<int> map_action(int w, const StochasticPolicy& pi_star, const Mdp& m1, const Mdp& m2,
                              const StateMap& eta) {
    int s = eta.to_source.at(w);
    if (s < 0) throw InvalidInput("map_action: state outside the correspondence domain");
    int a1 = pi_star.argmax(s);
    double best = 0.0;
    for (const auto& t : m1.outcomes(s, a1)) best = std::max(best, t.p);
    if (best <= 0.0) return std::nullopt;
    // Equally likely successors: a stay is dropped in favour of the moves, then their mass is pooled.
    std::vector<int> succ;
    for (const auto& t : m1.outcomes(s, a1))
        if (t.p >= best - 1e-12) succ.push_back(t.next);
    if (succ.size() > 1) std::erase(succ, s);
    std::vector<int> targets;
    for (int x : succ)
        if (eta.from_source[x] >= 0) targets.push_back(eta.from_source[x]);
    if (targets.empty()) return std::nullopt;
    int a_best = -1;
    double p_best = 0.0;
    for (int a : m2.feasible(w)) {
        double p = 0.0;
        for (int w2 : targets) {
            long k = m2.find(w, a, w2);
            if (k >= 0) p += m2.transitions()[k].p;
        }
        if (p > p_best + 1e-12) {
            p_best = p;
            a_best = a;
        }
    }
    if (a_best < 0) return std::nullopt;
    return a_best;
}

TransferredPolicy transfer_policy(const StochasticPolicy& pi_star, const Mdp& m1, const Mdp& m2, const Cluster& c2,
                                  const StateMap& eta, const StochasticPolicy& fallback) {
    fallback.validate(m2);
    TransferredPolicy out{fallback, {}, {}};
    for (int w : c2.interior) {
        std::optional<int> a;
        if (eta.to_source[w] >= 0) a = map_action(w, pi_star, m1, m2, eta);
        if (a) {
            out.policy.set_point_mass(w, *a);
            out.transferred.push_back(w);
        } else {
            out.defaulted.push_back(w);
        }
    }
    return out;
}

Vec transfer_potential(const StochasticPolicy& pi_star, const Mdp& m1, const StochasticPolicy& pi2, const Mdp& m2,
                       const StateMap& eta, bool partial) {
    pi_star.validate(m1);
    pi2.validate(m2);
    if (!partial)
        for (int s = 0; s < m1.n_states(); ++s)
            if (eta.from_source[s] < 0) throw InvalidInput("transfer_potential: correspondence must cover the scale");
    const int n1 = m1.n_states();
    Mat p1 = policy_average(m1, pi_star).p;
    // Expected destination reward of moving between the images of s and s'.
    Vec r21 = Vec::Zero(n1);
    for (int s = 0; s < n1; ++s) {
        int w = eta.from_source[s];
        if (w < 0) continue;
        for (int s2 = 0; s2 < n1; ++s2) {
            if (p1(s, s2) == 0.0) continue;
            int w2 = eta.from_source[s2];
            if (w2 < 0) continue;
            double er = 0.0;
            for (int a : m2.feasible(w)) {
                long k = m2.find(w, a, w2);
                if (k >= 0) er += pi2(w, a) * m2.transitions()[k].r;
            }
            r21(s) += p1(s, s2) * er;
        }
    }
    SpMat a = -discounted_chain(m1, pi_star);
    for (int s = 0; s < n1; ++s) a.coeffRef(s, s) += 1.0;
    a.makeCompressed();
    Vec g = solve_sparse(a, r21, "transfer_potential");
    Vec out = Vec::Constant(m2.n_states(), std::numeric_limits<double>::quiet_NaN());
    for (int w = 0; w < m2.n_states(); ++w)
        if (eta.to_source[w] >= 0) out(w) = g(eta.to_source[w]);
    return out;
}

Vec complete_values(const Mdp& m2, const Cluster& c2, const StochasticPolicy& pi, const Vec& partial_values,
                    const ValueFunction& v_boundary) {
    ValueFunction v = v_boundary;
    Cluster unknown;
    for (int s : c2.interior) {
        if (std::isnan(partial_values(s)))
            unknown.interior.push_back(s);
        else
            v(s) = partial_values(s);
    }
    if (!unknown.interior.empty()) {
        Vec x = cluster_interior_values(m2, unknown, pi, v);
        for (std::size_t k = 0; k < unknown.interior.size(); ++k) v(unknown.interior[k]) = x(static_cast<long>(k));
    }
    Vec out(static_cast<long>(c2.interior.size()));
    for (std::size_t k = 0; k < c2.interior.size(); ++k) out(static_cast<long>(k)) = v(c2.interior[k]);
    return out;
}

double transfer_statistic(const Vec& v_transfer, const Vec& v_current) {
    if (v_transfer.size() != v_current.size()) throw InvalidInput("transfer_statistic: size mismatch");
    double t = 0.0;
    for (long i = 0; i < v_transfer.size(); ++i) {
        double d = v_transfer(i) - v_current(i);
        // Differences at roundoff level count as equal values.
        if (std::abs(d) <= 1e-12 * std::max(1.0, std::abs(v_current(i)))) continue;
        double u = std::abs(v_current(i));
        double denom = u + (v_current(i) == 0.0 ? 1.0 : 0.0);
        t += (d > 0 ? 1.0 : -1.0) * std::log(std::abs(d) / denom + 1.0);
    }
    return t;
}

namespace {

Detection decide(Vec vt, Vec vu, bool conservative) {
    Detection d;
    d.T = transfer_statistic(vt, vu);
    d.accept = d.T > 0.0;
    if (conservative && d.accept) d.accept = (vt - vu).minCoeff() >= 0.0;
    d.v_transfer = std::move(vt);
    d.v_current = std::move(vu);
    return d;
}

} // namespace

Detection detect_policy_transfer(const Mdp& m2, const Cluster& c2, const StochasticPolicy& pi_transferred,
                                 const StochasticPolicy& pi_current, const ValueFunction& v, bool conservative) {
    return decide(cluster_interior_values(m2, c2, pi_transferred, v), cluster_interior_values(m2, c2, pi_current, v),
                  conservative);
}

Detection detect_potential_transfer(const Mdp& m2, const Cluster& c2, const Vec& potential,
                                    const StochasticPolicy& pi_current, const ValueFunction& v, bool conservative) {
    return decide(complete_values(m2, c2, pi_current, potential, v), cluster_interior_values(m2, c2, pi_current, v),
                  conservative);
}

SolvedHierarchy solve_levels(Hierarchy h) {
    SolvedHierarchy out;
    for (int j = 0; j < h.n_mdps(); ++j) out.levels.push_back(policy_iteration(h.mdp(j), StochasticPolicy::uniform(h.mdp(j))));
    out.h = std::move(h);
    return out;
}

TransferMode parse_transfer_mode(const std::string& s) {
    if (s == "policy") return TransferMode::policy;
    if (s == "potential") return TransferMode::potential;
    if (s == "auto") return TransferMode::auto_;
    throw InvalidInput("unknown transfer mode '" + s + "'");
}

std::string transfer_mode_name(TransferMode m) {
    switch (m) {
    case TransferMode::policy: return "policy";
    case TransferMode::potential: return "potential";
    case TransferMode::auto_: return "auto";
    }
    return "?";
}

std::string pair_mode_name(PairMode m) {
    switch (m) {
    case PairMode::none: return "none";
    case PairMode::policy: return "policy";
    case PairMode::potential: return "potential";
    }
    return "?";
}

int TransferPlan::accepted() const {
    int n = 0;
    for (const auto& p : pairs) n += p.mode != PairMode::none;
    return n;
}

TransferPlan execute_transfer(const SolvedHierarchy& source, const Hierarchy& dest, const TransferConfig& config) {
    const Hierarchy& h1 = source.h;
    const int shared = static_cast<int>(std::min(h1.levels.size(), dest.levels.size()));
    const int top_scale = config.max_scale < 0 ? shared - 1 : std::min(config.max_scale, shared - 1);
    TransferPlan plan;
    // Destination clusters already receiving a transfer, per scale.
    std::vector<std::set<int>> accepted(std::max(shared, 0));

    for (int j = 0; j <= top_scale; ++j) {
        const bool use_policy = j == 0 && config.mode != TransferMode::potential;
        const bool use_potential = j >= 1 && config.mode != TransferMode::policy;
        if (!use_policy && !use_potential) continue;
        const Mdp& m1 = h1.mdp(j);
        const Mdp& m2 = dest.mdp(j);
        const Partition& part2 = dest.levels[j].partition;
        // Destination boundary values from its own coarse problem.
        PolicyIterationResult coarse = policy_iteration(dest.mdp(j + 1), StochasticPolicy::uniform(dest.mdp(j + 1)));
        ValueFunction v = ValueFunction::Zero(m2.n_states());
        for (std::size_t k = 0; k < part2.bottlenecks.size(); ++k)
            v(part2.bottlenecks[k]) = coarse.values(static_cast<long>(k));
        StochasticPolicy current = StochasticPolicy::uniform(m2);

        for (const ClusterPair& cp : match_clusters(h1, dest, j, config.eta)) {
            const Cluster& c1 = h1.levels[j].partition.clusters[cp.c1];
            const Cluster& c2 = part2.clusters[cp.c2];
            PairPlan pp;
            pp.scale = j;
            pp.c1 = cp.c1;
            pp.c2 = cp.c2;
            pp.distance = cp.distance;
            pp.tried = use_policy ? PairMode::policy : PairMode::potential;
            if (c2.interior.empty()) {
                pp.skipped = true;
                plan.pairs.push_back(std::move(pp));
                continue;
            }
            if (j >= 1) {
                // Covered when every finer cluster touching this region already transferred.
                const Partition& finer = dest.levels[j - 1].partition;
                const std::vector<int>& up = dest.index_map(j - 1);
                bool covered = true;
                for (int s : c2.interior) {
                    int fine = up[s];
                    for (std::size_t q = 0; q < finer.clusters.size(); ++q) {
                        const auto& b = finer.clusters[q].boundary;
                        if (std::find(b.begin(), b.end(), fine) != b.end() &&
                            !accepted[j - 1].count(static_cast<int>(q)))
                            covered = false;
                    }
                }
                if (covered) {
                    pp.skipped = true;
                    plan.pairs.push_back(std::move(pp));
                    continue;
                }
            }
            std::vector<int> eta;
            try {
                eta = match_states(m1, c1, m2, c2, config.correspondence, config.eta);
            } catch (const NoCorrespondence&) {
                plan.pairs.push_back(std::move(pp));
                continue;
            }
            StateMap map = StateMap::from_pair(m1.n_states(), m2.n_states(), c1, c2, eta);
            if (use_policy) {
                TransferredPolicy tp = transfer_policy(source.levels[j].policy, m1, m2, c2, map, current);
                pp.defaulted = tp.defaulted;
                Detection d = detect_policy_transfer(m2, c2, tp.policy, current, v, config.conservative);
                pp.T = d.T;
                if (d.accept && !tp.transferred.empty()) {
                    pp.mode = PairMode::policy;
                    for (int w : tp.transferred) pp.policy.push_back({w, tp.policy.argmax(w)});
                }
            } else {
                Vec pot = transfer_potential(source.levels[j].policy, m1, current, m2, map, true);
                Detection d = detect_potential_transfer(m2, c2, pot, current, v, config.conservative);
                pp.T = d.T;
                if (d.accept) {
                    pp.mode = PairMode::potential;
                    for (std::size_t k = 0; k < c2.interior.size(); ++k)
                        pp.values.push_back({c2.interior[k], d.v_transfer(static_cast<long>(k))});
                }
            }
            if (pp.mode != PairMode::none) accepted[j].insert(cp.c2);
            plan.pairs.push_back(std::move(pp));
        }
    }

    // Assemble solver inputs.
    for (const auto& pp : plan.pairs) {
        if (pp.mode == PairMode::policy) {
            auto it = plan.init.pi0.find(pp.scale);
            if (it == plan.init.pi0.end())
                it = plan.init.pi0.emplace(pp.scale, StochasticPolicy::uniform(dest.mdp(pp.scale))).first;
            for (const auto& [w, a] : pp.policy) it->second.set_point_mass(w, a);
        } else if (pp.mode == PairMode::potential) {
            auto& ov = plan.init.v_coarse_overrides[pp.scale - 1];
            for (const auto& [s, val] : pp.values) ov[s] = val;
        }
    }
    return plan;
}

} // namespace mmdp
