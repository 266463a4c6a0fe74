#include "mmdp/mdp.hpp"

#include "mmdp/error.hpp"
#include "mmdp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mmdp {

namespace {

constexpr double kRowTol = 1e-12;

std::string where(int s, int a) { return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")"; }

void check_state(int n, int s, const char* what) {
    if (s < 0 || s >= n) throw InvalidInput(std::string(what) + ": state id " + std::to_string(s) + " out of range");
}

} // namespace

Mdp::Mdp(int n_states, int n_actions, std::vector<Transition> transitions, std::vector<std::vector<int>> feasible,
         std::vector<bool> terminal, DiscountCheck check)
    : ns_(n_states), na_(n_actions), feasible_(std::move(feasible)), terminal_(std::move(terminal)) {
    if (ns_ <= 0 || na_ <= 0) throw InvalidInput("mdp: n_states and n_actions must be positive");
    if (static_cast<int>(feasible_.size()) != ns_) throw InvalidInput("mdp: feasible list has wrong length");
    if (static_cast<int>(terminal_.size()) != ns_) throw InvalidInput("mdp: terminal list has wrong length");

    feasible_mask_.assign(static_cast<std::size_t>(ns_) * na_, 0);
    for (int s = 0; s < ns_; ++s) {
        auto& f = feasible_[s];
        std::sort(f.begin(), f.end());
        f.erase(std::unique(f.begin(), f.end()), f.end());
        if (f.empty()) throw InvalidInput("mdp: state " + std::to_string(s) + " has no feasible action");
        for (int a : f) {
            if (a < 0 || a >= na_) throw InvalidInput("mdp: feasible action out of range at state " + std::to_string(s));
            feasible_mask_[static_cast<std::size_t>(s) * na_ + a] = 1;
        }
    }

    trans_.reserve(transitions.size());
    for (const auto& t : transitions) {
        check_state(ns_, t.s, "mdp");
        check_state(ns_, t.next, "mdp");
        if (t.a < 0 || t.a >= na_) throw InvalidInput("mdp: action out of range " + where(t.s, t.a));
        if (!(t.p >= 0.0 && t.p <= 1.0)) throw InvalidInput("mdp: probability outside [0,1] at " + where(t.s, t.a));
        if (!std::isfinite(t.r)) throw InvalidInput("mdp: non-finite reward at " + where(t.s, t.a));
        if (t.p == 0.0) continue;
        bool g_ok = check == DiscountCheck::open_interval ? (t.g > 0.0 && t.g < 1.0) : (t.g > 0.0 && t.g <= 1.0);
        if (!g_ok) throw InvalidInput("mdp: discount outside (0,1) at " + where(t.s, t.a));
        if (!is_feasible(t.s, t.a)) throw InvalidInput("mdp: transition on infeasible pair " + where(t.s, t.a));
        trans_.push_back(t);
    }
    std::sort(trans_.begin(), trans_.end(), [](const Transition& x, const Transition& y) {
        return std::tie(x.s, x.a, x.next) < std::tie(y.s, y.a, y.next);
    });
    for (std::size_t i = 1; i < trans_.size(); ++i) {
        const auto& x = trans_[i - 1];
        const auto& y = trans_[i];
        if (x.s == y.s && x.a == y.a && x.next == y.next)
            throw InvalidInput("mdp: duplicate entry " + where(x.s, x.a) + " -> " + std::to_string(x.next));
    }

    offsets_.assign(static_cast<std::size_t>(ns_) * na_ + 1, 0);
    for (const auto& t : trans_) offsets_[static_cast<std::size_t>(t.s) * na_ + t.a + 1]++;
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];

    for (int s = 0; s < ns_; ++s) {
        for (int a : feasible_[s]) {
            double sum = 0.0;
            for (const auto& t : outcomes(s, a)) sum += t.p;
            if (std::abs(sum - 1.0) > kRowTol)
                throw InvalidInput("mdp: probabilities at " + where(s, a) + " sum to " + std::to_string(sum));
            if (terminal_[s]) {
                auto out = outcomes(s, a);
                if (out.size() != 1 || out[0].next != s)
                    throw InvalidInput("mdp: terminal state " + std::to_string(s) + " is not absorbing");
            }
        }
    }
}

std::span<const Transition> Mdp::outcomes(int s, int a) const {
    std::size_t k = static_cast<std::size_t>(s) * na_ + a;
    return {trans_.data() + offsets_[k], trans_.data() + offsets_[k + 1]};
}

long Mdp::find(int s, int a, int next) const {
    auto out = outcomes(s, a);
    auto it = std::lower_bound(out.begin(), out.end(), next,
                               [](const Transition& t, int n) { return t.next < n; });
    if (it == out.end() || it->next != next) return -1;
    return static_cast<long>(&*it - trans_.data());
}

bool Mdp::is_feasible(int s, int a) const {
    if (s < 0 || s >= ns_ || a < 0 || a >= na_) return false;
    return feasible_mask_[static_cast<std::size_t>(s) * na_ + a] != 0;
}

std::vector<int> Mdp::terminal_states() const {
    std::vector<int> out;
    for (int s = 0; s < ns_; ++s)
        if (terminal_[s]) out.push_back(s);
    return out;
}

double Mdp::max_discount() const {
    double g = 0.0;
    for (const auto& t : trans_) g = std::max(g, t.g);
    return g;
}

double Mdp::min_reward() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& t : trans_) r = std::min(r, t.r);
    return trans_.empty() ? 0.0 : r;
}

double Mdp::max_reward() const {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& t : trans_) r = std::max(r, t.r);
    return trans_.empty() ? 0.0 : r;
}

Mdp Mdp::with_labels(std::vector<std::string> labels) const {
    if (!labels.empty() && static_cast<int>(labels.size()) != ns_)
        throw InvalidInput("mdp: label count does not match state count");
    Mdp out = *this;
    out.labels_ = std::move(labels);
    return out;
}

bool Mdp::operator==(const Mdp& o) const {
    return ns_ == o.ns_ && na_ == o.na_ && trans_ == o.trans_ && feasible_ == o.feasible_ &&
           terminal_ == o.terminal_ && labels_ == o.labels_;
}

// ---------------------------------------------------------------------------

StochasticPolicy StochasticPolicy::uniform(const Mdp& mdp) {
    Mat p = Mat::Zero(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        const auto& f = mdp.feasible(s);
        for (int a : f) p(s, a) = 1.0 / static_cast<double>(f.size());
    }
    return StochasticPolicy(std::move(p));
}

StochasticPolicy StochasticPolicy::deterministic(const Mdp& mdp, const std::vector<int>& actions) {
    if (static_cast<int>(actions.size()) != mdp.n_states()) throw InvalidInput("policy: action list has wrong length");
    Mat p = Mat::Zero(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (!mdp.is_feasible(s, actions[s]))
            throw InvalidInput("policy: infeasible action at state " + std::to_string(s));
        p(s, actions[s]) = 1.0;
    }
    return StochasticPolicy(std::move(p));
}

void StochasticPolicy::set_point_mass(int s, int a) {
    p_.row(s).setZero();
    p_(s, a) = 1.0;
}

int StochasticPolicy::argmax(int s) const {
    int best = 0;
    for (int a = 1; a < p_.cols(); ++a)
        if (p_(s, a) > p_(s, best)) best = a;
    return best;
}

std::vector<int> StochasticPolicy::argmax_all() const {
    std::vector<int> out(p_.rows());
    for (int s = 0; s < p_.rows(); ++s) out[s] = argmax(s);
    return out;
}

bool StochasticPolicy::is_deterministic(int s) const { return p_(s, argmax(s)) == 1.0; }

void StochasticPolicy::validate(const Mdp& mdp) const {
    if (p_.rows() != mdp.n_states() || p_.cols() != mdp.n_actions())
        throw InvalidInput("policy: shape " + std::to_string(p_.rows()) + "x" + std::to_string(p_.cols()) +
                           " does not match mdp " + std::to_string(mdp.n_states()) + "x" +
                           std::to_string(mdp.n_actions()));
    for (int s = 0; s < p_.rows(); ++s) {
        double sum = 0.0;
        for (int a = 0; a < p_.cols(); ++a) {
            double x = p_(s, a);
            if (!(x >= 0.0)) throw InvalidInput("policy: negative probability at state " + std::to_string(s));
            if (x > 0.0 && !mdp.is_feasible(s, a))
                throw InvalidInput("policy: mass on infeasible action " + where(s, a));
            sum += x;
        }
        if (std::abs(sum - 1.0) > kRowTol) throw InvalidInput("policy: row " + std::to_string(s) + " does not sum to 1");
    }
}

// ---------------------------------------------------------------------------

AveragedChain policy_average(const Mdp& mdp, const StochasticPolicy& pi) {
    pi.validate(mdp);
    const int n = mdp.n_states();
    AveragedChain out{Mat::Zero(n, n), Mat::Zero(n, n)};
    for (const auto& t : mdp.transitions()) {
        double w = pi(t.s, t.a);
        if (w == 0.0) continue;
        out.p(t.s, t.next) += w * t.p;
        out.r(t.s, t.next) += w * t.p * t.r;
    }
    return out;
}

SparseTensor field_tensor(const Mdp& mdp, Field f) {
    SparseTensor out{mdp.n_states(), mdp.n_actions(), {}};
    out.entries.reserve(mdp.transitions().size());
    for (const auto& t : mdp.transitions()) {
        double v = f == Field::p ? t.p : (f == Field::r ? t.r : t.g);
        out.entries.push_back({t.s, t.a, t.next, v});
    }
    return out;
}

Mat hadamard_average(const SparseTensor& x, const SparseTensor& y, const StochasticPolicy& pi) {
    if (x.n_states != y.n_states || x.n_actions != y.n_actions || pi.n_states() != x.n_states ||
        pi.n_actions() != x.n_actions)
        throw InvalidInput("hadamard_average: mismatched index spaces");
    const long na = x.n_actions;
    const long ns = x.n_states;
    auto key = [&](int s, int a, int n) { return (static_cast<long>(s) * na + a) * ns + n; };
    std::unordered_map<long, double> ymap;
    ymap.reserve(y.entries.size());
    for (const auto& e : y.entries) ymap[key(e.s, e.a, e.next)] += e.value;
    Mat out = Mat::Zero(ns, ns);
    for (const auto& e : x.entries) {
        auto it = ymap.find(key(e.s, e.a, e.next));
        if (it == ymap.end()) continue;
        out(e.s, e.next) += e.value * it->second * pi(e.s, e.a);
    }
    return out;
}

SpMat discounted_chain(const Mdp& mdp, const StochasticPolicy& pi) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mdp.transitions().size());
    for (const auto& t : mdp.transitions()) {
        double w = pi(t.s, t.a);
        if (w != 0.0) trip.emplace_back(t.s, t.next, w * t.p * t.g);
    }
    SpMat m(mdp.n_states(), mdp.n_states());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Vec expected_reward(const Mdp& mdp, const StochasticPolicy& pi) {
    Vec r = Vec::Zero(mdp.n_states());
    for (const auto& t : mdp.transitions()) r(t.s) += pi(t.s, t.a) * t.p * t.r;
    return r;
}

ValueFunction value_determination(const Mdp& mdp, const StochasticPolicy& pi) {
    pi.validate(mdp);
    const int n = mdp.n_states();
    SpMat a = discounted_chain(mdp, pi);
    a = -a;
    for (int s = 0; s < n; ++s) a.coeffRef(s, s) += 1.0;
    a.makeCompressed();
    return solve_sparse(a, expected_reward(mdp, pi), "value_determination");
}

double q_value(const Mdp& mdp, const ValueFunction& v, int s, int a) {
    double q = 0.0;
    for (const auto& t : mdp.outcomes(s, a)) q += t.p * (t.r + t.g * v(t.next));
    return q;
}

ValueFunction bellman_backup(const Mdp& mdp, const StochasticPolicy& pi, const ValueFunction& v,
                             std::span<const int> states) {
    if (v.size() != mdp.n_states()) throw InvalidInput("bellman_backup: value size mismatch");
    ValueFunction out = v;
    for (int s : states) {
        check_state(mdp.n_states(), s, "bellman_backup");
        double x = 0.0;
        for (int a : mdp.feasible(s)) {
            double w = pi(s, a);
            if (w != 0.0) x += w * q_value(mdp, v, s, a);
        }
        out(s) = x;
    }
    return out;
}

int greedy_action(const Mdp& mdp, const ValueFunction& v, int s) {
    const auto& f = mdp.feasible(s);
    if (f.empty()) throw InvalidInput("greedy_policy: state without feasible actions");
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> q(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        q[i] = q_value(mdp, v, s, f[i]);
        best = std::max(best, q[i]);
    }
    double slack = 1e-10 * std::max(1.0, std::abs(best));
    for (std::size_t i = 0; i < f.size(); ++i)
        if (q[i] >= best - slack) return f[i];
    return f.front();
}

StochasticPolicy greedy_policy(const Mdp& mdp, const ValueFunction& v, std::span<const int> states) {
    if (v.size() != mdp.n_states()) throw InvalidInput("greedy_policy: value size mismatch");
    StochasticPolicy pi = StochasticPolicy::uniform(mdp);
    for (int s : states) {
        check_state(mdp.n_states(), s, "greedy_policy");
        pi.set_point_mass(s, greedy_action(mdp, v, s));
    }
    return pi;
}

StochasticPolicy blend_policy(const StochasticPolicy& pi_new, const StochasticPolicy& pi_old, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidInput("blend_policy: lambda must lie in (0,1]");
    if (pi_new.probs().rows() != pi_old.probs().rows() || pi_new.probs().cols() != pi_old.probs().cols())
        throw InvalidInput("blend_policy: shape mismatch");
    if (lambda == 1.0) return pi_new;
    return StochasticPolicy(lambda * pi_new.probs() + (1.0 - lambda) * pi_old.probs());
}

StochasticPolicy regularize_policy(const Mdp& mdp, const StochasticPolicy& pi, double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw InvalidInput("regularize_policy: lambda must lie in [0,1)");
    if (lambda == 0.0) return pi;
    return StochasticPolicy(lambda * StochasticPolicy::uniform(mdp).probs() + (1.0 - lambda) * pi.probs());
}

Mdp restrict(const Mdp& mdp, std::span<const int> cluster) {
    if (cluster.empty()) throw InvalidInput("restrict: empty cluster");
    std::vector<int> local(mdp.n_states(), -1);
    for (std::size_t k = 0; k < cluster.size(); ++k) {
        check_state(mdp.n_states(), cluster[k], "restrict");
        if (local[cluster[k]] != -1) throw InvalidInput("restrict: repeated state in cluster");
        local[cluster[k]] = static_cast<int>(k);
    }
    const int m = static_cast<int>(cluster.size());
    std::vector<Transition> out;
    std::vector<std::vector<int>> feasible(m);
    std::vector<bool> terminal(m);
    std::vector<std::string> labels;
    for (int k = 0; k < m; ++k) {
        int s = cluster[k];
        feasible[k] = mdp.feasible(s);
        terminal[k] = mdp.is_terminal(s);
        if (!mdp.labels().empty()) labels.push_back(mdp.labels()[s]);
        for (int a : mdp.feasible(s)) {
            double folded = 0.0;
            Transition self{k, a, k, 0.0, 0.0, 0.0};
            bool has_self = false;
            for (const auto& t : mdp.outcomes(s, a)) {
                int j = local[t.next];
                if (j < 0) {
                    folded += t.p;
                } else if (j == k) {
                    self.p = t.p;
                    self.r = t.r;
                    self.g = t.g;
                    has_self = true;
                } else {
                    out.push_back({k, a, j, t.p, t.r, t.g});
                }
            }
            if (has_self || folded > 0.0) {
                // Folded mass has no in-cluster reward; its discount falls back to the
                // largest discount leaving (s,a) so the entry stays inside (0,1).
                if (!has_self) {
                    double g = 0.0;
                    for (const auto& t : mdp.outcomes(s, a)) g = std::max(g, t.g);
                    self.g = g;
                }
                self.p += folded;
                out.push_back(self);
            }
        }
    }
    // Folding can leave row sums a few ulps off; renormalize per (s,a).
    std::vector<double> sums(static_cast<std::size_t>(m) * mdp.n_actions(), 0.0);
    for (const auto& t : out) sums[static_cast<std::size_t>(t.s) * mdp.n_actions() + t.a] += t.p;
    for (auto& t : out) t.p /= sums[static_cast<std::size_t>(t.s) * mdp.n_actions() + t.a];
    bool unit = mdp.max_discount() >= 1.0;
    Mdp r(m, mdp.n_actions(), std::move(out), std::move(feasible), std::move(terminal),
          unit ? DiscountCheck::allow_one : DiscountCheck::open_interval);
    return labels.empty() ? r : r.with_labels(std::move(labels));
}

StochasticPolicy restrict_policy(const StochasticPolicy& pi, std::span<const int> states) {
    Mat p(static_cast<long>(states.size()), pi.n_actions());
    for (std::size_t k = 0; k < states.size(); ++k) p.row(static_cast<long>(k)) = pi.probs().row(states[k]);
    return StochasticPolicy(std::move(p));
}

PolicyIterationResult policy_iteration(const Mdp& mdp, const StochasticPolicy& pi0, int max_iters, double tol) {
    pi0.validate(mdp);
    PolicyIterationResult res;
    res.policy = pi0;
    std::vector<int> all(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) all[s] = s;
    ValueFunction prev;
    for (int it = 0; it < max_iters; ++it) {
        res.values = value_determination(mdp, res.policy);
        res.value_trace.push_back(res.values);
        res.iterations = it + 1;
        StochasticPolicy next = greedy_policy(mdp, res.values, all);
        bool same = next == res.policy;
        bool small = prev.size() > 0 && tol > 0.0 && (res.values - prev).lpNorm<Eigen::Infinity>() < tol;
        prev = res.values;
        if (same || small) {
            if (!same) res.policy = next;
            res.converged = true;
            return res;
        }
        res.policy = next;
    }
    return res;
}

ValueIterationResult value_iteration(const Mdp& mdp, double tol, int max_iters) {
    ValueIterationResult res;
    ValueFunction v = ValueFunction::Zero(mdp.n_states());
    for (int it = 0; it < max_iters; ++it) {
        ValueFunction nv(mdp.n_states());
        for (int s = 0; s < mdp.n_states(); ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a : mdp.feasible(s)) best = std::max(best, q_value(mdp, v, s, a));
            nv(s) = best;
        }
        res.residual = (nv - v).lpNorm<Eigen::Infinity>();
        v = std::move(nv);
        res.iterations = it + 1;
        if (res.residual < tol) {
            res.converged = true;
            break;
        }
    }
    res.values = std::move(v);
    return res;
}

} // namespace mmdp
