#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>
#include <string>
#include <vector>

namespace mmdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using ValueFunction = Eigen::VectorXd;

/// One sparse entry of the (P, R, Γ) tensors.
struct Transition {
    int s = 0;
    int a = 0;
    int next = 0;
    double p = 0.0;
    double r = 0.0;
    double g = 0.0;

    bool operator==(const Transition&) const = default;
};

/// Discount validation. `allow_one` exists for test inputs with Γ ≡ 1.
enum class DiscountCheck { open_interval, allow_one };

/**
Finite MDP with state/action dependent rewards and discounts.

Entries are kept sorted by (s, a, next); zero-probability entries are dropped
at construction. The object is immutable once built.
*/
class Mdp {
public:
    Mdp() = default;
    Mdp(int n_states, int n_actions, std::vector<Transition> transitions,
        std::vector<std::vector<int>> feasible, std::vector<bool> terminal,
        DiscountCheck check = DiscountCheck::open_interval);

    int n_states() const { return ns_; }
    int n_actions() const { return na_; }

    std::span<const Transition> outcomes(int s, int a) const;
    const std::vector<Transition>& transitions() const { return trans_; }
    /// Index into transitions() of (s,a,next), or -1.
    long find(int s, int a, int next) const;

    const std::vector<int>& feasible(int s) const { return feasible_[s]; }
    const std::vector<std::vector<int>>& feasible() const { return feasible_; }
    bool is_feasible(int s, int a) const;
    bool is_terminal(int s) const { return terminal_[s]; }
    const std::vector<bool>& terminal() const { return terminal_; }
    std::vector<int> terminal_states() const;

    /// Largest Γ over positive-probability entries (γ̄).
    double max_discount() const;
    double min_reward() const;
    double max_reward() const;

    /// Optional human-readable state labels, used for identity correspondences.
    const std::vector<std::string>& labels() const { return labels_; }
    Mdp with_labels(std::vector<std::string> labels) const;

    bool operator==(const Mdp& o) const;

private:
    int ns_ = 0;
    int na_ = 0;
    std::vector<Transition> trans_;
    std::vector<std::size_t> offsets_;
    std::vector<std::vector<int>> feasible_;
    std::vector<char> feasible_mask_;
    std::vector<bool> terminal_;
    std::vector<std::string> labels_;
};

/// Dense |S|x|A| row-stochastic policy. Deterministic policies are point masses.
class StochasticPolicy {
public:
    StochasticPolicy() = default;
    explicit StochasticPolicy(Mat probs) : p_(std::move(probs)) {}

    static StochasticPolicy uniform(const Mdp& mdp);
    static StochasticPolicy deterministic(const Mdp& mdp, const std::vector<int>& actions);

    int n_states() const { return static_cast<int>(p_.rows()); }
    int n_actions() const { return static_cast<int>(p_.cols()); }
    double operator()(int s, int a) const { return p_(s, a); }
    const Mat& probs() const { return p_; }
    Mat& probs() { return p_; }

    void set_point_mass(int s, int a);
    /// Most probable action; lowest id among ties.
    int argmax(int s) const;
    std::vector<int> argmax_all() const;
    bool is_deterministic(int s) const;

    /// Throws InvalidInput unless rows are stochastic and supported on feasible actions.
    void validate(const Mdp& mdp) const;

    bool operator==(const StochasticPolicy& o) const { return p_ == o.p_; }

private:
    Mat p_;
};

struct AveragedChain {
    Mat p; ///< P^π
    Mat r; ///< (P∘R)^π
};

AveragedChain policy_average(const Mdp& mdp, const StochasticPolicy& pi);

/// A tensor over (s, a, s') in coordinate form.
struct SparseTensor {
    struct Entry {
        int s, a, next;
        double value;
    };
    int n_states = 0;
    int n_actions = 0;
    std::vector<Entry> entries;
};

enum class Field { p, r, g };

SparseTensor field_tensor(const Mdp& mdp, Field f);

/// (X∘Y)^π(s,s') = Σ_a X(s,a,s') Y(s,a,s') π(s,a).
Mat hadamard_average(const SparseTensor& x, const SparseTensor& y, const StochasticPolicy& pi);

/// Sparse (Γ∘P)^π.
SpMat discounted_chain(const Mdp& mdp, const StochasticPolicy& pi);
/// (P∘R)^π·1, the expected one-step reward.
Vec expected_reward(const Mdp& mdp, const StochasticPolicy& pi);

ValueFunction value_determination(const Mdp& mdp, const StochasticPolicy& pi);

/// One application of T_π on `states`; other entries are copied.
ValueFunction bellman_backup(const Mdp& mdp, const StochasticPolicy& pi, const ValueFunction& v,
                             std::span<const int> states);

/// Σ_{s'} P(s,a,s')(R + Γ V(s')).
double q_value(const Mdp& mdp, const ValueFunction& v, int s, int a);
/// argmax over feasible actions, lowest id among ties (relative tolerance 1e-10).
int greedy_action(const Mdp& mdp, const ValueFunction& v, int s);

/// Point masses on `states`; all other rows are uniform over feasible actions.
StochasticPolicy greedy_policy(const Mdp& mdp, const ValueFunction& v, std::span<const int> states);

StochasticPolicy blend_policy(const StochasticPolicy& pi_new, const StochasticPolicy& pi_old, double lambda);
StochasticPolicy regularize_policy(const Mdp& mdp, const StochasticPolicy& pi, double lambda);

/// Restriction of P to `cluster`: mass leaving the set folds onto the diagonal,
/// rewards and discounts are truncated. Local state k is cluster[k].
Mdp restrict(const Mdp& mdp, std::span<const int> cluster);
StochasticPolicy restrict_policy(const StochasticPolicy& pi, std::span<const int> states);

struct PolicyIterationResult {
    StochasticPolicy policy;
    ValueFunction values;
    std::vector<ValueFunction> value_trace; ///< V after each evaluation
    int iterations = 0;
    bool converged = false;
};

/// Howard policy iteration. Stops when the greedy policy is unchanged or the
/// sup-norm change of V falls below tol.
PolicyIterationResult policy_iteration(const Mdp& mdp, const StochasticPolicy& pi0, int max_iters = 1000,
                                       double tol = 0.0);

struct ValueIterationResult {
    ValueFunction values;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

ValueIterationResult value_iteration(const Mdp& mdp, double tol = 1e-10, int max_iters = 1000000);

} // namespace mmdp
