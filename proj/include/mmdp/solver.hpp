#pragma once

#include "mmdp/compress.hpp"
#include "mmdp/mdp.hpp"
#include "mmdp/partition.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmdp {

enum class PoolMode { diffusion, pool };

struct HierarchyConfig {
    PartitionConfig partition;
    PoolMode pool_mode = PoolMode::pool;
    PoolConfig pool;
    int depth = 1;          ///< number of compressions
    int max_top_states = 0; ///< 0: no cap
};

/// One compression step: the partition of mdp(j), its pools, and the coarse result mdp(j+1).
struct Level {
    Partition partition;
    PolicyPool pools;
    CoarseMdp coarse;
};

struct Hierarchy {
    Mdp root;
    std::vector<Level> levels;
    PoolMode pool_mode = PoolMode::pool;
    bool truncated = false;
    std::string note;

    int n_mdps() const { return static_cast<int>(levels.size()) + 1; }
    const Mdp& mdp(int j) const;
    /// Coarse state id at level j+1 -> state id at level j.
    const std::vector<int>& index_map(int j) const { return levels.at(j).coarse.states; }
};

Hierarchy build_hierarchy(const Mdp& mdp, const HierarchyConfig& config);

/// Builds a hierarchy from a fixed level-0 partition and one bottleneck set per coarser level
/// (given as level-0 state ids, each a subset of the previous one).
Hierarchy build_hierarchy_from_bottlenecks(const Mdp& mdp, const Partition& level0,
                                           const std::vector<std::vector<int>>& coarser, PoolMode pool_mode,
                                           const PoolConfig& pool = {});

enum class Variant { oo, oc, or_, co, cc, cr };

Variant parse_variant(const std::string& s);
std::string variant_name(Variant v);

struct SolveConfig {
    Variant variant = Variant::cc;
    double lambda = 1.0;
    double tol_interior = 0.01; ///< relative sup-norm change between interior passes
    double tol_global = 1e-10;
    int max_outer_iters = 500;
    int n_boundary_updates = 0; ///< 0: auto
    double recompress_lambda = 0.01;
};

void validate(const SolveConfig& config);

struct TraceRow {
    int iter = 0;
    std::optional<double> l2_error;
    std::optional<double> linf_error;
    int policy_changes = 0;
    double elapsed_ms = 0.0;
};

struct SolveTrace {
    std::vector<TraceRow> rows;
    /// First iteration whose sup error is <= tol, or -1.
    int iterations_to(double tol) const;
};

/// Smallest N with γ̄^N < 1/2.
int auto_boundary_updates(double gamma_bar);

/**
Interior values of one cluster MDP whose first n_interior states are the interior,
given values on the remaining (boundary) states.
*/
Vec interior_solve(const Mdp& cluster_mdp, int n_interior, const StochasticPolicy& pi, const Vec& v_boundary);

/// Same system on a level MDP with global ids; reads boundary values from v.
Vec cluster_interior_values(const Mdp& mdp, const Cluster& cluster, const StochasticPolicy& pi,
                            const ValueFunction& v);

ValueFunction boundary_update_averaging(const Mdp& mdp, const StochasticPolicy& pi, const ValueFunction& v,
                                        const std::vector<int>& bottlenecks, int n_updates);

/// Exact values on `bottlenecks` (returned in that order) given the other entries of v.
Vec boundary_update_determination(const Mdp& mdp, const StochasticPolicy& pi, const ValueFunction& v,
                                  const std::vector<int>& bottlenecks);

struct RecompressResult {
    Vec values; ///< aligned with the level's bottlenecks
    CoarseMdp coarse;
};

/**
Recompresses mdp(level) under current_pi and solves the coarse MDP by policy iteration.
With augment, the current policy is appended to the initial pools (and to `accumulated`
when given, which persists across calls); otherwise it replaces them.
*/
RecompressResult boundary_update_recompress(const Hierarchy& h, int level, const StochasticPolicy& current_pi,
                                            bool augment, PolicyPool* accumulated = nullptr,
                                            double lambda = 0.01);

struct LevelResult {
    StochasticPolicy policy;
    ValueFunction values;
    SolveTrace trace;
    bool converged = false;
    int iterations = 0;
};

LevelResult solve_level(const Hierarchy& h, int level, const Vec& v_coarse, const StochasticPolicy& pi0,
                        const SolveConfig& config, const ValueFunction* reference = nullptr);

/// Optional warm-start inputs per level, e.g. from a transfer plan.
struct SolveInit {
    std::map<int, StochasticPolicy> pi0;  ///< level -> initial policy
    std::map<int, Vec> v_coarse;          ///< level -> values on that level's bottlenecks
    std::map<int, std::map<int, double>> v_coarse_overrides; ///< level -> (bottleneck index, value)
};

struct HierarchyResult {
    StochasticPolicy policy;
    ValueFunction values;
    std::vector<SolveTrace> traces; ///< index = level
    std::vector<bool> converged;
    PolicyIterationResult top;
};

HierarchyResult solve_hierarchy(const Hierarchy& h, const SolveConfig& config, const ValueFunction* reference = nullptr,
                                const SolveInit& init = {});

} // namespace mmdp
