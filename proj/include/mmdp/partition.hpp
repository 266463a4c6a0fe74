#pragma once

#include "mmdp/mdp.hpp"

#include <vector>

namespace mmdp {

struct Cluster {
    std::vector<int> interior;
    std::vector<int> boundary;

    /// Interior states followed by boundary states; the local ordering used everywhere.
    std::vector<int> states() const;
    bool operator==(const Cluster&) const = default;
};

struct Partition {
    std::vector<int> bottlenecks; ///< sorted
    std::vector<Cluster> clusters;

    /// Throws InvalidInput when a structural invariant fails.
    void validate(const Mdp& mdp) const;
    /// Cluster owning each interior state, -1 for bottlenecks.
    std::vector<int> owner(int n_states) const;
    bool operator==(const Partition&) const = default;
};

struct PartitionConfig {
    double eta = 0.01;
    int K = 3;
    int max_depth = 3;
    int min_cluster_size = 8;
    double max_conductance = 0.5;
};

struct DiffusionEmbedding {
    Vec eigenvalues;  ///< λ_0..λ_p ascending
    Mat eigenvectors; ///< n x (p+1), orthonormal columns
    Mat coords;       ///< n x p, coords(i,k-1) = Ψ^(k)_i (1 − λ_k)

    int dims() const { return static_cast<int>(coords.cols()); }
};

Mat teleport(const Mat& p, double eta);
Vec stationary_distribution(const Mat& p);
Mat directed_laplacian(const Mat& p, const Vec& mu);
DiffusionEmbedding diffusion_map(const Mat& laplacian, int p_dims);
/// Teleport, stationary distribution, Laplacian and embedding of a chain.
DiffusionEmbedding chain_embedding(const Mat& p, double eta, int p_dims);

double diffusion_distance(const DiffusionEmbedding& e, int i, int j);

/// τ_k for k = 0..cols-1, compared at the first row where both entries exceed 1e-9.
std::vector<int> sign_align(const Mat& psi, const Mat& psi_tilde);
/// Sign alignment for embeddings; columns whose eigenvalue gap to a neighbor is
/// below 1e-8 (repeated eigenvalues) keep τ = +1. Entry k-1 belongs to Ψ^(k).
std::vector<int> sign_align(const DiffusionEmbedding& e1, const DiffusionEmbedding& e2);

/// ρ(u,v) for u in the first graph, v in the second (squared distances).
Mat cross_distance(const DiffusionEmbedding& e1, const DiffusionEmbedding& e2, const std::vector<int>& tau);

struct Cut {
    std::vector<bool> in_z;
    double conductance = 0.0;
};

/// φ(Z) = Σ_{i∈Z, j∉Z} P_ij / min(vol Z, vol Z^c), vol Z = Σ_{i∈Z} Σ_j P_ij.
double conductance(const Mat& p, const std::vector<bool>& in_z);

/// Sweeps the distinct entries of each column of psi. Throws NoCutFound when n < 2.
Cut sweep_cut(const Mat& psi, const Mat& p);

/// Endpoints of severed edges on the side giving the smaller set (ties: side Z).
std::vector<int> bottlenecks_from_cut(const Mat& p, const std::vector<bool>& in_z);

struct Reachability {
    bool ok = true;
    std::vector<int> unreachable;
};

/// Interior states of a cluster Mdp from which no state in `boundary` is reachable under pi.
Reachability reachability_check(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary);

/**
Builds clusters from a bottleneck set: interiors are the weakly connected
components of S \ B in the support of P^π, boundaries are the bottlenecks
adjacent to an interior in either direction. Terminal states and states
absorbing under π are added to B. Interior states that cannot reach their
boundary are promoted to bottlenecks, the lowest id per cluster per round,
until none remain. With B empty the whole space is one boundary-less cluster.
Bottlenecks left without
a cluster, and bottleneck-to-bottleneck edges not covered by any cluster, are
grouped into boundary-only clusters.
*/
Partition partition_from_bottlenecks(const Mdp& mdp, const StochasticPolicy& pi, std::vector<int> bottlenecks);

/// Recursive spectral partitioning. Element 0 is the finest scale.
std::vector<Partition> spectral_partition(const Mdp& mdp, const StochasticPolicy& pi, const PartitionConfig& config);

} // namespace mmdp
