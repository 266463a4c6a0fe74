#pragma once

#include "mmdp/domains.hpp"
#include "mmdp/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mmdp {

/**
Builds a domain MDP from a config object:
  {"type": "grid", "preset": "four-room" | "mirrored-source" | "mirrored-dest"}
  {"type": "grid", "map": "<rows>"} or {"type": "grid", "width", "height", "wall_fraction", "seed"}
  {"type": "playroom", "variant": "default" | "transfer" | "partial-default" | "partial-transfer"}
Grid objects accept slip, gamma, step_reward and goal_reward overrides.
*/
Mdp build_domain(const io::Json& config);

PartitionConfig partition_config_from_json(const io::Json& j);
HierarchyConfig hierarchy_config_from_json(const io::Json& j);
SolveConfig solve_config_from_json(const io::Json& j);
TransferConfig transfer_config_from_json(const io::Json& j);

struct SummaryRow {
    std::string variant;
    bool transfer = false;
    bool converged = false;
    int iterations = 0;
    int iterations_to_1e6 = -1; ///< -1 without a reference or when never reached
    double final_linf = 0.0;    ///< NaN without a reference
};

struct ExperimentReport {
    std::filesystem::path manifest;
    std::vector<SummaryRow> rows;
};

/**
Runs domain -> hierarchy -> solve (each variant) and, with a "transfer" block,
source hierarchy -> transfer plan -> solve with and without the plan.
Writes a manifest, the MDP, hierarchy, per-variant trace CSVs, final policy and
values, and summary.csv into out_dir. Timings are written as 0 unless
config["timing"] is true, so repeated runs give identical bytes.
*/
ExperimentReport run_experiment(const io::Json& config, const std::filesystem::path& out_dir);

} // namespace mmdp
