#pragma once

#include "mmdp/solver.hpp"
#include "mmdp/transfer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace mmdp::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Every document carries {"kind": ..., "schema_version": 1}. Loaders throw
// ParseError naming the document kind and the missing or malformed field.

Json to_json(const Mdp& mdp);
Mdp mdp_from_json(const Json& j);

Json to_json(const StochasticPolicy& pi);
StochasticPolicy policy_from_json(const Json& j);

Json values_to_json(const ValueFunction& v);
ValueFunction values_from_json(const Json& j);

Json to_json(const Partition& part);
Partition partition_from_json(const Json& j);

Json to_json(const CoarseMdp& coarse);
CoarseMdp coarse_from_json(const Json& j);

/// Partitions are re-validated against their level MDPs on load.
Json to_json(const Hierarchy& h);
Hierarchy hierarchy_from_json(const Json& j);

Json to_json(const TransferPlan& plan);
TransferPlan plan_from_json(const Json& j);

/// Columns iter,l2_error,linf_error,policy_changes,elapsed_ms; empty error cells when no reference.
std::string trace_to_csv(const SolveTrace& trace);
SolveTrace trace_from_csv(const std::string& text);

std::string dump(const Json& j);
Json parse(const std::string& text, const std::string& context);

Json read_json(const std::filesystem::path& path);
/// Checks "kind" (when non-empty) and "schema_version".
Json read_document(const std::filesystem::path& path, const std::string& kind);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Any artifact kind; the "kind" field selects the loader.
Mdp load_mdp(const std::filesystem::path& path);
void save(const std::filesystem::path& path, const Json& doc);

struct Manifest {
    std::string artifact;
    std::map<std::string, std::string> files; ///< name -> path relative to the manifest
    std::uint64_t seed = 0;
    std::string config_hash;
};

Json to_json(const Manifest& m);
Manifest manifest_from_json(const Json& j);
/// Loads a manifest and checks that every referenced file exists.
Manifest load_manifest(const std::filesystem::path& path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string content_hash(const std::string& bytes);

} // namespace mmdp::io
