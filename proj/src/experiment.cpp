#include "mmdp/experiment.hpp"

#include "mmdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

namespace mmdp {

namespace {

template <class T>
T opt(const io::Json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(std::string("config: field '") + key + "' has the wrong type");
    }
}

std::string fmt(double x) {
    if (std::isnan(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Prefixes errors with the pipeline stage that raised them.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ParseError(std::string("[") + name + "] " + e.what());
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string("[") + name + "] " + e.what());
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(std::string("[") + name + "] " + e.what());
    } catch (const Error& e) {
        throw Error(std::string("[") + name + "] " + e.what());
    }
}

} // namespace

Mdp build_domain(const io::Json& c) {
    const std::string type = opt<std::string>(c, "type", "");
    if (type == "playroom") {
        PlayroomSpec ps;
        ps.variant = parse_playroom_variant(opt<std::string>(c, "variant", "default"));
        ps.success = opt(c, "success", ps.success);
        ps.gamma = opt(c, "gamma", ps.gamma);
        return build_playroom(ps).mdp;
    }
    if (type != "grid") throw InvalidInput("domain: unknown type '" + type + "'");
    GridSpec spec;
    if (c.contains("preset")) {
        auto preset = c["preset"].get<std::string>();
        if (preset == "four-room")
            spec = four_room();
        else if (preset == "mirrored-source")
            spec = mirrored_gridworld_pair().first;
        else if (preset == "mirrored-dest")
            spec = mirrored_gridworld_pair().second;
        else
            throw InvalidInput("domain: unknown grid preset '" + preset + "'");
    } else if (c.contains("map")) {
        spec = parse_grid_map(c["map"].get<std::string>());
    } else {
        spec = random_gridworld(opt(c, "width", 15), opt(c, "height", 15), opt(c, "wall_fraction", 0.1),
                                opt<std::uint64_t>(c, "seed", 1));
    }
    spec.slip = opt(c, "slip", spec.slip);
    spec.gamma = opt(c, "gamma", spec.gamma);
    spec.step_reward = opt(c, "step_reward", spec.step_reward);
    spec.goal_reward = opt(c, "goal_reward", spec.goal_reward);
    return build_gridworld(spec).mdp;
}

PartitionConfig partition_config_from_json(const io::Json& j) {
    PartitionConfig p;
    p.eta = opt(j, "eta", p.eta);
    p.K = opt(j, "K", p.K);
    p.max_depth = opt(j, "max_depth", p.max_depth);
    p.min_cluster_size = opt(j, "min_cluster_size", p.min_cluster_size);
    p.max_conductance = opt(j, "max_conductance", p.max_conductance);
    return p;
}

HierarchyConfig hierarchy_config_from_json(const io::Json& j) {
    HierarchyConfig h;
    if (j.is_object() && j.contains("partition")) h.partition = partition_config_from_json(j["partition"]);
    auto pool = opt<std::string>(j, "pool", "alg3");
    if (pool == "alg3" || pool == "pool")
        h.pool_mode = PoolMode::pool;
    else if (pool == "diffusion")
        h.pool_mode = PoolMode::diffusion;
    else
        throw InvalidInput("hierarchy: unknown pool '" + pool + "'");
    h.depth = opt(j, "depth", h.depth);
    h.max_top_states = opt(j, "max_top_states", h.max_top_states);
    return h;
}

SolveConfig solve_config_from_json(const io::Json& j) {
    SolveConfig s;
    if (j.is_object() && j.contains("variant")) s.variant = parse_variant(j["variant"].get<std::string>());
    s.lambda = opt(j, "lambda", s.lambda);
    s.tol_interior = opt(j, "tol_interior", s.tol_interior);
    s.tol_global = opt(j, "tol", s.tol_global);
    s.max_outer_iters = opt(j, "max_iters", s.max_outer_iters);
    s.n_boundary_updates = opt(j, "n_boundary_updates", s.n_boundary_updates);
    validate(s);
    return s;
}

TransferConfig transfer_config_from_json(const io::Json& j) {
    TransferConfig t;
    if (j.is_object() && j.contains("mode")) t.mode = parse_transfer_mode(j["mode"].get<std::string>());
    if (j.is_object() && j.contains("correspondence"))
        t.correspondence = parse_correspondence(j["correspondence"].get<std::string>());
    t.conservative = opt(j, "conservative", t.conservative);
    t.eta = opt(j, "eta", t.eta);
    t.max_scale = opt(j, "max_scale", t.max_scale);
    return t;
}

ExperimentReport run_experiment(const io::Json& config, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    if (!config.is_object() || !config.contains("domain")) throw ParseError("config: missing field 'domain'");
    const bool timing = opt(config, "timing", false);
    const bool want_reference = opt(config, "reference", true);
    std::vector<std::string> variants = opt<std::vector<std::string>>(config, "variants", {"cc"});
    const io::Json solve_json = config.contains("solve") ? config["solve"] : io::Json::object();
    const io::Json hier_json = config.contains("hierarchy") ? config["hierarchy"] : io::Json::object();

    fs::create_directories(out_dir);
    io::Manifest manifest;
    manifest.artifact = "experiment";
    manifest.seed = opt<std::uint64_t>(config, "seed", 0);
    manifest.config_hash = io::content_hash(config.dump());

    auto put = [&](const std::string& name, const std::string& file, const std::string& text) {
        io::write_text(out_dir / file, text);
        manifest.files[name] = file;
    };
    auto write_manifest = [&] {
        io::write_text(out_dir / "manifest.json", io::dump(io::to_json(manifest)));
    };

    // Partial outputs stay on disk; the manifest lists whatever was written.
    ExperimentReport report;
    report.manifest = out_dir / "manifest.json";
    try {
        Mdp mdp = stage("domain", [&] { return build_domain(config["domain"]); });
        put("mdp", "mdp.json", io::dump(io::to_json(mdp)));
        HierarchyConfig hc = stage("config", [&] { return hierarchy_config_from_json(hier_json); });
        Hierarchy h = stage("hierarchy", [&] { return build_hierarchy(mdp, hc); });
        put("hierarchy", "hierarchy.json", io::dump(io::to_json(h)));

        ValueFunction reference;
        if (want_reference) {
            reference = stage("reference", [&] { return policy_iteration(mdp, StochasticPolicy::uniform(mdp)).values; });
            put("reference", "reference_values.json", io::dump(io::values_to_json(reference)));
        }

        std::optional<TransferPlan> plan;
        if (config.contains("transfer")) {
            const io::Json& tj = config["transfer"];
            if (!tj.contains("source")) throw ParseError("config: transfer block is missing field 'source'");
            Mdp src = stage("transfer-source", [&] { return build_domain(tj["source"]); });
            Hierarchy hs = stage("transfer-source", [&] { return build_hierarchy(src, hc); });
            SolvedHierarchy solved = stage("transfer-source", [&] { return solve_levels(std::move(hs)); });
            TransferConfig tc = stage("config", [&] { return transfer_config_from_json(tj); });
            plan = stage("transfer", [&] { return execute_transfer(solved, h, tc); });
            put("source_mdp", "source_mdp.json", io::dump(io::to_json(src)));
            put("plan", "plan.json", io::dump(io::to_json(*plan)));
        }

        std::string summary = "variant,transfer,converged,iterations,iterations_to_1e-6,final_linf_error\n";
        for (const auto& name : variants) {
            SolveConfig sc = stage("config", [&] {
                io::Json sj = solve_json;
                sj["variant"] = name;
                return solve_config_from_json(sj);
            });
            std::vector<bool> modes = {false};
            if (plan) modes.push_back(true);
            for (bool with_plan : modes) {
                SolveInit init = with_plan ? plan->init : SolveInit{};
                HierarchyResult r = stage("solve", [&] {
                    return solve_hierarchy(h, sc, want_reference ? &reference : nullptr, init);
                });
                SolveTrace trace = r.traces.empty() ? SolveTrace{} : r.traces[0];
                if (!timing)
                    for (auto& row : trace.rows) row.elapsed_ms = 0.0;
                std::string tag = name + (with_plan ? "_transfer" : "");
                put("trace_" + tag, "trace_" + tag + ".csv", io::trace_to_csv(trace));
                put("policy_" + tag, "policy_" + tag + ".json", io::dump(io::to_json(r.policy)));
                put("values_" + tag, "values_" + tag + ".json", io::dump(io::values_to_json(r.values)));
                SummaryRow row;
                row.variant = name;
                row.transfer = with_plan;
                row.converged = std::all_of(r.converged.begin(), r.converged.end(), [](bool b) { return b; });
                row.iterations = static_cast<int>(trace.rows.size());
                row.iterations_to_1e6 = want_reference ? trace.iterations_to(1e-6) : -1;
                row.final_linf = want_reference ? (r.values - reference).cwiseAbs().maxCoeff() : std::nan("");
                summary += row.variant + ',' + (row.transfer ? "1" : "0") + ',' + (row.converged ? "1" : "0") + ',' +
                           std::to_string(row.iterations) + ',' + std::to_string(row.iterations_to_1e6) + ',' +
                           fmt(row.final_linf) + '\n';
                report.rows.push_back(row);
            }
        }
        put("summary", "summary.csv", summary);
    } catch (...) {
        write_manifest();
        throw;
    }
    write_manifest();
    return report;
}

} // namespace mmdp
