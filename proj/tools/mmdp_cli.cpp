#include "mmdp/error.hpp"
#include "mmdp/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace mmdp;
namespace fs = std::filesystem;

namespace {

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        io::write_text(out, text);
}

Partition load_partition(const std::string& path, const Mdp& mdp) {
    Partition part = io::partition_from_json(io::read_document(path, "partition"));
    part.validate(mdp);
    return part;
}

struct PartitionFlags {
    PartitionConfig cfg;

    void add(CLI::App* app) {
        app->add_option("--eta", cfg.eta, "teleport weight")->capture_default_str();
        app->add_option("--K", cfg.K, "eigenvectors swept per cut")->capture_default_str();
        app->add_option("--max-depth", cfg.max_depth)->capture_default_str();
        app->add_option("--min-cluster-size", cfg.min_cluster_size)->capture_default_str();
        app->add_option("--max-conductance", cfg.max_conductance)->capture_default_str();
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale MDP toolkit: partition, compress, solve and transfer between MDPs"};
    app.require_subcommand(1);
    std::string stage_name;

    // gen ------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a domain MDP");
    gen->require_subcommand(1);
    std::string out;
    auto* grid = gen->add_subcommand("grid", "gridworld from a map file, a preset, or random walls");
    std::string map_file, preset;
    int width = 15, height = 15;
    double wall_frac = 0.1;
    std::uint64_t seed = 1;
    GridSpec gs;
    grid->add_option("--map", map_file, "map file: # wall, . free, G goal");
    grid->add_option("--preset", preset, "four-room | mirrored-source | mirrored-dest");
    grid->add_option("--width", width)->capture_default_str();
    grid->add_option("--height", height)->capture_default_str();
    grid->add_option("--wall-fraction", wall_frac)->capture_default_str();
    grid->add_option("--seed", seed)->capture_default_str();
    grid->add_option("--slip", gs.slip, "move success probability")->capture_default_str();
    grid->add_option("--gamma", gs.gamma)->capture_default_str();
    grid->add_option("--step-reward", gs.step_reward)->capture_default_str();
    grid->add_option("--goal-reward", gs.goal_reward)->capture_default_str();
    grid->add_option("-o,--out", out, "output file (default stdout)");
    auto* play = gen->add_subcommand("playroom", "exact playroom model");
    std::string variant_name_s = "default";
    PlayroomSpec ps;
    play->add_option("--variant", variant_name_s, "default | transfer | partial-default | partial-transfer")
        ->capture_default_str();
    play->add_option("--success", ps.success)->capture_default_str();
    play->add_option("--gamma", ps.gamma)->capture_default_str();
    play->add_option("-o,--out", out, "output file (default stdout)");

    // partition ------------------------------------------------------------
    auto* partition = app.add_subcommand("partition", "recursive spectral partition of an MDP");
    std::string mdp_file;
    int scale = 0;
    PartitionFlags pf;
    partition->add_option("--mdp", mdp_file)->required();
    partition->add_option("--scale", scale, "0 is the finest scale")->capture_default_str();
    pf.add(partition);
    partition->add_option("-o,--out", out);

    // compress -------------------------------------------------------------
    auto* compress = app.add_subcommand("compress", "build a hierarchy of compressed MDPs");
    std::string pool = "alg3", part_file;
    int depth = 1;
    PartitionFlags cf;
    compress->add_option("--mdp", mdp_file)->required();
    compress->add_option("--pool", pool, "diffusion | alg3")->check(CLI::IsMember({"diffusion", "alg3"}))
        ->capture_default_str();
    compress->add_option("--depth", depth, "number of compressions")->capture_default_str();
    compress->add_option("--partition", part_file, "fixed level-0 partition (one compression)");
    cf.add(compress);
    compress->add_option("-o,--out", out);

    // solve ----------------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "multiscale solve of a hierarchy");
    std::string hier_file, variant = "cc", reference_file, plan_file, trace_out, policy_out, values_out;
    SolveConfig sc;
    solve->add_option("--hierarchy", hier_file)->required();
    solve->add_option("--variant", variant, "oo | oc | or | co | cc | cr")
        ->check(CLI::IsMember({"oo", "oc", "or", "co", "cc", "cr"}))
        ->capture_default_str();
    solve->add_option("--lambda", sc.lambda, "policy blend weight")->capture_default_str();
    solve->add_option("--tol", sc.tol_global, "global sup-norm tolerance")->capture_default_str();
    solve->add_option("--tol-interior", sc.tol_interior)->capture_default_str();
    solve->add_option("--max-iters", sc.max_outer_iters)->capture_default_str();
    solve->add_option("--reference", reference_file, "values file, or 'pi' to compute the flat optimum");
    solve->add_option("--transfer-plan", plan_file);
    solve->add_option("--trace", trace_out, "trace CSV output");
    solve->add_option("--policy-out", policy_out);
    solve->add_option("--values-out", values_out);
    bool timing = false;
    solve->add_flag("--timing", timing, "keep wall times in the trace");

    // transfer -------------------------------------------------------------
    auto* transfer = app.add_subcommand("transfer", "plan a transfer between two hierarchies");
    std::string src_file, dst_file, mode = "auto", corr = "affinity";
    TransferConfig tc;
    transfer->add_option("--source", src_file, "solved-from hierarchy")->required();
    transfer->add_option("--dest", dst_file, "destination hierarchy")->required();
    transfer->add_option("--mode", mode, "policy | potential | auto")
        ->check(CLI::IsMember({"policy", "potential", "auto"}))
        ->capture_default_str();
    transfer->add_option("--correspondence", corr, "affinity | identity | ordinal")
        ->check(CLI::IsMember({"affinity", "identity", "ordinal"}))
        ->capture_default_str();
    transfer->add_flag("--conservative", tc.conservative, "require V >= V^u everywhere");
    transfer->add_option("--max-scale", tc.max_scale)->capture_default_str();
    transfer->add_option("-o,--out", out);

    // oracle ---------------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "flat reference solutions and Monte-Carlo compression");
    oracle->require_subcommand(1);
    auto* opi = oracle->add_subcommand("pi", "policy iteration");
    opi->add_option("--mdp", mdp_file)->required();
    opi->add_option("-o,--out", out);
    std::string policy_in;
    opi->add_option("--policy-out", policy_out);
    auto* ovi = oracle->add_subcommand("vi", "value iteration");
    double vi_tol = 1e-10;
    ovi->add_option("--mdp", mdp_file)->required();
    ovi->add_option("--tol", vi_tol)->capture_default_str();
    ovi->add_option("-o,--out", out);
    auto* omc = oracle->add_subcommand("mc", "Monte-Carlo cluster compression estimates");
    MonteCarloOptions mco;
    omc->add_option("--mdp", mdp_file)->required();
    omc->add_option("--partition", part_file)->required();
    omc->add_option("--policy", policy_in, "policy file (default uniform)");
    omc->add_option("--n-traj", mco.n_traj)->capture_default_str();
    omc->add_option("--seed", mco.seed)->capture_default_str();
    omc->add_option("-o,--out", out);

    // trace ----------------------------------------------------------------
    auto* trace = app.add_subcommand("trace", "trace utilities");
    trace->require_subcommand(1);
    auto* texport = trace->add_subcommand("export", "re-emit a trace as CSV or JSON");
    std::string trace_in, format = "csv";
    texport->add_option("--trace", trace_in)->required();
    texport->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    texport->add_option("-o,--out", out);

    // run ------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run an experiment config end to end");
    std::string config_file, out_dir;
    run->add_option("--config", config_file)->required();
    run->add_option("--out", out_dir, "report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            stage_name = "gen";
            if (*grid) {
                GridSpec spec;
                if (!map_file.empty())
                    spec = parse_grid_map(io::read_text(map_file));
                else if (preset == "four-room")
                    spec = four_room();
                else if (preset == "mirrored-source")
                    spec = mirrored_gridworld_pair().first;
                else if (preset == "mirrored-dest")
                    spec = mirrored_gridworld_pair().second;
                else if (!preset.empty())
                    throw InvalidInput("unknown preset '" + preset + "'");
                else
                    spec = random_gridworld(width, height, wall_frac, seed);
                spec.slip = gs.slip;
                spec.gamma = gs.gamma;
                spec.step_reward = gs.step_reward;
                spec.goal_reward = gs.goal_reward;
                Gridworld g = build_gridworld(spec);
                if (!g.goal_reachable) std::cerr << "warning: goal unreachable from some cells\n";
                emit(out, io::dump(io::to_json(g.mdp)));
            } else {
                ps.variant = parse_playroom_variant(variant_name_s);
                emit(out, io::dump(io::to_json(build_playroom(ps).mdp)));
            }
        } else if (*partition) {
            stage_name = "partition";
            Mdp mdp = io::load_mdp(mdp_file);
            auto scales = spectral_partition(mdp, StochasticPolicy::uniform(mdp), pf.cfg);
            if (scale < 0 || scale >= static_cast<int>(scales.size()))
                throw InvalidInput("scale " + std::to_string(scale) + " not available (" +
                                   std::to_string(scales.size()) + " scales)");
            emit(out, io::dump(io::to_json(scales[scale])));
        } else if (*compress) {
            stage_name = "compress";
            Mdp mdp = io::load_mdp(mdp_file);
            PoolMode pm = pool == "diffusion" ? PoolMode::diffusion : PoolMode::pool;
            Hierarchy h;
            if (!part_file.empty()) {
                h = build_hierarchy_from_bottlenecks(mdp, load_partition(part_file, mdp), {}, pm);
            } else {
                HierarchyConfig hc;
                hc.partition = cf.cfg;
                hc.pool_mode = pm;
                hc.depth = depth;
                h = build_hierarchy(mdp, hc);
            }
            if (h.truncated) std::cerr << "warning: hierarchy truncated: " << h.note << "\n";
            emit(out, io::dump(io::to_json(h)));
        } else if (*solve) {
            stage_name = "solve";
            Hierarchy h = io::hierarchy_from_json(io::read_document(hier_file, "hierarchy"));
            sc.variant = parse_variant(variant);
            validate(sc);
            ValueFunction ref;
            bool have_ref = !reference_file.empty();
            if (reference_file == "pi")
                ref = policy_iteration(h.root, StochasticPolicy::uniform(h.root)).values;
            else if (have_ref)
                ref = io::values_from_json(io::read_document(reference_file, "values"));
            SolveInit init;
            if (!plan_file.empty()) init = io::plan_from_json(io::read_document(plan_file, "transfer_plan")).init;
            HierarchyResult r = solve_hierarchy(h, sc, have_ref ? &ref : nullptr, init);
            SolveTrace tr = r.traces.empty() ? SolveTrace{} : r.traces[0];
            if (!timing)
                for (auto& row : tr.rows) row.elapsed_ms = 0.0;
            if (!trace_out.empty()) emit(trace_out, io::trace_to_csv(tr));
            if (!policy_out.empty()) emit(policy_out, io::dump(io::to_json(r.policy)));
            if (!values_out.empty()) emit(values_out, io::dump(io::values_to_json(r.values)));
            bool conv = std::all_of(r.converged.begin(), r.converged.end(), [](bool b) { return b; });
            std::cout << "variant " << variant << " iterations " << tr.rows.size() << " converged "
                      << (conv ? "yes" : "no");
            if (have_ref) std::cout << " final_linf_error " << (r.values - ref).cwiseAbs().maxCoeff();
            std::cout << "\n";
        } else if (*transfer) {
            stage_name = "transfer";
            Hierarchy hs = io::hierarchy_from_json(io::read_document(src_file, "hierarchy"));
            Hierarchy hd = io::hierarchy_from_json(io::read_document(dst_file, "hierarchy"));
            tc.mode = parse_transfer_mode(mode);
            tc.correspondence = parse_correspondence(corr);
            TransferPlan plan = execute_transfer(solve_levels(std::move(hs)), hd, tc);
            for (const auto& p : plan.pairs)
                std::cerr << "scale " << p.scale << " c1 " << p.c1 << " c2 " << p.c2 << " T " << p.T << " -> "
                          << (p.skipped ? "skipped" : pair_mode_name(p.mode)) << "\n";
            emit(out, io::dump(io::to_json(plan)));
        } else if (*oracle) {
            stage_name = "oracle";
            Mdp mdp = io::load_mdp(mdp_file);
            if (*opi) {
                auto r = policy_iteration(mdp, StochasticPolicy::uniform(mdp));
                if (!r.converged) std::cerr << "warning: policy iteration did not converge\n";
                emit(out, io::dump(io::values_to_json(r.values)));
                if (!policy_out.empty()) emit(policy_out, io::dump(io::to_json(r.policy)));
            } else if (*ovi) {
                auto r = value_iteration(mdp, vi_tol);
                if (!r.converged) std::cerr << "warning: value iteration did not converge\n";
                emit(out, io::dump(io::values_to_json(r.values)));
            } else {
                Partition part = load_partition(part_file, mdp);
                StochasticPolicy pi = policy_in.empty() ? StochasticPolicy::uniform(mdp)
                                                        : io::policy_from_json(io::read_document(policy_in, "policy"));
                auto est = monte_carlo_compress(mdp, part, pi, mco);
                io::Json j;
                j["kind"] = "mc_estimates";
                j["schema_version"] = io::kSchemaVersion;
                j["n_traj"] = mco.n_traj;
                j["seed"] = mco.seed;
                io::Json cl = io::Json::array();
                auto rows = [](const Mat& m) {
                    std::vector<std::vector<double>> v(m.rows(), std::vector<double>(m.cols()));
                    for (long i = 0; i < m.rows(); ++i)
                        for (long k = 0; k < m.cols(); ++k) v[i][k] = m(i, k);
                    return v;
                };
                for (const auto& e : est)
                    cl.push_back({{"cluster", e.cluster},
                                  {"boundary", e.boundary},
                                  {"p", rows(e.mean.p)},
                                  {"r", rows(e.mean.r)},
                                  {"g", rows(e.mean.g)},
                                  {"len", rows(e.mean.len)},
                                  {"p_se", rows(e.stderr_.p)},
                                  {"r_se", rows(e.stderr_.r)},
                                  {"g_se", rows(e.stderr_.g)},
                                  {"len_se", rows(e.stderr_.len)},
                                  {"censored", e.censored}});
                j["clusters"] = cl;
                emit(out, io::dump(j));
            }
        } else if (*trace) {
            stage_name = "trace";
            SolveTrace tr = io::trace_from_csv(io::read_text(trace_in));
            if (format == "csv") {
                emit(out, io::trace_to_csv(tr));
            } else {
                io::Json j;
                j["kind"] = "trace";
                j["schema_version"] = io::kSchemaVersion;
                io::Json rows = io::Json::array();
                for (const auto& r : tr.rows)
                    rows.push_back({{"iter", r.iter},
                                    {"l2_error", r.l2_error ? io::Json(*r.l2_error) : io::Json(nullptr)},
                                    {"linf_error", r.linf_error ? io::Json(*r.linf_error) : io::Json(nullptr)},
                                    {"policy_changes", r.policy_changes},
                                    {"elapsed_ms", r.elapsed_ms}});
                j["rows"] = rows;
                emit(out, io::dump(j));
            }
        } else if (*run) {
            stage_name = "run";
            io::Json cfg = io::read_json(config_file);
            ExperimentReport rep = run_experiment(cfg, out_dir);
            std::cout << io::read_text(fs::path(out_dir) / "summary.csv");
        }
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage_name << "]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
