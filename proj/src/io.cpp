#include "mmdp/io.hpp"

#include "mmdp/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmdp::io {

namespace {

Json envelope(const std::string& kind) {
    Json j;
    j["kind"] = kind;
    j["schema_version"] = kSchemaVersion;
    return j;
}

const Json& need(const Json& j, const char* field, const std::string& ctx) {
    if (!j.is_object()) throw ParseError(ctx + ": expected an object");
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(ctx + ": missing field '" + field + "'");
    return *it;
}

template <class T>
T get(const Json& j, const char* field, const std::string& ctx) {
    const Json& v = need(j, field, ctx);
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ctx + ": field '" + field + "' has the wrong type (" + e.what() + ")");
    }
}

void check_kind(const Json& j, const std::string& kind) {
    auto k = get<std::string>(j, "kind", kind);
    if (k != kind) throw ParseError(kind + ": document kind is '" + k + "'");
    auto v = get<int>(j, "schema_version", kind);
    if (v != kSchemaVersion)
        throw ParseError(kind + ": schema_version " + std::to_string(v) + " is not supported (expected " +
                         std::to_string(kSchemaVersion) + ")");
}

// JSON has no NaN; missing rewards are written as null.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }
double num_or_nan(const Json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

Json matrix_rows(const Mat& m) {
    Json rows = Json::array();
    for (long i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (long k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_rows(const Json& rows, long n, long m, const std::string& ctx) {
    if (!rows.is_array() || static_cast<long>(rows.size()) != n)
        throw ParseError(ctx + ": expected " + std::to_string(n) + " rows");
    Mat out(n, m);
    for (long i = 0; i < n; ++i) {
        const Json& row = rows[i];
        if (!row.is_array() || static_cast<long>(row.size()) != m)
            throw ParseError(ctx + ": row " + std::to_string(i) + " must have " + std::to_string(m) + " entries");
        for (long k = 0; k < m; ++k) out(i, k) = row[k].get<double>();
    }
    return out;
}

Json pool_to_json(const PolicyPool& pools) {
    Json out = Json::array();
    for (const auto& cp : pools) {
        Json cj = Json::array();
        for (const auto& pp : cp) {
            Json e;
            e["bottleneck"] = pp.bottleneck;
            e["reward"] = num(pp.reward);
            e["probs"] = matrix_rows(pp.pi.probs());
            cj.push_back(std::move(e));
        }
        out.push_back(std::move(cj));
    }
    return out;
}

PolicyPool pool_from_json(const Json& j, const std::string& ctx) {
    if (!j.is_array()) throw ParseError(ctx + ": pools must be an array");
    PolicyPool out;
    for (const auto& cj : j) {
        ClusterPool cp;
        for (const auto& e : cj) {
            const Json& rows = need(e, "probs", ctx);
            long n = static_cast<long>(rows.size());
            long m = n > 0 ? static_cast<long>(rows[0].size()) : 0;
            PoolPolicy pp{StochasticPolicy(matrix_from_rows(rows, n, m, ctx)), get<int>(e, "bottleneck", ctx),
                          num_or_nan(need(e, "reward", ctx))};
            cp.push_back(std::move(pp));
        }
        out.push_back(std::move(cp));
    }
    return out;
}

Json init_to_json(const SolveInit& init) {
    Json j;
    Json pi0 = Json::array();
    for (const auto& [level, pi] : init.pi0) pi0.push_back({{"level", level}, {"probs", matrix_rows(pi.probs())}});
    j["pi0"] = pi0;
    Json vc = Json::array();
    for (const auto& [level, v] : init.v_coarse)
        vc.push_back({{"level", level}, {"values", std::vector<double>(v.data(), v.data() + v.size())}});
    j["v_coarse"] = vc;
    Json ov = Json::array();
    for (const auto& [level, m] : init.v_coarse_overrides)
        for (const auto& [idx, val] : m) ov.push_back({{"level", level}, {"index", idx}, {"value", val}});
    j["v_coarse_overrides"] = ov;
    return j;
}

SolveInit init_from_json(const Json& j, const std::string& ctx) {
    SolveInit init;
    for (const auto& e : need(j, "pi0", ctx)) {
        const Json& rows = need(e, "probs", ctx);
        long n = static_cast<long>(rows.size());
        long m = n > 0 ? static_cast<long>(rows[0].size()) : 0;
        init.pi0[get<int>(e, "level", ctx)] = StochasticPolicy(matrix_from_rows(rows, n, m, ctx));
    }
    for (const auto& e : need(j, "v_coarse", ctx)) {
        auto vals = get<std::vector<double>>(e, "values", ctx);
        init.v_coarse[get<int>(e, "level", ctx)] = Eigen::Map<Vec>(vals.data(), static_cast<long>(vals.size()));
    }
    for (const auto& e : need(j, "v_coarse_overrides", ctx))
        init.v_coarse_overrides[get<int>(e, "level", ctx)][get<int>(e, "index", ctx)] = get<double>(e, "value", ctx);
    return init;
}

PairMode parse_pair_mode(const std::string& s, const std::string& ctx) {
    if (s == "none") return PairMode::none;
    if (s == "policy") return PairMode::policy;
    if (s == "potential") return PairMode::potential;
    throw ParseError(ctx + ": unknown pair mode '" + s + "'");
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------

Json to_json(const Mdp& mdp) {
    Json j = envelope("mdp");
    j["n_states"] = mdp.n_states();
    j["n_actions"] = mdp.n_actions();
    j["allow_discount_one"] = mdp.max_discount() >= 1.0;
    j["terminal"] = mdp.terminal_states();
    j["feasible"] = mdp.feasible();
    Json rows = Json::array();
    for (const auto& t : mdp.transitions()) rows.push_back({t.s, t.a, t.next, t.p, t.r, t.g});
    j["transitions"] = std::move(rows);
    if (!mdp.labels().empty()) j["labels"] = mdp.labels();
    return j;
}

Mdp mdp_from_json(const Json& j) {
    const std::string ctx = "mdp";
    check_kind(j, ctx);
    int n = get<int>(j, "n_states", ctx);
    int na = get<int>(j, "n_actions", ctx);
    if (n < 0 || na < 0) throw ParseError(ctx + ": negative n_states or n_actions");
    auto terminal_ids = get<std::vector<int>>(j, "terminal", ctx);
    auto feasible = get<std::vector<std::vector<int>>>(j, "feasible", ctx);
    const Json& rows = need(j, "transitions", ctx);
    if (!rows.is_array()) throw ParseError(ctx + ": field 'transitions' must be an array");
    std::vector<Transition> tr;
    tr.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Json& row = rows[k];
        if (!row.is_array() || row.size() != 6)
            throw ParseError(ctx + ": transitions[" + std::to_string(k) + "] must be [s, a, s', p, r, g]");
        try {
            tr.push_back({row[0].get<int>(), row[1].get<int>(), row[2].get<int>(), row[3].get<double>(),
                          row[4].get<double>(), row[5].get<double>()});
        } catch (const nlohmann::json::exception&) {
            throw ParseError(ctx + ": transitions[" + std::to_string(k) + "] has a non-numeric entry");
        }
    }
    std::vector<bool> terminal(n, false);
    for (int s : terminal_ids) {
        if (s < 0 || s >= n) throw ParseError(ctx + ": terminal id " + std::to_string(s) + " out of range");
        terminal[s] = true;
    }
    bool allow_one = j.contains("allow_discount_one") && j["allow_discount_one"].get<bool>();
    Mdp mdp(n, na, std::move(tr), std::move(feasible), std::move(terminal),
            allow_one ? DiscountCheck::allow_one : DiscountCheck::open_interval);
    if (j.contains("labels")) mdp = mdp.with_labels(get<std::vector<std::string>>(j, "labels", ctx));
    return mdp;
}

Json to_json(const StochasticPolicy& pi) {
    Json j = envelope("policy");
    j["n_states"] = pi.n_states();
    j["n_actions"] = pi.n_actions();
    j["probs"] = matrix_rows(pi.probs());
    return j;
}

StochasticPolicy policy_from_json(const Json& j) {
    const std::string ctx = "policy";
    check_kind(j, ctx);
    int n = get<int>(j, "n_states", ctx);
    int m = get<int>(j, "n_actions", ctx);
    return StochasticPolicy(matrix_from_rows(need(j, "probs", ctx), n, m, ctx));
}

Json values_to_json(const ValueFunction& v) {
    Json j = envelope("values");
    j["values"] = std::vector<double>(v.data(), v.data() + v.size());
    return j;
}

ValueFunction values_from_json(const Json& j) {
    check_kind(j, "values");
    auto vals = get<std::vector<double>>(j, "values", "values");
    return Eigen::Map<Vec>(vals.data(), static_cast<long>(vals.size()));
}

Json to_json(const Partition& part) {
    Json j = envelope("partition");
    j["bottlenecks"] = part.bottlenecks;
    Json cl = Json::array();
    for (const auto& c : part.clusters) cl.push_back({{"interior", c.interior}, {"boundary", c.boundary}});
    j["clusters"] = std::move(cl);
    return j;
}

Partition partition_from_json(const Json& j) {
    const std::string ctx = "partition";
    check_kind(j, ctx);
    Partition part;
    part.bottlenecks = get<std::vector<int>>(j, "bottlenecks", ctx);
    for (const auto& c : need(j, "clusters", ctx))
        part.clusters.push_back({get<std::vector<int>>(c, "interior", ctx), get<std::vector<int>>(c, "boundary", ctx)});
    return part;
}

Json to_json(const CoarseMdp& coarse) {
    Json j = envelope("coarse_mdp");
    j["mdp"] = to_json(coarse.mdp);
    j["states"] = coarse.states;
    Json acts = Json::array();
    for (const auto& a : coarse.actions) acts.push_back({a.cluster, a.policy});
    j["actions"] = std::move(acts);
    j["path_lengths"] = coarse.path_lengths;
    return j;
}

CoarseMdp coarse_from_json(const Json& j) {
    const std::string ctx = "coarse_mdp";
    check_kind(j, ctx);
    CoarseMdp c;
    c.mdp = mdp_from_json(need(j, "mdp", ctx));
    c.states = get<std::vector<int>>(j, "states", ctx);
    for (const auto& a : need(j, "actions", ctx)) {
        if (!a.is_array() || a.size() != 2) throw ParseError(ctx + ": actions entries must be [cluster, policy]");
        c.actions.push_back({a[0].get<int>(), a[1].get<int>()});
    }
    c.path_lengths = get<std::vector<double>>(j, "path_lengths", ctx);
    if (c.path_lengths.size() != c.mdp.transitions().size())
        throw ParseError(ctx + ": path_lengths must align with the transitions");
    return c;
}

Json to_json(const Hierarchy& h) {
    Json j = envelope("hierarchy");
    j["pool_mode"] = h.pool_mode == PoolMode::pool ? "pool" : "diffusion";
    j["truncated"] = h.truncated;
    j["note"] = h.note;
    j["root"] = to_json(h.root);
    Json levels = Json::array();
    for (const auto& lv : h.levels)
        levels.push_back({{"partition", to_json(lv.partition)}, {"pools", pool_to_json(lv.pools)},
                          {"coarse", to_json(lv.coarse)}});
    j["levels"] = std::move(levels);
    return j;
}

Hierarchy hierarchy_from_json(const Json& j) {
    const std::string ctx = "hierarchy";
    check_kind(j, ctx);
    Hierarchy h;
    auto mode = get<std::string>(j, "pool_mode", ctx);
    if (mode != "pool" && mode != "diffusion") throw ParseError(ctx + ": unknown pool_mode '" + mode + "'");
    h.pool_mode = mode == "pool" ? PoolMode::pool : PoolMode::diffusion;
    h.truncated = get<bool>(j, "truncated", ctx);
    h.note = get<std::string>(j, "note", ctx);
    h.root = mdp_from_json(need(j, "root", ctx));
    for (const auto& lv : need(j, "levels", ctx)) {
        Level level{partition_from_json(need(lv, "partition", ctx)), pool_from_json(need(lv, "pools", ctx), ctx),
                    coarse_from_json(need(lv, "coarse", ctx))};
        const Mdp& fine = h.mdp(static_cast<int>(h.levels.size()));
        try {
            level.partition.validate(fine);
        } catch (const InvalidInput& e) {
            throw ParseError(ctx + ": level " + std::to_string(h.levels.size()) + " " + e.what());
        }
        if (level.coarse.states != level.partition.bottlenecks)
            throw ParseError(ctx + ": coarse states differ from the partition's bottlenecks");
        h.levels.push_back(std::move(level));
    }
    return h;
}

Json to_json(const TransferPlan& plan) {
    Json j = envelope("transfer_plan");
    Json pairs = Json::array();
    for (const auto& p : plan.pairs) {
        Json pj;
        pj["scale"] = p.scale;
        pj["c1"] = p.c1;
        pj["c2"] = p.c2;
        pj["distance"] = p.distance;
        pj["tried"] = pair_mode_name(p.tried);
        pj["mode"] = pair_mode_name(p.mode);
        pj["skipped"] = p.skipped;
        pj["T"] = p.T;
        Json pol = Json::array();
        for (auto [s, a] : p.policy) pol.push_back({s, a});
        pj["policy"] = std::move(pol);
        Json vals = Json::array();
        for (auto [s, v] : p.values) vals.push_back({s, v});
        pj["values"] = std::move(vals);
        pj["defaulted"] = p.defaulted;
        pairs.push_back(std::move(pj));
    }
    j["pairs"] = std::move(pairs);
    j["init"] = init_to_json(plan.init);
    return j;
}

TransferPlan plan_from_json(const Json& j) {
    const std::string ctx = "transfer_plan";
    check_kind(j, ctx);
    TransferPlan plan;
    for (const auto& pj : need(j, "pairs", ctx)) {
        PairPlan p;
        p.scale = get<int>(pj, "scale", ctx);
        p.c1 = get<int>(pj, "c1", ctx);
        p.c2 = get<int>(pj, "c2", ctx);
        p.distance = get<double>(pj, "distance", ctx);
        p.tried = parse_pair_mode(get<std::string>(pj, "tried", ctx), ctx);
        p.mode = parse_pair_mode(get<std::string>(pj, "mode", ctx), ctx);
        p.skipped = get<bool>(pj, "skipped", ctx);
        p.T = get<double>(pj, "T", ctx);
        for (const auto& e : need(pj, "policy", ctx)) p.policy.emplace_back(e[0].get<int>(), e[1].get<int>());
        for (const auto& e : need(pj, "values", ctx)) p.values.emplace_back(e[0].get<int>(), e[1].get<double>());
        p.defaulted = get<std::vector<int>>(pj, "defaulted", ctx);
        plan.pairs.push_back(std::move(p));
    }
    plan.init = init_from_json(need(j, "init", ctx), ctx);
    return plan;
}

std::string trace_to_csv(const SolveTrace& trace) {
    std::string out = "iter,l2_error,linf_error,policy_changes,elapsed_ms\n";
    for (const auto& r : trace.rows) {
        out += std::to_string(r.iter) + ',';
        out += (r.l2_error ? fmt(*r.l2_error) : "") + ',';
        out += (r.linf_error ? fmt(*r.linf_error) : "") + ',';
        out += std::to_string(r.policy_changes) + ',';
        out += fmt(r.elapsed_ms) + '\n';
    }
    return out;
}

SolveTrace trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "iter,l2_error,linf_error,policy_changes,elapsed_ms")
        throw ParseError("trace: line 1: unexpected header");
    SolveTrace trace;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (cells.size() != 5)
            throw ParseError("trace: line " + std::to_string(lineno) + ": expected 5 columns, got " +
                             std::to_string(cells.size()));
        try {
            TraceRow r;
            r.iter = std::stoi(cells[0]);
            if (!cells[1].empty()) r.l2_error = std::stod(cells[1]);
            if (!cells[2].empty()) r.linf_error = std::stod(cells[2]);
            r.policy_changes = std::stoi(cells[3]);
            r.elapsed_ms = std::stod(cells[4]);
            trace.rows.push_back(r);
        } catch (const std::logic_error&) {
            throw ParseError("trace: line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return trace;
}

std::string dump(const Json& j) { return j.dump(1) + "\n"; }

Json parse(const std::string& text, const std::string& context) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(context + ": " + e.what());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path.string() + ": cannot write");
    out << text;
    if (!out) throw Error(path.string() + ": write failed");
}

Json read_json(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

Json read_document(const std::filesystem::path& path, const std::string& kind) {
    Json j = read_json(path);
    try {
        check_kind(j, kind.empty() ? get<std::string>(j, "kind", path.string()) : kind);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return j;
}

void save(const std::filesystem::path& path, const Json& doc) { write_text(path, dump(doc)); }

Mdp load_mdp(const std::filesystem::path& path) {
    Json j = read_document(path, "");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "mdp") return mdp_from_json(j);
    if (kind == "coarse_mdp") return coarse_from_json(j).mdp;
    if (kind == "hierarchy") return hierarchy_from_json(j).root;
    throw ParseError(path.string() + ": a '" + kind + "' document holds no MDP");
}

Json to_json(const Manifest& m) {
    Json j = envelope("manifest");
    j["artifact"] = m.artifact;
    j["files"] = m.files;
    j["provenance"] = {{"seed", m.seed}, {"config_hash", m.config_hash}};
    return j;
}

Manifest manifest_from_json(const Json& j) {
    const std::string ctx = "manifest";
    check_kind(j, ctx);
    Manifest m;
    m.artifact = get<std::string>(j, "artifact", ctx);
    m.files = get<std::map<std::string, std::string>>(j, "files", ctx);
    const Json& prov = need(j, "provenance", ctx);
    m.seed = get<std::uint64_t>(prov, "seed", ctx);
    m.config_hash = get<std::string>(prov, "config_hash", ctx);
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    Manifest m = manifest_from_json(read_document(path, "manifest"));
    for (const auto& [name, rel] : m.files)
        if (!std::filesystem::exists(path.parent_path() / rel))
            throw ParseError(path.string() + ": referenced file '" + rel + "' (" + name + ") is missing");
    return m;
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace mmdp::io
