#include "mmdp/domains.hpp"
#include "mmdp/error.hpp"
#include "mmdp/experiment.hpp"
#include "mmdp/io.hpp"
#include "mmdp/solver.hpp"
#include "mmdp/transfer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

namespace py = pybind11;
using namespace mmdp;

namespace {

std::vector<std::tuple<int, int, int, double, double, double>> rows_of(const Mdp& m) {
    std::vector<std::tuple<int, int, int, double, double, double>> out;
    out.reserve(m.transitions().size());
    for (const auto& t : m.transitions()) out.emplace_back(t.s, t.a, t.next, t.p, t.r, t.g);
    return out;
}

Mdp mdp_from_rows(int n_states, int n_actions, const std::vector<std::tuple<int, int, int, double, double, double>>& rows,
                  std::optional<std::vector<std::vector<int>>> feasible, std::optional<std::vector<bool>> terminal) {
    std::vector<Transition> t;
    t.reserve(rows.size());
    for (const auto& [s, a, n, p, r, g] : rows) t.push_back({s, a, n, p, r, g});
    if (!feasible) {
        feasible.emplace(n_states);
        for (const auto& x : t) {
            auto& f = (*feasible)[x.s];
            if (std::find(f.begin(), f.end(), x.a) == f.end()) f.push_back(x.a);
        }
        for (auto& f : *feasible) std::sort(f.begin(), f.end());
    }
    return Mdp(n_states, n_actions, std::move(t), std::move(*feasible),
               terminal ? *terminal : std::vector<bool>(n_states, false));
}

py::dict trace_dict(const SolveTrace& trace) {
    std::vector<int> iter, changes;
    std::vector<double> l2, linf, ms;
    for (const auto& r : trace.rows) {
        iter.push_back(r.iter);
        l2.push_back(r.l2_error.value_or(std::nan("")));
        linf.push_back(r.linf_error.value_or(std::nan("")));
        changes.push_back(r.policy_changes);
        ms.push_back(r.elapsed_ms);
    }
    py::dict d;
    d["iter"] = iter;
    d["l2_error"] = l2;
    d["linf_error"] = linf;
    d["policy_changes"] = changes;
    d["elapsed_ms"] = ms;
    return d;
}

HierarchyConfig hierarchy_config(double max_conductance, int max_depth, int depth, const std::string& pool) {
    HierarchyConfig hc;
    hc.partition.max_conductance = max_conductance;
    hc.partition.max_depth = max_depth;
    hc.depth = depth;
    if (pool == "diffusion")
        hc.pool_mode = PoolMode::diffusion;
    else if (pool == "alg3")
        hc.pool_mode = PoolMode::pool;
    else
        throw InvalidInput("pool must be 'diffusion' or 'alg3', got '" + pool + "'");
    return hc;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multiscale MDP solvers, compression and transfer";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<Mdp>(m, "Mdp")
        .def(py::init(&mdp_from_rows), py::arg("n_states"), py::arg("n_actions"), py::arg("transitions"),
             py::arg("feasible") = py::none(), py::arg("terminal") = py::none(),
             "Rows are (s, a, next, p, r, gamma). Feasible sets default to the actions present per state.")
        .def_property_readonly("n_states", &Mdp::n_states)
        .def_property_readonly("n_actions", &Mdp::n_actions)
        .def_property_readonly("terminal", &Mdp::terminal)
        .def_property_readonly("labels", &Mdp::labels)
        .def("transitions", &rows_of)
        .def("feasible", py::overload_cast<int>(&Mdp::feasible, py::const_), py::arg("s"))
        .def("to_json", [](const Mdp& x) { return io::dump(io::to_json(x)); })
        .def_static("from_json", [](const std::string& s) { return io::mdp_from_json(io::parse(s, "mdp")); })
        .def("__eq__", [](const Mdp& a, const Mdp& b) { return a == b; })
        .def("__repr__", [](const Mdp& x) {
            return "<Mdp n_states=" + std::to_string(x.n_states()) + " n_actions=" + std::to_string(x.n_actions()) +
                   ">";
        });

    m.def("build_domain", [](const std::string& config) { return build_domain(io::parse(config, "domain")); },
          py::arg("config_json"), "Domain MDP from a JSON domain object, as in experiment configs.");

    m.def(
        "value_determination",
        [](const Mdp& mdp, const Mat& probs) {
            StochasticPolicy pi(probs);
            return value_determination(mdp, pi);
        },
        py::arg("mdp"), py::arg("policy"), "V for an n_states x n_actions row-stochastic policy matrix.");

    m.def(
        "policy_iteration",
        [](const Mdp& mdp) {
            auto r = policy_iteration(mdp, StochasticPolicy::uniform(mdp));
            std::vector<int> actions(mdp.n_states());
            for (int s = 0; s < mdp.n_states(); ++s) actions[s] = r.policy.argmax(s);
            return py::make_tuple(r.values, actions, r.iterations);
        },
        py::arg("mdp"), "Returns (values, greedy actions, iterations).");

    py::class_<Hierarchy>(m, "Hierarchy")
        .def_property_readonly("n_mdps", &Hierarchy::n_mdps)
        .def("mdp", &Hierarchy::mdp, py::arg("level"), py::return_value_policy::copy)
        .def("bottlenecks", [](const Hierarchy& h, int level) { return h.levels.at(level).partition.bottlenecks; },
             py::arg("level") = 0)
        .def("clusters",
             [](const Hierarchy& h, int level) {
                 std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
                 for (const auto& c : h.levels.at(level).partition.clusters) out.emplace_back(c.interior, c.boundary);
                 return out;
             },
             py::arg("level") = 0, "(interior, boundary) state lists per cluster.")
        .def_property_readonly("truncated", [](const Hierarchy& h) { return h.truncated; })
        .def("to_json", [](const Hierarchy& h) { return io::dump(io::to_json(h)); })
        .def_static("from_json",
                    [](const std::string& s) { return io::hierarchy_from_json(io::parse(s, "hierarchy")); });

    m.def(
        "build_hierarchy",
        [](const Mdp& mdp, double max_conductance, int max_depth, int depth, const std::string& pool) {
            return build_hierarchy(mdp, hierarchy_config(max_conductance, max_depth, depth, pool));
        },
        py::arg("mdp"), py::arg("max_conductance") = 0.5, py::arg("max_depth") = 3, py::arg("depth") = 1,
        py::arg("pool") = "alg3");

    m.def(
        "solve_hierarchy",
        [](const Hierarchy& h, const std::string& variant, std::optional<Vec> reference, double tol,
           int max_iters) {
            SolveConfig sc;
            sc.variant = parse_variant(variant);
            sc.tol_global = tol;
            sc.max_outer_iters = max_iters;
            HierarchyResult r = solve_hierarchy(h, sc, reference ? &*reference : nullptr);
            py::dict d;
            d["values"] = r.values;
            std::vector<int> actions(r.policy.n_states());
            for (int s = 0; s < r.policy.n_states(); ++s) actions[s] = r.policy.argmax(s);
            d["actions"] = actions;
            d["converged"] = std::vector<bool>(r.converged.begin(), r.converged.end());
            d["trace"] = r.traces.empty() ? py::dict() : trace_dict(r.traces[0]);
            return d;
        },
        py::arg("hierarchy"), py::arg("variant") = "cc", py::arg("reference") = py::none(), py::arg("tol") = 1e-10,
        py::arg("max_iters") = 500);

    m.def("auto_boundary_updates", &auto_boundary_updates, py::arg("gamma_bar"));

    m.def(
        "transfer",
        [](const Hierarchy& source, const Hierarchy& dest, const std::string& mode, const std::string& correspondence) {
            TransferConfig tc;
            tc.mode = parse_transfer_mode(mode);
            tc.correspondence = parse_correspondence(correspondence);
            TransferPlan plan = execute_transfer(solve_levels(source), dest, tc);
            py::list pairs;
            for (const auto& p : plan.pairs) {
                py::dict d;
                d["scale"] = p.scale;
                d["source_cluster"] = p.c1;
                d["dest_cluster"] = p.c2;
                d["T"] = p.T;
                d["mode"] = pair_mode_name(p.mode);
                d["policy"] = p.policy;
                pairs.append(d);
            }
            return pairs;
        },
        py::arg("source"), py::arg("dest"), py::arg("mode") = "auto", py::arg("correspondence") = "affinity");

    m.def(
        "run_experiment",
        [](const std::string& config, const std::filesystem::path& out_dir) {
            ExperimentReport rep = run_experiment(io::parse(config, "config"), out_dir);
            return rep.manifest;
        },
        py::arg("config_json"), py::arg("out_dir"), "Runs a config end to end; returns the manifest path.");
}
