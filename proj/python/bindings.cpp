// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the package's __init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "regionqa/config.hpp"
#include "regionqa/errors.hpp"
#include "regionqa/eval.hpp"

namespace py = pybind11;
using namespace regionqa;

namespace {

RunConfiguration configuration(const std::string& config_json, const std::string& base_dir) {
    RunConfiguration c;
    apply_config_json(c, nlohmann::json::parse(config_json), base_dir);
    apply_environment(c);
    return c;
}

DomainCategory domain_arg(const std::string& name) {
    auto d = parse_domain(name);
    if (!d) throw ValidationError("unknown domain " + name);
    return *d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Region-constrained multi-hop question answering over a knowledge graph";

    py::register_exception<Error>(m, "RegionQAError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const nlohmann::json::exception& e) {
            py::set_error(PyExc_ValueError, e.what());
        }
    });

    m.def("fuzzy_ratio", &fuzzy_ratio, py::arg("a"), py::arg("b"), "Indel similarity ratio in [0, 100].");

    m.def(
        "mmr_score",
        [](double relevance, double weight, double redundancy, double lambda, bool mmr) {
            RegionConfig cfg;
            cfg.lambda = lambda;
            cfg.mmr_enabled = mmr;
            return mmr_score(relevance, weight, redundancy, cfg);
        },
        py::arg("relevance"), py::arg("weight"), py::arg("redundancy"), py::arg("lam") = 0.7, py::arg("mmr") = true);

    m.def(
        "relation_weight",
        [](const std::string& relation, const std::string& domain) {
            return relation_weight(RelationWeightMatrix::bundled(), relation, domain_arg(domain));
        },
        py::arg("relation"), py::arg("domain"), "Weight from the bundled relation-weight matrix.");

    m.def(
        "dispatch_mode", [](std::size_t n) { return std::string(to_string(dispatch_mode(n))); }, py::arg("n_facts"));

    m.def(
        "map_option",
        [](const std::string& answer, const std::vector<std::pair<std::string, std::string>>& options) {
            std::vector<AnswerOption> opts;
            for (const auto& [label, text] : options) opts.push_back({label, text});
            return map_option(answer, opts).label;
        },
        py::arg("answer"), py::arg("options"), "Option label for a free-text answer, or None.");

    m.def(
        "_ask",
        [](const std::string& question, const std::string& config_json, const std::string& base_dir, bool timings) {
            auto c = configuration(config_json, base_dir);
            Runtime rt;
            nlohmann::ordered_json j;
            {
                py::gil_scoped_release release;
                rt = build_runtime(c);
                j = rt.engine->run(question).to_json(timings);
            }
            return j.dump();
        },
        py::arg("question"), py::arg("config_json"), py::arg("base_dir"), py::arg("timings") = false);

    m.def(
        "_region",
        [](const std::string& question, const std::string& config_json, const std::string& base_dir) {
            auto c = configuration(config_json, base_dir);
            py::gil_scoped_release release;
            auto rt = build_runtime(c);
            return rt.engine->plan_regions(question).to_json().dump();
        },
        py::arg("question"), py::arg("config_json"), py::arg("base_dir"));

    m.def(
        "_evaluate",
        [](const std::string& dataset, const std::string& config_json, const std::string& base_dir) {
            auto c = configuration(config_json, base_dir);
            py::gil_scoped_release release;
            auto rt = build_runtime(c);
            auto items = load_dataset(dataset, c.protocol);
            EvalOptions options;
            options.protocol = c.protocol;
            options.workers = c.workers;
            return run_eval(items, *rt.engine, options).to_json().dump();
        },
        py::arg("dataset"), py::arg("config_json"), py::arg("base_dir"));
}
