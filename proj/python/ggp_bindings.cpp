#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ggp/baselines.hpp"
#include "ggp/cli.hpp"
#include "ggp/corpus.hpp"
#include "ggp/error.hpp"
#include "ggp/metrics.hpp"
#include "ggp/plan.hpp"
#include "ggp/transition_graph.hpp"

namespace py = pybind11;

namespace {

using Groups = std::vector<std::vector<int>>;

ggp::PhraseCollection collection(const std::vector<std::string>& surfaces) {
  return ggp::PhraseCollection::from_surfaces(surfaces);
}

ggp::Plan as_plan(const Groups& groups) { return ggp::Plan{groups}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph-based grouping planner";

  static py::exception<ggp::Error> error(m, "GGPError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ggp::Error& e) {
      py::object exc = py::handle(error.ptr())(e.what());
      exc.attr("kind") = std::string(ggp::error_kind_name(e.kind()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("parse_plan", [](const std::string& text, const std::vector<std::string>& surfaces) {
    return ggp::parse_plan(text, collection(surfaces)).groups;
  }, py::arg("text"), py::arg("surfaces"));
  m.def("serialize_plan", [](const Groups& groups, const std::vector<std::string>& surfaces) {
    return ggp::serialize_plan(as_plan(groups), collection(surfaces));
  }, py::arg("groups"), py::arg("surfaces"));
  m.def("is_valid_plan", [](const Groups& groups, const std::vector<std::string>& surfaces) {
    return ggp::is_valid_plan(as_plan(groups), collection(surfaces));
  }, py::arg("groups"), py::arg("surfaces"));
  m.def("linearize_plan", [](const Groups& groups, const std::vector<std::string>& surfaces) {
    return ggp::linearize_plan(as_plan(groups), collection(surfaces));
  }, py::arg("groups"), py::arg("surfaces"));

  m.def("bleu4", &ggp::bleu4, py::arg("hyp"), py::arg("refs"));
  m.def("corpus_bleu4", &ggp::corpus_bleu4, py::arg("hyps"), py::arg("refs"));
  m.def("rouge_l", &ggp::rouge_l, py::arg("hyp"), py::arg("ref"), py::arg("beta") = ggp::kRougeBeta);
  m.def("plan_bleu4", [](const Groups& hyp, const Groups& ref, const std::vector<std::string>& surfaces) {
    return ggp::plan_bleu4(as_plan(hyp), as_plan(ref), collection(surfaces));
  }, py::arg("hyp"), py::arg("ref"), py::arg("surfaces"));
  m.def("plan_rouge_l", [](const Groups& hyp, const Groups& ref, const std::vector<std::string>& surfaces) {
    return ggp::plan_rouge_l(as_plan(hyp), as_plan(ref), collection(surfaces));
  }, py::arg("hyp"), py::arg("ref"), py::arg("surfaces"));

  py::class_<ggp::TransitionGraph>(m, "TransitionGraph")
      .def_static("from_corpus", [](const std::filesystem::path& path) {
        return ggp::build_transition_graph(ggp::read_corpus(path));
      }, py::arg("path"))
      .def_static("load", &ggp::TransitionGraph::load, py::arg("path"))
      .def("save", &ggp::TransitionGraph::save, py::arg("path"))
      .def("__len__", &ggp::TransitionGraph::size)
      .def_property_readonly("vocab", &ggp::TransitionGraph::vocab)
      .def("id", &ggp::TransitionGraph::id, py::arg("surface"))
      .def("weight", &ggp::TransitionGraph::weight, py::arg("src"), py::arg("dst"))
      .def("count", &ggp::TransitionGraph::count, py::arg("src"), py::arg("dst"))
      .def("relation_matrix", [](const ggp::TransitionGraph& g, const std::vector<std::string>& surfaces) {
        return ggp::extract_subgraph(g, collection(surfaces)).weights;
      }, py::arg("surfaces"));

  m.def("random_plan", [](std::size_t n, std::uint64_t seed) { return ggp::random_planner(n, seed).groups; },
        py::arg("n"), py::arg("seed"));
  m.def("graph_greedy_plan", [](const std::vector<std::string>& surfaces, const ggp::TransitionGraph& graph,
                                std::uint64_t seed) {
    return ggp::graph_greedy_planner(collection(surfaces), graph, seed).groups;
  }, py::arg("surfaces"), py::arg("graph"), py::arg("seed"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"ggp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = ggp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs one ggp command in-process; returns (exit_code, stdout, stderr).");
}
