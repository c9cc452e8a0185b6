#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "revprobe/corpus.hpp"
#include "revprobe/error.hpp"
#include "revprobe/harness.hpp"
#include "revprobe/probe.hpp"
#include "revprobe/promptgen.hpp"
#include "revprobe/protoqa.hpp"
#include "revprobe/stats.hpp"

namespace py = pybind11;
using namespace revprobe;

namespace {

std::vector<py::dict> concepts_to_py(const corpus::ConceptSet& set) {
  std::vector<py::dict> out;
  for (const auto& c : set) {
    py::dict d;
    d["id"] = c.id;
    d["lemma"] = c.lemma;
    d["synonyms"] = c.synonyms;
    d["description"] = c.description;
    d["category"] = c.category;
    out.push_back(std::move(d));
  }
  return out;
}

std::string probe_oracle(const std::filesystem::path& concepts, const std::string& format,
                         const std::string& condition, std::size_t n_demos, std::size_t runs, std::uint64_t seed,
                         double correct_prob) {
  const auto set = corpus::load_concepts(concepts, corpus::parse_concept_format(format));
  harness::OracleOptions opt;
  opt.correct_prob = correct_prob;
  lm::OracleBackend backend(harness::make_oracle_spec(set, opt));
  probe::ProbeConfig pc;
  pc.condition = promptgen::parse_condition(condition);
  pc.n_demos = n_demos;
  pc.runs = runs;
  pc.base_seed = seed;
  py::gil_scoped_release release;
  return probe::to_jsonl(probe::run_probe(backend, set, pc));
}

}  // namespace

PYBIND11_MODULE(_revprobe, m) {
  m.doc() = "Reverse-dictionary probing harness";
  m.attr("__version__") = REVPROBE_VERSION;

  py::register_exception<Error>(m, "RevprobeError", PyExc_RuntimeError);

  m.def("normalize", [](const std::string& s) { return probe::normalize(s); });
  m.def("extract_answer", [](const std::string& s) { return probe::extract_answer(s); });
  m.def("is_match", [](const std::string& a, const std::set<std::string>& e) { return probe::is_match(a, e); },
        py::arg("answer"), py::arg("expected"));
  m.def("permute_words", [](const std::string& s, double ratio, std::uint64_t seed) {
    return promptgen::permute_words(s, ratio, seed);
  }, py::arg("description"), py::arg("ratio"), py::arg("seed"));
  m.def("nl_translate", [](const std::string& q) { return protoqa::nl_translate(q); });

  m.def("load_concepts", [](const std::filesystem::path& p, const std::string& format) {
    return concepts_to_py(corpus::load_concepts(p, corpus::parse_concept_format(format)));
  }, py::arg("path"), py::arg("format") = "jsonl");

  m.def("probe_oracle", &probe_oracle, py::arg("concepts"), py::arg("format") = "jsonl",
        py::arg("condition") = "Demo", py::arg("n_demos") = 24, py::arg("runs") = 1, py::arg("seed") = 0,
        py::arg("correct_prob") = 1.0, "Probe records from the oracle backend, as JSON lines.");

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return stats::pearson(x, y); });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return stats::spearman(x, y); });
  m.def("auc", [](const std::vector<double>& s, const std::vector<bool>& l) { return stats::auc(s, l); },
        py::arg("scores"), py::arg("labels"));
  m.def("max_weight_assignment", [](const std::vector<std::vector<double>>& rows) {
    const auto a = stats::max_weight_assignment(stats::RewardMatrix(rows));
    return py::make_tuple(a.pairs, a.total);
  });

  m.def("score_max_answers", [](const std::vector<std::string>& answers,
                                const std::vector<std::pair<std::vector<std::string>, int>>& clusters, std::size_t k) {
    protoqa::RankedAnswers ranked;
    for (std::size_t i = 0; i < answers.size(); ++i) {
      ranked.answers.push_back(answers[i]);
      ranked.counts.push_back(static_cast<int>(answers.size() - i));
    }
    corpus::ClusterSet cs;
    for (const auto& [strings, count] : clusters) cs.push_back({strings, count});
    return protoqa::score_max_answers(ranked, cs, k, protoqa::MatchMode::exact, protoqa::Matcher()).score;
  }, py::arg("answers"), py::arg("clusters"), py::arg("k"));

  m.def("run", [](const std::filesystem::path& config) {
    const auto c = harness::load_run_config(config);
    py::gil_scoped_release release;
    return harness::to_json(harness::run(c, config.parent_path())).dump();
  }, py::arg("config"), "Executes a run config; returns the manifest as JSON.");

  m.def("verify_backend", [](const std::string& url, double tolerance) {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& c : lm::verify_backend(url, tolerance)) out.emplace_back(c.name, c.passed, c.detail);
    return out;
  }, py::arg("url"), py::arg("tolerance") = 1e-4);
}
