#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mvss/align.hpp"
#include "mvss/composer.hpp"
#include "mvss/corpus.hpp"
#include "mvss/error.hpp"
#include "mvss/evaluator.hpp"
#include "mvss/llm.hpp"
#include "mvss/pipeline.hpp"
#include "mvss/tables.hpp"
#include "mvss/text.hpp"
#include "mvss/tree.hpp"

namespace py = pybind11;
using namespace mvss;

namespace {

// Provider implementable from python: hand complete() a callable taking
// (template_name, bindings) and returning the reply text.
class CallbackProvider : public Provider {
 public:
  using Fn = std::function<std::string(const std::string&,
                                       const std::map<std::string, std::string>&)>;
  explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}
  Completion complete(const ChatRequest& request) override {
    return {fn_(request.template_name, request.bindings), FinishState::complete,
            id()};
  }
  std::string id() const override { return "callback"; }

 private:
  Fn fn_;
};

}  // namespace

PYBIND11_MODULE(_mvss, m) {
  m.doc() = "multi-view structured survey generation core";

  py::register_exception<Error>(m, "MvssError");

  // corpus
  py::class_<Paper>(m, "Paper")
      .def(py::init<>())
      .def_readwrite("id", &Paper::id)
      .def_readwrite("title", &Paper::title)
      .def_readwrite("abstract", &Paper::abstract)
      .def_readwrite("year", &Paper::year);

  py::class_<PaperContext>(m, "PaperContext")
      .def_readonly("id", &PaperContext::id)
      .def_readonly("title", &PaperContext::title)
      .def_readonly("abstract", &PaperContext::abstract)
      .def_readonly("year", &PaperContext::year);

  py::class_<RankedPaper>(m, "RankedPaper")
      .def_readonly("id", &RankedPaper::id)
      .def_readonly("score", &RankedPaper::score);

  py::class_<PaperDb>(m, "PaperDb")
      .def_static("build", &PaperDb::build, py::arg("papers"))
      .def_static("ingest_file", &PaperDb::ingest_file, py::arg("path"))
      .def("__len__", &PaperDb::size)
      .def("contains", &PaperDb::contains)
      .def("ids", &PaperDb::ids)
      .def("retrieve", &PaperDb::retrieve, py::arg("topic"), py::arg("k"))
      .def("fetch_context", &PaperDb::fetch_context, py::arg("ids"))
      .def("find_by_title", &PaperDb::find_by_title, py::arg("title"));

  // llm
  py::class_<PromptTemplate>(m, "PromptTemplate")
      .def_static("from_string", &PromptTemplate::from_string, py::arg("name"),
                  py::arg("body"))
      .def_readonly("name", &PromptTemplate::name)
      .def_readonly("body", &PromptTemplate::body)
      .def_readonly("placeholders", &PromptTemplate::placeholders);

  py::class_<PromptLibrary, std::shared_ptr<PromptLibrary>>(m, "PromptLibrary")
      .def_static("load_dir", &PromptLibrary::load_dir, py::arg("dir"))
      .def("contains", &PromptLibrary::contains)
      .def("get", &PromptLibrary::get, py::return_value_policy::copy)
      .def("names", &PromptLibrary::names);

  m.def("render_prompt", &render_prompt, py::arg("template"), py::arg("bindings"));
  m.def("bindings_digest", &bindings_digest, py::arg("bindings"));

  py::class_<Completion>(m, "Completion")
      .def_readonly("text", &Completion::text)
      .def_readonly("provider_id", &Completion::provider_id);

  py::class_<ChatRequest>(m, "ChatRequest")
      .def(py::init<>())
      .def_readwrite("template_name", &ChatRequest::template_name)
      .def_readwrite("bindings", &ChatRequest::bindings)
      .def_readwrite("temperature", &ChatRequest::temperature)
      .def_readwrite("max_output", &ChatRequest::max_output);

  py::class_<Provider, std::shared_ptr<Provider>>(m, "Provider")
      .def("complete", &Provider::complete)
      .def("id", &Provider::id);

  py::class_<MockProvider, Provider, std::shared_ptr<MockProvider>>(m, "MockProvider")
      .def(py::init([](std::shared_ptr<PromptLibrary> lib, const std::string& dir,
                       const std::string& model) {
             return std::make_shared<MockProvider>(lib, dir, model);
           }),
           py::arg("library"), py::arg("fixtures_dir") = "",
           py::arg("model") = "default")
      .def("add_fixture", &MockProvider::add_fixture, py::arg("template_name"),
           py::arg("bindings"), py::arg("reply"));

  py::class_<CallbackProvider, Provider, std::shared_ptr<CallbackProvider>>(
      m, "CallbackProvider")
      .def(py::init<CallbackProvider::Fn>(), py::arg("fn"));

  m.def(
      "judge_score",
      [](std::shared_ptr<Provider> p, const std::string& criterion,
         const std::string& document) { return judge_score(*p, criterion, document); },
      py::arg("provider"), py::arg("criterion"), py::arg("document"));
  m.def(
      "nli_verify",
      [](std::shared_ptr<Provider> p, const std::string& claim,
         const std::string& source) { return nli_verify(*p, claim, source); },
      py::arg("provider"), py::arg("claim"), py::arg("source"));

  // tree
  py::class_<TreeNode>(m, "TreeNode")
      .def(py::init<>())
      .def_readwrite("node_id", &TreeNode::node_id)
      .def_readwrite("label", &TreeNode::label)
      .def_readwrite("description", &TreeNode::description)
      .def_readwrite("paper_ids", &TreeNode::paper_ids)
      .def_readwrite("children", &TreeNode::children);

  py::class_<KnowledgeTree>(m, "KnowledgeTree")
      .def(py::init<>())
      .def_readwrite("topic", &KnowledgeTree::topic)
      .def_readwrite("root", &KnowledgeTree::root)
      .def_readwrite("refinement_round", &KnowledgeTree::refinement_round);

  py::enum_<TreeFormat>(m, "TreeFormat")
      .value("json", TreeFormat::json)
      .value("markdown", TreeFormat::markdown);

  m.def("parse_tree", &parse_tree, py::arg("json_text"));
  m.def("serialize_tree", &serialize_tree, py::arg("tree"), py::arg("format"));
  m.def("tree_ids", &tree_ids, py::arg("tree"));
  m.def(
      "validate_tree",
      [](const KnowledgeTree& tree, const PaperDb& db) {
        std::vector<std::string> out;
        for (const auto& v : validate_tree(tree, db)) out.push_back(violation_to_string(v));
        return out;
      },
      py::arg("tree"), py::arg("db"));

  // tables
  py::class_<TableRow>(m, "TableRow")
      .def(py::init<>())
      .def_readwrite("method_label", &TableRow::method_label)
      .def_readwrite("paper_ids", &TableRow::paper_ids)
      .def_readwrite("cells", &TableRow::cells);

  py::class_<ComparisonTable>(m, "ComparisonTable")
      .def(py::init<>())
      .def_readwrite("table_id", &ComparisonTable::table_id)
      .def_readwrite("anchor_node_id", &ComparisonTable::anchor_node_id)
      .def_readwrite("caption", &ComparisonTable::caption)
      .def_readwrite("columns", &ComparisonTable::columns)
      .def_readwrite("rows", &ComparisonTable::rows);

  py::class_<TableSet>(m, "TableSet")
      .def(py::init<>())
      .def_readwrite("tables", &TableSet::tables);

  m.def("parse_markdown_table", &parse_markdown_table, py::arg("text"));
  m.def("render_markdown_table", &render_markdown_table, py::arg("table"));
  m.def("tables_to_json", &tables_to_json, py::arg("tables"));
  m.def("tables_from_json", &tables_from_json, py::arg("json_text"));
  m.def("tables_equivalent", &tables_equivalent, py::arg("a"), py::arg("b"));

  // evaluator
  py::class_<Claim>(m, "Claim")
      .def_readonly("text", &Claim::text)
      .def_readonly("citations", &Claim::citations)
      .def_readonly("section", &Claim::section)
      .def_readonly("subsection", &Claim::subsection);

  py::class_<CitationMetrics>(m, "CitationMetrics")
      .def_readonly("recall", &CitationMetrics::recall)
      .def_readonly("precision", &CitationMetrics::precision)
      .def_readonly("n_claims", &CitationMetrics::n_claims)
      .def_readonly("n_pairs", &CitationMetrics::n_pairs);

  py::class_<SurveyDraft>(m, "SurveyDraft").def(py::init<>());

  m.def("parse_survey_markdown", &parse_survey_markdown, py::arg("text"), py::arg("db"));
  m.def("extract_claims", &extract_claims, py::arg("survey"));
  m.def(
      "citation_metrics",
      [](std::shared_ptr<Provider> p, const std::vector<Claim>& claims,
         const PaperDb& db) { return citation_metrics(*p, claims, db); },
      py::arg("provider"), py::arg("claims"), py::arg("db"));

  // pipeline
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("topic", &RunConfig::topic)
      .def_readwrite("corpus_path", &RunConfig::corpus_path)
      .def_readwrite("target_tokens", &RunConfig::target_tokens)
      .def_readwrite("sections", &RunConfig::sections)
      .def_readwrite("outline_candidates", &RunConfig::outline_candidates)
      .def_readwrite("refine_iters", &RunConfig::refine_iters)
      .def_readwrite("retrieve_k", &RunConfig::retrieve_k)
      .def_readwrite("per_node_k", &RunConfig::per_node_k)
      .def_readwrite("max_align_passes", &RunConfig::max_align_passes)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("mock", &RunConfig::mock)
      .def_readwrite("out_dir", &RunConfig::out_dir)
      .def_readwrite("prompts_dir", &RunConfig::prompts_dir)
      .def_readwrite("fixtures_dir", &RunConfig::fixtures_dir);

  m.def("config_from_json", &config_from_json, py::arg("json_text"));
  m.def("config_to_json", &config_to_json, py::arg("config"));
  m.def("run_ingest", [](const std::string& path) {
    auto r = run_ingest(path);
    return py::make_tuple(r.documents, r.index_path);
  });
  m.def(
      "run_generate",
      [](const RunConfig& config) { return run_generate(config).out_dir; },
      py::arg("config"));
  m.def(
      "run_evaluate",
      [](const std::string& dir, const RunConfig& config) {
        return evaluation_report_to_json(run_evaluate(dir, config));
      },
      py::arg("artifact_dir"), py::arg("config"));
  m.def("inspect_artifact", &inspect_artifact, py::arg("path"));
}
