#include "mvss/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

constexpr int kAllowedTokenTargets[] = {8000, 16000, 32000, 64000};

}  // namespace

RunConfig config_from_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error("config", "config is not a JSON object");
  RunConfig c;
  c.topic = j.value("topic", c.topic);
  c.corpus_path = j.value("corpus", c.corpus_path);
  c.target_tokens = j.value("target_tokens", c.target_tokens);
  c.sections = j.value("sections", c.sections);
  c.outline_candidates = j.value("outline_candidates", c.outline_candidates);
  c.refine_iters = j.value("refine_iters", c.refine_iters);
  c.retrieve_k = j.value("retrieve_k", c.retrieve_k);
  c.per_node_k = j.value("per_node_k", c.per_node_k);
  c.max_align_passes = j.value("max_align_passes", c.max_align_passes);
  c.seed = j.value("seed", c.seed);
  c.mock = j.value("mock", c.mock);
  c.out_dir = j.value("out", c.out_dir);
  c.prompts_dir = j.value("prompts", c.prompts_dir);
  c.fixtures_dir = j.value("fixtures", c.fixtures_dir);
  c.base_url = j.value("base_url", c.base_url);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.temperature = j.value("temperature", c.temperature);
  c.max_output = j.value("max_output", c.max_output);
  for (const auto& jp : j.value("providers", json::array()))
    c.providers.push_back({jp.value("model", "default")});
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["topic"] = c.topic;
  j["corpus"] = c.corpus_path;
  j["target_tokens"] = c.target_tokens;
  j["sections"] = c.sections;
  j["outline_candidates"] = c.outline_candidates;
  j["refine_iters"] = c.refine_iters;
  j["retrieve_k"] = c.retrieve_k;
  j["per_node_k"] = c.per_node_k;
  j["max_align_passes"] = c.max_align_passes;
  j["seed"] = c.seed;
  j["mock"] = c.mock;
  j["out"] = c.out_dir;
  j["prompts"] = c.prompts_dir;
  j["fixtures"] = c.fixtures_dir;
  j["base_url"] = c.base_url;
  j["max_retries"] = c.max_retries;
  j["temperature"] = c.temperature;
  j["max_output"] = c.max_output;
  json providers = json::array();
  for (const auto& p : c.providers) providers.push_back({{"model", p.model}});
  j["providers"] = providers;
  return j.dump(2) + "\n";
}

void validate_config(const RunConfig& c) {
  bool token_ok = false;
  for (int t : kAllowedTokenTargets) token_ok |= (t == c.target_tokens);
  if (!token_ok)
    throw Error("config", "target_tokens must be one of 8000, 16000, 32000, 64000");
  if (c.sections < 1) throw Error("config", "sections must be >= 1");
  if (c.outline_candidates < 1)
    throw Error("config", "outline_candidates must be >= 1");
  if (c.refine_iters < 0) throw Error("config", "refine_iters must be >= 0");
  if (c.max_align_passes < 0)
    throw Error("config", "max_align_passes must be >= 0");
}

void RunTrace::append(const std::string& template_name, const std::string& digest,
                      const std::string& outcome, long duration_ms) {
  entries_.push_back({stage_, template_name, digest, outcome, duration_ms});
}

void RunTrace::mark(const std::string& stage, const std::string& outcome) {
  entries_.push_back({stage, "-", "-", outcome, 0});
}

std::string RunTrace::to_log() const {
  std::ostringstream out;
  for (const auto& e : entries_)
    out << e.stage << "\t" << e.template_name << "\t" << e.digest << "\t"
        << e.outcome << "\n";
  return out.str();
}

Completion TracingProvider::complete(const ChatRequest& request) {
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  const std::string digest = bindings_digest(request.bindings);
  try {
    Completion reply = inner_->complete(request);
    if (trace_) trace_->append(request.template_name, digest, "ok", elapsed());
    return reply;
  } catch (const Error& e) {
    if (trace_) trace_->append(request.template_name, digest, e.code(), elapsed());
    throw;
  }
}

std::string topic_slug(const std::string& topic) { return slugify(topic); }

std::vector<std::shared_ptr<Provider>> make_providers(
    const RunConfig& config, std::shared_ptr<const PromptLibrary> library,
    RunTrace* trace) {
  std::vector<ProviderSpec> specs = config.providers;
  if (specs.empty()) specs.push_back({"default"});

  std::vector<std::shared_ptr<Provider>> providers;
  for (const auto& spec : specs) {
    std::shared_ptr<Provider> p;
    if (config.mock) {
      p = std::make_shared<MockProvider>(library, config.fixtures_dir, spec.model);
    } else {
      HttpProviderConfig http;
      http.base_url = config.base_url;
      http.model = spec.model;
      http.max_retries = config.max_retries;
      p = std::make_shared<HttpProvider>(library, http);
    }
    providers.push_back(std::make_shared<TracingProvider>(std::move(p), trace));
  }
  return providers;
}

IngestResult run_ingest(const std::string& corpus_path) {
  PaperDb db = PaperDb::ingest_file(corpus_path);
  IngestResult result;
  result.documents = db.size();
  result.index_path = corpus_path + ".idx";
  write_file(result.index_path, db.index_json());
  return result;
}

namespace {

// Pool of papers for one section: evidence under tree branches whose label
// echoes the section title; the whole retrieved pool when nothing matches.
std::vector<PaperContext> section_papers(const Outline& outline, size_t section_index,
                                         const KnowledgeTree& tree, const PaperDb& db,
                                         size_t cap) {
  const std::string& title = outline.sections[section_index].title;
  std::set<std::string> ids;
  walk_tree(tree.root, [&](const TreeNode& node, int depth) {
    if (depth == 0) return;
    if (contains_ci(title, node.label) || contains_ci(node.label, title)) {
      walk_tree(node, [&](const TreeNode& inner, int) {
        ids.insert(inner.paper_ids.begin(), inner.paper_ids.end());
      });
    }
  });
  if (ids.empty()) ids = tree_ids(tree);
  auto contexts = db.fetch_context(ids);
  if (contexts.size() > cap) contexts.resize(cap);
  return contexts;
}

}  // namespace

GenerateResult run_generate(const RunConfig& config) {
  validate_config(config);
  if (config.topic.empty()) throw Error("config", "topic is required");

  auto library =
      std::make_shared<const PromptLibrary>(PromptLibrary::load_dir(config.prompts_dir));

  RunTrace trace;
  auto providers = make_providers(config, library, &trace);
  Provider& primary = *providers.front();
  std::vector<Provider*> provider_ptrs;
  for (auto& p : providers) provider_ptrs.push_back(p.get());

  fs::path out_root = fs::path(config.out_dir) / topic_slug(config.topic);
  fs::create_directories(out_root);

  GenerateResult result;
  result.out_dir = out_root.string();

  auto persist_trace = [&] { write_file(out_root / "trace.log", trace.to_log()); };
  auto fail = [&](const std::string& stage, const Error& e) -> Error {
    trace.mark(stage, std::string("abort:") + e.code());
    persist_trace();
    return Error(e.code(), "stage " + stage + ": " + e.what());
  };

  // Phase 1: retrieve evidence, build and refine the tree.
  PaperDb db;
  std::vector<PaperContext> pool;
  std::set<std::string> pool_ids;
  try {
    trace.set_stage("retrieve");
    db = PaperDb::ingest_file(config.corpus_path);
    auto ranked = db.retrieve(config.topic, config.retrieve_k);
    std::set<std::string> ids;
    for (const auto& r : ranked) ids.insert(r.id);
    pool = db.fetch_context(ids);
    pool_ids = ids;
    trace.mark("retrieve", "ok:" + std::to_string(pool.size()));
  } catch (const Error& e) {
    throw fail("retrieve", e);
  }

  TreeOptions tree_options;
  tree_options.per_node_budget = config.per_node_k;
  try {
    trace.set_stage("tree_build");
    result.tree = build_tree(primary, config.topic, pool, tree_options);
  } catch (const Error& e) {
    throw fail("tree_build", e);
  }

  try {
    trace.set_stage("tree_refine");
    TreeScorer scorer = [&](const KnowledgeTree& candidate) {
      TreeScore score;
      score.tree_quality = judge_tree(primary, candidate);
      // Evidence precision: NLI support of each node claim by each attached
      // paper; unparseable verdicts count unsupported.
      size_t pairs = 0, supported = 0;
      walk_tree(candidate.root, [&](const TreeNode& node, int) {
        for (const auto& id : node.paper_ids) {
          ++pairs;
          try {
            const Paper& paper = db.at(id);
            if (nli_verify(primary, node.label + ": " + node.description,
                           paper.title + "\n" + paper.abstract))
              ++supported;
          } catch (const Error&) {
          }
        }
      });
      score.citation_precision =
          pairs == 0 ? 0.0
                     : static_cast<double>(supported) / static_cast<double>(pairs);
      return score;
    };
    result.tree = refine_loop(primary, result.tree, db, config.refine_iters, scorer,
                              tree_options, &pool_ids);
    auto violations = validate_tree(result.tree, db, tree_options);
    if (!violations.empty())
      throw Error("tree-parse", violation_to_string(violations.front()));
  } catch (const Error& e) {
    throw fail("tree_refine", e);
  }
  write_file(out_root / "tree.json", serialize_tree(result.tree, TreeFormat::json));

  // Phase 2: per-node context and comparison tables.
  try {
    trace.set_stage("fetch");
    auto ids = tree_ids(result.tree);
    trace.mark("fetch", "ok:" + std::to_string(ids.size()));
    trace.set_stage("tables");
    TableGenOptions table_options;
    table_options.seed = config.seed;
    table_options.warn = [&](const std::string& msg) { trace.mark("tables", "skip:" + msg); };
    result.tables = generate_tables(primary, result.tree, db, table_options);
    auto violations = validate_tables(result.tables, result.tree, db);
    if (!violations.empty())
      throw Error("table-parse", violation_to_string(violations.front()));
  } catch (const Error& e) {
    throw fail("tables", e);
  }
  write_file(out_root / "tables.json", tables_to_json(result.tables));

  // Phase 3: outline consensus, writing, assembly, alignment.
  ComposerOptions composer_options;
  composer_options.sections = config.sections;
  composer_options.target_tokens = config.target_tokens;
  try {
    trace.set_stage("outline_propose");
    auto candidates =
        propose_outlines(provider_ptrs, config.topic, result.tree, result.tables, db,
                         config.outline_candidates, composer_options);
    trace.set_stage("outline_merge");
    Outline merged = merge_outlines(primary, candidates, composer_options);
    trace.set_stage("outline_edit");
    merged = edit_final_outline(primary, merged, composer_options);
    trace.set_stage("outline_judge");
    std::vector<Outline> pool_outlines;
    pool_outlines.push_back(merged);
    for (auto& c : candidates) pool_outlines.push_back(c);
    Outline chosen = judge_select(primary, pool_outlines);
    if (chosen.sections.size() != static_cast<size_t>(config.sections))
      chosen = merged;  // judge may pick a rough candidate; keep the contract

    trace.set_stage("subsection_expand");
    auto budgets = section_word_budgets(chosen, result.tree, composer_options);
    for (size_t si = 0; si < chosen.sections.size(); ++si) {
      auto papers = section_papers(chosen, si, result.tree, db, config.per_node_k);
      chosen.sections[si].subsections = expand_subsections(
          primary, chosen, si, papers, budgets[si], composer_options);
    }
    result.outline = chosen;
  } catch (const Error& e) {
    throw fail("outline", e);
  }
  write_file(out_root / "outline.json", outline_to_json(result.outline));

  try {
    trace.set_stage("write");
    std::map<std::pair<size_t, size_t>, WrittenSubsection> bodies;
    for (size_t si = 0; si < result.outline.sections.size(); ++si) {
      auto papers = section_papers(result.outline, si, result.tree, db, config.per_node_k);
      const auto& section = result.outline.sections[si];
      for (size_t ssi = 0; ssi < section.subsections.size(); ++ssi) {
        const auto& sub = section.subsections[ssi];
        bodies[{si, ssi}] = write_subsection(primary, sub, papers, sub.word_budget);
      }
    }

    trace.set_stage("table_reflect");
    for (size_t si = 0; si < result.outline.sections.size(); ++si) {
      auto papers = section_papers(result.outline, si, result.tree, db, config.per_node_k);
      const auto& section = result.outline.sections[si];
      for (size_t ssi = 0; ssi < section.subsections.size(); ++ssi) {
        auto extra = reflect_local_table(primary, bodies[{si, ssi}].body, papers);
        if (!extra) continue;
        extra->table_id =
            "t-" + fnv1a_hex(std::to_string(config.seed) + "|reflect|" +
                             std::to_string(si) + "." + std::to_string(ssi))
                       .substr(0, 8);
        // Anchor at the branch matching this section, else the root.
        extra->anchor_node_id = result.tree.root.node_id;
        for (const auto& branch : result.tree.root.children) {
          if (contains_ci(section.title, branch.label) ||
              contains_ci(branch.label, section.title)) {
            extra->anchor_node_id = branch.node_id;
            break;
          }
        }
        if (extra->caption.empty())
          extra->caption = "Comparison for " + section.subsections[ssi].title;
        result.tables.tables.push_back(std::move(*extra));
      }
    }
    write_file(out_root / "tables.json", tables_to_json(result.tables));

    trace.set_stage("assemble");
    auto assembled = assemble_survey(result.outline, bodies, result.tables, result.tree);
    result.survey = std::move(assembled.draft);
  } catch (const Error& e) {
    throw fail("write", e);
  }

  try {
    trace.set_stage("align");
    AlignmentReport detected =
        check_alignment(result.tree, result.tables, result.outline, result.survey, db);
    auto repaired = repair(&primary, result.tree, result.tables, result.outline,
                           result.survey, detected, config.max_align_passes, db);
    result.tree = std::move(repaired.tree);
    result.tables = std::move(repaired.tables);
    result.outline = std::move(repaired.outline);
    result.survey = std::move(repaired.survey);
    result.alignment = std::move(repaired.report);
    trace.mark("align", "ok:" + std::to_string(result.alignment.violations.size()));
  } catch (const Error& e) {
    throw fail("align", e);
  }

  trace.set_stage("persist");
  write_file(out_root / "tree.json", serialize_tree(result.tree, TreeFormat::json));
  write_file(out_root / "tables.json", tables_to_json(result.tables));
  write_file(out_root / "outline.json", outline_to_json(result.outline));
  write_file(out_root / "survey.md", render_survey_markdown(result.survey, result.tables));
  write_file(out_root / "report.json", report_to_json(result.alignment));
  trace.mark("persist", "ok");
  persist_trace();
  return result;
}

EvaluationReport run_evaluate(const std::string& artifact_dir, const RunConfig& config) {
  fs::path dir(artifact_dir);
  for (const char* name : {"tree.json", "tables.json", "survey.md"})
    if (!fs::is_regular_file(dir / name))
      throw Error("io", "missing artifact file: " + (dir / name).string());

  PaperDb db = PaperDb::ingest_file(config.corpus_path);
  KnowledgeTree tree = parse_tree(read_file(dir / "tree.json"));
  TableSet tables = tables_from_json(read_file(dir / "tables.json"));
  SurveyDraft survey = parse_survey_markdown(read_file(dir / "survey.md"), db);

  auto library =
      std::make_shared<const PromptLibrary>(PromptLibrary::load_dir(config.prompts_dir));
  RunTrace trace;
  auto providers = make_providers(config, library, &trace);
  trace.set_stage("evaluate");

  EvaluationReport report = evaluate_all(*providers.front(), tree, tables, survey, db);
  write_file(dir / "report.json", evaluation_report_to_json(report));
  return report;
}

std::string inspect_artifact(const std::string& path) {
  fs::path p(path);
  if (!fs::is_regular_file(p)) throw Error("io", "no such file: " + path);
  std::string name = p.filename().string();
  std::string content = read_file(p);

  if (name == "tree.json")
    return serialize_tree(parse_tree(content), TreeFormat::markdown);
  if (name == "tables.json")
    return render_markdown_tables(tables_from_json(content));
  if (name == "outline.json")
    return outline_to_markdown(outline_from_json(content));
  if (p.extension() == ".json") {
    json j = json::parse(content, nullptr, false);
    if (!j.is_discarded()) return j.dump(2) + "\n";
  }
  if (p.extension() == ".jsonl") {
    size_t records = 0;
    std::istringstream in(content);
    std::string line;
    std::ostringstream out;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++records;
      json rec = json::parse(line, nullptr, false);
      if (!rec.is_discarded() && records <= 10)
        out << rec.value("id", "?") << ": " << rec.value("title", "?") << "\n";
    }
    out << "(" << records << " records)\n";
    return out.str();
  }
  return content;
}

}  // namespace mvss
