#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mvss/align.hpp"
#include "mvss/composer.hpp"
#include "mvss/corpus.hpp"
#include "mvss/evaluator.hpp"
#include "mvss/llm.hpp"
#include "mvss/tables.hpp"
#include "mvss/tree.hpp"

namespace mvss {

struct ProviderSpec {
  std::string model = "default";
};

struct RunConfig {
  std::string topic;
  std::string corpus_path;
  int target_tokens = 8000;  // one of 8000, 16000, 32000, 64000
  int sections = 4;
  int outline_candidates = 3;
  int refine_iters = 3;
  size_t retrieve_k = 1200;
  size_t per_node_k = 60;
  int max_align_passes = 2;
  uint64_t seed = 0;
  bool mock = false;
  std::string out_dir = "out";
  std::string prompts_dir = "prompts";
  std::string fixtures_dir = "fixtures";  // mock replies live here
  std::vector<ProviderSpec> providers;    // empty -> one "default" provider
  std::string base_url;                   // live endpoint, e.g. http://host:port
  int max_retries = 2;
  double temperature = 1.0;
  int max_output = 4096;
};

RunConfig config_from_json(const std::string& json_text);
std::string config_to_json(const RunConfig& config);

/// Throws Error("config") on out-of-range values.
void validate_config(const RunConfig& config);

struct TraceEntry {
  std::string stage;
  std::string template_name;  // "-" for non-provider stages
  std::string digest;         // "-" for non-provider stages
  std::string outcome;        // "ok" or an error code
  long duration_ms = 0;
};

/// Append-only log of pipeline activity. The on-disk rendering excludes
/// wall-clock durations so mock runs stay byte-reproducible; durations stay
/// available in memory.
class RunTrace {
 public:
  void set_stage(std::string stage) { stage_ = std::move(stage); }
  const std::string& stage() const { return stage_; }
  void append(const std::string& template_name, const std::string& digest,
              const std::string& outcome, long duration_ms);
  void mark(const std::string& stage, const std::string& outcome);

  const std::vector<TraceEntry>& entries() const { return entries_; }
  std::string to_log() const;

 private:
  std::string stage_;
  std::vector<TraceEntry> entries_;
};

/// Provider decorator that records every call into the trace under the
/// trace's current stage.
class TracingProvider : public Provider {
 public:
  TracingProvider(std::shared_ptr<Provider> inner, RunTrace* trace)
      : inner_(std::move(inner)), trace_(trace) {}
  Completion complete(const ChatRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<Provider> inner_;
  RunTrace* trace_;
};

struct IngestResult {
  size_t documents = 0;
  std::string index_path;
};

/// Build the corpus index and persist its JSON snapshot beside the file.
IngestResult run_ingest(const std::string& corpus_path);

struct GenerateResult {
  std::string out_dir;
  KnowledgeTree tree;
  TableSet tables;
  Outline outline;
  SurveyDraft survey;
  AlignmentReport alignment;
};

/// The full pipeline: retrieve, build and refine the tree, derive tables,
/// plan the outline, write, align. Artifacts land under
/// <out_dir>/<topic-slug>/ as tree.json, tables.json, outline.json,
/// survey.md, report.json and trace.log; anything completed before a failure
/// is persisted before the error propagates (with the stage name attached).
GenerateResult run_generate(const RunConfig& config);

/// Score a generated artifact directory; writes report.json into it.
EvaluationReport run_evaluate(const std::string& artifact_dir, const RunConfig& config);

/// Human-readable rendering of any artifact file (tree/tables/outline/
/// report JSON, survey markdown, corpus records).
std::string inspect_artifact(const std::string& path);

std::string topic_slug(const std::string& topic);

/// Providers per config: mock fixtures or live HTTP, each wrapped for
/// tracing when a trace is supplied.
std::vector<std::shared_ptr<Provider>> make_providers(
    const RunConfig& config, std::shared_ptr<const PromptLibrary> library,
    RunTrace* trace);

}  // namespace mvss
