#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvss/corpus.hpp"
#include "mvss/llm.hpp"
#include "mvss/tables.hpp"
#include "mvss/tree.hpp"

namespace mvss {

struct OutlineSubsection {
  std::string title;
  std::string description;
  int word_budget = 0;

  bool operator==(const OutlineSubsection&) const = default;
};

struct OutlineSection {
  std::string title;
  std::string description;
  std::vector<OutlineSubsection> subsections;

  bool operator==(const OutlineSection&) const = default;
};

struct Outline {
  std::string topic;
  std::vector<OutlineSection> sections;

  bool operator==(const Outline&) const = default;
};

/// A resolved citation: the bracketed surface as written, the paper it
/// names, and its character span in the body.
struct CitationMarker {
  std::string surface;
  std::string paper_id;
  size_t begin = 0;
  size_t end = 0;

  bool operator==(const CitationMarker&) const = default;
};

struct SurveySubsection {
  std::string title;
  std::string body;
  std::vector<CitationMarker> citations;
  std::vector<std::string> table_ids;  // tables embedded under this subsection
};

struct SurveySection {
  std::string title;
  std::vector<SurveySubsection> subsections;
};

struct SurveyDraft {
  std::string topic;
  std::vector<SurveySection> sections;
};

std::string outline_to_json(const Outline& outline);

/// Parse and structurally validate: non-empty unique section titles,
/// subsection titles unique within their section. Error("outline-parse").
Outline outline_from_json(const std::string& json_text);

/// Indented markdown list, word budgets as a "(~N words)" suffix.
std::string outline_to_markdown(const Outline& outline);

struct ComposerOptions {
  int sections = 4;
  size_t min_subsections = 2;
  size_t max_subsections = 5;
  double tokens_to_words = 0.75;
  int target_tokens = 8000;
};

/// m outline candidates; candidate i comes from providers[i % n]. Candidates
/// are rough: sections with titles and descriptions, subsections optional.
std::vector<Outline> propose_outlines(const std::vector<Provider*>& providers,
                                      const std::string& topic,
                                      const KnowledgeTree& tree, const TableSet& tables,
                                      const PaperDb& db, int m,
                                      const ComposerOptions& options = {});

/// Merge candidates into one outline with exactly options.sections sections.
Outline merge_outlines(Provider& provider, const std::vector<Outline>& candidates,
                       const ComposerOptions& options = {});

/// Judge every candidate on the Structure rubric; highest score wins, ties
/// go to the lowest index.
Outline judge_select(Provider& provider, const std::vector<Outline>& candidates);

/// Expand one section into 2..5 subsections. `section_word_budget` is split
/// across the returned subsections (equal shares, remainder to the front).
std::vector<OutlineSubsection> expand_subsections(
    Provider& provider, const Outline& outline, size_t section_index,
    const std::vector<PaperContext>& papers, int section_word_budget,
    const ComposerOptions& options = {});

/// Deduplicate and polish; the section count must be preserved.
Outline edit_final_outline(Provider& provider, const Outline& outline,
                           const ComposerOptions& options = {});

/// Per-section word budgets: target length split proportionally to the
/// evidence attached under the best-matching tree branch (weight floor 1).
std::vector<int> section_word_budgets(const Outline& outline, const KnowledgeTree& tree,
                                      const ComposerOptions& options);

/// Extract and resolve [Title] markers against `papers`; unresolved surfaces
/// come back separately.
struct MarkerScan {
  std::vector<CitationMarker> resolved;
  std::vector<std::string> unresolved;
};
MarkerScan scan_markers(const std::string& body,
                        const std::vector<PaperContext>& papers);

struct WrittenSubsection {
  std::string title;
  std::string body;
  std::vector<CitationMarker> citations;
};

/// Write one subsection body. The reply must not open with the subsection
/// title and must not dump a knowledge-tree rendering; unresolved citations
/// are routed through check_citations before becoming an error.
WrittenSubsection write_subsection(Provider& provider,
                                   const OutlineSubsection& subsection,
                                   const std::vector<PaperContext>& papers,
                                   int word_num);

/// Citation repair pass: returns the corrected body. Any bracketed citation
/// still unresolved afterwards is Error("citation") listing the surfaces.
std::string check_citations(Provider& provider, const std::string& body,
                            const std::vector<PaperContext>& papers);

struct AssembledSurvey {
  SurveyDraft draft;
  std::vector<std::string> unanchored_table_ids;  // placed by fallback, for align
};

/// Stitch bodies into outline order and embed each table exactly once, in
/// the subsection whose title best matches the anchor node's label
/// (fallback: first subsection, flagged). Missing bodies are
/// Error("assembly") naming the subsection.
AssembledSurvey assemble_survey(
    const Outline& outline,
    const std::map<std::pair<size_t, size_t>, WrittenSubsection>& bodies,
    const TableSet& tables, const KnowledgeTree& tree);

/// survey.md: H1 topic, H2 sections, H3 subsections, bodies verbatim, each
/// embedded table under its bold caption.
std::string render_survey_markdown(const SurveyDraft& draft, const TableSet& tables);

/// Inverse of render_survey_markdown for evaluation: bodies keep prose only
/// (tables and captions are dropped); bracketed spans that resolve against
/// db titles become markers.
SurveyDraft parse_survey_markdown(const std::string& text, const PaperDb& db);

}  // namespace mvss
