#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvss/composer.hpp"
#include "mvss/corpus.hpp"
#include "mvss/llm.hpp"
#include "mvss/tables.hpp"
#include "mvss/tree.hpp"

namespace mvss {

/// A citation-bearing sentence.
struct Claim {
  std::string text;
  std::vector<std::string> citations;  // deduplicated, first-appearance order
  std::string section;
  std::string subsection;
};

struct UnresolvedPair {
  size_t claim_index;
  std::string paper_id;
};

struct CitationMetrics {
  double recall = 0.0;
  double precision = 0.0;
  size_t n_claims = 0;
  size_t n_pairs = 0;
  std::vector<UnresolvedPair> unresolved;  // verdict never parsed; counted false
};

struct ScoreCard {
  int coverage = 0;
  int structure = 0;
  int relevance = 0;
  double q_survey = 0.0;  // exact mean of the three
};

struct EvaluationReport {
  std::optional<CitationMetrics> citation;
  std::optional<ScoreCard> scores;
  std::optional<int> tree_quality;
  std::optional<int> table_quality;
  std::optional<double> avg;  // mean of the five 1..5 scores
  std::vector<std::string> errors;
};

/// One claim per sentence that carries at least one resolved citation,
/// in document order.
std::vector<Claim> extract_claims(const SurveyDraft& survey);

/// Citation recall and precision over all (claim, cited paper) pairs, with
/// support verdicts from the NLI prompt against title+abstract. Empty claim
/// lists are Error("empty-claims"); unparseable verdicts count as
/// unsupported and are flagged.
CitationMetrics citation_metrics(Provider& provider, const std::vector<Claim>& claims,
                                 const PaperDb& db);

/// Three Likert judgments (coverage, structure, relevance) over the survey
/// markdown; q_survey is their exact mean.
ScoreCard judge_survey(Provider& provider, const SurveyDraft& survey,
                       const TableSet& tables = {});

/// Single Likert judgment of the tree's markdown rendering.
int judge_tree(Provider& provider, const KnowledgeTree& tree);

/// Single Likert judgment of the rendered table set; an empty set scores 1
/// without consulting the provider.
int judge_tables(Provider& provider, const TableSet& tables);

/// Compose the full metric suite. Component failures are recorded in
/// `errors` and leave the affected field empty; the report is still built.
EvaluationReport evaluate_all(Provider& provider, const KnowledgeTree& tree,
                              const TableSet& tables, const SurveyDraft& survey,
                              const PaperDb& db);

std::string evaluation_report_to_json(const EvaluationReport& report);

}  // namespace mvss
