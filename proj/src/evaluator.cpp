#include "mvss/evaluator.hpp"

#include <algorithm>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

using nlohmann::json;

std::vector<Claim> extract_claims(const SurveyDraft& survey) {
  std::vector<Claim> claims;
  for (const auto& section : survey.sections) {
    for (const auto& sub : section.subsections) {
      // Sentence-level pass; markers are re-resolved per sentence from the
      // subsection's marker list by surface match.
      for (const auto& sentence : split_sentences(sub.body)) {
        std::vector<std::string> citations;
        for (const auto& span : bracket_spans(sentence)) {
          for (const auto& marker : sub.citations) {
            if (marker.surface == span.content) {
              if (std::find(citations.begin(), citations.end(), marker.paper_id) ==
                  citations.end())
                citations.push_back(marker.paper_id);
              break;
            }
          }
        }
        if (!citations.empty())
          claims.push_back({sentence, std::move(citations), section.title, sub.title});
      }
    }
  }
  return claims;
}

CitationMetrics citation_metrics(Provider& provider, const std::vector<Claim>& claims,
                                 const PaperDb& db) {
  if (claims.empty())
    throw Error("empty-claims", "no citation-bearing claims to score");

  CitationMetrics metrics;
  metrics.n_claims = claims.size();
  size_t supported_claims = 0;
  size_t supported_pairs = 0;

  for (size_t i = 0; i < claims.size(); ++i) {
    bool any_supported = false;
    for (const auto& id : claims[i].citations) {
      ++metrics.n_pairs;
      const Paper& paper = db.at(id);
      bool verdict = false;
      try {
        verdict = nli_verify(provider, claims[i].text,
                             paper.title + "\n" + paper.abstract);
      } catch (const Error& e) {
        if (e.code() != "verdict-parse") throw;
        metrics.unresolved.push_back({i, id});
      }
      if (verdict) {
        ++supported_pairs;
        any_supported = true;
      }
    }
    if (any_supported) ++supported_claims;
  }
  metrics.recall =
      static_cast<double>(supported_claims) / static_cast<double>(metrics.n_claims);
  metrics.precision =
      metrics.n_pairs == 0
          ? 0.0
          : static_cast<double>(supported_pairs) / static_cast<double>(metrics.n_pairs);
  return metrics;
}

ScoreCard judge_survey(Provider& provider, const SurveyDraft& survey,
                       const TableSet& tables) {
  const std::string document = render_survey_markdown(survey, tables);
  ScoreCard card;
  card.coverage = judge_score(provider, coverage_rubric().text(), document);
  card.structure = judge_score(provider, structure_rubric().text(), document);
  card.relevance = judge_score(provider, relevance_rubric().text(), document);
  card.q_survey = (card.coverage + card.structure + card.relevance) / 3.0;
  return card;
}

int judge_tree(Provider& provider, const KnowledgeTree& tree) {
  return judge_score(provider, tree_quality_rubric().text(),
                     serialize_tree(tree, TreeFormat::markdown));
}

int judge_tables(Provider& provider, const TableSet& tables) {
  if (tables.tables.empty()) return 1;  // no usable table
  return judge_score(provider, table_quality_rubric().text(),
                     render_markdown_tables(tables));
}

EvaluationReport evaluate_all(Provider& provider, const KnowledgeTree& tree,
                              const TableSet& tables, const SurveyDraft& survey,
                              const PaperDb& db) {
  EvaluationReport report;

  try {
    auto claims = extract_claims(survey);
    report.citation = citation_metrics(provider, claims, db);
  } catch (const Error& e) {
    report.errors.push_back(std::string("citation: ") + e.what());
  }
  try {
    report.scores = judge_survey(provider, survey, tables);
  } catch (const Error& e) {
    report.errors.push_back(std::string("scores: ") + e.what());
  }
  try {
    report.tree_quality = judge_tree(provider, tree);
  } catch (const Error& e) {
    report.errors.push_back(std::string("tree_quality: ") + e.what());
  }
  try {
    report.table_quality = judge_tables(provider, tables);
  } catch (const Error& e) {
    report.errors.push_back(std::string("table_quality: ") + e.what());
  }
  if (report.scores && report.tree_quality && report.table_quality) {
    report.avg = (report.scores->coverage + report.scores->structure +
                  report.scores->relevance + *report.tree_quality +
                  *report.table_quality) /
                 5.0;
  }
  return report;
}

std::string evaluation_report_to_json(const EvaluationReport& report) {
  json j;
  if (report.citation) {
    const auto& c = *report.citation;
    json unresolved = json::array();
    for (const auto& pair : c.unresolved)
      unresolved.push_back(
          {{"claim_index", pair.claim_index}, {"paper_id", pair.paper_id}});
    j["citation"] = {{"recall", c.recall},
                     {"precision", c.precision},
                     {"n_claims", c.n_claims},
                     {"n_pairs", c.n_pairs},
                     {"unresolved", unresolved}};
  } else {
    j["citation"] = nullptr;
  }
  json scores;
  scores["coverage"] = report.scores ? json(report.scores->coverage) : json(nullptr);
  scores["structure"] = report.scores ? json(report.scores->structure) : json(nullptr);
  scores["relevance"] = report.scores ? json(report.scores->relevance) : json(nullptr);
  scores["q_survey"] = report.scores ? json(report.scores->q_survey) : json(nullptr);
  scores["tree_quality"] =
      report.tree_quality ? json(*report.tree_quality) : json(nullptr);
  scores["table_quality"] =
      report.table_quality ? json(*report.table_quality) : json(nullptr);
  scores["avg"] = report.avg ? json(*report.avg) : json(nullptr);
  j["scores"] = scores;
  if (!report.errors.empty()) j["errors"] = report.errors;
  return j.dump(2) + "\n";
}

}  // namespace mvss
