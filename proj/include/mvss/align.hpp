#pragma once

#include <string>
#include <vector>

#include "mvss/composer.hpp"
#include "mvss/corpus.hpp"
#include "mvss/tables.hpp"
#include "mvss/tree.hpp"

namespace mvss {

enum class AlignKind {
  DanglingCitation,
  TableOrphan,
  CoverageGap,
  OutlineMismatch,
};

enum class ViewKind { tree, tables, outline, survey };

struct AlignmentViolation {
  AlignKind kind;
  ViewKind view;
  std::string location;  // node_id / table_id / section or subsection title
  std::string detail;
};

struct AlignmentReport {
  std::vector<AlignmentViolation> violations;
  int pass_index = 0;

  bool clean() const { return violations.empty(); }
};

std::string align_kind_name(AlignKind kind);
std::string view_kind_name(ViewKind view);
std::string report_to_json(const AlignmentReport& report);

/// The four cross-view checks, in order: dangling citations in survey and
/// tables, orphaned table anchors, depth-1 tree branches with no lexical
/// echo in the survey, and section lists that disagree with the outline.
AlignmentReport check_alignment(const KnowledgeTree& tree, const TableSet& tables,
                                const Outline& outline, const SurveyDraft& survey,
                                const PaperDb& db);

struct RepairResult {
  KnowledgeTree tree;
  TableSet tables;
  Outline outline;
  SurveyDraft survey;
  AlignmentReport report;
};

/// Up to max_passes repair rounds: deterministic fixes first (drop dangling
/// citations, re-anchor or drop orphan tables, reconcile sections toward the
/// outline), then one provider rewrite per coverage gap. Provider failures
/// downgrade the gap to an unresolved entry. The tree is never modified.
RepairResult repair(Provider* provider, const KnowledgeTree& tree,
                    const TableSet& tables, const Outline& outline,
                    const SurveyDraft& survey, const AlignmentReport& report,
                    int max_passes, const PaperDb& db);

}  // namespace mvss
