#include "mvss/align.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

using nlohmann::json;

namespace {

const std::string kUnresolvedPrefix = "unresolved: ";

bool title_matches_label(const std::string& label, const SurveyDraft& survey) {
  for (const auto& section : survey.sections) {
    if (contains_ci(section.title, label)) return true;
    for (const auto& sub : section.subsections) {
      if (contains_ci(sub.title, label)) return true;
      if (contains_ci(sub.body, label)) return true;
    }
  }
  return false;
}

// Remove one bracketed citation (surface included) from a body, tidying the
// whitespace the excision leaves behind.
std::string excise_marker(const std::string& body, const std::string& surface) {
  std::string needle = "[" + surface + "]";
  size_t pos = body.find(needle);
  if (pos == std::string::npos) return body;
  std::string out = body.substr(0, pos) + body.substr(pos + needle.size());
  // " ." -> "." and doubled spaces from the removal site
  size_t at = pos > 0 ? pos - 1 : 0;
  while (true) {
    size_t sp = out.find("  ", at);
    if (sp == std::string::npos || sp > pos + 2) break;
    out.erase(sp, 1);
  }
  size_t sp = out.find(" .", at);
  if (sp != std::string::npos && sp <= pos + 2) out.erase(sp, 1);
  sp = out.find(" ,", at);
  if (sp != std::string::npos && sp <= pos + 2) out.erase(sp, 1);
  return out;
}

void refresh_markers(SurveyDraft& survey, const PaperDb& db) {
  for (auto& section : survey.sections) {
    for (auto& sub : section.subsections) {
      sub.citations.clear();
      for (const auto& span : bracket_spans(sub.body)) {
        if (auto id = db.find_by_title(span.content))
          sub.citations.push_back({span.content, *id, span.begin, span.end});
      }
    }
  }
}

int label_match(const std::string& a, const std::string& b) {
  if (loose_equal(a, b)) return 3;
  if (contains_ci(a, b) || contains_ci(b, a)) return 2;
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  for (const auto& t : ta)
    if (std::find(tb.begin(), tb.end(), t) != tb.end()) return 1;
  return 0;
}

}  // namespace

std::string align_kind_name(AlignKind kind) {
  switch (kind) {
    case AlignKind::DanglingCitation: return "DanglingCitation";
    case AlignKind::TableOrphan: return "TableOrphan";
    case AlignKind::CoverageGap: return "CoverageGap";
    case AlignKind::OutlineMismatch: return "OutlineMismatch";
  }
  return "?";
}

std::string view_kind_name(ViewKind view) {
  switch (view) {
    case ViewKind::tree: return "tree";
    case ViewKind::tables: return "tables";
    case ViewKind::outline: return "outline";
    case ViewKind::survey: return "survey";
  }
  return "?";
}

std::string report_to_json(const AlignmentReport& report) {
  json j;
  j["pass_index"] = report.pass_index;
  json violations = json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"kind", align_kind_name(v.kind)},
                          {"view", view_kind_name(v.view)},
                          {"location", v.location},
                          {"detail", v.detail}});
  }
  j["violations"] = violations;
  return j.dump(2) + "\n";
}

AlignmentReport check_alignment(const KnowledgeTree& tree, const TableSet& tables,
                                const Outline& outline, const SurveyDraft& survey,
                                const PaperDb& db) {
  AlignmentReport report;

  // (a) dangling citations: survey bodies, then table rows
  for (const auto& section : survey.sections) {
    for (const auto& sub : section.subsections) {
      for (const auto& marker : sub.citations) {
        if (!db.contains(marker.paper_id))
          report.violations.push_back(
              {AlignKind::DanglingCitation, ViewKind::survey, sub.title,
               "citation '" + marker.surface + "' resolves to unknown id '" +
                   marker.paper_id + "'"});
      }
    }
  }
  for (const auto& table : tables.tables) {
    for (const auto& row : table.rows) {
      for (const auto& id : row.paper_ids) {
        if (!db.contains(id))
          report.violations.push_back(
              {AlignKind::DanglingCitation, ViewKind::tables, table.table_id,
               "row '" + row.method_label + "' cites unknown id '" + id + "'"});
      }
    }
  }

  // (b) orphaned table anchors
  for (const auto& table : tables.tables) {
    if (!find_node(tree, table.anchor_node_id))
      report.violations.push_back(
          {AlignKind::TableOrphan, ViewKind::tables, table.table_id,
           "anchor node '" + table.anchor_node_id + "' is not in the tree"});
  }

  // (c) depth-1 branches with no lexical echo anywhere in the survey
  for (const auto& branch : tree.root.children) {
    if (!title_matches_label(branch.label, survey))
      report.violations.push_back(
          {AlignKind::CoverageGap, ViewKind::tree, branch.node_id,
           "branch '" + branch.label + "' has no match in the survey"});
  }

  // (d) section lists must agree with the outline
  auto outline_has = [&](const std::string& title) {
    for (const auto& s : outline.sections)
      if (loose_equal(s.title, title)) return true;
    return false;
  };
  auto survey_has = [&](const std::string& title) {
    for (const auto& s : survey.sections)
      if (loose_equal(s.title, title)) return true;
    return false;
  };
  for (const auto& section : survey.sections) {
    if (!outline_has(section.title))
      report.violations.push_back(
          {AlignKind::OutlineMismatch, ViewKind::survey, section.title,
           "survey section '" + section.title + "' is not in the outline"});
  }
  for (const auto& section : outline.sections) {
    if (!survey_has(section.title))
      report.violations.push_back(
          {AlignKind::OutlineMismatch, ViewKind::outline, section.title,
           "outline section '" + section.title + "' is missing from the survey"});
  }
  return report;
}

RepairResult repair(Provider* provider, const KnowledgeTree& tree,
                    const TableSet& tables, const Outline& outline,
                    const SurveyDraft& survey, const AlignmentReport& report,
                    int max_passes, const PaperDb& db) {
  RepairResult result{tree, tables, outline, survey, report};
  result.report.pass_index = 0;
  if (report.clean() || max_passes <= 0) return result;

  size_t previous_count = report.violations.size();
  std::set<std::string> gave_up;  // coverage-gap node ids we could not fix

  for (int pass = 1; pass <= max_passes; ++pass) {
    // --- deterministic fixes -------------------------------------------
    for (const auto& v : result.report.violations) {
      switch (v.kind) {
        case AlignKind::DanglingCitation: {
          if (v.view == ViewKind::survey) {
            for (auto& section : result.survey.sections)
              for (auto& sub : section.subsections)
                if (sub.title == v.location)
                  for (auto& marker : sub.citations)
                    if (!db.contains(marker.paper_id))
                      sub.body = excise_marker(sub.body, marker.surface);
          } else {
            for (auto& table : result.tables.tables) {
              if (table.table_id != v.location) continue;
              for (auto& row : table.rows) {
                std::set<std::string> kept;
                for (const auto& id : row.paper_ids)
                  if (db.contains(id)) kept.insert(id);
                row.paper_ids = std::move(kept);
              }
              std::erase_if(table.rows,
                            [](const TableRow& r) { return r.paper_ids.empty(); });
            }
            // A table that fell under the row floor is dropped entirely.
            std::erase_if(result.tables.tables, [&](const ComparisonTable& t) {
              return t.table_id == v.location && t.rows.size() < 3;
            });
          }
          break;
        }
        case AlignKind::TableOrphan: {
          for (auto& table : result.tables.tables) {
            if (table.table_id != v.location) continue;
            // Re-anchor to the node whose label best matches the caption.
            const TreeNode* best = nullptr;
            int best_score = 0;
            walk_tree(result.tree.root, [&](const TreeNode& node, int) {
              int score = label_match(node.label, table.caption);
              if (score > best_score) {
                best_score = score;
                best = &node;
              }
            });
            if (best) table.anchor_node_id = best->node_id;
          }
          // No lexical home: drop the table.
          std::erase_if(result.tables.tables, [&](const ComparisonTable& t) {
            return t.table_id == v.location && !find_node(result.tree, t.anchor_node_id);
          });
          break;
        }
        case AlignKind::OutlineMismatch: {
          if (v.view == ViewKind::survey) {
            std::erase_if(result.survey.sections, [&](const SurveySection& s) {
              return loose_equal(s.title, v.location);
            });
          } else {
            // Insert the missing section at its outline position.
            size_t outline_pos = 0;
            const OutlineSection* missing = nullptr;
            for (size_t i = 0; i < result.outline.sections.size(); ++i) {
              if (loose_equal(result.outline.sections[i].title, v.location)) {
                outline_pos = i;
                missing = &result.outline.sections[i];
                break;
              }
            }
            if (missing) {
              SurveySection shell;
              shell.title = missing->title;
              for (const auto& sub : missing->subsections)
                shell.subsections.push_back({sub.title, "", {}, {}});
              size_t at = std::min(outline_pos, result.survey.sections.size());
              result.survey.sections.insert(result.survey.sections.begin() +
                                                static_cast<long>(at),
                                            std::move(shell));
            }
          }
          break;
        }
        case AlignKind::CoverageGap:
          break;  // handled below, needs the provider
      }
    }

    // Drop survey references to tables that no longer exist.
    {
      std::set<std::string> alive;
      for (const auto& t : result.tables.tables) alive.insert(t.table_id);
      for (auto& section : result.survey.sections)
        for (auto& sub : section.subsections)
          std::erase_if(sub.table_ids,
                        [&](const std::string& id) { return !alive.count(id); });
    }

    // --- provider rewrites for coverage gaps ---------------------------
    for (const auto& v : result.report.violations) {
      if (v.kind != AlignKind::CoverageGap || gave_up.count(v.location)) continue;
      const TreeNode* node = find_node(result.tree, v.location);
      if (!node || result.survey.sections.empty() ||
          result.survey.sections.front().subsections.empty()) {
        gave_up.insert(v.location);
        continue;
      }
      if (!provider) {
        gave_up.insert(v.location);
        continue;
      }
      // Target the best-matching subsection; default to the first.
      SurveySubsection* target = &result.survey.sections.front().subsections.front();
      int best = 0;
      for (auto& section : result.survey.sections) {
        for (auto& sub : section.subsections) {
          int score = label_match(node->label, sub.title);
          if (score > best) {
            best = score;
            target = &sub;
          }
        }
      }
      try {
        ChatRequest request;
        request.template_name = "COVERAGE_REWRITE_PROMPT";
        request.bindings = {
            {"NODE LABEL", node->label},
            {"NODE DESCRIPTION", node->description},
            {"SUBSECTION", target->body},
        };
        Completion reply = provider->complete(request);
        std::string patch = trim(reply.text);
        if (patch.empty() || !contains_ci(patch, node->label)) {
          gave_up.insert(v.location);
          continue;
        }
        target->body += target->body.empty() ? patch : "\n\n" + patch;
      } catch (const Error&) {
        gave_up.insert(v.location);
      }
    }

    refresh_markers(result.survey, db);
    AlignmentReport next =
        check_alignment(result.tree, result.tables, result.outline, result.survey, db);
    next.pass_index = pass;
    result.report = std::move(next);
    if (result.report.violations.size() >= previous_count) break;  // no progress
    previous_count = result.report.violations.size();
    if (result.report.clean()) break;
  }

  // Gaps we abandoned stay in the report, flagged as unresolved.
  for (auto& v : result.report.violations) {
    if (v.kind == AlignKind::CoverageGap && gave_up.count(v.location) &&
        v.detail.rfind(kUnresolvedPrefix, 0) != 0)
      v.detail = kUnresolvedPrefix + v.detail;
  }
  return result;
}

}  // namespace mvss
