#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mvss/corpus.hpp"
#include "mvss/llm.hpp"
#include "mvss/tree.hpp"

namespace mvss {

struct TableRow {
  std::string method_label;
  std::set<std::string> paper_ids;
  std::vector<std::string> cells;  // one per column

  bool operator==(const TableRow&) const = default;
};

struct ComparisonTable {
  std::string table_id;
  std::string anchor_node_id;
  std::string caption;
  std::vector<std::string> columns;  // dimension names, method column excluded
  std::vector<TableRow> rows;

  bool operator==(const ComparisonTable&) const = default;
};

struct TableSet {
  std::vector<ComparisonTable> tables;

  bool operator==(const TableSet&) const = default;
};

enum class TableViolationKind {
  MissingAnchor,
  BadShape,
  DanglingCitation,
  DuplicateTableId,
};

struct TableViolation {
  TableViolationKind kind;
  std::string table_id;
  std::string detail;
};

/// Parse a GitHub-style pipe table, optionally preceded by a bold
/// **caption** line. The first header cell is the method column; a trailing
/// bracketed group in each method cell carries that row's citations.
/// Ragged rows are Error("table-parse") naming the row index.
ComparisonTable parse_markdown_table(const std::string& text);

/// Pipe-table rendering, bold caption first when present. Citations are
/// emitted in the method cell, ids ascending.
std::string render_markdown_table(const ComparisonTable& table);

std::string render_markdown_tables(const TableSet& tables);

/// Content equivalence modulo whitespace: caption, columns, rows compare
/// after whitespace collapsing; table_id and anchor are carried only by the
/// JSON form and are ignored here.
bool tables_equivalent(const ComparisonTable& a, const ComparisonTable& b);

std::string tables_to_json(const TableSet& tables);
TableSet tables_from_json(const std::string& json_text);

struct TableGenOptions {
  size_t min_rows = 3;
  size_t min_columns = 2;
  size_t min_anchor_papers = 3;  // evidence floor for a node to get a table
  int min_anchor_depth = 1;
  int max_anchor_depth = 2;
  uint64_t seed = 0;  // table ids derive from (seed, anchor node)
  std::function<void(const std::string&)> warn;  // nullptr -> stderr
};

/// One table per qualifying tree node (depth and evidence bounds per
/// options). Unparseable provider output gets one re-ask and then
/// Error("table-parse") naming the node; a parseable table under the row
/// floor skips the node with a warning.
TableSet generate_tables(Provider& provider, const KnowledgeTree& tree,
                         const PaperDb& db, const TableGenOptions& options = {});

/// Post-writing reflection: ask whether the subsection discusses >= 3
/// methods. The provider answers either the exact sentinel NO_TABLE or a raw
/// markdown table citing exact paper titles; titles resolve to ids against
/// `papers` and an unknown title is Error("table-parse") naming it.
std::optional<ComparisonTable> reflect_local_table(
    Provider& provider, const std::string& subsection_text,
    const std::vector<PaperContext>& papers);

/// Validate every table against the tree and the corpus. Empty means valid.
std::vector<TableViolation> validate_tables(const TableSet& tables,
                                            const KnowledgeTree& tree,
                                            const PaperDb& db);

std::string violation_to_string(const TableViolation& v);

}  // namespace mvss
