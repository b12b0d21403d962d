#include "mvss/tables.hpp"

#include <iostream>
#include <sstream>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

using nlohmann::json;

namespace {

std::vector<std::string> split_pipe_row(const std::string& line) {
  // "| a | b |" -> {"a", "b"}; leading/trailing pipes optional.
  std::vector<std::string> cells;
  std::string body = trim(line);
  if (!body.empty() && body.front() == '|') body.erase(0, 1);
  if (!body.empty() && body.back() == '|') body.pop_back();
  std::string current;
  for (char c : body) {
    if (c == '|') {
      cells.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  cells.push_back(trim(current));
  return cells;
}

bool is_separator_row(const std::string& line) {
  std::string body = trim(line);
  if (body.find('-') == std::string::npos) return false;
  for (char c : body)
    if (c != '|' && c != '-' && c != ':' && c != ' ') return false;
  return true;
}

// Split "Label [a, b]" into the label and the citation tokens.
void split_method_cell(const std::string& cell, std::string& label,
                       std::vector<std::string>& citations) {
  label = cell;
  citations.clear();
  if (cell.empty() || cell.back() != ']') return;
  size_t open = cell.rfind('[');
  if (open == std::string::npos) return;
  std::string inner = cell.substr(open + 1, cell.size() - open - 2);
  label = trim(cell.substr(0, open));
  std::stringstream ss(inner);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (!token.empty()) citations.push_back(token);
  }
}

std::string table_id_for(uint64_t seed, const std::string& anchor) {
  return "t-" + fnv1a_hex(std::to_string(seed) + "|" + anchor).substr(0, 8);
}

std::string titles_list(const std::vector<PaperContext>& papers) {
  std::ostringstream out;
  for (const auto& p : papers)
    out << "- " << p.title << " (" << p.id << "): " << collapse_ws(p.abstract) << "\n";
  return out.str();
}

}  // namespace

ComparisonTable parse_markdown_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ComparisonTable table;
  std::vector<std::string> table_lines;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '|') {
      table_lines.push_back(t);
    } else if (table_lines.empty() && t.size() > 4 && t.rfind("**", 0) == 0 &&
               t.rfind("**") == t.size() - 2) {
      table.caption = trim(t.substr(2, t.size() - 4));
    } else if (!table_lines.empty()) {
      break;  // table body ended
    }
  }
  if (table_lines.size() < 3 || !is_separator_row(table_lines[1]))
    throw Error("table-parse",
                "expected a pipe table with header, separator, and data rows");

  auto header = split_pipe_row(table_lines[0]);
  if (header.size() < 2)
    throw Error("table-parse", "header needs a method column plus dimensions");
  table.columns.assign(header.begin() + 1, header.end());

  for (size_t i = 2; i < table_lines.size(); ++i) {
    auto cells = split_pipe_row(table_lines[i]);
    if (cells.size() != header.size())
      throw Error("table-parse", "row " + std::to_string(i - 1) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
    TableRow row;
    std::vector<std::string> citations;
    split_method_cell(cells[0], row.method_label, citations);
    row.paper_ids.insert(citations.begin(), citations.end());
    row.cells.assign(cells.begin() + 1, cells.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string render_markdown_table(const ComparisonTable& table) {
  std::ostringstream out;
  if (!table.caption.empty()) out << "**" << table.caption << "**\n\n";
  out << "| Method |";
  for (const auto& c : table.columns) out << " " << c << " |";
  out << "\n|";
  for (size_t i = 0; i < table.columns.size() + 1; ++i) out << " --- |";
  out << "\n";
  for (const auto& row : table.rows) {
    out << "| " << row.method_label;
    if (!row.paper_ids.empty()) {
      out << " [";
      bool first = true;
      for (const auto& id : row.paper_ids) {
        if (!first) out << ", ";
        out << id;
        first = false;
      }
      out << "]";
    }
    out << " |";
    for (const auto& cell : row.cells) out << " " << cell << " |";
    out << "\n";
  }
  return out.str();
}

std::string render_markdown_tables(const TableSet& tables) {
  std::ostringstream out;
  for (size_t i = 0; i < tables.tables.size(); ++i) {
    if (i) out << "\n";
    out << render_markdown_table(tables.tables[i]);
  }
  return out.str();
}

bool tables_equivalent(const ComparisonTable& a, const ComparisonTable& b) {
  auto norm = [](const std::string& s) { return collapse_ws(s); };
  if (norm(a.caption) != norm(b.caption)) return false;
  if (a.columns.size() != b.columns.size() || a.rows.size() != b.rows.size())
    return false;
  for (size_t i = 0; i < a.columns.size(); ++i)
    if (norm(a.columns[i]) != norm(b.columns[i])) return false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const auto& ra = a.rows[i];
    const auto& rb = b.rows[i];
    if (norm(ra.method_label) != norm(rb.method_label)) return false;
    if (ra.paper_ids != rb.paper_ids) return false;
    if (ra.cells.size() != rb.cells.size()) return false;
    for (size_t j = 0; j < ra.cells.size(); ++j)
      if (norm(ra.cells[j]) != norm(rb.cells[j])) return false;
  }
  return true;
}

std::string tables_to_json(const TableSet& tables) {
  json out = json::array();
  for (const auto& t : tables.tables) {
    json jt;
    jt["table_id"] = t.table_id;
    jt["anchor_node_id"] = t.anchor_node_id;
    jt["caption"] = t.caption;
    jt["columns"] = t.columns;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json jr;
      jr["method_label"] = r.method_label;
      jr["paper_ids"] = r.paper_ids;
      jr["cells"] = r.cells;
      rows.push_back(jr);
    }
    jt["rows"] = rows;
    out.push_back(jt);
  }
  return out.dump(2) + "\n";
}

TableSet tables_from_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw Error("table-parse", "tables json is not an array");
  TableSet out;
  for (const auto& jt : j) {
    ComparisonTable t;
    t.table_id = jt.value("table_id", "");
    t.anchor_node_id = jt.value("anchor_node_id", "");
    t.caption = jt.value("caption", "");
    if (jt.contains("columns"))
      t.columns = jt["columns"].get<std::vector<std::string>>();
    for (const auto& jr : jt.value("rows", json::array())) {
      TableRow r;
      r.method_label = jr.value("method_label", "");
      if (jr.contains("paper_ids"))
        for (const auto& id : jr["paper_ids"]) r.paper_ids.insert(id.get<std::string>());
      if (jr.contains("cells")) r.cells = jr["cells"].get<std::vector<std::string>>();
      t.rows.push_back(std::move(r));
    }
    out.tables.push_back(std::move(t));
  }
  return out;
}

TableSet generate_tables(Provider& provider, const KnowledgeTree& tree,
                         const PaperDb& db, const TableGenOptions& options) {
  auto warn = options.warn ? options.warn : [](const std::string& msg) {
    std::cerr << "[tables] " << msg << "\n";
  };

  // Qualifying anchors in preorder.
  std::vector<const TreeNode*> anchors;
  walk_tree(tree.root, [&](const TreeNode& node, int depth) {
    if (depth >= options.min_anchor_depth && depth <= options.max_anchor_depth &&
        node.paper_ids.size() >= options.min_anchor_papers)
      anchors.push_back(&node);
  });

  TableSet out;
  for (const TreeNode* node : anchors) {
    auto contexts = db.fetch_context(node->paper_ids);
    ChatRequest request;
    request.template_name = "TABLE_GENERATION_PROMPT";
    request.bindings = {
        {"NODE LABEL", node->label},
        {"NODE DESCRIPTION", node->description},
        {"PAPER LIST", titles_list(contexts)},
    };

    std::optional<ComparisonTable> accepted;
    std::string last_error;
    bool skipped = false;
    for (int attempt = 0; attempt < 2 && !accepted && !skipped; ++attempt) {
      Completion reply = provider.complete(request);
      if (trim(reply.text) == "NO_TABLE") {
        skipped = true;
        break;
      }
      try {
        ComparisonTable table = parse_markdown_table(reply.text);
        if (table.rows.size() < options.min_rows) {
          warn("node '" + node->node_id + "': table has " +
               std::to_string(table.rows.size()) + " rows, needs " +
               std::to_string(options.min_rows) + "; skipped");
          skipped = true;
          break;
        }
        if (table.columns.size() < options.min_columns)
          throw Error("table-parse", "table needs at least " +
                                         std::to_string(options.min_columns) +
                                         " comparison columns");
        for (const auto& row : table.rows) {
          if (row.paper_ids.empty())
            throw Error("table-parse", "row '" + row.method_label + "' cites no papers");
          for (const auto& id : row.paper_ids)
            if (!db.contains(id))
              throw Error("table-parse",
                          "row '" + row.method_label + "' cites unknown id '" + id + "'");
        }
        table.table_id = table_id_for(options.seed, node->node_id);
        table.anchor_node_id = node->node_id;
        if (table.caption.empty()) table.caption = "Comparison of " + node->label;
        accepted = std::move(table);
      } catch (const Error& e) {
        if (e.code() != "table-parse") throw;
        last_error = e.what();
      }
    }
    if (accepted) {
      out.tables.push_back(std::move(*accepted));
    } else if (!skipped) {
      throw Error("table-parse",
                  "node '" + node->node_id + "': " + last_error);
    }
  }
  return out;
}

std::optional<ComparisonTable> reflect_local_table(
    Provider& provider, const std::string& subsection_text,
    const std::vector<PaperContext>& papers) {
  if (subsection_text.empty())
    throw Error("table-parse", "subsection text is empty");
  ChatRequest request;
  request.template_name = "LOCAL_TABLE_REFLECT_PROMPT";
  request.bindings = {
      {"SUBSECTION", subsection_text},
      {"PAPER LIST", titles_list(papers)},
  };
  Completion reply = provider.complete(request);
  if (trim(reply.text) == "NO_TABLE") return std::nullopt;

  ComparisonTable table = parse_markdown_table(reply.text);
  // Citations here are exact paper titles; map them onto ids.
  for (auto& row : table.rows) {
    std::set<std::string> resolved;
    for (const auto& title : row.paper_ids) {
      std::optional<std::string> id;
      for (const auto& p : papers) {
        if (loose_equal(p.title, title)) {
          id = p.id;
          break;
        }
      }
      if (!id)
        throw Error("table-parse", "unknown paper title '" + title + "'");
      resolved.insert(*id);
    }
    row.paper_ids = std::move(resolved);
  }
  return table;
}

std::vector<TableViolation> validate_tables(const TableSet& tables,
                                            const KnowledgeTree& tree,
                                            const PaperDb& db) {
  std::vector<TableViolation> violations;
  std::set<std::string> seen_ids;
  for (const auto& t : tables.tables) {
    if (!seen_ids.insert(t.table_id).second)
      violations.push_back({TableViolationKind::DuplicateTableId, t.table_id,
                            "table id '" + t.table_id + "' repeats"});
    if (!find_node(tree, t.anchor_node_id))
      violations.push_back({TableViolationKind::MissingAnchor, t.table_id,
                            "anchor node '" + t.anchor_node_id + "' is not in the tree"});
    if (t.columns.size() < 2)
      violations.push_back({TableViolationKind::BadShape, t.table_id,
                            "fewer than 2 comparison columns"});
    if (t.rows.size() < 3)
      violations.push_back({TableViolationKind::BadShape, t.table_id,
                            "fewer than 3 rows"});
    for (const auto& row : t.rows) {
      if (row.cells.size() != t.columns.size())
        violations.push_back({TableViolationKind::BadShape, t.table_id,
                              "row '" + row.method_label + "' has " +
                                  std::to_string(row.cells.size()) + " cells, expected " +
                                  std::to_string(t.columns.size())});
      if (row.paper_ids.empty())
        violations.push_back({TableViolationKind::DanglingCitation, t.table_id,
                              "row '" + row.method_label + "' cites no papers"});
      for (const auto& id : row.paper_ids)
        if (!db.contains(id))
          violations.push_back({TableViolationKind::DanglingCitation, t.table_id,
                                "row '" + row.method_label + "' cites unknown id '" +
                                    id + "'"});
    }
  }
  return violations;
}

std::string violation_to_string(const TableViolation& v) {
  const char* kind = nullptr;
  switch (v.kind) {
    case TableViolationKind::MissingAnchor: kind = "MissingAnchor"; break;
    case TableViolationKind::BadShape: kind = "BadShape"; break;
    case TableViolationKind::DanglingCitation: kind = "DanglingCitation"; break;
    case TableViolationKind::DuplicateTableId: kind = "DuplicateTableId"; break;
  }
  return std::string(kind) + " in " + v.table_id + ": " + v.detail;
}

}  // namespace mvss
