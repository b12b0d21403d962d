#include "mvss/composer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

using nlohmann::json;

namespace {

std::string paper_list_text(const std::vector<PaperContext>& papers) {
  std::ostringstream out;
  for (const auto& p : papers)
    out << "- " << p.title << " (" << p.id << "): " << collapse_ws(p.abstract) << "\n";
  return out.str();
}

json strip_fences(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded()) return j;
  size_t open = text.find("```");
  if (open != std::string::npos) {
    size_t start = text.find('\n', open);
    size_t close = text.find("```", start == std::string::npos ? open + 3 : start);
    if (start != std::string::npos && close != std::string::npos)
      return json::parse(text.substr(start + 1, close - start - 1), nullptr, false);
  }
  return json::value_t::discarded;
}

void validate_outline_structure(const Outline& outline) {
  if (outline.sections.empty())
    throw Error("outline-parse", "outline has no sections");
  std::set<std::string> section_titles;
  for (const auto& section : outline.sections) {
    if (section.title.empty())
      throw Error("outline-parse", "outline section with empty title");
    if (!section_titles.insert(to_lower(section.title)).second)
      throw Error("outline-parse",
                  "duplicate section title '" + section.title + "'");
    std::set<std::string> sub_titles;
    for (const auto& sub : section.subsections) {
      if (sub.title.empty())
        throw Error("outline-parse", "subsection with empty title in section '" +
                                         section.title + "'");
      if (!sub_titles.insert(to_lower(sub.title)).second)
        throw Error("outline-parse", "duplicate subsection title '" + sub.title +
                                         "' in section '" + section.title + "'");
    }
  }
}

Outline outline_from_reply(const std::string& text) {
  json j = strip_fences(text);
  if (j.is_discarded() || !j.is_object())
    throw Error("outline-parse", "reply is not a JSON object");
  Outline outline;
  outline.topic = j.value("topic", "");
  for (const auto& js : j.value("sections", json::array())) {
    OutlineSection section;
    section.title = js.value("title", "");
    section.description = js.value("description", "");
    for (const auto& jss : js.value("subsections", json::array())) {
      OutlineSubsection sub;
      sub.title = jss.value("title", "");
      sub.description = jss.value("description", "");
      sub.word_budget = jss.value("word_budget", 0);
      section.subsections.push_back(std::move(sub));
    }
    outline.sections.push_back(std::move(section));
  }
  validate_outline_structure(outline);
  return outline;
}

// A body that replays the knowledge-tree markdown (two or more consecutive
// bullet lines with a bracketed citation suffix) violates the writing
// constraints.
bool contains_tree_dump(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  int streak = 0;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    bool bullet_with_refs = t.rfind("- ", 0) == 0 && t.size() > 4 && t.back() == ']' &&
                            t.rfind('[') != std::string::npos;
    streak = bullet_with_refs ? streak + 1 : 0;
    if (streak >= 2) return true;
  }
  return false;
}

bool body_opens_with_title(const std::string& body, const std::string& title) {
  std::string head = trim(body);
  while (!head.empty() && (head.front() == '#' || head.front() == '*')) head.erase(0, 1);
  head = trim(head);
  return to_lower(head).rfind(to_lower(collapse_ws(title)), 0) == 0;
}

// Lexical affinity between a table anchor label and a title: exact beats
// containment beats token overlap.
int match_score(const std::string& label, const std::string& title) {
  if (loose_equal(label, title)) return 3;
  if (contains_ci(title, label) || contains_ci(label, title)) return 2;
  auto lt = tokenize(label);
  auto tt = tokenize(title);
  for (const auto& a : lt)
    if (std::find(tt.begin(), tt.end(), a) != tt.end()) return 1;
  return 0;
}

}  // namespace

std::string outline_to_json(const Outline& outline) {
  json j;
  j["topic"] = outline.topic;
  json sections = json::array();
  for (const auto& section : outline.sections) {
    json js;
    js["title"] = section.title;
    js["description"] = section.description;
    json subs = json::array();
    for (const auto& sub : section.subsections) {
      json jss;
      jss["title"] = sub.title;
      jss["description"] = sub.description;
      jss["word_budget"] = sub.word_budget;
      subs.push_back(jss);
    }
    js["subsections"] = subs;
    sections.push_back(js);
  }
  j["sections"] = sections;
  return j.dump(2) + "\n";
}

Outline outline_from_json(const std::string& json_text) {
  return outline_from_reply(json_text);
}

std::string outline_to_markdown(const Outline& outline) {
  std::ostringstream out;
  out << "# " << outline.topic << "\n";
  for (const auto& section : outline.sections) {
    out << "- " << section.title;
    if (!section.description.empty()) out << ": " << collapse_ws(section.description);
    out << "\n";
    for (const auto& sub : section.subsections) {
      out << "  - " << sub.title;
      if (!sub.description.empty()) out << ": " << collapse_ws(sub.description);
      if (sub.word_budget > 0) out << " (~" << sub.word_budget << " words)";
      out << "\n";
    }
  }
  return out.str();
}

std::vector<Outline> propose_outlines(const std::vector<Provider*>& providers,
                                      const std::string& topic,
                                      const KnowledgeTree& tree, const TableSet& tables,
                                      const PaperDb& db, int m,
                                      const ComposerOptions& options) {
  if (providers.empty() || m < 1)
    throw Error("outline-parse", "need at least one provider and one candidate");
  auto contexts = db.fetch_context(tree_ids(tree));
  std::string prior_md = serialize_tree(tree, TreeFormat::markdown);
  if (!tables.tables.empty())
    prior_md += "\n" + render_markdown_tables(tables);

  ChatRequest request;
  request.template_name = "ROUGH_OUTLINE_PROMPT";
  request.bindings = {
      {"TOPIC", topic},
      {"SECTION NUM", std::to_string(options.sections)},
      {"PAPER LIST", paper_list_text(contexts)},
      {"PRIOR KNOWLEDGE MD", prior_md},
      {"PRIOR KNOWLEDGE JSON", serialize_tree(tree, TreeFormat::json)},
  };

  std::vector<Outline> candidates;
  for (int i = 0; i < m; ++i) {
    Provider& provider = *providers[static_cast<size_t>(i) % providers.size()];
    std::string last_error;
    bool done = false;
    for (int attempt = 0; attempt < 2 && !done; ++attempt) {
      Completion reply = provider.complete(request);
      try {
        Outline outline = outline_from_reply(reply.text);
        outline.topic = topic;
        candidates.push_back(std::move(outline));
        done = true;
      } catch (const Error& e) {
        if (e.code() != "outline-parse") throw;
        last_error = e.what();
      }
    }
    if (!done)
      throw Error("outline-parse",
                  "candidate " + std::to_string(i) + ": " + last_error);
  }
  return candidates;
}

Outline merge_outlines(Provider& provider, const std::vector<Outline>& candidates,
                       const ComposerOptions& options) {
  if (candidates.empty())
    throw Error("outline-parse", "no outline candidates to merge");

  std::ostringstream list;
  for (size_t i = 0; i < candidates.size(); ++i)
    list << "Candidate " << (i + 1) << ":\n" << outline_to_json(candidates[i]) << "\n";

  ChatRequest request;
  request.template_name = "MERGING_OUTLINE_PROMPT";
  request.bindings = {
      {"TOPIC", candidates.front().topic},
      {"SECTION NUM", std::to_string(options.sections)},
      {"OUTLINE LIST", list.str()},
  };

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    try {
      Outline merged = outline_from_reply(reply.text);
      merged.topic = candidates.front().topic;
      if (merged.sections.size() != static_cast<size_t>(options.sections))
        throw Error("outline-parse",
                    "merged outline has " + std::to_string(merged.sections.size()) +
                        " sections, expected " + std::to_string(options.sections));
      return merged;
    } catch (const Error& e) {
      if (e.code() != "outline-parse") throw;
      last_error = e.what();
    }
  }
  throw Error("outline-parse", last_error);
}

Outline judge_select(Provider& provider, const std::vector<Outline>& candidates) {
  if (candidates.empty())
    throw Error("outline-parse", "no outline candidates to judge");
  size_t best = 0;
  int best_score = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    int score = judge_score(provider, structure_rubric().text(),
                            outline_to_markdown(candidates[i]));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return candidates[best];
}

std::vector<OutlineSubsection> expand_subsections(
    Provider& provider, const Outline& outline, size_t section_index,
    const std::vector<PaperContext>& papers, int section_word_budget,
    const ComposerOptions& options) {
  if (section_index >= outline.sections.size())
    throw Error("outline-parse", "section index out of range");
  const OutlineSection& section = outline.sections[section_index];

  ChatRequest request;
  request.template_name = "SUBSECTION_OUTLINE_PROMPT";
  request.bindings = {
      {"OUTLINE", outline_to_json(outline)},
      {"SECTION TITLE", section.title},
      {"SECTION DESCRIPTION", section.description},
      {"PAPER LIST", paper_list_text(papers)},
  };

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    try {
      json j = strip_fences(reply.text);
      if (j.is_discarded() || !j.is_array())
        throw Error("outline-parse", "reply is not a JSON array of subsections");
      std::vector<OutlineSubsection> subs;
      std::set<std::string> titles;
      for (const auto& jss : j) {
        OutlineSubsection sub;
        sub.title = jss.value("title", "");
        sub.description = jss.value("description", "");
        if (sub.title.empty())
          throw Error("outline-parse", "subsection with empty title");
        if (!titles.insert(to_lower(sub.title)).second)
          throw Error("outline-parse", "duplicate subsection title '" + sub.title + "'");
        subs.push_back(std::move(sub));
      }
      if (subs.size() < options.min_subsections)
        throw Error("outline-parse",
                    "section '" + section.title + "' expanded to " +
                        std::to_string(subs.size()) + " subsections, floor is " +
                        std::to_string(options.min_subsections));
      if (subs.size() > options.max_subsections)
        throw Error("outline-parse",
                    "section '" + section.title + "' expanded to " +
                        std::to_string(subs.size()) + " subsections, cap is " +
                        std::to_string(options.max_subsections));
      // Equal shares of the section budget; remainder goes to the front.
      int n = static_cast<int>(subs.size());
      int share = section_word_budget / n;
      int remainder = section_word_budget % n;
      for (int i = 0; i < n; ++i)
        subs[static_cast<size_t>(i)].word_budget = share + (i < remainder ? 1 : 0);
      return subs;
    } catch (const Error& e) {
      if (e.code() != "outline-parse") throw;
      last_error = e.what();
    }
  }
  throw Error("outline-parse", last_error);
}

Outline edit_final_outline(Provider& provider, const Outline& outline,
                           const ComposerOptions& options) {
  ChatRequest request;
  request.template_name = "EDIT_FINAL_OUTLINE_PROMPT";
  request.bindings = {{"OUTLINE", outline_to_json(outline)}};

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    try {
      Outline edited = outline_from_reply(reply.text);
      edited.topic = outline.topic;
      if (edited.sections.size() != outline.sections.size())
        throw Error("outline-parse",
                    "edit changed the section count from " +
                        std::to_string(outline.sections.size()) + " to " +
                        std::to_string(edited.sections.size()));
      return edited;
    } catch (const Error& e) {
      if (e.code() != "outline-parse") throw;
      last_error = e.what();
    }
  }
  throw Error("outline-parse", last_error);
}

std::vector<int> section_word_budgets(const Outline& outline, const KnowledgeTree& tree,
                                      const ComposerOptions& options) {
  int target_words = static_cast<int>(
      std::lround(options.target_tokens * options.tokens_to_words));

  // Weight each section by the evidence under the best-matching depth-1
  // branch; sections with no branch match weigh 1.
  struct Branch {
    std::string label;
    size_t evidence;
  };
  std::vector<Branch> branches;
  for (const auto& child : tree.root.children) {
    std::set<std::string> ids;
    walk_tree(child, [&](const TreeNode& node, int) {
      ids.insert(node.paper_ids.begin(), node.paper_ids.end());
    });
    branches.push_back({child.label, ids.size()});
  }

  std::vector<double> weights;
  for (const auto& section : outline.sections) {
    double w = 1.0;
    int best = 0;
    for (const auto& branch : branches) {
      int score = match_score(branch.label, section.title);
      if (score > best) {
        best = score;
        w = std::max<size_t>(branch.evidence, 1);
      }
    }
    weights.push_back(w);
  }
  double total = 0;
  for (double w : weights) total += w;
  std::vector<int> budgets;
  int assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    int b;
    if (i + 1 == weights.size()) {
      b = target_words - assigned;  // exact total by construction
    } else {
      b = static_cast<int>(std::lround(target_words * weights[i] / total));
    }
    budgets.push_back(b);
    assigned += b;
  }
  return budgets;
}

MarkerScan scan_markers(const std::string& body,
                        const std::vector<PaperContext>& papers) {
  MarkerScan out;
  for (const auto& span : bracket_spans(body)) {
    std::optional<std::string> id;
    for (const auto& p : papers) {
      if (loose_equal(p.title, span.content)) {
        id = p.id;
        break;
      }
    }
    if (id)
      out.resolved.push_back({span.content, *id, span.begin, span.end});
    else
      out.unresolved.push_back(span.content);
  }
  return out;
}

WrittenSubsection write_subsection(Provider& provider,
                                   const OutlineSubsection& subsection,
                                   const std::vector<PaperContext>& papers,
                                   int word_num) {
  if (word_num < 1) throw Error("write-invalid", "word budget must be positive");
  if (papers.empty()) throw Error("write-invalid", "no papers for subsection");

  ChatRequest request;
  request.template_name = "SUBSECTION_WRITING_PROMPT";
  request.bindings = {
      {"SUBSECTION TITLE", subsection.title},
      {"SUBSECTION DESCRIPTION", subsection.description},
      {"WORD NUM", std::to_string(word_num)},
      {"PAPER LIST", paper_list_text(papers)},
  };

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    std::string body = trim(reply.text);
    if (body.empty()) {
      last_error = "empty body";
      continue;
    }
    if (body_opens_with_title(body, subsection.title)) {
      last_error = "body opens with the subsection title";
      continue;
    }
    if (contains_tree_dump(body)) {
      last_error = "body replays the knowledge tree";
      continue;
    }
    MarkerScan scan = scan_markers(body, papers);
    if (!scan.unresolved.empty()) {
      body = check_citations(provider, body, papers);  // throws if unfixable
      scan = scan_markers(body, papers);
    }
    return {subsection.title, body, std::move(scan.resolved)};
  }
  throw Error("write-invalid",
              "subsection '" + subsection.title + "': " + last_error);
}

std::string check_citations(Provider& provider, const std::string& body,
                            const std::vector<PaperContext>& papers) {
  ChatRequest request;
  request.template_name = "CHECK_CITATION_PROMPT";
  request.bindings = {
      {"SUBSECTION", body},
      {"PAPER LIST", paper_list_text(papers)},
  };
  Completion reply = provider.complete(request);
  std::string corrected = trim(reply.text);
  MarkerScan scan = scan_markers(corrected, papers);
  if (!scan.unresolved.empty()) {
    std::ostringstream msg;
    msg << "unresolved citations after check:";
    for (const auto& s : scan.unresolved) msg << " [" << s << "]";
    throw Error("citation", msg.str());
  }
  return corrected;
}

AssembledSurvey assemble_survey(
    const Outline& outline,
    const std::map<std::pair<size_t, size_t>, WrittenSubsection>& bodies,
    const TableSet& tables, const KnowledgeTree& tree) {
  AssembledSurvey out;
  out.draft.topic = outline.topic;

  for (size_t si = 0; si < outline.sections.size(); ++si) {
    const auto& section = outline.sections[si];
    SurveySection survey_section;
    survey_section.title = section.title;
    for (size_t ssi = 0; ssi < section.subsections.size(); ++ssi) {
      auto it = bodies.find({si, ssi});
      if (it == bodies.end())
        throw Error("assembly", "missing body for subsection '" +
                                    section.subsections[ssi].title + "'");
      SurveySubsection sub;
      sub.title = it->second.title;
      sub.body = it->second.body;
      sub.citations = it->second.citations;
      survey_section.subsections.push_back(std::move(sub));
    }
    out.draft.sections.push_back(std::move(survey_section));
  }

  // Embed every table once: best lexical match of the anchor label against
  // subsection titles first, then section titles; fallback is the first
  // subsection, flagged for the alignment pass.
  for (const auto& table : tables.tables) {
    const TreeNode* anchor = find_node(tree, table.anchor_node_id);
    std::string label = anchor ? anchor->label : table.caption;

    int best = 0;
    std::pair<size_t, size_t> where{0, 0};
    for (size_t si = 0; si < out.draft.sections.size(); ++si) {
      const auto& section = out.draft.sections[si];
      for (size_t ssi = 0; ssi < section.subsections.size(); ++ssi) {
        int score = match_score(label, section.subsections[ssi].title);
        if (score > best) {
          best = score;
          where = {si, ssi};
        }
      }
      int section_score = match_score(label, section.title);
      if (section_score > best && !section.subsections.empty()) {
        best = section_score;
        where = {si, 0};
      }
    }
    if (out.draft.sections.empty() || out.draft.sections[where.first].subsections.empty())
      throw Error("assembly", "no subsection to hold table '" + table.table_id + "'");
    if (best == 0) out.unanchored_table_ids.push_back(table.table_id);
    out.draft.sections[where.first]
        .subsections[where.second]
        .table_ids.push_back(table.table_id);
  }
  return out;
}

std::string render_survey_markdown(const SurveyDraft& draft, const TableSet& tables) {
  std::map<std::string, const ComparisonTable*> by_id;
  for (const auto& t : tables.tables) by_id[t.table_id] = &t;

  std::ostringstream out;
  out << "# " << draft.topic << "\n";
  for (const auto& section : draft.sections) {
    out << "\n## " << section.title << "\n";
    for (const auto& sub : section.subsections) {
      out << "\n### " << sub.title << "\n\n";
      out << sub.body << "\n";
      for (const auto& table_id : sub.table_ids) {
        auto it = by_id.find(table_id);
        if (it == by_id.end()) continue;
        out << "\n" << render_markdown_table(*it->second);
      }
    }
  }
  return out.str();
}

SurveyDraft parse_survey_markdown(const std::string& text, const PaperDb& db) {
  SurveyDraft draft;
  std::istringstream in(text);
  std::string line;
  SurveySection* section = nullptr;
  SurveySubsection* sub = nullptr;
  std::vector<std::string> body_lines;
  bool in_table = false;

  auto flush_body = [&]() {
    if (!sub) return;
    while (!body_lines.empty() && trim(body_lines.back()).empty()) body_lines.pop_back();
    std::string body;
    for (size_t i = 0; i < body_lines.size(); ++i) {
      if (i) body += "\n";
      body += body_lines[i];
    }
    sub->body = body;
    for (const auto& span : bracket_spans(body)) {
      if (auto id = db.find_by_title(span.content))
        sub->citations.push_back({span.content, *id, span.begin, span.end});
    }
    body_lines.clear();
  };

  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.rfind("# ", 0) == 0 && t.rfind("## ", 0) != 0) {
      draft.topic = trim(t.substr(2));
    } else if (t.rfind("## ", 0) == 0 && t.rfind("### ", 0) != 0) {
      flush_body();
      sub = nullptr;
      draft.sections.push_back({trim(t.substr(3)), {}});
      section = &draft.sections.back();
      in_table = false;
    } else if (t.rfind("### ", 0) == 0) {
      flush_body();
      if (!section) {
        draft.sections.push_back({"", {}});
        section = &draft.sections.back();
      }
      section->subsections.push_back({});
      sub = &section->subsections.back();
      sub->title = trim(t.substr(4));
      in_table = false;
    } else if (sub) {
      // Drop embedded tables and their bold captions from the body text.
      bool caption = t.size() > 4 && t.rfind("**", 0) == 0 && t.rfind("**") == t.size() - 2;
      bool pipe_row = !t.empty() && t.front() == '|';
      if (pipe_row || (caption && !in_table)) {
        in_table = pipe_row || caption;
        continue;
      }
      if (t.empty()) in_table = false;
      if (!in_table) body_lines.push_back(line);
    }
  }
  flush_body();
  return draft;
}

}  // namespace mvss
