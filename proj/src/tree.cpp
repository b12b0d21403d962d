#include "mvss/tree.hpp"

#include <sstream>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

using nlohmann::json;

namespace {

json node_to_json(const TreeNode& node) {
  json j;
  j["node_id"] = node.node_id;
  j["label"] = node.label;
  j["description"] = node.description;
  j["paper_ids"] = node.paper_ids;  // std::set serializes ascending
  json children = json::array();
  for (const auto& child : node.children) children.push_back(node_to_json(child));
  j["children"] = children;
  return j;
}

TreeNode node_from_json(const json& j, const std::string& where) {
  if (!j.is_object())
    throw Error("tree-parse", where + ": node is not an object");
  TreeNode node;
  if (!j.contains("node_id") || !j["node_id"].is_string() ||
      j["node_id"].get<std::string>().empty())
    throw Error("tree-parse", where + ": missing node_id");
  node.node_id = j["node_id"].get<std::string>();
  if (!j.contains("label") || !j["label"].is_string() ||
      j["label"].get<std::string>().empty())
    throw Error("tree-parse", "node '" + node.node_id + "': missing label");
  node.label = j["label"].get<std::string>();
  node.description = j.value("description", "");
  if (j.contains("paper_ids")) {
    if (!j["paper_ids"].is_array())
      throw Error("tree-parse", "node '" + node.node_id + "': paper_ids not an array");
    for (const auto& id : j["paper_ids"]) {
      if (!id.is_string())
        throw Error("tree-parse", "node '" + node.node_id + "': non-string paper id");
      node.paper_ids.insert(id.get<std::string>());
    }
  }
  if (j.contains("children")) {
    if (!j["children"].is_array())
      throw Error("tree-parse", "node '" + node.node_id + "': children not an array");
    for (const auto& child : j["children"])
      node.children.push_back(node_from_json(child, "child of '" + node.node_id + "'"));
  }
  return node;
}

// Structural screening of a provider-emitted candidate; throws tree-parse on
// the first violated constraint so the caller can re-ask.
void screen_candidate(const KnowledgeTree& tree, const std::set<std::string>& allowed,
                      const TreeOptions& options) {
  std::set<std::string> seen_ids;
  std::vector<std::string> ghosts;
  bool too_deep = false;
  std::string dup_id, empty_leaf, over_budget;
  walk_tree(tree.root, [&](const TreeNode& node, int depth) {
    if (!seen_ids.insert(node.node_id).second && dup_id.empty()) dup_id = node.node_id;
    if (depth > options.max_depth) too_deep = true;
    for (const auto& id : node.paper_ids)
      if (!allowed.count(id)) ghosts.push_back(id);
    if (node.children.empty() && node.paper_ids.size() < options.min_leaf_evidence &&
        empty_leaf.empty())
      empty_leaf = node.node_id;
    if (node.paper_ids.size() > options.per_node_budget && over_budget.empty())
      over_budget = node.node_id;
  });
  if (!dup_id.empty())
    throw Error("tree-parse", "DuplicateNodeId: node id '" + dup_id + "' repeats");
  if (!ghosts.empty()) {
    std::ostringstream msg;
    msg << "unknown paper ids:";
    for (const auto& g : ghosts) msg << " '" << g << "'";
    throw Error("tree-parse", msg.str());
  }
  if (too_deep)
    throw Error("tree-parse", "DepthExceeded: tree deeper than " +
                                  std::to_string(options.max_depth));
  if (!empty_leaf.empty())
    throw Error("tree-parse", "EmptyLeafEvidence: leaf '" + empty_leaf +
                                  "' cites no papers");
  if (!over_budget.empty())
    throw Error("tree-parse", "node '" + over_budget + "' exceeds the per-node budget of " +
                                  std::to_string(options.per_node_budget));
}

TreeNode parse_candidate_node(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    // Providers often wrap JSON in fences; strip the first fenced block.
    size_t open = text.find("```");
    if (open != std::string::npos) {
      size_t start = text.find('\n', open);
      size_t close = text.find("```", start == std::string::npos ? open + 3 : start);
      if (start != std::string::npos && close != std::string::npos)
        j = json::parse(text.substr(start + 1, close - start - 1), nullptr, false);
    }
  }
  if (j.is_discarded())
    throw Error("tree-parse", "reply is not valid JSON");
  if (j.is_object() && j.contains("root")) return node_from_json(j["root"], "root");
  return node_from_json(j, "root");
}

std::string paper_list_text(const std::vector<PaperContext>& papers) {
  std::ostringstream out;
  for (const auto& p : papers)
    out << "- [" << p.id << "] " << p.title << ": " << collapse_ws(p.abstract) << "\n";
  return out.str();
}

}  // namespace

KnowledgeTree parse_tree(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error("tree-parse", "tree json is not an object");
  if (!j.contains("topic") || !j["topic"].is_string())
    throw Error("tree-parse", "tree json missing topic");
  if (!j.contains("root"))
    throw Error("tree-parse", "tree json missing root");
  KnowledgeTree tree;
  tree.topic = j["topic"].get<std::string>();
  tree.refinement_round = j.value("refinement_round", 0);
  if (tree.refinement_round < 0)
    throw Error("tree-parse", "negative refinement_round");
  tree.root = node_from_json(j["root"], "root");
  return tree;
}

std::string serialize_tree(const KnowledgeTree& tree, TreeFormat format) {
  if (format == TreeFormat::json) {
    json j;
    j["topic"] = tree.topic;
    j["refinement_round"] = tree.refinement_round;
    j["root"] = node_to_json(tree.root);
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  walk_tree(tree.root, [&](const TreeNode& node, int depth) {
    out << std::string(static_cast<size_t>(depth) * 2, ' ') << "- " << node.label;
    if (!node.description.empty()) out << ": " << collapse_ws(node.description);
    if (!node.paper_ids.empty()) {
      out << " [";
      bool first = true;
      for (const auto& id : node.paper_ids) {
        if (!first) out << ", ";
        out << id;
        first = false;
      }
      out << "]";
    }
    out << "\n";
  });
  return out.str();
}

std::set<std::string> tree_ids(const KnowledgeTree& tree) {
  std::set<std::string> ids;
  walk_tree(tree.root, [&](const TreeNode& node, int) {
    ids.insert(node.paper_ids.begin(), node.paper_ids.end());
  });
  return ids;
}

void walk_tree(const TreeNode& root,
               const std::function<void(const TreeNode&, int)>& visit) {
  struct Frame {
    const TreeNode* node;
    int depth;
  };
  std::vector<Frame> stack{{&root, 0}};
  while (!stack.empty()) {
    Frame frame = stack.back();
    stack.pop_back();
    visit(*frame.node, frame.depth);
    for (auto it = frame.node->children.rbegin(); it != frame.node->children.rend(); ++it)
      stack.push_back({&*it, frame.depth + 1});
  }
}

const TreeNode* find_node(const KnowledgeTree& tree, const std::string& node_id) {
  const TreeNode* found = nullptr;
  walk_tree(tree.root, [&](const TreeNode& node, int) {
    if (!found && node.node_id == node_id) found = &node;
  });
  return found;
}

std::vector<TreeViolation> validate_tree(const KnowledgeTree& tree, const PaperDb& db,
                                         const TreeOptions& options) {
  std::vector<TreeViolation> violations;
  std::set<std::string> seen_ids;
  walk_tree(tree.root, [&](const TreeNode& node, int depth) {
    if (!seen_ids.insert(node.node_id).second)
      violations.push_back({TreeViolationKind::DuplicateNodeId, node.node_id,
                            "node id '" + node.node_id + "' appears more than once"});
    for (const auto& id : node.paper_ids)
      if (!db.contains(id))
        violations.push_back({TreeViolationKind::DanglingPaperId, node.node_id,
                              "paper id '" + id + "' is not in the corpus"});
    if (node.children.empty() && node.paper_ids.size() < options.min_leaf_evidence)
      violations.push_back({TreeViolationKind::EmptyLeafEvidence, node.node_id,
                            "leaf '" + node.node_id + "' cites no papers"});
    if (depth > options.max_depth)
      violations.push_back({TreeViolationKind::DepthExceeded, node.node_id,
                            "node '" + node.node_id + "' at depth " +
                                std::to_string(depth) + " exceeds max depth " +
                                std::to_string(options.max_depth)});
  });
  return violations;
}

std::string violation_to_string(const TreeViolation& v) {
  const char* kind = nullptr;
  switch (v.kind) {
    case TreeViolationKind::DuplicateNodeId: kind = "DuplicateNodeId"; break;
    case TreeViolationKind::DanglingPaperId: kind = "DanglingPaperId"; break;
    case TreeViolationKind::EmptyLeafEvidence: kind = "EmptyLeafEvidence"; break;
    case TreeViolationKind::DepthExceeded: kind = "DepthExceeded"; break;
  }
  return std::string(kind) + " at " + v.location + ": " + v.detail;
}

KnowledgeTree build_tree(Provider& provider, const std::string& topic,
                         const std::vector<PaperContext>& papers,
                         const TreeOptions& options) {
  if (papers.empty())
    throw Error("tree-parse", "cannot build a tree from an empty paper set");
  std::set<std::string> allowed;
  for (const auto& p : papers) allowed.insert(p.id);

  ChatRequest request;
  request.template_name = "TREE_BUILD_PROMPT";
  request.bindings = {
      {"TOPIC", topic},
      {"MAX DEPTH", std::to_string(options.max_depth)},
      {"PAPER LIST", paper_list_text(papers)},
  };

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    try {
      KnowledgeTree tree;
      tree.topic = topic;
      tree.refinement_round = 0;
      tree.root = parse_candidate_node(reply.text);
      tree.root.label = topic;  // root label is the topic by construction
      screen_candidate(tree, allowed, options);
      return tree;
    } catch (const Error& e) {
      if (e.code() != "tree-parse") throw;
      last_error = e.what();
    }
  }
  throw Error("tree-parse", last_error);
}

KnowledgeTree refine_tree(Provider& provider, const KnowledgeTree& tree,
                          const PaperDb& db, const TreeOptions& options,
                          const std::set<std::string>* allowed_ids) {
  std::set<std::string> allowed = allowed_ids ? *allowed_ids : db.ids();

  ChatRequest request;
  request.template_name = "TREE_REFINE_PROMPT";
  request.bindings = {
      {"TOPIC", tree.topic},
      {"MAX DEPTH", std::to_string(options.max_depth)},
      {"PRIOR KNOWLEDGE JSON", serialize_tree(tree, TreeFormat::json)},
  };

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    try {
      KnowledgeTree refined;
      refined.topic = tree.topic;
      refined.refinement_round = tree.refinement_round + 1;
      refined.root = parse_candidate_node(reply.text);
      refined.root.label = tree.topic;
      screen_candidate(refined, allowed, options);
      return refined;
    } catch (const Error& e) {
      if (e.code() != "tree-parse") throw;
      last_error = e.what();
    }
  }
  throw Error("tree-parse", last_error);
}

KnowledgeTree refine_loop(Provider& provider, const KnowledgeTree& tree,
                          const PaperDb& db, int rounds, const TreeScorer& scorer,
                          const TreeOptions& options,
                          const std::set<std::string>* allowed_ids) {
  KnowledgeTree best = tree;
  TreeScore best_score = scorer(tree);
  KnowledgeTree current = tree;
  for (int r = 0; r < rounds; ++r) {
    current = refine_tree(provider, current, db, options, allowed_ids);
    TreeScore score = scorer(current);
    // Lexicographic: quality, then precision; earlier rounds win ties.
    if (score.tree_quality > best_score.tree_quality ||
        (score.tree_quality == best_score.tree_quality &&
         score.citation_precision > best_score.citation_precision)) {
      best = current;
      best_score = score;
    }
  }
  return best;
}

}  // namespace mvss
