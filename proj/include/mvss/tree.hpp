#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mvss/corpus.hpp"
#include "mvss/llm.hpp"

namespace mvss {

struct TreeNode {
  std::string node_id;
  std::string label;
  std::string description;
  std::set<std::string> paper_ids;
  std::vector<TreeNode> children;

  bool operator==(const TreeNode&) const = default;
};

struct KnowledgeTree {
  std::string topic;
  TreeNode root;
  int refinement_round = 0;

  bool operator==(const KnowledgeTree&) const = default;
};

enum class TreeViolationKind {
  DuplicateNodeId,
  DanglingPaperId,
  EmptyLeafEvidence,
  DepthExceeded,
};

struct TreeViolation {
  TreeViolationKind kind;
  std::string location;  // node id (or the offending id for duplicates)
  std::string detail;
};

struct TreeOptions {
  int max_depth = 4;           // root is depth 0
  size_t per_node_budget = 60; // max papers attached to one node
  size_t min_leaf_evidence = 1;
};

/// Parse the tree.json interchange form: {topic, refinement_round, root}.
KnowledgeTree parse_tree(const std::string& json_text);

enum class TreeFormat { json, markdown };

/// json: lossless, round-trips through parse_tree. markdown: one bullet per
/// node, two-space indent per depth, attached papers as an [id, ...] suffix.
std::string serialize_tree(const KnowledgeTree& tree, TreeFormat format);

/// Union of paper ids over every node.
std::set<std::string> tree_ids(const KnowledgeTree& tree);

/// Structural checks against the db: unique node ids, resolvable paper ids,
/// evidence on every leaf, depth bound. Empty result means the tree is valid.
std::vector<TreeViolation> validate_tree(const KnowledgeTree& tree, const PaperDb& db,
                                         const TreeOptions& options = {});

std::string violation_to_string(const TreeViolation& v);

/// Build the initial tree over the retrieved papers. The provider answers
/// with a root-node JSON object; the reply is validated against `papers`
/// (ids, depth, leaf evidence, per-node budget) with a single re-ask before
/// Error("tree-parse"). The root label is forced to the topic string.
KnowledgeTree build_tree(Provider& provider, const std::string& topic,
                         const std::vector<PaperContext>& papers,
                         const TreeOptions& options = {});

/// One refinement step: the provider restructures the current tree. Paper
/// ids in the candidate must stay inside `allowed_ids` (defaults to all db
/// ids). The returned tree has refinement_round incremented.
KnowledgeTree refine_tree(Provider& provider, const KnowledgeTree& tree,
                          const PaperDb& db, const TreeOptions& options = {},
                          const std::set<std::string>* allowed_ids = nullptr);

struct TreeScore {
  int tree_quality = 0;           // 1..5
  double citation_precision = 0;  // [0,1]
};

using TreeScorer = std::function<TreeScore(const KnowledgeTree&)>;

/// Run `rounds` refinement steps, score the input and every candidate, and
/// return the lexicographic argmax of (tree_quality, citation_precision,
/// lowest round).
KnowledgeTree refine_loop(Provider& provider, const KnowledgeTree& tree,
                          const PaperDb& db, int rounds, const TreeScorer& scorer,
                          const TreeOptions& options = {},
                          const std::set<std::string>* allowed_ids = nullptr);

/// Map node_id -> label for every node; empty optional when absent.
const TreeNode* find_node(const KnowledgeTree& tree, const std::string& node_id);

/// Preorder walk helper: (node, depth) for every node.
void walk_tree(const TreeNode& root,
               const std::function<void(const TreeNode&, int)>& visit);

}  // namespace mvss
