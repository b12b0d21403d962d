#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mvss {

struct Paper {
  std::string id;
  std::string title;
  std::string abstract;
  int year = 0;
  std::optional<std::string> venue;
  std::optional<std::string> url;
};

/// The slice of a paper handed to prompts: id, title, abstract, year.
struct PaperContext {
  std::string id;
  std::string title;
  std::string abstract;
  int year = 0;
};

struct RankedPaper {
  std::string id;
  double score = 0.0;  // >= 0
};

/// Immutable corpus store with an inverted lexical index over title+abstract
/// tokens. Build once via ingest, then share freely across readers.
class PaperDb {
 public:
  PaperDb() = default;

  /// Build from already-parsed records. Throws Error("duplicate-id") on a
  /// repeated id, Error("malformed-record") on an empty id or title.
  static PaperDb build(std::vector<Paper> papers);

  /// Read line-delimited JSON records from `path`. Required fields: id,
  /// title, abstract; optional: year, venue, url. Errors name the offending
  /// line number or duplicate id.
  static PaperDb ingest_file(const std::string& path);

  size_t size() const { return papers_.size(); }
  bool contains(const std::string& id) const { return papers_.count(id) != 0; }
  const Paper& at(const std::string& id) const;
  const std::map<std::string, Paper>& papers() const { return papers_; }

  std::set<std::string> ids() const;

  /// BM25 (k1=1.2, b=0.75) over the topic's tokens. Every paper is scored;
  /// results are the top k ordered by (score desc, id asc).
  std::vector<RankedPaper> retrieve(const std::string& topic, size_t k) const;

  /// One context per id, ordered by ascending id. Any unresolvable id is an
  /// error listing all missing ids.
  std::vector<PaperContext> fetch_context(const std::set<std::string>& ids) const;

  /// Case-insensitive exact title lookup; empty optional when no paper
  /// carries the title.
  std::optional<std::string> find_by_title(const std::string& title) const;

  /// Deterministic JSON snapshot of the index (doc lengths and postings).
  std::string index_json() const;

 private:
  void build_index();

  std::map<std::string, Paper> papers_;
  std::map<std::string, std::map<std::string, uint32_t>> postings_;  // token -> id -> tf
  std::map<std::string, uint32_t> doc_len_;
  double avg_doc_len_ = 0.0;
  std::map<std::string, std::string> title_to_id_;  // lowercase collapsed title -> id
};

}  // namespace mvss
