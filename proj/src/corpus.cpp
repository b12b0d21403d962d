#include "mvss/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

using nlohmann::json;

PaperDb PaperDb::build(std::vector<Paper> papers) {
  PaperDb db;
  for (auto& p : papers) {
    if (p.id.empty()) throw Error("malformed-record", "paper with empty id");
    if (p.title.empty())
      throw Error("malformed-record", "paper '" + p.id + "' has empty title");
    if (db.papers_.count(p.id))
      throw Error("duplicate-id", "duplicate paper id '" + p.id + "'");
    db.papers_.emplace(p.id, std::move(p));
  }
  db.build_index();
  return db;
}

PaperDb PaperDb::ingest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open corpus file: " + path);

  std::vector<Paper> papers;
  std::string line;
  size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw Error("malformed-record",
                  "line " + std::to_string(line_no) + ": not a JSON object");
    for (const char* field : {"id", "title", "abstract"}) {
      if (!rec.contains(field) || !rec[field].is_string() ||
          rec[field].get<std::string>().empty())
        throw Error("malformed-record", "line " + std::to_string(line_no) +
                                            ": missing or empty field '" +
                                            field + "'");
    }
    Paper p;
    p.id = rec["id"].get<std::string>();
    if (!seen.insert(p.id).second)
      throw Error("duplicate-id", "line " + std::to_string(line_no) +
                                      ": duplicate paper id '" + p.id + "'");
    p.title = rec["title"].get<std::string>();
    p.abstract = rec["abstract"].get<std::string>();
    if (rec.contains("year") && rec["year"].is_number_integer())
      p.year = rec["year"].get<int>();
    if (rec.contains("venue") && rec["venue"].is_string())
      p.venue = rec["venue"].get<std::string>();
    if (rec.contains("url") && rec["url"].is_string())
      p.url = rec["url"].get<std::string>();
    papers.push_back(std::move(p));
  }
  return build(std::move(papers));
}

void PaperDb::build_index() {
  postings_.clear();
  doc_len_.clear();
  title_to_id_.clear();
  uint64_t total_len = 0;
  for (const auto& [id, p] : papers_) {
    auto tokens = tokenize(p.title + " " + p.abstract);
    doc_len_[id] = static_cast<uint32_t>(tokens.size());
    total_len += tokens.size();
    for (const auto& t : tokens) postings_[t][id]++;
    title_to_id_[to_lower(collapse_ws(p.title))] = id;
  }
  avg_doc_len_ = papers_.empty()
                     ? 0.0
                     : static_cast<double>(total_len) / static_cast<double>(papers_.size());
}

const Paper& PaperDb::at(const std::string& id) const {
  auto it = papers_.find(id);
  if (it == papers_.end()) throw Error("missing-id", "unknown paper id '" + id + "'");
  return it->second;
}

std::set<std::string> PaperDb::ids() const {
  std::set<std::string> out;
  for (const auto& [id, _] : papers_) out.insert(id);
  return out;
}

std::vector<RankedPaper> PaperDb::retrieve(const std::string& topic, size_t k) const {
  std::vector<RankedPaper> ranked;
  if (k == 0 || papers_.empty()) return ranked;

  constexpr double k1 = 1.2;
  constexpr double b = 0.75;
  const double n_docs = static_cast<double>(papers_.size());

  // Unique query tokens in first-appearance order.
  std::vector<std::string> terms;
  for (auto& t : tokenize(topic))
    if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(t);

  std::map<std::string, double> score;
  for (const auto& [id, _] : papers_) score[id] = 0.0;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& posting = it->second;
    double df = static_cast<double>(posting.size());
    double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& [id, tf_u] : posting) {
      double tf = static_cast<double>(tf_u);
      double dl = static_cast<double>(doc_len_.at(id));
      double denom = tf + k1 * (1.0 - b + b * dl / avg_doc_len_);
      score[id] += idf * tf * (k1 + 1.0) / denom;
    }
  }

  ranked.reserve(papers_.size());
  for (const auto& [id, s] : score) ranked.push_back({id, s});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b_) {
    if (a.score != b_.score) return a.score > b_.score;
    return a.id < b_.id;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::vector<PaperContext> PaperDb::fetch_context(const std::set<std::string>& ids) const {
  std::vector<std::string> missing;
  for (const auto& id : ids)
    if (!papers_.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "unknown paper ids:";
    for (const auto& id : missing) msg << " '" << id << "'";
    throw Error("missing-id", msg.str());
  }
  std::vector<PaperContext> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {  // std::set iterates ascending
    const Paper& p = papers_.at(id);
    out.push_back({p.id, p.title, p.abstract, p.year});
  }
  return out;
}

std::optional<std::string> PaperDb::find_by_title(const std::string& title) const {
  auto it = title_to_id_.find(to_lower(collapse_ws(title)));
  if (it == title_to_id_.end()) return std::nullopt;
  return it->second;
}

std::string PaperDb::index_json() const {
  json j;
  j["documents"] = papers_.size();
  j["avg_doc_len"] = avg_doc_len_;
  json lens = json::object();
  for (const auto& [id, len] : doc_len_) lens[id] = len;
  j["doc_len"] = lens;
  json post = json::object();
  for (const auto& [token, docs] : postings_) {
    json entry = json::object();
    for (const auto& [id, tf] : docs) entry[id] = tf;
    post[token] = entry;
  }
  j["postings"] = post;
  return j.dump(2) + "\n";
}

}  // namespace mvss
