#include "mvss/llm.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "mvss/error.hpp"
#include "mvss/text.hpp"

namespace mvss {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_placeholder_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == ' ' || c == '_';
}

// Scan for bracketed all-uppercase tokens; returns (name, begin, end) triples.
struct PlaceholderHit {
  std::string name;
  size_t begin;
  size_t end;
};

std::vector<PlaceholderHit> scan_placeholders(const std::string& body) {
  std::vector<PlaceholderHit> hits;
  size_t i = 0;
  while (i < body.size()) {
    if (body[i] != '[') {
      ++i;
      continue;
    }
    size_t close = body.find(']', i + 1);
    if (close == std::string::npos) break;
    std::string inner = body.substr(i + 1, close - i - 1);
    bool ok = !inner.empty();
    bool has_upper = false;
    for (char c : inner) {
      if (!is_placeholder_char(c)) {
        ok = false;
        break;
      }
      if (c >= 'A' && c <= 'Z') has_upper = true;
    }
    if (ok && has_upper) {
      hits.push_back({inner, i, close + 1});
      i = close + 1;
    } else {
      ++i;
    }
  }
  return hits;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<int> first_integer_token(const std::string& text) {
  size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      return std::stoi(text.substr(i, j - i));
    }
    ++i;
  }
  return std::nullopt;
}

}  // namespace

PromptTemplate PromptTemplate::from_string(std::string name, std::string body) {
  PromptTemplate t;
  t.name = std::move(name);
  t.body = std::move(body);
  for (const auto& hit : scan_placeholders(t.body)) t.placeholders.insert(hit.name);
  return t;
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
  for (const auto& [key, _] : bindings) {
    if (!tmpl.placeholders.count(key))
      throw Error("extra-binding", "template '" + tmpl.name +
                                       "' has no placeholder [" + key + "]");
  }
  auto hits = scan_placeholders(tmpl.body);
  std::string out;
  out.reserve(tmpl.body.size());
  size_t pos = 0;
  for (const auto& hit : hits) {
    auto it = bindings.find(hit.name);
    if (it == bindings.end())
      throw Error("missing-binding", "unbound placeholder [" + hit.name +
                                         "] in template '" + tmpl.name + "'");
    out.append(tmpl.body, pos, hit.begin - pos);
    out.append(it->second);
    pos = hit.end;
  }
  out.append(tmpl.body, pos, std::string::npos);
  return out;
}

PromptLibrary PromptLibrary::load_dir(const std::string& dir) {
  PromptLibrary lib;
  fs::path root(dir);
  if (!fs::is_directory(root))
    throw Error("io", "prompt directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    lib.add(PromptTemplate::from_string(f.stem().string(), read_file(f)));
  return lib;
}

void PromptLibrary::add(PromptTemplate tmpl) {
  templates_[tmpl.name] = std::move(tmpl);
}

bool PromptLibrary::contains(const std::string& name) const {
  return templates_.count(name) != 0;
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error("unknown-template", "no template named '" + name + "'");
  return it->second;
}

std::vector<std::string> PromptLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

MockProvider::MockProvider(std::shared_ptr<const PromptLibrary> library,
                           std::string fixtures_dir, std::string model)
    : library_(std::move(library)),
      fixtures_dir_(std::move(fixtures_dir)),
      model_(std::move(model)) {}

void MockProvider::add_fixture(const std::string& template_name,
                               const std::map<std::string, std::string>& bindings,
                               std::string reply) {
  fixtures_[template_name + "__" + bindings_digest(bindings)] = std::move(reply);
}

Completion MockProvider::complete(const ChatRequest& request) {
  if (library_ && !library_->contains(request.template_name))
    throw Error("unknown-template",
                "no template named '" + request.template_name + "'");
  const std::string digest = bindings_digest(request.bindings);
  const std::string key = request.template_name + "__" + digest;

  auto it = fixtures_.find(key);
  if (it != fixtures_.end()) return {it->second, FinishState::complete, id()};

  if (!fixtures_dir_.empty()) {
    fs::path dir = fs::path(fixtures_dir_) / model_;
    fs::path exact = dir / (key + ".txt");
    if (fs::is_regular_file(exact))
      return {read_file(exact), FinishState::complete, id()};
    // Fixture filenames may carry only a digest prefix; longest match wins.
    if (fs::is_directory(dir)) {
      std::string best_file;
      size_t best_len = 0;
      const std::string stem_prefix = request.template_name + "__";
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::string stem = entry.path().stem().string();
        if (stem.rfind(stem_prefix, 0) != 0) continue;
        std::string prefix = stem.substr(stem_prefix.size());
        if (prefix.empty() || prefix.size() > digest.size()) continue;
        if (digest.compare(0, prefix.size(), prefix) != 0) continue;
        if (prefix.size() > best_len) {
          best_len = prefix.size();
          best_file = entry.path().string();
        }
      }
      if (!best_file.empty())
        return {read_file(best_file), FinishState::complete, id()};
    }
  }
  throw Error("fixture-miss", "no mock fixture for " + key + " (model " + model_ + ")");
}

HttpProvider::HttpProvider(std::shared_ptr<const PromptLibrary> library,
                           HttpProviderConfig config)
    : library_(std::move(library)), config_(std::move(config)) {}

Completion HttpProvider::complete(const ChatRequest& request) {
  const PromptTemplate& tmpl = library_->get(request.template_name);
  const std::string prompt = render_prompt(tmpl, request.bindings);

  json body = {
      {"model", config_.model},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
  };

  httplib::Client client(config_.base_url);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv("MVSS_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") ||
        reply["choices"].empty())
      throw Error("transport", "malformed completion payload");
    const auto& choice = reply["choices"][0];
    Completion out;
    out.text = choice.value("message", json::object()).value("content", "");
    out.finish_state = choice.value("finish_reason", "") == "length"
                           ? FinishState::truncated
                           : FinishState::complete;
    out.provider_id = id();
    if (out.text.empty() && out.finish_state == FinishState::complete)
      throw Error("transport", "empty completion text");
    return out;
  }
  throw Error("transport", "retries exhausted: " + last_error);
}

int judge_score(Provider& provider, const std::string& criterion,
                const std::string& document) {
  ChatRequest request;
  request.template_name = "CRITERIA_BASED_JUDGING_PROMPT";
  request.bindings = {{"CRITERIA", criterion}, {"DOCUMENT", document}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    auto score = first_integer_token(reply.text);
    if (score && *score >= 1 && *score <= 5) return *score;
  }
  throw Error("judge-parse", "judge reply yields no score in 1..5");
}

bool nli_verify(Provider& provider, const std::string& claim,
                const std::string& source) {
  if (claim.empty() || source.empty())
    throw Error("verdict-parse", "claim and source must be non-empty");
  ChatRequest request;
  request.template_name = "NLI_PROMPT";
  request.bindings = {{"CLAIM", claim}, {"SOURCE", source}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    Completion reply = provider.complete(request);
    std::string head = to_lower(trim(reply.text));
    if (head.rfind("yes", 0) == 0) return true;
    if (head.rfind("no", 0) == 0) return false;
  }
  throw Error("verdict-parse", "reply begins with neither yes nor no");
}

std::string Rubric::text() const {
  return name + ". 1: " + anchor_low + " 5: " + anchor_high;
}

const Rubric& coverage_rubric() {
  static const Rubric r{
      "Coverage", "Very limited coverage; misses most key areas.",
      "Fully comprehensive; covers key and peripheral topics in depth."};
  return r;
}

const Rubric& structure_rubric() {
  static const Rubric r{
      "Structure", "No clear logic or connections between sections.",
      "Tightly structured, clear logic, smooth transitions, no redundancy."};
  return r;
}

const Rubric& relevance_rubric() {
  static const Rubric r{
      "Relevance", "Outdated/unrelated; not aligned with the topic.",
      "Exceptionally focused; every detail supports understanding of the topic."};
  return r;
}

const Rubric& tree_quality_rubric() {
  static const Rubric r{
      "TreeQuality", "No meaningful tree or totally wrong hierarchy.",
      "Excellent tree: comprehensive, correct, clear grouping, useful abstraction."};
  return r;
}

const Rubric& table_quality_rubric() {
  static const Rubric r{
      "TableQuality", "No usable table or incorrect/misleading.",
      "Excellent tables: comprehensive comparisons with consistent formatting."};
  return r;
}

}  // namespace mvss
