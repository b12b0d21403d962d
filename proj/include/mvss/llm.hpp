#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mvss {

/// A prompt template: text body with bracketed placeholders. A placeholder
/// is a bracketed all-uppercase token such as [PAPER LIST] or [WORD NUM];
/// mixed-case brackets like [Title] are literal text.
struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<std::string> placeholders;  // bare names, no brackets

  static PromptTemplate from_string(std::string name, std::string body);
};

/// Substitute every placeholder. A declared placeholder without a binding is
/// Error("missing-binding"); a binding for an undeclared placeholder is
/// Error("extra-binding"). Binding keys are bare names ("WORD NUM").
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings);

class PromptLibrary {
 public:
  /// Load every *.txt file in `dir`; the filename stem is the template name.
  static PromptLibrary load_dir(const std::string& dir);

  void add(PromptTemplate tmpl);
  bool contains(const std::string& name) const;
  const PromptTemplate& get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

struct ChatRequest {
  std::string template_name;
  std::map<std::string, std::string> bindings;
  double temperature = 1.0;
  int max_output = 4096;
};

enum class FinishState { complete, truncated };

struct Completion {
  std::string text;
  FinishState finish_state = FinishState::complete;
  std::string provider_id;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual Completion complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Deterministic fixture-backed provider. Replies come from an in-memory map
/// or from files under <dir>/<model>/ named <template>__<digest-prefix>.txt,
/// where the digest is bindings_digest() of the request bindings. Identical
/// requests always yield identical completions.
class MockProvider : public Provider {
 public:
  explicit MockProvider(std::shared_ptr<const PromptLibrary> library,
                        std::string fixtures_dir = "",
                        std::string model = "default");

  void add_fixture(const std::string& template_name,
                   const std::map<std::string, std::string>& bindings,
                   std::string reply);

  Completion complete(const ChatRequest& request) override;
  std::string id() const override { return "mock:" + model_; }
  const std::string& model() const { return model_; }

 private:
  std::shared_ptr<const PromptLibrary> library_;
  std::string fixtures_dir_;
  std::string model_;
  std::map<std::string, std::string> fixtures_;  // "<template>__<digest>" -> reply
};

/// Chat-completion HTTP provider. Reads the API key from MVSS_API_KEY and
/// retries transport failures up to `max_retries` before giving up.
struct HttpProviderConfig {
  std::string base_url;  // e.g. "http://localhost:8080"
  std::string path = "/v1/chat/completions";
  std::string model = "deepseek-chat";
  int max_retries = 2;
  int timeout_seconds = 120;
};

class HttpProvider : public Provider {
 public:
  HttpProvider(std::shared_ptr<const PromptLibrary> library, HttpProviderConfig config);

  Completion complete(const ChatRequest& request) override;
  std::string id() const override { return "http:" + config_.model; }

 private:
  std::shared_ptr<const PromptLibrary> library_;
  HttpProviderConfig config_;
};

/// Ask the judging prompt for a 1..5 Likert score of `document` against
/// `criterion`. The first integer token of the reply is the score; anything
/// unparseable or out of range gets one re-ask, then Error("judge-parse").
int judge_score(Provider& provider, const std::string& criterion,
                const std::string& document);

/// Binary support verdict for a claim against a source. Replies beginning
/// "yes"/"no" (case-insensitive) decide it; one re-ask, then
/// Error("verdict-parse").
bool nli_verify(Provider& provider, const std::string& claim,
                const std::string& source);

/// Likert rubric: criterion name plus 1/5 scale anchors.
struct Rubric {
  std::string name;
  std::string anchor_low;
  std::string anchor_high;

  std::string text() const;
};

const Rubric& coverage_rubric();
const Rubric& structure_rubric();
const Rubric& relevance_rubric();
const Rubric& tree_quality_rubric();
const Rubric& table_quality_rubric();

}  // namespace mvss
