#pragma once

#include <atomic>
#include <cstdio>
#include <deque>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mvss/corpus.hpp"
#include "mvss/error.hpp"
#include "mvss/llm.hpp"

namespace mvss::test {

/// Provider that replays a fixed queue of replies, ignoring the request.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(std::vector<std::string> replies)
      : replies_(replies.begin(), replies.end()) {}

  Completion complete(const ChatRequest&) override {
    if (replies_.empty()) throw Error("fixture-miss", "scripted replies exhausted");
    std::string text = replies_.front();
    replies_.pop_front();
    ++calls_;
    return {text, FinishState::complete, id()};
  }
  std::string id() const override { return "scripted"; }
  int calls() const { return calls_; }
  size_t remaining() const { return replies_.size(); }

 private:
  std::deque<std::string> replies_;
  int calls_ = 0;
};

/// Provider answering from a (template_name -> reply) map; same reply for
/// every request of that template.
class TemplateProvider : public Provider {
 public:
  explicit TemplateProvider(std::map<std::string, std::string> replies)
      : replies_(std::move(replies)) {}

  Completion complete(const ChatRequest& request) override {
    auto it = replies_.find(request.template_name);
    if (it == replies_.end())
      throw Error("fixture-miss", "no scripted reply for " + request.template_name);
    return {it->second, FinishState::complete, id()};
  }
  std::string id() const override { return "template"; }

 private:
  std::map<std::string, std::string> replies_;
};

/// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    dir_ = std::filesystem::temp_directory_path() /
           ("mvss_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }

  std::filesystem::path write(const std::string& name, const std::string& content) {
    auto p = dir_ / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }

 private:
  std::filesystem::path dir_;
};

inline std::vector<Paper> fixture_papers(size_t n, const std::string& prefix = "p") {
  std::vector<Paper> papers;
  for (size_t i = 1; i <= n; ++i) {
    Paper p;
    p.id = prefix + std::to_string(i);
    p.title = "Paper " + std::to_string(i) + " on topic " + std::to_string(i % 7);
    p.abstract = "Abstract " + std::to_string(i) + " studies subject " +
                 std::to_string(i % 5) + " in depth.";
    p.year = 2018 + static_cast<int>(i % 6);
    papers.push_back(p);
  }
  return papers;
}

}  // namespace mvss::test
