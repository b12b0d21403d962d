#include <doctest.h>

#include "mvss/text.hpp"

using namespace mvss;

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Graph Neural-Networks, 2024!") ==
        std::vector<std::string>{"graph", "neural", "networks", "2024"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("...").empty());
}

TEST_CASE("slugify collapses runs to single hyphens") {
  CHECK(slugify("Graph  Neural Networks!") == "graph-neural-networks");
  CHECK(slugify("a--b") == "a-b");
  CHECK(slugify("  x ") == "x");
}

TEST_CASE("collapse_ws and loose_equal") {
  CHECK(collapse_ws("  a \n b  ") == "a b");
  CHECK(loose_equal("Graph  Networks", "graph networks"));
  CHECK(!loose_equal("Graph", "Graphs"));
}

TEST_CASE("bindings digest is order-insensitive and content-sensitive") {
  std::map<std::string, std::string> a{{"X", "1"}, {"Y", "2"}};
  std::map<std::string, std::string> b{{"Y", "2"}, {"X", "1"}};
  CHECK(bindings_digest(a) == bindings_digest(b));
  b["Y"] = "3";
  CHECK(bindings_digest(a) != bindings_digest(b));
  CHECK(bindings_digest(a).size() == 16);
}

TEST_CASE("sentence splitting keeps bracketed spans atomic") {
  auto s = split_sentences("A works [P. One]. B is open.");
  REQUIRE(s.size() == 2);
  CHECK(s[0] == "A works [P. One].");
  CHECK(s[1] == "B is open.");
}

TEST_CASE("sentence splitting needs whitespace plus uppercase or end") {
  auto s = split_sentences("Version 1.2 is out. Yes it is.");
  REQUIRE(s.size() == 2);
  CHECK(s[0] == "Version 1.2 is out.");

  auto t = split_sentences("e.g. this stays together.");
  CHECK(t.size() == 1);
}

TEST_CASE("bracket spans are maximal and non-nested") {
  auto spans = bracket_spans("see [Alpha] and [Beta Gamma], not [] or [unclosed");
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].content == "Alpha");
  CHECK(spans[1].content == "Beta Gamma");
  CHECK(spans[0].begin == 4);
  CHECK(spans[0].end == 11);
}
