#include <doctest.h>

#include <random>

#include "mvss/corpus.hpp"
#include "mvss/error.hpp"
#include "support.hpp"

using namespace mvss;
using mvss::test::TempDir;

namespace {

const char* kThreeRecords =
    R"({"id": "p1", "title": "Paper One", "abstract": "First abstract.", "year": 2021}
{"id": "p2", "title": "Paper Two", "abstract": "Second abstract.", "venue": "ACL"}
{"id": "p3", "title": "Paper Three", "abstract": "Third abstract.", "url": "http://x"}
)";

}  // namespace

TEST_CASE("ingest: empty file yields an empty db") {
  TempDir tmp("corpus");
  auto path = tmp.write("empty.jsonl", "");
  PaperDb db = PaperDb::ingest_file(path.string());
  CHECK(db.size() == 0);
}

TEST_CASE("ingest: three valid records") {
  TempDir tmp("corpus");
  auto path = tmp.write("three.jsonl", kThreeRecords);
  PaperDb db = PaperDb::ingest_file(path.string());
  CHECK(db.size() == 3);
  CHECK(db.at("p2").venue == "ACL");
  CHECK(db.at("p1").year == 2021);
}

TEST_CASE("ingest: duplicate id names the id") {
  TempDir tmp("corpus");
  auto path = tmp.write("dup.jsonl",
                        R"({"id": "p1", "title": "A", "abstract": "a"}
{"id": "p2", "title": "B", "abstract": "b"}
{"id": "p3", "title": "C", "abstract": "c"}
{"id": "p4", "title": "D", "abstract": "d"}
{"id": "p1", "title": "E", "abstract": "e"}
)");
  try {
    PaperDb::ingest_file(path.string());
    FAIL("expected duplicate-id error");
  } catch (const Error& e) {
    CHECK(e.code() == "duplicate-id");
    CHECK(std::string(e.what()).find("p1") != std::string::npos);
    CHECK(std::string(e.what()).find("5") != std::string::npos);
  }
}

TEST_CASE("ingest: malformed line names the line number") {
  TempDir tmp("corpus");
  auto path = tmp.write("bad.jsonl",
                        R"({"id": "p1", "title": "A", "abstract": "a"}
not json at all
)");
  try {
    PaperDb::ingest_file(path.string());
    FAIL("expected malformed-record error");
  } catch (const Error& e) {
    CHECK(e.code() == "malformed-record");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("ingest: missing required field is malformed") {
  TempDir tmp("corpus");
  auto path = tmp.write("nofield.jsonl", R"({"id": "p1", "title": "A"}
)");
  CHECK_THROWS_WITH_AS(PaperDb::ingest_file(path.string()),
                       doctest::Contains("abstract"), Error);
}

TEST_CASE("retrieve: hand-checked two-document ranking") {
  // Both documents have 9 tokens, so length normalization cancels; the
  // matching document's score is 3 * ln(2) * 2*2.2/3.2 = 2.859232119809774,
  // worked out independently before the implementation.
  std::vector<Paper> papers;
  papers.push_back({"p1", "Graph neural networks",
                    "A survey about graph neural networks.", 2022, {}, {}});
  papers.push_back({"p2", "Sonnet meter",
                    "A study about sonnet meter in poetry.", 2021, {}, {}});
  PaperDb db = PaperDb::build(papers);

  auto ranked = db.retrieve("graph neural networks", 2);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].id == "p1");
  CHECK(ranked[1].id == "p2");
  CHECK(ranked[0].score == doctest::Approx(2.859232119809774).epsilon(1e-12));
  CHECK(ranked[1].score == doctest::Approx(0.0));
}

TEST_CASE("retrieve: k bounds") {
  PaperDb db = PaperDb::build(mvss::test::fixture_papers(3));
  CHECK(db.retrieve("anything", 0).empty());
  auto all = db.retrieve("topic", 10);
  CHECK(all.size() == 3);  // k exceeds corpus: everything comes back
}

TEST_CASE("retrieve: sorted by score desc then id asc, deterministic") {
  PaperDb db = PaperDb::build(mvss::test::fixture_papers(20));
  auto a = db.retrieve("topic subject depth", 20);
  auto b = db.retrieve("topic subject depth", 20);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].score == b[i].score);
    CHECK(a[i].score >= 0.0);
    if (i > 0) {
      bool ordered = a[i - 1].score > a[i].score ||
                     (a[i - 1].score == a[i].score && a[i - 1].id < a[i].id);
      CHECK(ordered);
    }
  }
}

TEST_CASE("retrieve: result size bound over randomized corpora") {
  std::mt19937 rng(7);
  for (int round = 0; round < 30; ++round) {
    size_t n = rng() % 12;
    PaperDb db = PaperDb::build(mvss::test::fixture_papers(n));
    size_t k = rng() % 15;
    auto out = db.retrieve("topic subject", k);
    CHECK(out.size() <= std::min(k, n));
    CHECK(out.size() == std::min(k, n));  // zero-score docs still rank
  }
}

TEST_CASE("retrieve: all-token doc outranks none-token doc of equal length") {
  std::vector<Paper> papers;
  papers.push_back({"a", "alpha beta gamma", "x y z", 0, {}, {}});
  papers.push_back({"b", "delta epsilon zeta", "x y z", 0, {}, {}});
  PaperDb db = PaperDb::build(papers);
  auto ranked = db.retrieve("alpha beta gamma", 2);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].id == "a");
  CHECK(ranked[0].score > ranked[1].score);
}

TEST_CASE("fetch_context: ordering and missing ids") {
  TempDir tmp("corpus");
  auto path = tmp.write("three.jsonl", kThreeRecords);
  PaperDb db = PaperDb::ingest_file(path.string());

  CHECK(db.fetch_context({}).empty());

  auto two = db.fetch_context({"p2", "p1"});
  REQUIRE(two.size() == 2);
  CHECK(two[0].id == "p1");
  CHECK(two[1].id == "p2");

  try {
    db.fetch_context({"p1", "ghost"});
    FAIL("expected missing-id error");
  } catch (const Error& e) {
    CHECK(e.code() == "missing-id");
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("fetch after ingest is lossless for id/title/abstract") {
  TempDir tmp("corpus");
  auto path = tmp.write("three.jsonl", kThreeRecords);
  PaperDb db = PaperDb::ingest_file(path.string());
  auto all = db.fetch_context(db.ids());
  REQUIRE(all.size() == 3);
  CHECK(all[0].title == "Paper One");
  CHECK(all[0].abstract == "First abstract.");
  CHECK(all[2].id == "p3");
}

TEST_CASE("index json snapshot is deterministic") {
  PaperDb db = PaperDb::build(mvss::test::fixture_papers(5));
  CHECK(db.index_json() == db.index_json());
  CHECK(db.index_json().find("\"documents\": 5") != std::string::npos);
}
