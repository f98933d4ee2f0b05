#include <random>
#include <set>

#include "doctest.h"
#include "wese/errors.hpp"
#include "wese/text.hpp"
#include "wese/wiki.hpp"
#include "wese/world.hpp"

using namespace wese;
using namespace wese::env;
using namespace wese::env::wiki;

namespace {

Corpus tiny_corpus() {
  Corpus c;
  c.articles["Wendy Schaal"] = {
      {"Wendy Schaal is an American actress.",
       "Since 2005 Wendy Schaal has primarily worked in voice acting, most notably voicing Francine "
       "Smith in the animated comedy television series American Dad!."},
      {"Schaal was born in Chicago.", "She is known for voice roles."}};
  c.articles["American Dad!"] = {{"American Dad! is an animated series.",
                                  "Francine Smith is a main character in American Dad!."}};
  c.articles["American Pie"] = {{"American Pie is a film."}};
  c.articles["Dad's Army"] = {{"Dad's Army is a sitcom."}};

  QaInstance q;
  q.id = "qa-0";
  q.question = "Who voices Francine Smith?";
  q.answers = {"Wendy Schaal"};
  q.supporting = {"Wendy Schaal"};
  q.witness = {"search[Wendy Schaal]", "finish[Wendy Schaal]"};
  c.qa.push_back(q);

  FeverInstance f;
  f.id = "fever-0";
  f.claim = "Wendy Schaal was born in Chicago.";
  f.label = "True";
  f.supporting = {"Wendy Schaal"};
  f.witness = {"search[Wendy Schaal]", "finish[True]"};
  c.fever.push_back(f);
  return c;
}

}  // namespace

TEST_CASE("reset returns the question only") {
  Corpus c = tiny_corpus();
  auto [state, fb] = reset(c, "qa-0");
  CHECK(fb.text == "Question: Who voices Francine Smith?");
  CHECK(fb.text.find("voice acting") == std::string::npos);  // no supporting sentences
  CHECK_FALSE(fb.done);
}

TEST_CASE("search returns the first paragraph of an exact title") {
  Corpus c = tiny_corpus();
  auto [s0, fb0] = reset(c, "qa-0");
  auto [s1, fb] = step(s0, "search[Wendy Schaal]");
  CHECK(fb.text.find("Wendy Schaal is an American actress.") == 0);
  CHECK(fb.text.find("voicing Francine Smith") != std::string::npos);
  CHECK(fb.text.find("born in Chicago") == std::string::npos);  // second paragraph not returned
  CHECK(s1.page == "Wendy Schaal");
  // case-insensitive title match
  auto [s2, fb2] = step(s0, "search[wendy schaal]");
  CHECK(fb2.text == fb.text);
}

TEST_CASE("failed search suggests similar titles") {
  Corpus c = tiny_corpus();
  auto [s0, fb0] = reset(c, "qa-0");
  auto [s1, fb] = step(s0, "search[American Dad]");
  CHECK(fb.text.find("Could not find American Dad.") == 0);
  CHECK(fb.text.find("American Dad!") != std::string::npos);
  // the page did not change
  CHECK_FALSE(s1.page.has_value());
}

TEST_CASE("similar_titles ranks by token overlap with lexicographic ties") {
  Corpus c = tiny_corpus();
  auto ranked = similar_titles(c, "American Dad", 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0] == "American Dad!");

  // brute-force oracle over all titles
  auto score = [](const std::string& query, const std::string& title) {
    auto qt = tokenize_lower(query);
    auto tt = tokenize_lower(title);
    std::set<std::string> qs(qt.begin(), qt.end()), ts(tt.begin(), tt.end());
    size_t shared = 0;
    for (const auto& t : ts) shared += qs.contains(t) ? 1 : 0;
    std::set<std::string> uni = qs;
    uni.insert(ts.begin(), ts.end());
    return uni.empty() ? 0.0 : double(shared) / double(uni.size());
  };
  auto all = similar_titles(c, "American Dad", static_cast<int>(c.articles.size()));
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    double a = score("American Dad", all[i]);
    double b = score("American Dad", all[i + 1]);
    CHECK(a >= b);
    if (a == b) CHECK(all[i] < all[i + 1]);
  }
  // k larger than the corpus: everything, ranked
  auto saturated = similar_titles(c, "American Dad", 50);
  CHECK(saturated.size() == c.articles.size());
}

TEST_CASE("lookup walks matches in document order with a cursor") {
  Corpus c = tiny_corpus();
  auto [s0, fb0] = reset(c, "qa-0");
  auto [s1, fb1] = step(s0, "search[Wendy Schaal]");
  auto [s2, fb2] = step(s1, "lookup[Schaal]");
  CHECK(fb2.text == "Wendy Schaal is an American actress.");
  auto [s3, fb3] = step(s2, "lookup[Schaal]");
  CHECK(fb3.text.find("voice acting") != std::string::npos);
  auto [s4, fb4] = step(s3, "lookup[Schaal]");
  CHECK(fb4.text == "Schaal was born in Chicago.");
  auto [s5, fb5] = step(s4, "lookup[Schaal]");
  CHECK(fb5.text == "No more results.");
  // absent keyword
  auto [s6, fb6] = step(s1, "lookup[zeppelin]");
  CHECK(fb6.text == "No more results.");
  // lookup before any search
  auto [s7, fb7] = step(s0, "lookup[Schaal]");
  CHECK(fb7.text == kNothingHappens);
}

TEST_CASE("lookup cursor never repeats a sentence for one keyword without a new search") {
  Corpus c = tiny_corpus();
  auto [s0, fb0] = reset(c, "qa-0");
  auto [state, fb1] = step(s0, "search[Wendy Schaal]");
  std::set<std::string> seen;
  while (true) {
    auto [next, fb] = step(state, "lookup[Schaal]");
    state = std::move(next);
    if (fb.text == "No more results.") break;
    CHECK(seen.insert(fb.text).second);  // never repeated
  }
  // a fresh search resets the cursor
  auto [after, fb8] = step(state, "search[Wendy Schaal]");
  auto [again, fb9] = step(after, "lookup[Schaal]");
  CHECK(fb9.text == "Wendy Schaal is an American actress.");
}

TEST_CASE("finish matches answers after normalization") {
  Corpus c = tiny_corpus();
  auto [s0, fb0] = reset(c, "qa-0");
  auto [s1, fb1] = step(s0, "finish[the wendy schaal.]");
  CHECK(fb1.done);
  CHECK(fb1.reward == 1.0);
  CHECK(fb1.text.find(kCompletedMarker) != std::string::npos);

  auto [s2, fb2] = step(s0, "finish[Francine Smith]");
  CHECK(fb2.done);
  CHECK(fb2.reward == 0.0);
  CHECK_THROWS_AS(step(s2, "search[Wendy Schaal]"), UsageError);
}

TEST_CASE("fever labels verify after normalization") {
  Corpus c = tiny_corpus();
  auto [s0, fb0] = reset(c, "fever-0");
  CHECK(fb0.text.find("Claim: Wendy Schaal was born in Chicago.") == 0);
  auto [s1, fb1] = step(s0, "finish[true]");
  CHECK(fb1.done);
  CHECK(fb1.reward == 1.0);
  auto [s2, fb2] = step(s0, "finish[Not Clear]");
  CHECK(fb2.reward == 0.0);
}

TEST_CASE("answer normalization strips articles and punctuation") {
  CHECK(normalize_answer("The Grand Arch!") == "grand arch");
  CHECK(normalize_answer("  an  apple ") == "apple");
  CHECK(normalize_answer("Valdoria") == normalize_answer("valdoria."));
  CHECK(normalize_answer("not clear") == normalize_answer("Not Clear"));
}

TEST_CASE("action grammar and partition") {
  CHECK(explore_legal("search[Wendy Schaal]"));
  CHECK(explore_legal("lookup[voice]"));
  CHECK_FALSE(explore_legal("finish[x]"));
  CHECK(exploit_legal("finish[x]"));
  CHECK(exploit_legal("search[x]"));
  CHECK_FALSE(exploit_legal("open drawer 1"));
  CHECK_FALSE(exploit_legal("search[x"));  // unbalanced bracket
}

TEST_CASE("generated corpus: determinism, validity, witnesses replay") {
  Corpus a = generate_corpus(5, 10, 10);
  Corpus b = generate_corpus(5, 10, 10);
  REQUIRE(a.qa.size() == 10);
  REQUIRE(a.fever.size() == 10);
  for (size_t i = 0; i < a.qa.size(); ++i) {
    CHECK(a.qa[i].question == b.qa[i].question);
    CHECK(a.qa[i].witness == b.qa[i].witness);
  }
  a.validate();

  WorldBundle bundle = generate_bundle("wiki-qa", 5, 20);
  for (const auto& task : bundle.tasks()) {
    auto report = replay_witness(bundle, task.id);
    CHECK_MESSAGE(report.ok, task.id, ": ", report.detail);
  }
}

TEST_CASE("every supporting title must exist in the corpus") {
  Corpus c = tiny_corpus();
  c.qa[0].supporting.push_back("No Such Page");
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
