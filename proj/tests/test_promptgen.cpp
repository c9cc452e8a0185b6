#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "revprobe/error.hpp"
#include "revprobe/promptgen.hpp"
#include "revprobe/rng.hpp"
#include "revprobe/text.hpp"
#include "support.hpp"

using namespace revprobe;
using namespace revprobe::promptgen;

namespace {

corpus::Concept concept_of(std::string id, std::string lemma, std::string description) {
  corpus::Concept c;
  c.id = std::move(id);
  c.lemma = std::move(lemma);
  c.description = std::move(description);
  return c;
}

std::vector<std::string> ids_of(const corpus::ConceptSet& set, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(set[i].id);
  return out;
}

}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("splitmix64 reference outputs") {
    // First outputs for seed 0 as published with the generator.
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);
  }

  TEST_CASE("below is in range and roughly uniform") {
    SplitMix64 rng(1);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
  }
}

TEST_SUITE("promptgen") {
  TEST_CASE("sample_indices") {
    const auto set = testing::synthetic_concepts(100);
    CHECK(sample_indices(set, 0, 3).empty());
    CHECK(sample_indices(set, 24, 7) == sample_indices(set, 24, 7));
    CHECK(ids_of(set, sample_indices(set, 3, 42)) == std::vector<std::string>{"c0013", "c0083", "c0086"});

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto idx = sample_indices(set, 99, seed, std::string_view("c0042"));
      std::set<std::size_t> distinct(idx.begin(), idx.end());
      CHECK(distinct.size() == 99);
      CHECK(!distinct.contains(42));
    }
    try {
      sample_indices(set, 100, 0, std::string_view("c0001"));
      FAIL("expected NotEnoughConcepts");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotEnoughConcepts);
    }
  }

  TEST_CASE("corrupt_mis") {
    CHECK(corrupt_mis({{"d1", "dog"}}, {"dog", "cat"}, 0) == std::vector<DemoPair>{{"d1", "cat"}});
    CHECK(corrupt_mis({}, {"dog"}, 0).empty());

    std::vector<DemoPair> pairs;
    std::set<std::string> vocab;
    for (int i = 0; i < 100; ++i) vocab.insert("word" + std::to_string(i));
    for (int i = 0; i < 24; ++i) pairs.push_back({"cue" + std::to_string(i), "word" + std::to_string(i)});
    const auto out = corrupt_mis(pairs, vocab, 1);
    const std::vector<std::string> golden{"word33", "word44", "word34", "word45", "word85", "word83",
                                          "word65", "word91", "word68", "word30", "word28", "word24",
                                          "word36", "word92", "word25", "word82", "word55", "word98",
                                          "word50", "word43", "word58", "word94", "word79", "word69"};
    REQUIRE(out.size() == 24);
    for (std::size_t i = 0; i < 24; ++i) {
      CHECK(out[i].cue == pairs[i].cue);
      CHECK(out[i].target == golden[i]);
    }
    try {
      corrupt_mis({{"a", "x"}, {"b", "y"}}, {"x", "y", "z"}, 0);
      FAIL("expected VocabTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VocabTooSmall);
    }
  }

  TEST_CASE("permute_dataset") {
    const auto two = testing::synthetic_concepts(2);
    const auto p2 = permute_dataset(two, 9);
    CHECK(p2.target_of == permute_dataset(two, 9).target_of);
    const bool identity = p2.target_of.at("c0000") == "word0";
    CHECK(p2.target_of.at("c0001") == (identity ? "word1" : "word0"));

    const auto ten = testing::synthetic_concepts(10);
    const auto p = permute_dataset(ten, 3);
    const std::vector<std::string> golden{"word2", "word8", "word7", "word4", "word5",
                                          "word6", "word0", "word1", "word9", "word3"};
    std::size_t fixed = 0;
    std::map<std::string, std::string> inverse;
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(p.target_of.at(ten[i].id) == golden[i]);
      fixed += golden[i] == ten[i].lemma ? 1 : 0;
      inverse[p.target_of.at(ten[i].id)] = ten[i].lemma;
    }
    CHECK(p.fixed_points == fixed);
    // composing with the inverse gives the identity
    for (const auto& c : ten) CHECK(inverse.at(p.target_of.at(c.id)) == c.lemma);
  }

  TEST_CASE("render Demo and NL") {
    const auto crepe = concept_of("crepe", "crepe", "a small very thin pancake");
    const auto r = render_prompt({{"A domesticated descendant of the wolf.", "dog"}}, crepe, Condition::Demo);
    CHECK(r.text == "A domesticated descendant of the wolf. ⇒ dog\na small very thin pancake ⇒");
    REQUIRE(r.marker_offset);
    CHECK(r.text.substr(*r.marker_offset) == " ⇒");

    const auto nl = render_prompt({}, crepe, Condition::NL);
    CHECK(nl.text == "a small very thin pancake can be called as");
    CHECK(!nl.marker_offset);

    CHECK(render_prompt({}, crepe, Condition::WordOnly).text == "crepe");
    CHECK(render_prompt({}, crepe, Condition::DescriptionOnly).text == "a small very thin pancake");
    CHECK(render_prompt({{"dog", "dog"}}, crepe, Condition::W2W).text == "dog ⇒ dog\ncrepe ⇒");
    CHECK(render_prompt({{"x y", "z"}}, crepe, Condition::Demo, PromptFormat::ascii()).text ==
          "x y => z\na small very thin pancake =>");

    try {
      render_prompt({}, crepe, Condition::Demo);
      FAIL("expected ConditionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConditionMismatch);
    }
    CHECK_THROWS_AS(render_prompt({{"a", "b"}}, crepe, Condition::NL), Error);
  }

  TEST_CASE("condition names") {
    for (auto c : {Condition::Demo, Condition::NL, Condition::Mis, Condition::Rand, Condition::W2W,
                   Condition::WordOnly, Condition::DescriptionOnly})
      CHECK(parse_condition(to_string(c)) == c);
    CHECK(parse_condition("demo") == Condition::Demo);
    CHECK_THROWS_AS(parse_condition("Bogus"), Error);
  }

  TEST_CASE("permute_words") {
    CHECK(permute_words("a b c", 0.0, 7) == "a b c");
    CHECK(permute_words("  spaced   out  ", 0.0, 7) == "  spaced   out  ");

    bool swapped = false;
    for (std::uint64_t seed = 0; seed < 20 && !swapped; ++seed) {
      const auto s = permute_words("a b", 1.0, seed);
      CHECK((s == "a b" || s == "b a"));
      swapped = s == "b a";
    }
    CHECK(swapped);

    const std::string ten = "a thin flat cake of batter fried on both sides";
    const auto out = permute_words(ten, 0.6, 5);
    CHECK(out == "sides thin flat cake of batter both on a fried");
    auto w1 = text::split_ws(ten), w2 = text::split_ws(out);
    std::sort(w1.begin(), w1.end());
    std::sort(w2.begin(), w2.end());
    CHECK(w1 == w2);
    CHECK_THROWS_AS(permute_words(ten, 1.5, 0), Error);
  }

  TEST_CASE("permute_words preserves the token multiset") {
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> len(0, 15), letter(0, 5);
    std::uniform_real_distribution<double> ratio(0, 1);
    for (int i = 0; i < 300; ++i) {
      std::vector<std::string> words(len(gen));
      for (auto& w : words) w = std::string(1 + letter(gen) % 3, static_cast<char>('a' + letter(gen)));
      const auto s = text::join(words, " ");
      const double r = ratio(gen);
      auto out = text::split_ws(permute_words(s, r, i));
      auto in = words;
      std::sort(out.begin(), out.end());
      std::sort(in.begin(), in.end());
      CHECK(out == in);
      // positions outside the selected ceil(r*W) stay in place
      const auto permuted = text::split_ws(permute_words(s, r, i));
      std::size_t moved = 0;
      for (std::size_t k = 0; k < words.size(); ++k) moved += permuted[k] != words[k] ? 1 : 0;
      CHECK(moved <= static_cast<std::size_t>(std::ceil(r * static_cast<double>(words.size()))));
    }
  }
}
