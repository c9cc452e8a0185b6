#include <doctest.h>

#include <variant>

#include "revprobe/corpus.hpp"
#include "revprobe/error.hpp"
#include "revprobe/text.hpp"
#include "revprobe/wordnet.hpp"
#include "support.hpp"

using namespace revprobe;
using namespace revprobe::corpus;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

const char* kThingsHeader = "id\tlemma\tsynonyms\tdescription\tcategory\n";

}  // namespace

TEST_SUITE("text") {
  TEST_CASE("casefold") {
    CHECK(text::casefold("Crepe") == "crepe");
    CHECK(text::casefold("STRASSE") == "strasse");
    CHECK(text::casefold("Straße") == "strasse");
    CHECK(text::casefold("ÉCLAIR") == "éclair");
  }

  TEST_CASE("split helpers") {
    CHECK(text::split_ws("  a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(text::split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(text::trim("  x y  ") == "x y");
    CHECK(text::starts_with_ci("Name something", "name SOMETHING"));
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("things row with synonym") {
    testing::TempDir dir;
    testing::write_file(dir / "c.tsv", std::string(kThingsHeader) + "crepe\tcrepe\tcrape\ta small very thin pancake\tfood\n");
    const auto set = load_concepts(dir / "c.tsv", ConceptFormat::things_tsv);
    REQUIRE(set.size() == 1);
    CHECK(set[0].lemma == "crepe");
    CHECK(set[0].synonyms == std::set<std::string>{"crape"});
    CHECK(set[0].description == "a small very thin pancake");
    CHECK(set[0].category == std::optional<std::string>("food"));
    CHECK(set[0].source == ConceptSource::things);
    CHECK(set[0].expected_answers() == std::set<std::string>{"crape", "crepe"});
  }

  TEST_CASE("header only gives an empty set") {
    testing::TempDir dir;
    testing::write_file(dir / "c.tsv", kThingsHeader);
    CHECK(load_concepts(dir / "c.tsv", ConceptFormat::things_tsv).empty());
  }

  TEST_CASE("duplicate id") {
    testing::TempDir dir;
    std::string body = kThingsHeader;
    for (const char* id : {"a", "b", "c", "d", "b"}) body += std::string(id) + "\tw" + id + "\t\tdesc " + id + "\t\n";
    testing::write_file(dir / "c.tsv", body);
    CHECK(code_of([&] { load_concepts(dir / "c.tsv", ConceptFormat::things_tsv); }) == ErrorCode::DuplicateId);
  }

  TEST_CASE("malformed rows") {
    testing::TempDir dir;
    testing::write_file(dir / "c.tsv", std::string(kThingsHeader) + "a\tdog\n");
    CHECK(code_of([&] { load_concepts(dir / "c.tsv", ConceptFormat::things_tsv); }) == ErrorCode::MalformedRow);
    testing::write_file(dir / "h.tsv", "lemma\tdescription\n\tno lemma\n");
    CHECK(code_of([&] { load_concepts(dir / "h.tsv", ConceptFormat::hill200_tsv); }) == ErrorCode::MalformedRow);
    CHECK(code_of([&] { load_concepts(dir / "missing.tsv", ConceptFormat::things_tsv); }) == ErrorCode::MissingFile);
  }

  TEST_CASE("hill200 ids and CRLF") {
    testing::TempDir dir;
    testing::write_file(dir / "h.tsv", "lemma\tdescription\r\ncrepe\ta small very thin pancake\r\ndog\ta pet\r\n");
    const auto set = load_concepts(dir / "h.tsv", ConceptFormat::hill200_tsv);
    REQUIRE(set.size() == 2);
    REQUIRE(set.find("hill200-0001"));
    REQUIRE(set.find("hill200-0002"));
    CHECK(set.find("hill200-0001")->lemma == "crepe");
    CHECK(set.find("hill200-0002")->description == "a pet");
    CHECK(set.find("hill200-0001")->synonyms.empty());
  }

  TEST_CASE("jsonl round trip") {
    testing::TempDir dir;
    const auto set = testing::synthetic_concepts(25);
    save_concepts_jsonl(set, dir / "c.jsonl");
    const auto back = load_concepts(dir / "c.jsonl", ConceptFormat::jsonl);
    CHECK(back.concepts() == set.concepts());
    CHECK(to_jsonl(back) == testing::read_file(dir / "c.jsonl"));
  }

  TEST_CASE("feature norms") {
    testing::TempDir dir;
    std::string csv = "concept_id,taxonomic:is an animal,visual:is red,functional:used for cutting\n";
    for (int i = 0; i < 40; ++i)
      csv += "c" + std::to_string(i) + "," + (i < 25 ? "1" : "0") + "," + (i < 19 ? "1" : "0") + "," +
             (i % 2 ? "1" : "0") + "\n";
    testing::write_file(dir / "f.csv", csv);

    const auto norms = load_feature_norms(dir / "f.csv", 20);
    CHECK(norms.concept_count == 40);
    CHECK(norms.dropped_sparse == 1);  // 19 positives
    REQUIRE(norms.features.size() == 2);
    for (const auto& f : norms.features) CHECK(f.label != "is red");

    CHECK(load_feature_norms(dir / "f.csv", 0).features.size() == 3);

    const std::set<std::string> keep{"c0", "c1", "c2", "c30"};
    const auto restricted = load_feature_norms(dir / "f.csv", 2, &keep);
    CHECK(restricted.concept_count == 4);

    testing::write_file(dir / "bad.csv", "concept_id,smelly:x\nc0,1\n");
    CHECK(code_of([&] { load_feature_norms(dir / "bad.csv", 0); }) == ErrorCode::UnknownFeatureType);
    testing::write_file(dir / "cell.csv", "concept_id,visual:x\nc0,2\n");
    CHECK(code_of([&] { load_feature_norms(dir / "cell.csv", 0); }) == ErrorCode::MalformedMatrix);
  }

  TEST_CASE("protoqa records") {
    const auto items = load_protoqa(testing::fixtures_dir() / "protoqa.jsonl");
    REQUIRE(items.size() >= 2);
    const auto& hotel = items.front();
    CHECK(hotel.question == "Name something that you might forget in a hotel room.");
    REQUIRE(hotel.clusters.size() >= 3);
    CHECK(hotel.clusters[0].count >= hotel.clusters.back().count);

    testing::TempDir dir;
    testing::write_file(dir / "zero.jsonl",
                        R"({"id":"q","question":"x?","clusters":[{"answers":["a"],"count":0}]})" "\n");
    CHECK(code_of([&] { load_protoqa(dir / "zero.jsonl"); }) == ErrorCode::NonPositiveCount);
    testing::write_file(dir / "empty.jsonl", R"({"id":"q","question":"x?","clusters":[]})" "\n");
    CHECK(code_of([&] { load_protoqa(dir / "empty.jsonl"); }) == ErrorCode::MalformedRecord);
  }

  TEST_CASE("upstream protoqa layout") {
    testing::TempDir dir;
    testing::write_file(
        dir / "up.jsonl",
        R"({"metadata":{"id":"r1q1"},"question":{"original":"Name a pet.","normalized":"name a pet"},)"
        R"("answers":{"clusters":{"r1q1.0":{"count":30,"answers":["dog"]},"r1q1.1":{"count":20,"answers":["cat","kitty"]}}}})"
        "\n");
    const auto items = load_protoqa(dir / "up.jsonl");
    REQUIRE(items.size() == 1);
    CHECK(items[0].id == "r1q1");
    CHECK(items[0].question == "Name a pet.");
    REQUIRE(items[0].clusters.size() == 2);
    CHECK(items[0].clusters[1].answers == std::vector<std::string>{"cat", "kitty"});
  }

  TEST_CASE("tables") {
    testing::TempDir dir;
    testing::write_file(dir / "e.txt", "# model=toy\nx 1 2 3 4\ny 0 0 0 1\nz 1 1 1 1\n");
    const auto e = load_embedding_table(dir / "e.txt");
    CHECK(e.dim == 4);
    CHECK(e.rows.size() == 3);
    CHECK(e.meta.at("model") == "toy");

    testing::write_file(dir / "bad.txt", "x 1 2 3 4\ny 1 2 3 4 5\n");
    CHECK(code_of([&] { load_embedding_table(dir / "bad.txt"); }) == ErrorCode::InconsistentDim);

    testing::write_file(dir / "f.txt", "the 9.05\ncrepe 1.2\n");
    const auto f = load_frequency_table(dir / "f.txt");
    CHECK(f.lookup("the") == std::optional<double>(9.05));
    CHECK(!f.lookup("zzz"));
    CHECK(std::holds_alternative<FrequencyTable>(load_table(dir / "f.txt", TableKind::frequency)));

    EmbeddingTable t;
    t.add_row("a", {1, 2});
    CHECK(code_of([&] { t.add_row("b", {1}); }) == ErrorCode::InconsistentDim);
    CHECK(code_of([&] { t.add_row("c", {1, std::nan("")}); }) == ErrorCode::NonFiniteValue);
  }
}

TEST_SUITE("wordnet") {
  const auto wn_dir = testing::fixtures_dir() / "wordnet";

  TEST_CASE("dog includes the domestic dog synset") {
    const auto wn = load_wordnet(wn_dir);
    CHECK(wn.check_symmetry().empty());
    const auto dog = synsets_of(wn, "dog", Pos::noun);
    CHECK(dog.size() == 7);
    bool found = false;
    for (const auto& id : dog)
      if (wn.synset_to_lemmas().at(id).contains("domestic dog")) {
        found = true;
        CHECK(wn.gloss(id)->find("domesticated") != std::string::npos);
      }
    CHECK(found);
    CHECK(synsets_of(wn, "zzzz-nonword").empty());
    CHECK(synsets_of(wn, "").empty());
    CHECK(synsets_of(wn, "Dog") == synsets_of(wn, "dog"));
    CHECK(synsets_of(wn, "domestic_dog") == synsets_of(wn, "domestic dog"));
  }

  TEST_CASE("sofa and couch share a synset") {
    const auto wn = load_wordnet(wn_dir);
    const auto sofa = synsets_of(wn, "sofa", Pos::noun);
    const auto couch = synsets_of(wn, "couch", Pos::noun);
    bool shared = false;
    for (const auto& s : sofa) shared = shared || couch.contains(s);
    CHECK(shared);
    CHECK(synsets_of(wn, "bark", Pos::verb).size() > 0);
    CHECK(synsets_of(wn, "bark").size() >= synsets_of(wn, "bark", Pos::verb).size());
  }

  TEST_CASE("CRLF database and bad offsets") {
    testing::TempDir dir;
    for (const char* name : {"index.noun", "data.noun"}) {
      std::string s = testing::read_file(wn_dir / name), crlf;
      for (char c : s) {
        if (c == '\n') crlf += '\r';
        crlf += c;
      }
      testing::write_file(dir / name, crlf);
    }
    const auto wn = load_wordnet(dir.path());
    CHECK(synsets_of(wn, "sofa").size() == 1);

    testing::TempDir broken;
    testing::write_file(broken / "index.noun", testing::read_file(wn_dir / "index.noun"));
    testing::write_file(broken / "data.noun", "\n" + testing::read_file(wn_dir / "data.noun"));
    CHECK(code_of([&] { load_wordnet(broken.path()); }) == ErrorCode::ParseError);

    testing::TempDir empty;
    CHECK(code_of([&] { load_wordnet(empty.path()); }) == ErrorCode::MissingFile);
  }
}
