#include <doctest.h>

#include <cstdlib>
#include <random>

#include "oracles.hpp"
#include "revprobe/error.hpp"
#include "revprobe/harness.hpp"
#include "revprobe/stats.hpp"
#include "scenario.hpp"
#include "support.hpp"

using namespace revprobe;
using namespace revprobe::harness;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    parse_run_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

json minimal_probe() {
  return json{{"backend", {{"kind", "oracle"}}},
              {"datasets", {{"concepts", "c.jsonl"}}},
              {"experiments", json::array({{{"kind", "probe"}, {"condition", "Demo"}, {"n_demos", 2}}})}};
}

std::vector<std::string> listing(const std::filesystem::path& root) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config parsing") {
    const auto ok = parse_run_config(minimal_probe());
    REQUIRE(ok.experiments.size() == 1);
    CHECK(ok.experiments[0].name == "probe-0");
    CHECK(ok.experiments[0].runs == 5);
    CHECK(config_digest(ok) == config_digest(parse_run_config(to_json(ok))));

    auto j = minimal_probe();
    j["experiments"][0]["n_demos"] = 0;
    CHECK(config_error(j).find("experiments[0].n_demos") != std::string::npos);

    j = minimal_probe();
    j["experiments"][0]["n_demos"] = 60;
    CHECK(config_error(j).find("allow_n_demos") != std::string::npos);
    j["experiments"][0]["allow_n_demos"] = true;
    CHECK(parse_run_config(j).experiments[0].n_demos == 60);

    j = minimal_probe();
    j["experiments"][0]["condition"] = "NL";
    CHECK(config_error(j).find("n_demos") != std::string::npos);

    j = minimal_probe();
    j["bogus"] = 1;
    CHECK(config_error(j).find("bogus") != std::string::npos);

    j = minimal_probe();
    j["backend"]["kind"] = "http";
    CHECK(config_error(j).find("backend.endpoint") != std::string::npos);

    j = minimal_probe();
    j["experiments"] = json::array();
    CHECK(config_error(j).find("experiments") != std::string::npos);

    j = minimal_probe();
    j["datasets"] = json::object();
    CHECK(config_error(j).find("datasets.concepts") != std::string::npos);

    j = minimal_probe();
    j["experiments"].push_back({{"kind", "categorize"}, {"reprs", "missing"}});
    j["datasets"]["memberships"] = "m.tsv";
    CHECK(config_error(j).find("experiments[1].reprs") != std::string::npos);

    j = minimal_probe();
    j["backend"]["oracle"] = {{"correct_prob", 2}};
    CHECK(config_error(j).find("backend.oracle.correct_prob") != std::string::npos);
  }

  TEST_CASE("full run is reproducible from the cache") {
    ::unsetenv("REVPROBE_CACHE_DIR");
    testing::TempDir dir;
    const auto config = parse_run_config(testing::write_scenario(dir.path()));
    const auto first = run(config, dir.path());
    for (const auto& x : first.experiments) {
      INFO(x.name);
      CHECK(!x.error);
    }
    CHECK(first.backend_calls > 0);

    const auto files = listing(first.run_dir);
    const std::vector<std::string> expected{
        "bench/mc.jsonl",      "config.json",         "demo/records.jsonl",  "grammar/pairs.jsonl",
        "hidden/reprs.bin",    "hidden/reprs.json",   "manifest.json",       "nl/records.jsonl",
        "qa/answers.jsonl",    "qa/scores.jsonl",     "reports/bench.csv",   "reports/cats.csv",
        "reports/demo.csv",    "reports/feats.csv",   "reports/grammar.csv", "reports/nl.csv",
        "reports/pca.csv",     "reports/qa.csv"};
    CHECK(files == expected);

    std::map<std::string, std::string> before;
    for (const auto& f : files)
      if (f != "manifest.json") before[f] = testing::read_file(first.run_dir / f);

    const auto second = run(config, dir.path());
    CHECK(second.run_dir == first.run_dir);
    CHECK(second.backend_calls == 0);
    CHECK(second.cache_hits > 0);
    for (const auto& [f, content] : before) {
      INFO(f);
      CHECK(testing::read_file(second.run_dir / f) == content);
    }

    const auto manifest = load_manifest(first.run_dir);
    CHECK(manifest.experiments.size() == 9);
    CHECK(manifest.backend_calls == 0);

    const auto records = probe_record_files(first.run_dir);
    CHECK(records.size() == 2);
    const auto csv = export_report(records, ReportFormat::csv, 100);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header plus Demo and NL
    const auto md = export_report(records, ReportFormat::markdown, 100);
    CHECK(md.find("| Demo") != std::string::npos);
    CHECK(md.find("NL") != std::string::npos);
  }

  TEST_CASE("failed experiment is recorded and the rest run") {
    ::unsetenv("REVPROBE_CACHE_DIR");
    testing::TempDir dir;
    auto j = testing::write_scenario(dir.path());
    testing::write_file(dir / "pairs.jsonl", "{not json\n");
    const auto m = run(parse_run_config(j), dir.path());
    for (const auto& x : m.experiments) {
      INFO(x.name);
      CHECK(x.error.has_value() == (x.name == "grammar"));
    }

    j["datasets"]["mc"] = "absent.jsonl";
    CHECK_THROWS_AS(run(parse_run_config(j), dir.path()), Error);
  }

  TEST_CASE("export_report needs records") {
    testing::TempDir dir;
    testing::write_file(dir / "empty.jsonl", "");
    try {
      export_report({dir / "empty.jsonl"}, ReportFormat::csv);
      FAIL("expected MissingArtifact");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingArtifact);
    }
    CHECK_THROWS_AS(export_report({}, ReportFormat::csv), Error);
  }

  TEST_CASE("correlate_models") {
    std::map<std::string, double> probe{{"a", 0.1}, {"b", 0.5}, {"c", 0.3}, {"d", 0.9}};
    std::map<std::string, std::map<std::string, double>> tasks;
    for (const auto& [m, s] : probe) tasks[m] = {{"t1", s}, {"flat", 0.5}};
    const auto rows = correlate_models(probe, tasks);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].task == "flat");
    CHECK(!rows[0].spearman);
    CHECK(rows[0].error.find("ZeroVariance") != std::string::npos);
    CHECK(rows[1].task == "t1");
    CHECK(*rows[1].spearman == doctest::Approx(1.0));
    CHECK(*rows[1].pearson == doctest::Approx(1.0));
    CHECK(rows[2].task == "average");
    CHECK(*rows[2].spearman == doctest::Approx(1.0));
    CHECK(to_csv(rows).find("average") != std::string::npos);

    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0, 1);
    std::map<std::string, double> p15;
    std::map<std::string, std::map<std::string, double>> t15;
    std::vector<double> x, y;
    for (int i = 0; i < 15; ++i) {
      const auto m = "m" + std::to_string(10 + i);
      p15[m] = u(gen);
      t15[m] = {{"task", p15[m] + 0.3 * u(gen)}};
    }
    for (const auto& [m, s] : p15) {
      x.push_back(s);
      y.push_back(t15[m]["task"]);
    }
    const auto r15 = correlate_models(p15, t15);
    CHECK(*r15[0].spearman == doctest::Approx(oracle::spearman(x, y)).epsilon(1e-12));
    CHECK(*r15[0].pearson == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-12));

    probe.erase("a");
    probe.erase("b");
    try {
      correlate_models(probe, tasks);
      FAIL("expected TooFewModels");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewModels);
    }
  }

  TEST_CASE("score tables") {
    testing::TempDir dir;
    testing::write_file(dir / "p.csv", "model,score\na,0.5\nb,0.7\n");
    testing::write_file(dir / "t.csv", "model,task,score\na,csqa,0.4\na,arc,0.6\nb,csqa,0.8\n");
    CHECK(load_model_scores(dir / "p.csv").at("b") == 0.7);
    const auto t = load_task_scores(dir / "t.csv");
    CHECK(t.at("a").size() == 2);
    CHECK(t.at("b").at("csqa") == 0.8);
  }
}
