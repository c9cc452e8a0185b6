#include "revprobe/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "revprobe/error.hpp"
#include "revprobe/probe.hpp"
#include "revprobe/represent.hpp"
#include "revprobe/rng.hpp"
#include "revprobe/stats.hpp"
#include "revprobe/text.hpp"
#include "revprobe/wordnet.hpp"

namespace revprobe::harness {

using nlohmann::json;
using promptgen::Condition;

lm::OracleSpec make_oracle_spec(const corpus::ConceptSet& set, const OracleOptions& options) {
  if (options.hidden_size == 0) throw Error(ErrorCode::ConfigInvalid, "backend.oracle.hidden_size must be positive");
  lm::OracleSpec spec;
  spec.correct_prob = options.correct_prob;
  spec.noise_sigma = options.noise_sigma;
  spec.token_logprob = options.token_logprob;
  spec.seed = options.seed;
  spec.sample_answers = options.sample_answers;
  for (const auto& c : set) {
    const auto category = c.category.value_or("uncategorized");
    spec.answer_map[c.description] = c.lemma;
    spec.answer_map.try_emplace(c.lemma, c.lemma);
    spec.category_map[c.description] = category;
    spec.category_map.try_emplace(c.lemma, category);
    if (!spec.centroids.contains(category)) {
      SplitMix64 rng(derive_seed(options.seed, fnv1a(category)));
      std::vector<double> centroid(options.hidden_size);
      for (auto& v : centroid) v = rng.normal();
      spec.centroids[category] = std::move(centroid);
    }
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::probe: return "probe";
    case ExperimentKind::reprs: return "reprs";
    case ExperimentKind::categorize: return "categorize";
    case ExperimentKind::decode: return "decode";
    case ExperimentKind::project: return "project";
    case ExperimentKind::mc: return "mc";
    case ExperimentKind::minimal_pairs: return "minimal_pairs";
    case ExperimentKind::protoqa: return "protoqa";
  }
  return "probe";
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + why);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) invalid(where, "must be an object");
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) invalid(where + "." + key, "unknown field");
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(where + "." + key, "wrong type");
  }
}

ExperimentKind parse_kind(const std::string& s, const std::string& where) {
  for (auto k : {ExperimentKind::probe, ExperimentKind::reprs, ExperimentKind::categorize, ExperimentKind::decode,
                 ExperimentKind::project, ExperimentKind::mc, ExperimentKind::minimal_pairs, ExperimentKind::protoqa})
    if (s == to_string(k)) return k;
  invalid(where, "unknown experiment kind '" + s + "'");
}

lm::BackendKind parse_backend_kind(const std::string& s) {
  if (s == "oracle") return lm::BackendKind::oracle;
  if (s == "replay") return lm::BackendKind::replay;
  if (s == "http") return lm::BackendKind::http;
  invalid("backend.kind", "unknown backend kind '" + s + "'");
}

bool safe_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  }) && s != "." && s != ".." && s != "reports";
}

bool needs_concepts(ExperimentKind k) { return k == ExperimentKind::probe || k == ExperimentKind::reprs; }

bool needs_reprs(ExperimentKind k) {
  return k == ExperimentKind::categorize || k == ExperimentKind::decode || k == ExperimentKind::project;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  check_keys(j, "config",
             {"backend", "datasets", "concepts_format", "experiments", "output_dir", "cache", "cache_dir",
              "max_in_flight"});
  RunConfig c;

  if (!j.contains("backend")) invalid("backend", "missing");
  const auto& b = j.at("backend");
  check_keys(b, "backend", {"kind", "id", "endpoint", "fixture", "hidden_size", "timeout_seconds", "oracle"});
  c.backend.kind = parse_backend_kind(get<std::string>(b, "kind", "backend", "oracle"));
  c.backend.id = get<std::string>(b, "id", "backend", c.backend.kind == lm::BackendKind::http ? "" : std::string(lm::to_string(c.backend.kind)));
  if (b.contains("endpoint")) c.backend.endpoint = get<std::string>(b, "endpoint", "backend", "");
  if (b.contains("fixture")) c.backend.fixture = get<std::string>(b, "fixture", "backend", "");
  c.backend.hidden_size = get<std::size_t>(b, "hidden_size", "backend", 1);
  c.backend.timeout_seconds = get<double>(b, "timeout_seconds", "backend", 120.0);
  if (!(c.backend.timeout_seconds > 0)) invalid("backend.timeout_seconds", "must be positive");
  if (c.backend.kind == lm::BackendKind::http && !c.backend.endpoint) invalid("backend.endpoint", "required for http");
  if (c.backend.kind == lm::BackendKind::replay && !c.backend.fixture) invalid("backend.fixture", "required for replay");
  if (b.contains("oracle")) {
    const auto& o = b.at("oracle");
    check_keys(o, "backend.oracle",
               {"correct_prob", "noise_sigma", "token_logprob", "hidden_size", "seed", "sample_answers"});
    auto& opt = c.backend.oracle;
    opt.correct_prob = get<double>(o, "correct_prob", "backend.oracle", 1.0);
    opt.noise_sigma = get<double>(o, "noise_sigma", "backend.oracle", 0.0);
    opt.token_logprob = get<double>(o, "token_logprob", "backend.oracle", -1.0);
    opt.hidden_size = get<std::size_t>(o, "hidden_size", "backend.oracle", 16);
    opt.seed = get<std::uint64_t>(o, "seed", "backend.oracle", 0);
    opt.sample_answers =
        get<std::vector<std::pair<std::string, double>>>(o, "sample_answers", "backend.oracle", {});
    if (!(opt.correct_prob >= 0 && opt.correct_prob <= 1)) invalid("backend.oracle.correct_prob", "must lie in [0, 1]");
    if (!(opt.noise_sigma >= 0)) invalid("backend.oracle.noise_sigma", "must be >= 0");
    if (opt.hidden_size == 0) invalid("backend.oracle.hidden_size", "must be positive");
  }

  c.datasets = get<std::map<std::string, std::string>>(j, "datasets", "config", {});
  c.concepts_format = get<std::string>(j, "concepts_format", "config", "jsonl");
  try {
    corpus::parse_concept_format(c.concepts_format);
  } catch (const Error&) {
    invalid("concepts_format", "unknown format '" + c.concepts_format + "'");
  }
  c.output_dir = get<std::string>(j, "output_dir", "config", "runs");
  c.cache = get<bool>(j, "cache", "config", true);
  if (j.contains("cache_dir")) c.cache_dir = get<std::string>(j, "cache_dir", "config", "");
  c.max_in_flight = get<std::size_t>(j, "max_in_flight", "config", 4);
  if (c.max_in_flight == 0) invalid("max_in_flight", "must be positive");

  if (!j.contains("experiments") || !j.at("experiments").is_array() || j.at("experiments").empty())
    invalid("experiments", "must be a nonempty list");
  std::set<std::string> names;
  std::map<std::string, ExperimentKind> kinds;
  std::size_t index = 0;
  for (const auto& e : j.at("experiments")) {
    const std::string where = "experiments[" + std::to_string(index) + "]";
    check_keys(e, where,
               {"name", "kind", "condition", "n_demos", "runs", "seed", "permute_ratio", "k", "modes", "samples", "dims",
                "l2", "bootstrap", "reprs", "allow_n_demos"});
    ExperimentConfig x;
    if (!e.contains("kind")) invalid(where + ".kind", "missing");
    x.kind = parse_kind(get<std::string>(e, "kind", where, ""), where + ".kind");
    x.name = get<std::string>(e, "name", where, std::string(to_string(x.kind)) + "-" + std::to_string(index));
    if (!safe_name(x.name)) invalid(where + ".name", "must be a nonempty file-name-safe string");
    if (!names.insert(x.name).second) invalid(where + ".name", "duplicate experiment name '" + x.name + "'");
    try {
      x.condition = promptgen::parse_condition(get<std::string>(e, "condition", where, "Demo"));
    } catch (const Error&) {
      invalid(where + ".condition", "unknown condition");
    }
    x.allow_n_demos = get<bool>(e, "allow_n_demos", where, false);
    const bool demos = promptgen::uses_demonstrations(x.condition);
    x.n_demos = get<std::size_t>(e, "n_demos", where, demos ? 24 : 0);
    if (needs_concepts(x.kind)) {
      if (demos && x.n_demos == 0) invalid(where + ".n_demos", "must be >= 1 for " + std::string(promptgen::to_string(x.condition)));
      if (!demos && x.n_demos != 0) invalid(where + ".n_demos", "must be 0 for " + std::string(promptgen::to_string(x.condition)));
      if (demos && x.n_demos > 48 && !x.allow_n_demos) invalid(where + ".n_demos", "outside 1..48 (set allow_n_demos)");
      if (x.kind == ExperimentKind::reprs && x.condition == Condition::Rand)
        invalid(where + ".condition", "representations are not extracted under Rand");
    }
    x.runs = get<std::size_t>(e, "runs", where, 5);
    if (x.runs == 0) invalid(where + ".runs", "must be positive");
    x.seed = get<std::uint64_t>(e, "seed", where, 0);
    x.permute_ratio = get<double>(e, "permute_ratio", where, 0.0);
    if (!(x.permute_ratio >= 0 && x.permute_ratio <= 1)) invalid(where + ".permute_ratio", "must lie in [0, 1]");
    if (e.contains("k")) {
      if (e.at("k").is_array()) x.k = get<std::vector<std::size_t>>(e, "k", where, {});
      else x.k = {get<std::size_t>(e, "k", where, 10)};
    } else if (x.kind == ExperimentKind::protoqa) {
      x.k = {1, 3, 5, 10};
    }
    if (x.k.empty() || std::any_of(x.k.begin(), x.k.end(), [](std::size_t k) { return k == 0; }))
      invalid(where + ".k", "must be positive");
    if (x.kind == ExperimentKind::decode && x.k.front() < 2) invalid(where + ".k", "decode needs at least 2 folds");
    if (e.contains("modes")) {
      x.modes.clear();
      for (const auto& m : get<std::vector<std::string>>(e, "modes", where, {})) {
        try {
          x.modes.push_back(protoqa::parse_match_mode(m));
        } catch (const Error&) {
          invalid(where + ".modes", "unknown match mode '" + m + "'");
        }
      }
      if (x.modes.empty()) invalid(where + ".modes", "must be nonempty");
    }
    x.samples = get<std::size_t>(e, "samples", where, 100);
    if (x.samples == 0) invalid(where + ".samples", "must be positive");
    x.dims = get<std::size_t>(e, "dims", where, 2);
    if (x.dims == 0) invalid(where + ".dims", "must be positive");
    x.l2 = get<double>(e, "l2", where, 1.0);
    if (!(x.l2 >= 0)) invalid(where + ".l2", "must be >= 0");
    x.bootstrap = get<std::size_t>(e, "bootstrap", where, 1000);
    if (x.bootstrap == 0) invalid(where + ".bootstrap", "must be positive");
    if (e.contains("reprs")) x.reprs = get<std::string>(e, "reprs", where, "");

    auto need = [&](const std::string& role) {
      if (!c.datasets.contains(role)) invalid(where, "needs datasets." + role);
    };
    if (needs_concepts(x.kind)) need("concepts");
    if (needs_reprs(x.kind)) {
      if (!x.reprs) invalid(where + ".reprs", "must name an earlier reprs experiment");
      auto it = kinds.find(*x.reprs);
      if (it == kinds.end() || it->second != ExperimentKind::reprs)
        invalid(where + ".reprs", "'" + *x.reprs + "' is not an earlier reprs experiment");
    }
    if (x.kind == ExperimentKind::categorize) need("memberships");
    if (x.kind == ExperimentKind::decode) need("features");
    if (x.kind == ExperimentKind::mc) need("mc");
    if (x.kind == ExperimentKind::minimal_pairs) need("minimal_pairs");
    if (x.kind == ExperimentKind::protoqa) {
      need("protoqa");
      if (std::find(x.modes.begin(), x.modes.end(), protoqa::MatchMode::wordnet) != x.modes.end()) need("wordnet");
    }
    kinds[x.name] = x.kind;
    c.experiments.push_back(std::move(x));
    ++index;
  }
  if (c.backend.kind == lm::BackendKind::oracle && !c.datasets.contains("concepts"))
    invalid("datasets.concepts", "the oracle backend is built from the concept set");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path.string());
  try {
    return parse_run_config(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json b;
  b["kind"] = lm::to_string(c.backend.kind);
  b["id"] = c.backend.id;
  if (c.backend.endpoint) b["endpoint"] = *c.backend.endpoint;
  if (c.backend.fixture) b["fixture"] = *c.backend.fixture;
  b["hidden_size"] = c.backend.hidden_size;
  b["timeout_seconds"] = c.backend.timeout_seconds;
  if (c.backend.kind == lm::BackendKind::oracle) {
    const auto& o = c.backend.oracle;
    b["oracle"] = {{"correct_prob", o.correct_prob}, {"noise_sigma", o.noise_sigma},
                   {"token_logprob", o.token_logprob}, {"hidden_size", o.hidden_size},
                   {"seed", o.seed},                   {"sample_answers", o.sample_answers}};
  }
  json experiments = json::array();
  for (const auto& x : c.experiments) {
    json e;
    e["name"] = x.name;
    e["kind"] = to_string(x.kind);
    e["condition"] = promptgen::to_string(x.condition);
    e["n_demos"] = x.n_demos;
    e["runs"] = x.runs;
    e["seed"] = x.seed;
    e["permute_ratio"] = x.permute_ratio;
    e["k"] = x.k;
    json modes = json::array();
    for (auto m : x.modes) modes.push_back(protoqa::to_string(m));
    e["modes"] = modes;
    e["samples"] = x.samples;
    e["dims"] = x.dims;
    e["l2"] = x.l2;
    e["bootstrap"] = x.bootstrap;
    if (x.reprs) e["reprs"] = *x.reprs;
    e["allow_n_demos"] = x.allow_n_demos;
    experiments.push_back(std::move(e));
  }
  json j;
  j["backend"] = std::move(b);
  j["datasets"] = c.datasets;
  j["concepts_format"] = c.concepts_format;
  j["experiments"] = std::move(experiments);
  j["output_dir"] = c.output_dir;
  j["cache"] = c.cache;
  if (c.cache_dir) j["cache_dir"] = *c.cache_dir;
  j["max_in_flight"] = c.max_in_flight;
  return j;
}

std::string config_digest(const RunConfig& c) { return lm::sha256_hex(lm::wire::canonical(to_json(c))).substr(0, 16); }

// ---------------------------------------------------------------------------

json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_digest"] = m.config_digest;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["tool_version"] = m.tool_version;
  j["backend_info"] = m.backend_info;
  j["backend_calls"] = m.backend_calls;
  j["cache_hits"] = m.cache_hits;
  auto exps = nlohmann::ordered_json::array();
  for (const auto& e : m.experiments) {
    nlohmann::ordered_json x;
    x["name"] = e.name;
    x["kind"] = e.kind;
    x["artifacts"] = e.artifacts;
    x["error"] = e.error ? json(*e.error) : json(nullptr);
    x["summary"] = e.summary;
    exps.push_back(std::move(x));
  }
  j["experiments"] = std::move(exps);
  return j;
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, path.string());
  RunManifest m;
  m.run_dir = run_dir;
  try {
    const auto j = json::parse(in);
    m.config_digest = j.at("config_digest").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.backend_info = j.at("backend_info");
    m.backend_calls = j.at("backend_calls").get<std::size_t>();
    m.cache_hits = j.at("cache_hits").get<std::size_t>();
    for (const auto& x : j.at("experiments")) {
      ExperimentOutcome e;
      e.name = x.at("name").get<std::string>();
      e.kind = x.at("kind").get<std::string>();
      e.artifacts = x.at("artifacts").get<std::vector<std::string>>();
      if (!x.at("error").is_null()) e.error = x.at("error").get<std::string>();
      e.summary = x.at("summary").get<std::map<std::string, double>>();
      m.experiments.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
  return m;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::MissingArtifact, "cannot write " + path.string());
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::shared_ptr<lm::Backend> make_backend(const BackendConfig& config, const corpus::ConceptSet* concepts,
                                          const std::filesystem::path& base_dir) {
  switch (config.kind) {
    case lm::BackendKind::oracle:
      if (!concepts) throw Error(ErrorCode::ConfigInvalid, "backend: the oracle needs a concept set");
      return std::make_shared<lm::OracleBackend>(make_oracle_spec(*concepts, config.oracle),
                                                 config.id.empty() ? "oracle" : config.id);
    case lm::BackendKind::replay:
      return std::make_shared<lm::ReplayBackend>(resolve(base_dir, config.fixture.value_or("")),
                                                 config.id.empty() ? "replay" : config.id, config.hidden_size);
    case lm::BackendKind::http:
      return std::make_shared<lm::HttpBackend>(config.endpoint.value_or(""), config.id, config.timeout_seconds);
  }
  throw Error(ErrorCode::ConfigInvalid, "backend.kind");
}

std::filesystem::path cache_dir(const RunConfig& config, const std::filesystem::path& base_dir) {
  if (const char* env = std::getenv("REVPROBE_CACHE_DIR"); env && *env) return env;
  if (config.cache_dir) return resolve(base_dir, *config.cache_dir);
  return resolve(base_dir, config.output_dir) / "cache";
}

RunManifest run(const RunConfig& config, const std::filesystem::path& base_dir) {
  for (const auto& [role, path] : config.datasets)
    if (!std::filesystem::exists(resolve(base_dir, path)))
      throw Error(ErrorCode::ConfigInvalid, "datasets." + role + ": " + resolve(base_dir, path).string() + " does not exist");

  std::optional<corpus::ConceptSet> concepts;
  if (config.datasets.contains("concepts"))
    concepts = corpus::load_concepts(resolve(base_dir, config.datasets.at("concepts")),
                                     corpus::parse_concept_format(config.concepts_format));

  auto raw = make_backend(config.backend, concepts ? &*concepts : nullptr, base_dir);
  auto counting = std::make_shared<lm::CountingBackend>(raw);
  std::shared_ptr<lm::Backend> backend = counting;
  std::shared_ptr<lm::CachingBackend> caching;
  if (config.cache) {
    // Responses are only reusable under the same backend settings; for the
    // oracle those include the concept set it was built from.
    auto identity = to_json(config).at("backend");
    if (config.backend.kind == lm::BackendKind::oracle) identity["concepts"] = lm::sha256_hex(corpus::to_jsonl(*concepts));
    caching = std::make_shared<lm::CachingBackend>(
        counting, cache_dir(config, base_dir) / lm::sha256_hex(lm::wire::canonical(identity)).substr(0, 16));
    backend = caching;
  }

  RunManifest m;
  m.config_digest = config_digest(config);
  m.run_dir = resolve(base_dir, config.output_dir) / m.config_digest;
  std::filesystem::create_directories(m.run_dir / "reports");
  write_file(m.run_dir / "config.json", to_json(config).dump(2) + "\n");
  m.started_at = utc_now();
  m.backend_info = lm::wire::to_json(backend->info());

  std::map<std::string, represent::ReprDataset> reprs;
  std::optional<corpus::WordNetIndex> wordnet;

  for (const auto& x : config.experiments) {
    ExperimentOutcome out;
    out.name = x.name;
    out.kind = to_string(x.kind);
    const auto dir = m.run_dir / x.name;
    auto emit = [&](const std::string& rel, std::string_view content) {
      write_file(m.run_dir / rel, content);
      out.artifacts.push_back(rel);
    };
    auto source_reprs = [&]() -> const represent::ReprDataset& {
      auto it = reprs.find(*x.reprs);
      if (it == reprs.end())
        throw Error(ErrorCode::MissingArtifact, "reprs experiment '" + *x.reprs + "' produced no output");
      return it->second;
    };
    try {
      switch (x.kind) {
        case ExperimentKind::probe: {
          probe::ProbeConfig pc;
          pc.condition = x.condition;
          pc.n_demos = x.n_demos;
          pc.runs = x.runs;
          pc.base_seed = x.seed;
          pc.permute_ratio = x.permute_ratio;
          pc.max_in_flight = config.max_in_flight;
          std::vector<probe::TrialRecord> records;
          try {
            records = probe::run_probe(*backend, *concepts, pc);
          } catch (const probe::ProbeAborted& e) {
            emit(x.name + "/records.partial.jsonl", probe::to_jsonl(e.partial()));
            throw;
          }
          emit(x.name + "/records.jsonl", probe::to_jsonl(records));
          const auto report = probe::accuracy_report(records, x.bootstrap, 0.95, x.seed);
          emit("reports/" + x.name + ".csv", probe::to_csv(report));
          double matched = 0;
          for (const auto& r : records) matched += r.matched ? 1 : 0;
          out.summary["accuracy"] = matched / static_cast<double>(records.size());
          out.summary["trials"] = static_cast<double>(records.size());
          break;
        }
        case ExperimentKind::reprs: {
          auto ds = represent::extract_reprs(*backend, *concepts, x.condition, x.n_demos, x.seed, config.max_in_flight);
          represent::save_reprs(ds, dir / "reprs");
          out.artifacts.push_back(x.name + "/reprs.bin");
          out.artifacts.push_back(x.name + "/reprs.json");
          out.summary["rows"] = static_cast<double>(ds.table.rows.size());
          out.summary["dim"] = static_cast<double>(ds.table.dim);
          reprs[x.name] = std::move(ds);
          break;
        }
        case ExperimentKind::project: {
          const auto p = represent::pca_project(source_reprs().table, x.dims);
          emit("reports/" + x.name + ".csv", represent::to_csv(p));
          out.summary["rank_deficient"] = p.rank_deficient ? 1.0 : 0.0;
          break;
        }
        case ExperimentKind::categorize: {
          const auto& ds = source_reprs();
          const auto memberships = represent::load_memberships(resolve(base_dir, config.datasets.at("memberships")));
          represent::SubcategoryPairs subs;
          if (config.datasets.contains("subcategories"))
            subs = represent::load_subcategories(resolve(base_dir, config.datasets.at("subcategories")));
          const auto cats =
              represent::filter_categories(concepts ? *concepts : corpus::ConceptSet{}, memberships, subs);
          const auto result = represent::nearest_centroid_loocv(ds, cats);
          emit("reports/" + x.name + ".csv", represent::to_csv(result, cats));
          out.summary["accuracy"] = result.accuracy;
          out.summary["categories"] = static_cast<double>(cats.categories.size());
          out.summary["concepts"] = static_cast<double>(cats.assignment.size());
          break;
        }
        case ExperimentKind::decode: {
          const auto& ds = source_reprs();
          std::set<std::string> ids;
          for (const auto& [id, row] : ds.table.rows) ids.insert(id);
          const auto norms = corpus::load_feature_norms(resolve(base_dir, config.datasets.at("features")), 20, &ids);
          const auto batch = represent::decode_features(ds, norms, x.k.front(), x.seed, x.l2, config.max_in_flight);
          emit("reports/" + x.name + ".csv", represent::to_csv(batch.results));
          double f1 = 0, auc = 0;
          for (const auto& r : batch.results) {
            f1 += r.mean_f1;
            auc += r.mean_auc;
          }
          const double n = static_cast<double>(batch.results.size());
          out.summary["features"] = n;
          out.summary["skipped"] = static_cast<double>(batch.skipped.size());
          if (n > 0) {
            out.summary["mean_f1"] = f1 / n;
            out.summary["mean_auc"] = auc / n;
          }
          break;
        }
        case ExperimentKind::mc: {
          const auto items = probe::load_mc_items(resolve(base_dir, config.datasets.at("mc")));
          std::string lines;
          std::map<std::string, std::pair<std::size_t, std::size_t>> per_task;
          for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& templates = probe::mc_templates();
            auto t = templates.find(items[i].template_id);
            if (t == templates.end())
              throw Error(ErrorCode::ConfigInvalid, "unknown template '" + items[i].template_id + "'");
            const auto s = probe::score_mc(*backend, items[i], t->second);
            const bool correct = s.chosen == items[i].gold;
            nlohmann::ordered_json j;
            j["index"] = i;
            j["task"] = items[i].template_id;
            j["chosen"] = s.chosen;
            j["gold"] = items[i].gold;
            j["correct"] = correct;
            j["scores"] = s.scores;
            lines += j.dump() + "\n";
            auto& [right, total] = per_task[items[i].template_id];
            right += correct ? 1 : 0;
            ++total;
          }
          emit(x.name + "/mc.jsonl", lines);
          std::string csv = "task,accuracy,n\n";
          for (const auto& [task, rt] : per_task) {
            csv += task + "," + fmt6(static_cast<double>(rt.first) / static_cast<double>(rt.second)) + "," +
                   std::to_string(rt.second) + "\n";
            out.summary["accuracy." + task] = static_cast<double>(rt.first) / static_cast<double>(rt.second);
          }
          emit("reports/" + x.name + ".csv", csv);
          break;
        }
        case ExperimentKind::minimal_pairs: {
          const auto pairs = probe::load_minimal_pairs(resolve(base_dir, config.datasets.at("minimal_pairs")));
          std::string lines;
          std::size_t right = 0;
          for (std::size_t i = 0; i < pairs.size(); ++i) {
            const bool ok = probe::score_minimal_pair(*backend, pairs[i]);
            right += ok ? 1 : 0;
            lines += json{{"index", i}, {"correct", ok}}.dump() + "\n";
          }
          emit(x.name + "/pairs.jsonl", lines);
          const double acc = pairs.empty() ? 0.0 : static_cast<double>(right) / static_cast<double>(pairs.size());
          emit("reports/" + x.name + ".csv", "accuracy,n\n" + fmt6(acc) + "," + std::to_string(pairs.size()) + "\n");
          out.summary["accuracy"] = acc;
          break;
        }
        case ExperimentKind::protoqa: {
          const auto items = corpus::load_protoqa(resolve(base_dir, config.datasets.at("protoqa")));
          const auto answers = protoqa::run_protoqa(*backend, items, x.samples, static_cast<std::int64_t>(x.seed),
                                                    config.max_in_flight);
          std::string lines;
          for (const auto& a : answers) lines += protoqa::to_json(a).dump() + "\n";
          emit(x.name + "/answers.jsonl", lines);
          const bool use_wordnet =
              std::find(x.modes.begin(), x.modes.end(), protoqa::MatchMode::wordnet) != x.modes.end();
          if (use_wordnet && !wordnet) wordnet = corpus::load_wordnet(resolve(base_dir, config.datasets.at("wordnet")));
          std::set<std::string> stopwords = protoqa::default_stopwords();
          if (config.datasets.contains("stopwords"))
            stopwords = protoqa::load_stopwords(resolve(base_dir, config.datasets.at("stopwords")));
          const protoqa::Matcher matcher(wordnet ? &*wordnet : nullptr, std::move(stopwords));
          const auto scores = protoqa::score_all(answers, items, x.k, x.modes, matcher);
          std::string score_lines;
          for (const auto& s : scores) score_lines += protoqa::to_json(s).dump() + "\n";
          emit(x.name + "/scores.jsonl", score_lines);
          emit("reports/" + x.name + ".csv", protoqa::aggregate_csv(scores));
          out.summary["questions"] = static_cast<double>(answers.size());
          break;
        }
      }
    } catch (const Error& e) {
      out.error = e.what();
    }
    m.experiments.push_back(std::move(out));
  }

  m.finished_at = utc_now();
  m.backend_calls = counting->calls();
  m.cache_hits = caching ? caching->cache_hits() : 0;
  write_file(m.run_dir / "manifest.json", to_json(m).dump(2) + "\n");
  return m;
}

// ---------------------------------------------------------------------------

std::vector<CorrelationRow> correlate_models(const std::map<std::string, double>& probe_scores,
                                             const std::map<std::string, std::map<std::string, double>>& task_scores) {
  std::vector<std::string> models;
  std::set<std::string> tasks;
  for (const auto& [model, per_task] : task_scores) {
    if (!probe_scores.contains(model) || per_task.empty()) continue;
    models.push_back(model);
    for (const auto& [task, s] : per_task) tasks.insert(task);
  }
  if (models.size() < 3)
    throw Error(ErrorCode::TooFewModels, std::to_string(models.size()) + " models have both probe and task scores");

  auto correlate = [](std::string task, const std::vector<double>& x, const std::vector<double>& y) {
    CorrelationRow row;
    row.task = std::move(task);
    row.n = x.size();
    if (row.n < 3) {
      row.error = "TooFewModels: " + std::to_string(row.n) + " models";
      return row;
    }
    try {
      row.spearman = stats::spearman(x, y);
      row.pearson = stats::pearson(x, y);
    } catch (const Error& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<CorrelationRow> out;
  for (const auto& task : tasks) {
    std::vector<double> x, y;
    for (const auto& m : models) {
      const auto& per_task = task_scores.at(m);
      if (auto it = per_task.find(task); it != per_task.end()) {
        x.push_back(probe_scores.at(m));
        y.push_back(it->second);
      }
    }
    out.push_back(correlate(task, x, y));
  }
  std::vector<double> x, y;
  for (const auto& m : models) {
    const auto& per_task = task_scores.at(m);
    double sum = 0;
    for (const auto& [task, s] : per_task) sum += s;
    x.push_back(probe_scores.at(m));
    y.push_back(sum / static_cast<double>(per_task.size()));
  }
  out.push_back(correlate("average", x, y));
  return out;
}

std::string to_csv(const std::vector<CorrelationRow>& rows) {
  std::string out = "task,n,spearman,pearson,error\n";
  for (const auto& r : rows) {
    out += r.task + "," + std::to_string(r.n) + "," + (r.spearman ? fmt6(*r.spearman) : "") + "," +
           (r.pearson ? fmt6(*r.pearson) : "") + ",";
    if (!r.error.empty()) out += "\"" + text::replace_all(r.error, "\"", "\"\"") + "\"";
    out += "\n";
  }
  return out;
}

namespace {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::initializer_list<std::string_view> names, const std::filesystem::path& path) const {
    for (auto name : names)
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error(ErrorCode::MalformedRow, path.filename().string() + ": missing column '" + std::string(*names.begin()) + "'");
  }
};

Csv read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  Csv csv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, ',');
    for (auto& f : fields) f = std::string(text::trim(f));
    if (csv.header.empty()) {
      csv.header = std::move(fields);
      continue;
    }
    if (fields.size() != csv.header.size())
      throw Error(ErrorCode::MalformedRow, path.filename().string() + ":" + std::to_string(line_no));
    csv.rows.push_back(std::move(fields));
  }
  return csv;
}

double parse_score(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedRow, path.filename().string() + ": bad score '" + s + "'");
  }
}

}  // namespace

std::map<std::string, double> load_model_scores(const std::filesystem::path& path) {
  const auto csv = read_csv(path);
  const auto model = csv.column({"model"}, path);
  const auto score = csv.column({"score", "mean"}, path);
  std::map<std::string, double> out;
  for (const auto& row : csv.rows)
    if (!out.emplace(row[model], parse_score(row[score], path)).second)
      throw Error(ErrorCode::MalformedRow, path.filename().string() + ": duplicate model '" + row[model] + "'");
  return out;
}

std::map<std::string, std::map<std::string, double>> load_task_scores(const std::filesystem::path& path) {
  const auto csv = read_csv(path);
  const auto model = csv.column({"model"}, path);
  const auto task = csv.column({"task"}, path);
  const auto score = csv.column({"score"}, path);
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& row : csv.rows)
    if (!out[row[model]].emplace(row[task], parse_score(row[score], path)).second)
      throw Error(ErrorCode::MalformedRow, path.filename().string() + ": duplicate (model, task)");
  return out;
}

std::string export_report(const std::vector<std::filesystem::path>& record_files, ReportFormat format,
                          std::size_t resamples, std::uint64_t seed) {
  if (record_files.empty()) throw Error(ErrorCode::MissingArtifact, "no record files");
  std::vector<probe::TrialRecord> records;
  for (const auto& f : record_files) {
    auto part = probe::load_records(f);
    records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (records.empty()) throw Error(ErrorCode::MissingArtifact, "record files hold no trials");
  const auto reports = probe::accuracy_report(records, resamples, 0.95, seed);
  if (format == ReportFormat::csv) return probe::to_csv(reports);

  // Columns: (condition, n_demos) in Table-1 order, then the rest.
  std::map<Condition, std::set<std::size_t>> ns;
  std::set<std::string> models;
  std::map<std::tuple<std::string, Condition, std::size_t>, double> cell;
  for (const auto& r : reports) {
    ns[r.condition].insert(r.n_demos);
    models.insert(r.model_id);
    cell[{r.model_id, r.condition, r.n_demos}] = r.mean;
  }
  std::vector<std::pair<Condition, std::size_t>> columns;
  for (auto c : {Condition::Demo, Condition::NL, Condition::Mis, Condition::Rand, Condition::W2W,
                 Condition::WordOnly, Condition::DescriptionOnly})
    if (auto it = ns.find(c); it != ns.end())
      for (auto n : it->second) columns.emplace_back(c, n);

  std::string out = "| model |";
  std::string rule = "|---|";
  for (const auto& [c, n] : columns) {
    std::string label(promptgen::to_string(c));
    if (ns[c].size() > 1) label += "-" + std::to_string(n);
    out += " " + label + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  char buf[32];
  for (const auto& model : models) {
    out += "| " + model + " |";
    for (const auto& [c, n] : columns) {
      auto it = cell.find({model, c, n});
      if (it == cell.end()) {
        out += " |";
        continue;
      }
      std::snprintf(buf, sizeof buf, " %.1f |", 100.0 * it->second);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> probe_record_files(const std::filesystem::path& run_dir) {
  const auto m = load_manifest(run_dir);
  std::vector<std::filesystem::path> out;
  for (const auto& e : m.experiments) {
    if (e.kind != "probe" || e.error) continue;
    for (const auto& a : e.artifacts)
      if (a.ends_with("/records.jsonl")) out.push_back(run_dir / a);
  }
  if (out.empty()) throw Error(ErrorCode::MissingArtifact, "run " + run_dir.string() + " has no probe records");
  return out;
}

}  // namespace revprobe::harness
