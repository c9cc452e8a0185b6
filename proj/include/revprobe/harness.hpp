#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "revprobe/corpus.hpp"
#include "revprobe/lmclient.hpp"
#include "revprobe/promptgen.hpp"
#include "revprobe/protoqa.hpp"

namespace revprobe::harness {

inline constexpr const char* kVersion = REVPROBE_VERSION;

/// Settings for an oracle backend built over a concept set.
struct OracleOptions {
  double correct_prob = 1.0;
  double noise_sigma = 0.0;
  double token_logprob = -1.0;
  std::size_t hidden_size = 16;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> sample_answers;
};

/// Answers every concept's description (and lemma) with its lemma; hidden
/// vectors are seeded Gaussian category centroids plus noise. Concepts
/// without a category share the centroid "uncategorized".
lm::OracleSpec make_oracle_spec(const corpus::ConceptSet& set, const OracleOptions& options);

struct BackendConfig {
  lm::BackendKind kind = lm::BackendKind::oracle;
  std::string id;
  std::optional<std::string> endpoint;  // http
  std::optional<std::string> fixture;   // replay
  std::size_t hidden_size = 1;          // replay without hidden records
  double timeout_seconds = 120.0;
  OracleOptions oracle;
};

enum class ExperimentKind { probe, reprs, categorize, decode, project, mc, minimal_pairs, protoqa };

std::string_view to_string(ExperimentKind k);

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::probe;
  promptgen::Condition condition = promptgen::Condition::Demo;
  std::size_t n_demos = 24;
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  double permute_ratio = 0.0;
  std::vector<std::size_t> k = {10};  // folds for decode; budgets for protoqa
  std::vector<protoqa::MatchMode> modes = {protoqa::MatchMode::exact, protoqa::MatchMode::wordnet};
  std::size_t samples = 100;
  std::size_t dims = 2;
  double l2 = 1.0;
  std::size_t bootstrap = 1000;
  std::optional<std::string> reprs;  // name of the reprs experiment to analyse
  bool allow_n_demos = false;        // accept n_demos outside 1..48
};

/// A single JSON document. Relative dataset paths resolve against the
/// config file's directory.
struct RunConfig {
  BackendConfig backend;
  std::map<std::string, std::string> datasets;  // role -> path
  std::string concepts_format = "jsonl";
  std::vector<ExperimentConfig> experiments;
  std::string output_dir = "runs";
  bool cache = true;
  std::optional<std::string> cache_dir;
  std::size_t max_in_flight = 4;
};

/// Throws ConfigInvalid naming the offending field.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);
/// Hex SHA-256 of the canonical serialization, first 16 characters.
std::string config_digest(const RunConfig& c);

struct ExperimentOutcome {
  std::string name;
  std::string kind;
  std::vector<std::string> artifacts;  // relative to the run directory
  std::optional<std::string> error;
  std::map<std::string, double> summary;
};

struct RunManifest {
  std::string config_digest;
  std::string started_at;
  std::string finished_at;
  std::string tool_version = kVersion;
  nlohmann::json backend_info;
  std::vector<ExperimentOutcome> experiments;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::filesystem::path run_dir;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest load_manifest(const std::filesystem::path& run_dir);

/// Builds the configured backend; relative paths resolve against base_dir.
std::shared_ptr<lm::Backend> make_backend(const BackendConfig& config, const corpus::ConceptSet* concepts,
                                          const std::filesystem::path& base_dir = {});

/// Cache directory: REVPROBE_CACHE_DIR when set, else config.cache_dir,
/// else <output_dir>/cache.
std::filesystem::path cache_dir(const RunConfig& config, const std::filesystem::path& base_dir = {});

/// Executes the experiments in order under <output_dir>/<digest>/. An
/// experiment that fails is recorded in the manifest and the rest still run.
RunManifest run(const RunConfig& config, const std::filesystem::path& base_dir = {});

// ---------------------------------------------------------------------------

struct CorrelationRow {
  std::string task;
  std::size_t n = 0;
  std::optional<double> spearman;
  std::optional<double> pearson;
  std::string error;
};

/// Per-task and averaged correlation of task scores with probe scores (or
/// any other per-model quantity, such as parameter count). The average row
/// uses each model's mean over the tasks it has. Throws TooFewModels when
/// fewer than three models have both kinds of score.
std::vector<CorrelationRow> correlate_models(const std::map<std::string, double>& probe_scores,
                                             const std::map<std::string, std::map<std::string, double>>& task_scores);

std::string to_csv(const std::vector<CorrelationRow>& rows);

/// CSV with columns model,score (or model,mean).
std::map<std::string, double> load_model_scores(const std::filesystem::path& path);
/// CSV with columns model,task,score.
std::map<std::string, std::map<std::string, double>> load_task_scores(const std::filesystem::path& path);

enum class ReportFormat { csv, markdown };

/// Accuracy tables over trial record files. CSV lists every (model,
/// condition, n_demos) group; markdown lays models out as rows and the
/// Demo, NL, Mis and Rand conditions (then any others) as columns, in
/// percent. Throws MissingArtifact for an empty or missing input.
std::string export_report(const std::vector<std::filesystem::path>& record_files, ReportFormat format,
                          std::size_t resamples = 1000, std::uint64_t seed = 0);

/// Record files of every probe experiment listed in a run's manifest.
std::vector<std::filesystem::path> probe_record_files(const std::filesystem::path& run_dir);

}  // namespace revprobe::harness
