#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace revprobe::corpus {

enum class ConceptSource { things, wordnet, hill200, custom };

std::string_view to_string(ConceptSource s);
ConceptSource parse_concept_source(std::string_view s);

/// One nameable object: the unit a probe trial is evaluated on.
struct Concept {
  std::string id;
  std::string lemma;
  std::set<std::string> synonyms;  // never contains lemma
  std::string description;
  std::optional<std::string> category;
  ConceptSource source = ConceptSource::custom;

  /// lemma followed by the synonyms, as the match target set.
  std::set<std::string> expected_answers() const;

  bool operator==(const Concept&) const = default;
};

/// Concepts ordered by id with unique ids. Immutable once built.
class ConceptSet {
 public:
  ConceptSet() = default;
  /// Sorts by id; throws DuplicateId or MalformedRow on invariant violations.
  ConceptSet(std::string name, std::vector<Concept> concepts);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Concept>& concepts() const noexcept { return concepts_; }
  std::size_t size() const noexcept { return concepts_.size(); }
  bool empty() const noexcept { return concepts_.empty(); }
  const Concept& operator[](std::size_t i) const { return concepts_[i]; }

  const Concept* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  auto begin() const noexcept { return concepts_.begin(); }
  auto end() const noexcept { return concepts_.end(); }

  bool operator==(const ConceptSet&) const = default;

 private:
  std::string name_;
  std::vector<Concept> concepts_;
};

enum class ConceptFormat { things_tsv, jsonl, hill200_tsv };

ConceptFormat parse_concept_format(std::string_view s);

/// Column maps:
///   things_tsv  header "id\tlemma\tsynonyms\tdescription\tcategory";
///               synonyms separated by ','; category may be empty.
///   hill200_tsv header "lemma\tdescription"; id is "hill200-<row>" (1-based).
///   jsonl       canonical records {id, lemma, synonyms, description, category, source}.
ConceptSet load_concepts(const std::filesystem::path& path, ConceptFormat format);

/// Canonical JSONL, one concept per line in id order.
void save_concepts_jsonl(const ConceptSet& set, const std::filesystem::path& path);
std::string to_jsonl(const ConceptSet& set);

// ---------------------------------------------------------------------------

enum class FeatureType { taxonomic, encyclopedic, functional, visual, other_perceptual };

std::string_view to_string(FeatureType t);

struct FeatureNorm {
  std::string feature_id;
  std::string label;
  FeatureType feature_type = FeatureType::other_perceptual;
  std::map<std::string, bool> values;  // concept id -> has feature

  std::size_t positives() const;
};

struct FeatureNormSet {
  std::vector<FeatureNorm> features;  // ordered by feature_id
  std::size_t concept_count = 0;      // concepts (rows) covered by the matrix
  std::size_t dropped_sparse = 0;     // features removed by the min_concepts rule
};

/// Boolean concept x feature matrix in CSV:
///   header: concept_id,<type>:<label>,<type>:<label>,...
///   rows:   <concept id>,0|1,0|1,...
/// When restrict_to is given, rows outside it are discarded before the
/// sparsity filter is applied.
FeatureNormSet load_feature_norms(const std::filesystem::path& path, std::size_t min_concepts = 20,
                                  const std::set<std::string>* restrict_to = nullptr);

// ---------------------------------------------------------------------------

struct AnswerCluster {
  std::vector<std::string> answers;
  int count = 1;
};

using ClusterSet = std::vector<AnswerCluster>;

struct ProtoQAItem {
  std::string id;
  std::string question;
  ClusterSet clusters;
};

/// Accepts canonical records {"id", "question", "clusters": [{"answers", "count"}]}
/// as well as the upstream layout where "question" is an object with
/// "original"/"normalized" and "answers.clusters" is an object keyed by
/// cluster id. Cluster order is preserved as written.
std::vector<ProtoQAItem> load_protoqa(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct FrequencyTable {
  std::map<std::string, double> entries;  // word -> log10 occurrences per billion words

  std::optional<double> lookup(std::string_view word) const;
};

struct EmbeddingTable {
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>> rows;
  std::map<std::string, std::string> meta;

  /// Enforces row length and finiteness.
  void add_row(std::string id, std::vector<double> values);
};

enum class TableKind { frequency, embedding };

/// Whitespace-separated rows "word v1 [v2 ...]". Lines starting with '#'
/// are comments; "# key=value" comments populate EmbeddingTable::meta.
std::variant<FrequencyTable, EmbeddingTable> load_table(const std::filesystem::path& path,
                                                        TableKind kind);

FrequencyTable load_frequency_table(const std::filesystem::path& path);
EmbeddingTable load_embedding_table(const std::filesystem::path& path);

}  // namespace revprobe::corpus
