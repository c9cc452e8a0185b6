#include "revprobe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "revprobe/error.hpp"
#include "revprobe/text.hpp"

namespace revprobe::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return in;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string row_ref(const std::filesystem::path& path, std::size_t line_no) {
  return path.filename().string() + ":" + std::to_string(line_no);
}

Concept make_concept(std::string id, std::string lemma, std::vector<std::string> synonyms,
                     std::string description, std::optional<std::string> category,
                     ConceptSource source) {
  Concept c;
  c.id = std::move(id);
  c.lemma = std::string(text::trim(lemma));
  c.description = std::string(text::trim(description));
  for (auto& s : synonyms) {
    auto t = std::string(text::trim(s));
    if (!t.empty() && t != c.lemma) c.synonyms.insert(std::move(t));
  }
  if (category && !text::trim(*category).empty()) c.category = std::string(text::trim(*category));
  c.source = source;
  return c;
}

}  // namespace

std::string_view to_string(ConceptSource s) {
  switch (s) {
    case ConceptSource::things: return "things";
    case ConceptSource::wordnet: return "wordnet";
    case ConceptSource::hill200: return "hill200";
    case ConceptSource::custom: return "custom";
  }
  return "custom";
}

ConceptSource parse_concept_source(std::string_view s) {
  if (s == "things") return ConceptSource::things;
  if (s == "wordnet") return ConceptSource::wordnet;
  if (s == "hill200") return ConceptSource::hill200;
  if (s == "custom") return ConceptSource::custom;
  throw Error(ErrorCode::InvalidArgument, "unknown concept source '" + std::string(s) + "'");
}

ConceptFormat parse_concept_format(std::string_view s) {
  if (s == "things_tsv") return ConceptFormat::things_tsv;
  if (s == "jsonl") return ConceptFormat::jsonl;
  if (s == "hill200_tsv") return ConceptFormat::hill200_tsv;
  throw Error(ErrorCode::InvalidArgument, "unknown concept format '" + std::string(s) + "'");
}

std::set<std::string> Concept::expected_answers() const {
  auto out = synonyms;
  out.insert(lemma);
  return out;
}

ConceptSet::ConceptSet(std::string name, std::vector<Concept> concepts)
    : name_(std::move(name)), concepts_(std::move(concepts)) {
  std::stable_sort(concepts_.begin(), concepts_.end(),
                   [](const Concept& a, const Concept& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    const auto& c = concepts_[i];
    if (c.id.empty()) throw Error(ErrorCode::MalformedRow, "concept with empty id");
    if (c.lemma.empty()) throw Error(ErrorCode::MalformedRow, "concept '" + c.id + "' has empty lemma");
    if (c.description.empty())
      throw Error(ErrorCode::MalformedRow, "concept '" + c.id + "' has empty description");
    if (c.synonyms.contains(c.lemma))
      throw Error(ErrorCode::MalformedRow, "concept '" + c.id + "' lists its lemma as a synonym");
    if (i > 0 && concepts_[i - 1].id == c.id) throw Error(ErrorCode::DuplicateId, c.id);
  }
}

const Concept* ConceptSet::find(std::string_view id) const {
  auto idx = index_of(id);
  return idx ? &concepts_[*idx] : nullptr;
}

std::optional<std::size_t> ConceptSet::index_of(std::string_view id) const {
  auto it = std::lower_bound(concepts_.begin(), concepts_.end(), id,
                             [](const Concept& c, std::string_view key) { return c.id < key; });
  if (it == concepts_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - concepts_.begin());
}

ConceptSet load_concepts(const std::filesystem::path& path, ConceptFormat format) {
  auto in = open_input(path);
  std::vector<Concept> concepts;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;

  auto add = [&](Concept c, std::size_t at) {
    if (c.lemma.empty() || c.description.empty())
      throw Error(ErrorCode::MalformedRow, row_ref(path, at) + ": empty lemma or description");
    if (!seen.insert(c.id).second) throw Error(ErrorCode::DuplicateId, c.id);
    concepts.push_back(std::move(c));
  };

  if (format == ConceptFormat::jsonl) {
    while (std::getline(in, line)) {
      ++line_no;
      line = strip_cr(line);
      if (text::trim(line).empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedRow, row_ref(path, line_no) + ": " + e.what());
      }
      try {
        std::optional<std::string> category;
        if (rec.contains("category") && !rec["category"].is_null())
          category = rec["category"].get<std::string>();
        auto source = rec.contains("source") ? parse_concept_source(rec["source"].get<std::string>())
                                             : ConceptSource::custom;
        add(make_concept(rec.at("id").get<std::string>(), rec.at("lemma").get<std::string>(),
                         rec.value("synonyms", std::vector<std::string>{}),
                         rec.at("description").get<std::string>(), category, source),
            line_no);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedRow, row_ref(path, line_no) + ": " + e.what());
      }
    }
    return ConceptSet(path.stem().string(), std::move(concepts));
  }

  const bool things = format == ConceptFormat::things_tsv;
  const std::vector<std::string> expected_header =
      things ? std::vector<std::string>{"id", "lemma", "synonyms", "description", "category"}
             : std::vector<std::string>{"lemma", "description"};
  if (!std::getline(in, line))
    throw Error(ErrorCode::MalformedRow, row_ref(path, 1) + ": missing header row");
  ++line_no;
  if (text::split(strip_cr(line), '\t') != expected_header)
    throw Error(ErrorCode::MalformedRow, row_ref(path, 1) + ": header does not match format");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != expected_header.size())
      throw Error(ErrorCode::MalformedRow, row_ref(path, line_no) + ": expected " +
                                               std::to_string(expected_header.size()) + " columns");
    ++row;
    if (things) {
      add(make_concept(cols[0], cols[1], text::split(cols[2], ','), cols[3],
                       cols[4].empty() ? std::nullopt : std::optional<std::string>(cols[4]),
                       ConceptSource::things),
          line_no);
    } else {
      char id[32];
      std::snprintf(id, sizeof id, "hill200-%04zu", row);
      add(make_concept(id, cols[0], {}, cols[1], std::nullopt, ConceptSource::hill200), line_no);
    }
  }
  return ConceptSet(path.stem().string(), std::move(concepts));
}

std::string to_jsonl(const ConceptSet& set) {
  std::string out;
  for (const auto& c : set) {
    ordered_json rec;
    rec["id"] = c.id;
    rec["lemma"] = c.lemma;
    rec["synonyms"] = c.synonyms;
    rec["description"] = c.description;
    rec["category"] = c.category ? json(*c.category) : json(nullptr);
    rec["source"] = to_string(c.source);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_concepts_jsonl(const ConceptSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << to_jsonl(set);
}

// ---------------------------------------------------------------------------

std::string_view to_string(FeatureType t) {
  switch (t) {
    case FeatureType::taxonomic: return "taxonomic";
    case FeatureType::encyclopedic: return "encyclopedic";
    case FeatureType::functional: return "functional";
    case FeatureType::visual: return "visual";
    case FeatureType::other_perceptual: return "other_perceptual";
  }
  return "other_perceptual";
}

std::size_t FeatureNorm::positives() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& kv) { return kv.second; }));
}

namespace {

FeatureType parse_feature_type(std::string_view s) {
  const auto t = text::casefold(text::trim(s));
  if (t == "taxonomic") return FeatureType::taxonomic;
  if (t == "encyclopedic" || t == "encyclopaedic") return FeatureType::encyclopedic;
  if (t == "functional") return FeatureType::functional;
  if (t == "visual" || t == "visual perceptual" || t == "visual_perceptual") return FeatureType::visual;
  if (t == "other_perceptual" || t == "other perceptual" || t == "perceptual")
    return FeatureType::other_perceptual;
  throw Error(ErrorCode::UnknownFeatureType, std::string(s));
}

}  // namespace

FeatureNormSet load_feature_norms(const std::filesystem::path& path, std::size_t min_concepts,
                                  const std::set<std::string>* restrict_to) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedMatrix, "empty feature matrix");
  auto header = text::split(strip_cr(line), ',');
  if (header.size() < 2 || text::trim(header[0]) != "concept_id")
    throw Error(ErrorCode::MalformedMatrix, "header must start with 'concept_id'");

  std::vector<FeatureNorm> features;
  std::set<std::string> ids;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto colon = header[i].find(':');
    if (colon == std::string::npos)
      throw Error(ErrorCode::MalformedMatrix, "feature header '" + header[i] + "' lacks '<type>:'");
    FeatureNorm f;
    f.feature_type = parse_feature_type(std::string_view(header[i]).substr(0, colon));
    f.label = std::string(text::trim(std::string_view(header[i]).substr(colon + 1)));
    f.feature_id = text::replace_all(f.label, " ", "_");
    if (f.label.empty() || !ids.insert(f.feature_id).second)
      throw Error(ErrorCode::MalformedMatrix, "empty or duplicate feature '" + f.label + "'");
    features.push_back(std::move(f));
  }

  std::set<std::string> concepts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = text::split(line, ',');
    if (cells.size() != header.size())
      throw Error(ErrorCode::MalformedMatrix, row_ref(path, line_no) + ": wrong cell count");
    const std::string concept_id(text::trim(cells[0]));
    if (concept_id.empty() || !concepts.insert(concept_id).second)
      throw Error(ErrorCode::MalformedMatrix, row_ref(path, line_no) + ": empty or duplicate concept");
    if (restrict_to && !restrict_to->contains(concept_id)) {
      concepts.erase(concept_id);
      continue;
    }
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto v = text::trim(cells[i]);
      if (v != "0" && v != "1")
        throw Error(ErrorCode::MalformedMatrix, row_ref(path, line_no) + ": cell is not 0/1");
      features[i - 1].values[concept_id] = (v == "1");
    }
  }

  FeatureNormSet out;
  out.concept_count = concepts.size();
  for (auto& f : features) {
    if (f.positives() < min_concepts) {
      ++out.dropped_sparse;
      continue;
    }
    out.features.push_back(std::move(f));
  }
  std::sort(out.features.begin(), out.features.end(),
            [](const FeatureNorm& a, const FeatureNorm& b) { return a.feature_id < b.feature_id; });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ProtoQAItem> load_protoqa(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<ProtoQAItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (text::trim(line).empty()) continue;
    const auto where = row_ref(path, line_no);
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + e.what());
    }
    ProtoQAItem item;
    try {
      const auto& q = rec.at("question");
      item.question = q.is_string() ? q.get<std::string>() : q.at("original").get<std::string>();
      if (rec.contains("id")) {
        item.id = rec["id"].get<std::string>();
      } else if (rec.contains("metadata") && rec["metadata"].contains("id")) {
        item.id = rec["metadata"]["id"].get<std::string>();
      } else {
        item.id = "q" + std::to_string(items.size() + 1);
      }

      const ordered_json* clusters = nullptr;
      if (rec.contains("clusters")) {
        clusters = &rec["clusters"];
      } else if (rec.contains("answers") && rec["answers"].contains("clusters")) {
        clusters = &rec["answers"]["clusters"];
      }
      if (clusters == nullptr || (!clusters->is_array() && !clusters->is_object()))
        throw Error(ErrorCode::MalformedRecord, where + ": missing clusters");
      for (const auto& c : *clusters) {
        AnswerCluster cluster;
        cluster.count = c.at("count").get<int>();
        cluster.answers = c.at("answers").get<std::vector<std::string>>();
        if (cluster.count < 1)
          throw Error(ErrorCode::NonPositiveCount, where + ": cluster count " + std::to_string(cluster.count));
        if (cluster.answers.empty()) throw Error(ErrorCode::MalformedRecord, where + ": empty cluster");
        item.clusters.push_back(std::move(cluster));
      }
    } catch (const ordered_json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + e.what());
    }
    if (item.clusters.empty()) throw Error(ErrorCode::MalformedRecord, where + ": no clusters");
    std::set<std::string> answers;
    for (const auto& c : item.clusters)
      for (const auto& a : c.answers)
        if (!answers.insert(a).second)
          throw Error(ErrorCode::MalformedRecord, where + ": answer '" + a + "' in two clusters");
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------

std::optional<double> FrequencyTable::lookup(std::string_view word) const {
  if (auto it = entries.find(std::string(word)); it != entries.end()) return it->second;
  if (auto it = entries.find(text::casefold(word)); it != entries.end()) return it->second;
  return std::nullopt;
}

void EmbeddingTable::add_row(std::string id, std::vector<double> values) {
  if (dim == 0) dim = values.size();
  if (values.size() != dim || dim == 0)
    throw Error(ErrorCode::InconsistentDim, "row '" + id + "' has " + std::to_string(values.size()) +
                                                " values, expected " + std::to_string(dim));
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "row '" + id + "'");
  rows[std::move(id)] = std::move(values);
}

namespace {

double parse_number(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedRow, where + ": '" + tok + "' is not a number");
  }
  if (used != tok.size()) throw Error(ErrorCode::MalformedRow, where + ": '" + tok + "' is not a number");
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, where);
  return v;
}

}  // namespace

std::variant<FrequencyTable, EmbeddingTable> load_table(const std::filesystem::path& path,
                                                        TableKind kind) {
  auto in = open_input(path);
  FrequencyTable freq;
  EmbeddingTable emb;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      const auto body = text::trim(trimmed.substr(1));
      if (const auto eq = body.find('='); eq != std::string_view::npos)
        emb.meta[std::string(text::trim(body.substr(0, eq)))] = std::string(text::trim(body.substr(eq + 1)));
      continue;
    }
    auto toks = line.find('\t') != std::string::npos ? text::split(line, '\t') : text::split_ws(line);
    const auto where = row_ref(path, line_no);
    if (toks.size() < 2) throw Error(ErrorCode::MalformedRow, where + ": expected word and value(s)");
    if (kind == TableKind::frequency) {
      if (toks.size() != 2) throw Error(ErrorCode::MalformedRow, where + ": expected one value");
      freq.entries[toks[0]] = parse_number(std::string(text::trim(toks[1])), where);
    } else {
      std::vector<double> values;
      values.reserve(toks.size() - 1);
      for (std::size_t i = 1; i < toks.size(); ++i)
        values.push_back(parse_number(std::string(text::trim(toks[i])), where));
      if (emb.dim != 0 && values.size() != emb.dim)
        throw Error(ErrorCode::InconsistentDim, where + ": " + std::to_string(values.size()) +
                                                    " values, expected " + std::to_string(emb.dim));
      emb.add_row(toks[0], std::move(values));
    }
  }
  if (kind == TableKind::frequency) return freq;
  return emb;
}

FrequencyTable load_frequency_table(const std::filesystem::path& path) {
  return std::get<FrequencyTable>(load_table(path, TableKind::frequency));
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
  return std::get<EmbeddingTable>(load_table(path, TableKind::embedding));
}

}  // namespace revprobe::corpus
