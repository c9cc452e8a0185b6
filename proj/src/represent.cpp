#include "revprobe/represent.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "revprobe/error.hpp"
#include "revprobe/probe.hpp"
#include "revprobe/rng.hpp"
#include "revprobe/stats.hpp"
#include "revprobe/text.hpp"

namespace revprobe::represent {

using nlohmann::json;
using promptgen::Condition;

namespace {

bool is_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ReprDataset extract_reprs(lm::Backend& backend, const corpus::ConceptSet& set, Condition condition,
                          std::size_t n_demos, std::uint64_t seed, std::size_t max_in_flight,
                          const promptgen::PromptFormat& format) {
  if (condition == Condition::Rand)
    throw Error(ErrorCode::ConditionMismatch, "representations are not extracted under Rand");
  if (!promptgen::uses_demonstrations(condition)) n_demos = 0;
  else if (n_demos == 0) throw Error(ErrorCode::ConditionMismatch, "demonstration conditions need n_demos >= 1");

  const probe::RunDemonstrations demos(set, condition, n_demos, seed);
  std::vector<std::string> prompts;
  prompts.reserve(set.size());
  for (const auto& c : set) prompts.push_back(promptgen::render_prompt(demos.for_query(c), c, condition, format).text);

  std::vector<std::vector<double>> rows(set.size());
  std::vector<std::optional<Error>> failures(set.size());
  parallel_for(set.size(), max_in_flight, [&](std::size_t i) {
    try {
      rows[i] = backend.final_hidden(prompts[i]).values;
    } catch (const Error& e) {
      failures[i] = e;
    }
  });

  ReprDataset ds;
  ds.condition = condition;
  ds.n_demos = n_demos;
  ds.model_id = backend.descriptor().id;
  ds.run_seed = seed;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (failures[i]) throw *failures[i];
    if (is_zero(rows[i])) throw Error(ErrorCode::InvalidVector, "zero hidden vector for " + set[i].id);
    ds.table.add_row(set[i].id, std::move(rows[i]));
  }
  ds.table.meta["condition"] = promptgen::to_string(condition);
  ds.table.meta["n_demos"] = std::to_string(n_demos);
  ds.table.meta["model_id"] = ds.model_id;
  ds.table.meta["run_seed"] = std::to_string(seed);
  return ds;
}

void save_reprs(const ReprDataset& ds, const std::filesystem::path& stem) {
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());

  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  std::vector<std::string> ids;
  for (const auto& [id, values] : ds.table.rows) {
    ids.push_back(id);
    for (double v : values) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                   static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
      bin.write(reinterpret_cast<const char*>(le), 4);
    }
  }
  if (!bin) throw Error(ErrorCode::MissingArtifact, "cannot write " + bin_path.string());

  nlohmann::ordered_json side;
  side["ids"] = ids;
  side["dim"] = ds.table.dim;
  side["meta"] = {{"condition", promptgen::to_string(ds.condition)},
                  {"n_demos", ds.n_demos},
                  {"model_id", ds.model_id},
                  {"run_seed", ds.run_seed}};
  std::ofstream js(json_path, std::ios::binary | std::ios::trunc);
  js << side.dump(2) << '\n';
  if (!js) throw Error(ErrorCode::MissingArtifact, "cannot write " + json_path.string());
}

ReprDataset load_reprs(const std::filesystem::path& stem) {
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";
  std::ifstream js(json_path, std::ios::binary);
  if (!js) throw Error(ErrorCode::MissingArtifact, json_path.string());
  ReprDataset ds;
  std::vector<std::string> ids;
  std::size_t dim = 0;
  try {
    const auto side = json::parse(js);
    ids = side.at("ids").get<std::vector<std::string>>();
    dim = side.at("dim").get<std::size_t>();
    const auto& meta = side.at("meta");
    ds.condition = promptgen::parse_condition(meta.at("condition").get<std::string>());
    ds.n_demos = meta.at("n_demos").get<std::size_t>();
    ds.model_id = meta.at("model_id").get<std::string>();
    ds.run_seed = meta.at("run_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedMatrix, json_path.string() + ": " + e.what());
  }

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error(ErrorCode::MissingArtifact, bin_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (bytes.size() != ids.size() * dim * 4)
    throw Error(ErrorCode::MalformedMatrix, bin_path.string() + ": expected " + std::to_string(ids.size() * dim * 4) +
                                                " bytes, found " + std::to_string(bytes.size()));
  std::size_t at = 0;
  for (const auto& id : ids) {
    std::vector<double> row(dim);
    for (auto& v : row) {
      const std::uint32_t bits = static_cast<std::uint32_t>(bytes[at]) | static_cast<std::uint32_t>(bytes[at + 1]) << 8 |
                                 static_cast<std::uint32_t>(bytes[at + 2]) << 16 |
                                 static_cast<std::uint32_t>(bytes[at + 3]) << 24;
      v = std::bit_cast<float>(bits);
      at += 4;
    }
    ds.table.add_row(id, std::move(row));
  }
  ds.table.dim = dim;
  ds.table.meta["condition"] = promptgen::to_string(ds.condition);
  ds.table.meta["n_demos"] = std::to_string(ds.n_demos);
  ds.table.meta["model_id"] = ds.model_id;
  ds.table.meta["run_seed"] = std::to_string(ds.run_seed);
  return ds;
}

// ---------------------------------------------------------------------------

std::map<std::string, std::size_t> CategoryAssignment::sizes() const {
  std::map<std::string, std::size_t> out;
  for (const auto& c : categories) out[c] = 0;
  for (const auto& [id, cat] : assignment) ++out[cat];
  return out;
}

CategoryAssignment filter_categories(const corpus::ConceptSet& set, const Memberships& raw,
                                     const SubcategoryPairs& subcategories, std::size_t min_size) {
  std::set<std::string> children;
  for (const auto& [child, parent] : subcategories) children.insert(child);

  Memberships current;
  for (const auto& [id, cats] : raw) {
    if (!set.empty() && !set.find(id)) continue;
    auto& kept = current[id];
    for (const auto& c : cats)
      if (!children.contains(c)) kept.insert(c);
  }

  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = current.begin(); it != current.end();) {
      if (it->second.size() != 1) {
        it = current.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& [id, cats] : current) ++counts[*cats.begin()];
    for (auto& [id, cats] : current) {
      if (counts[*cats.begin()] < min_size) {
        cats.clear();
        changed = true;
      }
    }
  }

  CategoryAssignment out;
  for (const auto& [id, cats] : current) {
    out.assignment[id] = *cats.begin();
    out.categories.insert(*cats.begin());
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path,
                                                            std::string_view expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != expected_header)
        throw Error(ErrorCode::MalformedRow, path.filename().string() + ":1: expected header '" +
                                                 text::replace_all(std::string(expected_header), "\t", "\\t") + "'");
      continue;
    }
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 2 || text::trim(fields[0]).empty() || text::trim(fields[1]).empty())
      throw Error(ErrorCode::MalformedRow, path.filename().string() + ":" + std::to_string(line_no));
    out.emplace_back(std::string(text::trim(fields[0])), std::string(text::trim(fields[1])));
  }
  return out;
}

}  // namespace

Memberships load_memberships(const std::filesystem::path& path) {
  Memberships out;
  for (auto& [id, cat] : read_pairs(path, "concept_id\tcategory")) out[id].insert(cat);
  return out;
}

SubcategoryPairs load_subcategories(const std::filesystem::path& path) {
  SubcategoryPairs out;
  for (auto& p : read_pairs(path, "child\tparent")) out.insert(p);
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "cosine of vectors of different length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

Categorization nearest_centroid_loocv(const ReprDataset& ds, const CategoryAssignment& cats) {
  const std::size_t dim = ds.table.dim;
  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& [id, cat] : cats.assignment) {
    auto row = ds.table.rows.find(id);
    if (row == ds.table.rows.end()) throw Error(ErrorCode::MissingRow, id);
    if (is_zero(row->second)) throw Error(ErrorCode::InvalidVector, "zero vector for " + id);
    auto& s = sums[cat];
    s.resize(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) s[j] += row->second[j];
    ++counts[cat];
  }
  for (const auto& [cat, n] : counts)
    if (n < 2) throw Error(ErrorCode::DegenerateCategory, "category '" + cat + "' has fewer than two members");
  if (counts.empty()) throw Error(ErrorCode::DegenerateCategory, "no categorized concepts");

  Categorization out;
  std::size_t correct = 0;
  std::vector<double> centroid(dim);
  for (const auto& [id, own] : cats.assignment) {
    const auto& x = ds.table.rows.at(id);
    double best = std::numeric_limits<double>::infinity();
    std::string best_cat;
    for (const auto& [cat, s] : sums) {  // lexicographic order; strict < keeps the first of equals
      const double n = static_cast<double>(counts[cat]);
      if (cat == own) {
        for (std::size_t j = 0; j < dim; ++j) centroid[j] = (s[j] - x[j]) / (n - 1.0);
      } else {
        for (std::size_t j = 0; j < dim; ++j) centroid[j] = s[j] / n;
      }
      const double d = cosine_distance(x, centroid);
      if (d < best) {
        best = d;
        best_cat = cat;
      }
    }
    if (best_cat == own) ++correct;
    out.predictions[id] = std::move(best_cat);
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(cats.assignment.size());
  return out;
}

std::string to_csv(const Categorization& result, const CategoryAssignment& cats) {
  std::string out = "concept_id,category,predicted,correct\n";
  for (const auto& [id, pred] : result.predictions) {
    const auto& truth = cats.assignment.at(id);
    out += id + "," + truth + "," + pred + "," + (pred == truth ? "1" : "0") + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_inputs(const Eigen::MatrixXd& X, const std::vector<bool>& y) {
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
  if (!X.allFinite()) throw Error(ErrorCode::NonFiniteInput, "design matrix has non-finite entries");
  const auto pos = std::count(y.begin(), y.end(), true);
  if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) throw Error(ErrorCode::OneClassOnly, "labels are constant");
}

}  // namespace

double LogisticModel::predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return sigmoid(weights.dot(x) + bias);
}

Eigen::VectorXd LogisticModel::predict_proba_rows(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd z = X * weights;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i] + bias);
  return z;
}

double logistic_objective(const Eigen::MatrixXd& X, const std::vector<bool>& y, const Eigen::VectorXd& w, double b,
                          double l2, Eigen::VectorXd* grad_w, double* grad_b) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd z = (X * w).array() + b;
  double loss = 0.0;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // -[y log p + (1-y) log(1-p)] = softplus(z) - y z
    loss += softplus(z[i]) - (y[i] ? z[i] : 0.0);
    residual[i] = sigmoid(z[i]) - (y[i] ? 1.0 : 0.0);
  }
  loss = loss / n + 0.5 * l2 * w.squaredNorm();
  if (grad_w) *grad_w = X.transpose() * residual / n + l2 * w;
  if (grad_b) *grad_b = residual.sum() / n;
  return loss;
}

LogisticModel train_logistic(const Eigen::MatrixXd& X, const std::vector<bool>& y, double l2, std::size_t max_iter,
                             double tol) {
  check_inputs(X, y);
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorCode::InvalidArgument, "l2 must be finite and >= 0");

  LogisticModel m;
  m.l2 = l2;
  m.weights = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd gw;
  double gb = 0.0;
  double f = logistic_objective(X, y, m.weights, m.bias, l2, &gw, &gb);
  m.loss_trace.push_back(f);
  double step = 1.0;
  for (; m.iterations_run < max_iter; ++m.iterations_run) {
    const double gmax = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
    if (gmax < tol) {
      m.converged = true;
      break;
    }
    const double gnorm2 = gw.squaredNorm() + gb * gb;
    step = std::min(step * 2.0, 1e6);
    Eigen::VectorXd w_new;
    double b_new = 0.0, f_new = 0.0;
    for (;;) {
      w_new = m.weights - step * gw;
      b_new = m.bias - step * gb;
      f_new = logistic_objective(X, y, w_new, b_new, l2);
      if (f_new <= f - 0.5 * step * gnorm2) break;
      step *= 0.5;
      if (step < 1e-20) break;
    }
    if (step < 1e-20) break;  // no descent possible at machine precision
    m.weights = std::move(w_new);
    m.bias = b_new;
    f = logistic_objective(X, y, m.weights, m.bias, l2, &gw, &gb);
    m.loss_trace.push_back(f);
  }
  if (!m.converged) {
    const double gmax = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
    m.converged = gmax < tol;
  }
  if (!m.weights.allFinite() || !std::isfinite(m.bias)) throw Error(ErrorCode::NonFiniteInput, "training diverged");
  return m;
}

std::vector<std::size_t> stratified_folds(const std::vector<bool>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  SplitMix64 pos_rng(derive_seed(seed, 1)), neg_rng(derive_seed(seed, 2));
  seeded_shuffle(std::span<std::size_t>(pos), pos_rng);
  seeded_shuffle(std::span<std::size_t>(neg), neg_rng);
  std::vector<std::size_t> fold(labels.size());
  std::size_t slot = 0;
  for (auto i : pos) fold[i] = slot++ % k;
  for (auto i : neg) fold[i] = slot++ % k;
  return fold;
}

DecodeResult decode_feature(const ReprDataset& ds, const corpus::FeatureNorm& feature, std::size_t k,
                            std::uint64_t seed, double l2, std::size_t max_iter) {
  std::vector<const std::vector<double>*> rows;
  std::vector<bool> labels;
  for (const auto& [id, has] : feature.values) {
    auto it = ds.table.rows.find(id);
    if (it == ds.table.rows.end()) throw Error(ErrorCode::MissingRow, id + " (feature " + feature.feature_id + ")");
    rows.push_back(&it->second);
    labels.push_back(has);
  }
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const auto neg = labels.size() - pos;
  if (pos < k || neg < k)
    throw Error(ErrorCode::TooFewExamples, feature.feature_id + ": " + std::to_string(pos) + " positives, " +
                                               std::to_string(neg) + " negatives, k = " + std::to_string(k));

  const auto dim = static_cast<Eigen::Index>(ds.table.dim);
  const auto fold = stratified_folds(labels, k, seed);
  DecodeResult out;
  out.feature_id = feature.feature_id;
  out.feature_type = feature.feature_type;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? test : train).push_back(i);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(train.size()), dim);
    std::vector<bool> y;
    for (std::size_t r = 0; r < train.size(); ++r) {
      X.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(rows[train[r]]->data(), dim);
      y.push_back(labels[train[r]]);
    }
    const auto model = train_logistic(X, y, l2, max_iter);
    std::vector<double> probs;
    std::vector<bool> truth, preds;
    for (auto i : test) {
      const double p = model.predict_proba(Eigen::Map<const Eigen::VectorXd>(rows[i]->data(), dim));
      probs.push_back(p);
      preds.push_back(p >= 0.5);
      truth.push_back(labels[i]);
    }
    out.per_fold.push_back({stats::f1(preds, truth), stats::auc(probs, truth)});
  }
  for (const auto& s : out.per_fold) {
    out.mean_f1 += s.f1;
    out.mean_auc += s.auc;
  }
  out.mean_f1 /= static_cast<double>(k);
  out.mean_auc /= static_cast<double>(k);
  return out;
}

DecodeBatch decode_features(const ReprDataset& ds, const corpus::FeatureNormSet& norms, std::size_t k,
                            std::uint64_t seed, double l2, std::size_t threads, std::size_t max_iter) {
  const auto n = norms.features.size();
  std::vector<std::optional<DecodeResult>> results(n);
  std::vector<std::string> reasons(n);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      results[i] = decode_feature(ds, norms.features[i], k, seed, l2, max_iter);
    } catch (const Error& e) {
      reasons[i] = e.what();
    }
  });
  DecodeBatch out;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) out.results.push_back(std::move(*results[i]));
    else out.skipped.emplace_back(norms.features[i].feature_id, reasons[i]);
  }
  return out;
}

std::string to_csv(const std::vector<DecodeResult>& results) {
  std::string out = "feature_id,feature_type,folds,mean_f1,mean_auc\n";
  for (const auto& r : results)
    out += r.feature_id + "," + std::string(corpus::to_string(r.feature_type)) + "," +
           std::to_string(r.per_fold.size()) + "," + fmt(r.mean_f1) + "," + fmt(r.mean_auc) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

Projection pca_project(const corpus::EmbeddingTable& table, std::size_t dims) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto d = static_cast<Eigen::Index>(table.dim);
  if (dims == 0) throw Error(ErrorCode::InvalidArgument, "dims must be positive");
  if (table.rows.size() <= dims)
    throw Error(ErrorCode::InsufficientData, "projection to " + std::to_string(dims) + " dimensions needs more than " +
                                                 std::to_string(dims) + " rows");
  Eigen::MatrixXd X(n, d);
  Eigen::Index r = 0;
  for (const auto& [id, values] : table.rows) X.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(values.data(), d);
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = (sv.size() > 0 ? sv[0] : 0.0) * 1e-12 * static_cast<double>(std::max(n, d));

  Projection out;
  const auto k = static_cast<Eigen::Index>(dims);
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(d, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    if (c >= sv.size() || sv[c] <= cutoff || sv[c] == 0.0) {
      out.rank_deficient = true;
      out.explained_variance.push_back(0.0);
      continue;
    }
    Eigen::VectorXd v = svd.matrixV().col(c);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j)
      if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    if (v[arg] < 0) v = -v;
    axes.col(c) = v;
    out.explained_variance.push_back(sv[c] * sv[c] / static_cast<double>(n - 1));
  }
  const Eigen::MatrixXd coords = X * axes;
  r = 0;
  for (const auto& [id, values] : table.rows) {
    std::vector<double> row(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) row[static_cast<std::size_t>(c)] = coords(r, c);
    out.coords[id] = std::move(row);
    ++r;
  }
  return out;
}

std::string to_csv(const Projection& p) {
  std::string out = "concept_id";
  const std::size_t k = p.explained_variance.size();
  for (std::size_t c = 0; c < k; ++c) out += ",pc" + std::to_string(c + 1);
  out += "\n";
  char buf[64];
  for (const auto& [id, row] : p.coords) {
    out += id;
    for (double v : row) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace revprobe::represent
