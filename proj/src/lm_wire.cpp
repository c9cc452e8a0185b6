#include <openssl/evp.h>

#include <cmath>
#include <initializer_list>
#include <memory>
#include <stdexcept>

#include "revprobe/error.hpp"
#include "revprobe/lmclient.hpp"

namespace revprobe::lm {

using nlohmann::json;

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::http: return "http";
    case BackendKind::replay: return "replay";
    case BackendKind::oracle: return "oracle";
  }
  return "oracle";
}

void DecodingParams::validate() const {
  if (max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "top_p must lie in (0, 1]");
  if (!(repetition_penalty > 0.0)) throw Error(ErrorCode::InvalidArgument, "repetition_penalty must be > 0");
}

void BackendDescriptor::validate() const {
  if (kind == BackendKind::http && (!endpoint || endpoint->empty()))
    throw Error(ErrorCode::ConfigInvalid, "http backend requires an endpoint");
  if (hidden_size == 0 || max_context == 0)
    throw Error(ErrorCode::ConfigInvalid, "hidden_size and max_context must be positive");
}

BackendInfo Backend::info() {
  const auto& d = descriptor();
  return BackendInfo{d.id, d.hidden_size, d.max_context};
}

std::optional<std::size_t> find_stop(std::string_view text, const std::vector<std::string>& stop) {
  std::optional<std::size_t> cut;
  for (const auto& s : stop) {
    if (s.empty()) continue;
    if (auto pos = text.find(s); pos != std::string_view::npos) {
      const auto end = pos + s.size();
      if (!cut || end < *cut) cut = end;
    }
  }
  return cut;
}

namespace {

std::string digest_hex(std::initializer_list<std::string_view> parts) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  const char nul = '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  bool first = true;
  for (auto part : parts) {
    if (!first && EVP_DigestUpdate(ctx.get(), &nul, 1) != 1) throw std::runtime_error("SHA-256 computation failed");
    if (EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1)
      throw std::runtime_error("SHA-256 computation failed");
    first = false;
  }
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw std::runtime_error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) { return digest_hex({data}); }

std::string cache_key(std::string_view backend_id, std::string_view endpoint_name, std::string_view payload) {
  return digest_hex({backend_id, endpoint_name, payload});
}

namespace wire {

namespace {

[[noreturn]] void schema_fail(const std::string& what, const json& j) {
  auto body = j.dump();
  if (body.size() > 200) body = body.substr(0, 200) + "...";
  throw Error(ErrorCode::ProtocolError, what + " in " + body);
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) schema_fail(std::string("missing field '") + name + "'", j);
  return j.at(name);
}

double finite_number(const json& v, const json& whole, const char* name) {
  if (!v.is_number()) schema_fail(std::string("field '") + name + "' is not a number", whole);
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_fail(std::string("field '") + name + "' is not finite", whole);
  return d;
}

}  // namespace

json generate_request(std::string_view prompt, const DecodingParams& p) {
  return json{{"prompt", prompt},
              {"max_tokens", p.max_tokens},
              {"temperature", p.temperature},
              {"top_p", p.top_p},
              {"repetition_penalty", p.repetition_penalty},
              {"seed", p.seed},
              {"stop", p.stop},
              {"mode", p.mode == DecodingMode::greedy ? "greedy" : "sample"}};
}

json score_request(std::string_view prompt, std::string_view continuation) {
  return json{{"prompt", prompt}, {"continuation", continuation}};
}

json hidden_request(std::string_view prompt) { return json{{"prompt", prompt}}; }

DecodingParams decoding_params_from(const json& r) {
  DecodingParams p;
  try {
    p.max_tokens = r.value("max_tokens", p.max_tokens);
    p.temperature = r.value("temperature", p.temperature);
    p.top_p = r.value("top_p", p.top_p);
    p.repetition_penalty = r.value("repetition_penalty", p.repetition_penalty);
    p.seed = r.value("seed", p.seed);
    p.stop = r.value("stop", std::vector<std::string>{});
    const auto mode = r.value("mode", std::string("greedy"));
    if (mode != "greedy" && mode != "sample") throw Error(ErrorCode::InvalidArgument, "mode must be greedy|sample");
    p.mode = mode == "greedy" ? DecodingMode::greedy : DecodingMode::sample;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, e.what());
  }
  p.validate();
  return p;
}

json to_json(const GenerationResult& r) {
  json tokens = json::array();
  for (const auto& t : r.tokens) tokens.push_back({{"text", t.text}, {"logprob", t.logprob}});
  return json{{"text", r.text}, {"tokens", tokens}, {"finish", r.finish == FinishReason::stop ? "stop" : "length"}};
}

json to_json(const ScoreResult& r) { return json{{"total", r.total}, {"per_token", r.per_token}}; }

json to_json(const HiddenVector& r) {
  return json{{"vector", r.values}, {"layer", r.layer}, {"position", r.position}};
}

json to_json(const BackendInfo& r) {
  return json{{"model_id", r.model_id}, {"hidden_size", r.hidden_size}, {"max_context", r.max_context}};
}

GenerationResult parse_generation(const json& j) {
  GenerationResult r;
  const auto& text = field(j, "text");
  if (!text.is_string()) schema_fail("'text' is not a string", j);
  r.text = text.get<std::string>();
  const auto& tokens = field(j, "tokens");
  if (!tokens.is_array()) schema_fail("'tokens' is not an array", j);
  std::string joined;
  for (const auto& t : tokens) {
    const auto& tt = field(t, "text");
    if (!tt.is_string()) schema_fail("token text is not a string", j);
    TokenLogprob tok{tt.get<std::string>(), finite_number(field(t, "logprob"), j, "logprob")};
    if (tok.logprob > 0.0) schema_fail("positive logprob", j);
    joined += tok.text;
    r.tokens.push_back(std::move(tok));
  }
  if (joined != r.text) schema_fail("token texts do not concatenate to 'text'", j);
  const auto& finish = field(j, "finish");
  if (finish == "stop") {
    r.finish = FinishReason::stop;
  } else if (finish == "length") {
    r.finish = FinishReason::length;
  } else {
    schema_fail("'finish' must be stop|length", j);
  }
  return r;
}

ScoreResult parse_score(const json& j) {
  ScoreResult r;
  r.total = finite_number(field(j, "total"), j, "total");
  const auto& per = field(j, "per_token");
  if (!per.is_array()) schema_fail("'per_token' is not an array", j);
  double sum = 0.0;
  for (const auto& v : per) {
    r.per_token.push_back(finite_number(v, j, "per_token"));
    sum += r.per_token.back();
  }
  if (std::abs(sum - r.total) > 1e-6 * std::max(1.0, std::abs(r.total)))
    schema_fail("'total' differs from the sum of 'per_token'", j);
  return r;
}

HiddenVector parse_hidden(const json& j) {
  HiddenVector r;
  const auto& vec = field(j, "vector");
  if (!vec.is_array() || vec.empty()) schema_fail("'vector' is not a nonempty array", j);
  for (const auto& v : vec) r.values.push_back(finite_number(v, j, "vector"));
  if (j.contains("layer")) r.layer = j["layer"].get<std::string>();
  if (j.contains("position")) r.position = j["position"].get<std::string>();
  return r;
}

BackendInfo parse_info(const json& j) {
  BackendInfo r;
  const auto& id = field(j, "model_id");
  const auto& hs = field(j, "hidden_size");
  const auto& mc = field(j, "max_context");
  if (!id.is_string() || !hs.is_number_integer() || !mc.is_number_integer() || hs.get<long long>() < 1 ||
      mc.get<long long>() < 1)
    schema_fail("bad /v1/info payload", j);
  r.model_id = id.get<std::string>();
  r.hidden_size = hs.get<std::size_t>();
  r.max_context = mc.get<std::size_t>();
  return r;
}

std::string canonical(const json& j) { return j.dump(); }

}  // namespace wire
}  // namespace revprobe::lm
