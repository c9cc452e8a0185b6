#include <filesystem>
#include <fstream>

#include "revprobe/error.hpp"
#include "revprobe/lmclient.hpp"
#include "revprobe/text.hpp"

namespace revprobe::lm {

using nlohmann::json;

ReplayBackend::ReplayBackend(const std::filesystem::path& fixture, std::string id, std::size_t hidden_size) {
  std::ifstream in(fixture, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, fixture.string());
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::replay;
  descriptor_.hidden_size = hidden_size;

  bool hidden_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      const auto endpoint = rec.at("endpoint").get<std::string>();
      if (endpoint != "generate" && endpoint != "score" && endpoint != "hidden")
        throw Error(ErrorCode::ParseError, "unknown endpoint '" + endpoint + "'");
      auto response = rec.at("response");
      if (endpoint == "hidden" && !hidden_seen) {
        descriptor_.hidden_size = wire::parse_hidden(response).values.size();
        hidden_seen = true;
      }
      responses_[{endpoint, wire::canonical(rec.at("request"))}] = std::move(response);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, fixture.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const json* ReplayBackend::find(std::string_view endpoint, const json& request) const {
  auto it = responses_.find({std::string(endpoint), wire::canonical(request)});
  return it == responses_.end() ? nullptr : &it->second;
}

GenerationResult ReplayBackend::generate(std::string_view prompt, const DecodingParams& params) {
  const auto* r = find("generate", wire::generate_request(prompt, params));
  if (!r) throw Error(ErrorCode::UnsupportedByBackend, "no recorded generation for this request");
  return wire::parse_generation(*r);
}

ScoreResult ReplayBackend::score_continuation(std::string_view prompt, std::string_view continuation) {
  const auto* r = find("score", wire::score_request(prompt, continuation));
  if (!r) throw Error(ErrorCode::UnsupportedByBackend, "no recorded score for this request");
  return wire::parse_score(*r);
}

HiddenVector ReplayBackend::final_hidden(std::string_view prompt) {
  const auto* r = find("hidden", wire::hidden_request(prompt));
  if (!r) throw Error(ErrorCode::UnsupportedByBackend, "no recorded hidden vector for this prompt");
  auto h = wire::parse_hidden(*r);
  if (h.values.size() != descriptor_.hidden_size)
    throw Error(ErrorCode::ProtocolError, "recorded hidden vector has the wrong length");
  return h;
}

// ---------------------------------------------------------------------------

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir)
    : inner_(std::move(inner)) {
  std::filesystem::create_directories(dir);
  auto name = inner_->descriptor().id;
  for (auto& c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  store_ = dir / (name + ".jsonl");
  std::ifstream in(store_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      entries_[rec.at("key").get<std::string>()] = rec.at("response");
    } catch (const json::exception&) {
      // A torn final line from an interrupted append is ignored.
    }
  }
}

template <typename Compute>
json CachingBackend::lookup_or_compute(std::string_view endpoint, const json& request, Compute&& compute) {
  const auto key = cache_key(inner_->descriptor().id, endpoint, wire::canonical(request));
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  // Round-trip through text so a miss returns exactly what a later hit will.
  json response = json::parse(compute().dump());
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, response);
  if (inserted) {
    json rec{{"key", key}, {"endpoint", endpoint}, {"request", request}, {"response", response}};
    std::ofstream out(store_, std::ios::binary | std::ios::app);
    out << rec.dump() << '\n';
  }
  return it->second;
}

GenerationResult CachingBackend::generate(std::string_view prompt, const DecodingParams& params) {
  return wire::parse_generation(lookup_or_compute("generate", wire::generate_request(prompt, params), [&] {
    return wire::to_json(inner_->generate(prompt, params));
  }));
}

ScoreResult CachingBackend::score_continuation(std::string_view prompt, std::string_view continuation) {
  return wire::parse_score(lookup_or_compute("score", wire::score_request(prompt, continuation), [&] {
    return wire::to_json(inner_->score_continuation(prompt, continuation));
  }));
}

HiddenVector CachingBackend::final_hidden(std::string_view prompt) {
  return wire::parse_hidden(lookup_or_compute("hidden", wire::hidden_request(prompt), [&] {
    return wire::to_json(inner_->final_hidden(prompt));
  }));
}

}  // namespace revprobe::lm
