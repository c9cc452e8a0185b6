#include <httplib.h>

#include <cmath>
#include <thread>

#include "revprobe/error.hpp"
#include "revprobe/lmclient.hpp"

namespace revprobe::lm {

using nlohmann::json;

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "endpoint '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  auto base = url.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {url.substr(0, path_start), base};
}

[[noreturn]] void raise_for_status(int status, const std::string& body) {
  std::string message = body;
  try {
    auto j = json::parse(body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) message = j["error"].get<std::string>();
  } catch (const json::exception&) {
  }
  if (status == 422) throw Error(ErrorCode::ContextOverflow, message);
  throw Error(ErrorCode::ProtocolError, "HTTP " + std::to_string(status) + ": " + message);
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

HttpBackend::HttpBackend(std::string endpoint, std::string id, double timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
  std::tie(scheme_host_port_, base_path_) = split_url(endpoint);
  descriptor_.kind = BackendKind::http;
  descriptor_.endpoint = endpoint;
  const auto info = wire::parse_info(get("/v1/info"));
  descriptor_.id = id.empty() ? info.model_id : std::move(id);
  descriptor_.hidden_size = info.hidden_size;
  descriptor_.max_context = info.max_context;
  descriptor_.validate();
}

json HttpBackend::get(std::string_view path) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  auto res = client.Get(base_path_ + std::string(path));
  if (!res) throw Error(ErrorCode::BackendUnreachable, scheme_host_port_ + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) raise_for_status(res->status, res->body);
  return parse_body(res->body);
}

json HttpBackend::post(std::string_view path, const json& body) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  auto res = client.Post(base_path_ + std::string(path), body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::BackendUnreachable, scheme_host_port_ + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) raise_for_status(res->status, res->body);
  return parse_body(res->body);
}

BackendInfo HttpBackend::info() { return wire::parse_info(get("/v1/info")); }

GenerationResult HttpBackend::generate(std::string_view prompt, const DecodingParams& params) {
  params.validate();
  return wire::parse_generation(post("/v1/generate", wire::generate_request(prompt, params)));
}

ScoreResult HttpBackend::score_continuation(std::string_view prompt, std::string_view continuation) {
  return wire::parse_score(post("/v1/score", wire::score_request(prompt, continuation)));
}

HiddenVector HttpBackend::final_hidden(std::string_view prompt) {
  auto h = wire::parse_hidden(post("/v1/hidden", wire::hidden_request(prompt)));
  if (h.values.size() != descriptor_.hidden_size)
    throw Error(ErrorCode::ProtocolError, "hidden vector has " + std::to_string(h.values.size()) +
                                              " components, server declared " +
                                              std::to_string(descriptor_.hidden_size));
  return h;
}

// ---------------------------------------------------------------------------

struct ProtocolServer::Impl {
  std::shared_ptr<Backend> backend;
  httplib::Server server;
  std::thread thread;
};

namespace {

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

template <typename Handler>
void handle(const httplib::Request& req, httplib::Response& res, Handler&& handler) {
  try {
    json body = req.body.empty() ? json::object() : json::parse(req.body);
    res.set_content(handler(body).dump(), "application/json");
  } catch (const json::exception& e) {
    reply_error(res, 400, e.what());
  } catch (const Error& e) {
    const int status = e.code() == ErrorCode::ContextOverflow        ? 422
                       : e.code() == ErrorCode::UnsupportedByBackend ? 501
                                                                     : 400;
    reply_error(res, status, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

ProtocolServer::ProtocolServer(std::shared_ptr<Backend> backend) : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  auto& srv = impl_->server;
  auto* be = impl_->backend.get();
  srv.Get("/v1/info", [be](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [be](const json&) { return wire::to_json(be->info()); });
  });
  srv.Post("/v1/generate", [be](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [be](const json& body) {
      return wire::to_json(be->generate(body.at("prompt").get<std::string>(), wire::decoding_params_from(body)));
    });
  });
  srv.Post("/v1/score", [be](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [be](const json& body) {
      return wire::to_json(be->score_continuation(body.at("prompt").get<std::string>(),
                                                  body.at("continuation").get<std::string>()));
    });
  });
  srv.Post("/v1/hidden", [be](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [be](const json& body) { return wire::to_json(be->final_hidden(body.at("prompt").get<std::string>())); });
  });
}

ProtocolServer::~ProtocolServer() { stop(); }

int ProtocolServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::BackendUnreachable, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void ProtocolServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw Error(ErrorCode::BackendUnreachable, "cannot listen on " + host + ":" + std::to_string(port));
}

void ProtocolServer::stop() {
  if (!impl_) return;
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---------------------------------------------------------------------------

std::vector<ConformanceCheck> verify_backend(const std::string& url, double tolerance) {
  std::vector<ConformanceCheck> checks;
  auto record = [&](std::string name, auto&& body) {
    ConformanceCheck c{std::move(name), false, {}};
    try {
      c.detail = body();
      c.passed = true;
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    checks.push_back(std::move(c));
    return checks.back().passed;
  };

  std::unique_ptr<HttpBackend> backend;
  if (!record("info schema", [&] {
        backend = std::make_unique<HttpBackend>(url);
        const auto& d = backend->descriptor();
        return "model_id=" + d.id + " hidden_size=" + std::to_string(d.hidden_size);
      }))
    return checks;

  const std::string prompt = "A domesticated descendant of the wolf. ⇒ dog\na small very thin pancake ⇒";
  DecodingParams params;
  params.max_tokens = 8;
  params.stop = {"\n"};

  GenerationResult first;
  const bool generated = record("generate schema", [&] {
    first = backend->generate(prompt, params);
    return "text=" + json(first.text).dump();
  });
  if (generated) {
    record("greedy determinism", [&] {
      auto second = backend->generate(prompt, params);
      if (!(second == first)) throw std::runtime_error("two greedy generations differ");
      return std::string("identical");
    });
    record("score/generate consistency", [&] {
      if (first.text.empty()) throw std::runtime_error("greedy generation was empty");
      double generated_sum = 0.0;
      for (const auto& t : first.tokens) generated_sum += t.logprob;
      auto scored = backend->score_continuation(prompt, first.text);
      const double diff = std::abs(scored.total - generated_sum);
      if (diff > tolerance)
        throw std::runtime_error("score total " + std::to_string(scored.total) + " vs generated " +
                                 std::to_string(generated_sum));
      return "|diff|=" + std::to_string(diff);
    });
  }
  record("score schema", [&] {
    auto s = backend->score_continuation(std::string(kBosSentinel), "The cat sleeps.");
    return "total=" + std::to_string(s.total);
  });
  record("hidden size", [&] {
    auto h = backend->final_hidden(prompt);
    return "length=" + std::to_string(h.values.size());
  });
  record("error object", [&] {
    try {
      backend->post("/v1/generate", json{{"max_tokens", 0}});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProtocolError || e.code() == ErrorCode::ContextOverflow)
        return std::string("rejected with error object");
      throw;
    }
    throw std::runtime_error("malformed request was accepted");
  });
  return checks;
}

}  // namespace revprobe::lm
