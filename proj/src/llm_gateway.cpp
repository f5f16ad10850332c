#include "llmaug/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "llmaug/error.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

using json = nlohmann::json;

const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::HttpChat: return "http";
    case BackendKind::ScriptedMock: return "scripted";
    case BackendKind::EchoEvidenceMock: return "echo";
  }
  return "unknown";
}

BackendKind parse_backend_kind(const std::string& name) {
  if (name == "http") return BackendKind::HttpChat;
  if (name == "scripted") return BackendKind::ScriptedMock;
  if (name == "echo") return BackendKind::EchoEvidenceMock;
  throw Error(ErrorKind::InvalidConfig, "unknown backend '" + name + "'");
}

void BackendConfig::validate() const {
  if (timeout_seconds <= 0.0) throw Error(ErrorKind::InvalidConfig, "timeout must be positive");
  if (max_retries < 0) throw Error(ErrorKind::InvalidConfig, "max retries must be non-negative");
  if (max_concurrent < 1 || max_concurrent > 1024) {
    throw Error(ErrorKind::InvalidConfig, "concurrent request cap must lie in [1, 1024]");
  }
  if (kind == BackendKind::HttpChat) {
    if (endpoint.empty()) throw Error(ErrorKind::InvalidConfig, "http backend needs an endpoint");
    if (model.empty()) throw Error(ErrorKind::InvalidConfig, "http backend needs a model name");
  }
}

BackendConfig scripted_mock(std::vector<std::string> responses) {
  if (responses.empty()) throw Error(ErrorKind::InvalidInput, "scripted mock needs at least one response");
  BackendConfig config;
  config.kind = BackendKind::ScriptedMock;
  config.responses = std::move(responses);
  return config;
}

BackendConfig echo_evidence_mock() {
  BackendConfig config;
  config.kind = BackendKind::EchoEvidenceMock;
  return config;
}

BackendConfig http_chat(std::string endpoint, std::string model, std::string api_key_env) {
  BackendConfig config;
  config.kind = BackendKind::HttpChat;
  config.endpoint = std::move(endpoint);
  config.model = std::move(model);
  config.api_key_env = std::move(api_key_env);
  return config;
}

std::optional<std::string> extract_working_memory(const std::string& prompt) {
  static constexpr std::string_view kMarker = "Working Memory:";
  const auto start = prompt.find(kMarker);
  if (start == std::string::npos) return std::nullopt;
  const auto body = start + kMarker.size();
  const auto end = std::min(prompt.find("\nContext:", body), prompt.find("\nQuestion:", body));
  return trim(std::string_view(prompt).substr(body, end == std::string::npos ? std::string::npos : end - body));
}

std::string chat_request_body(const BackendConfig& config, const LlmRequest& request) {
  json body = {
      {"model", config.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
  };
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  try {
    const auto parsed = json::parse(body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Backend, std::string("malformed chat response: ") + e.what());
  }
}

Gateway::Gateway(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper,
                 std::uint64_t jitter_seed)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      script_(config_.responses.begin(), config_.responses.end()),
      jitter_rng_(jitter_seed) {
  config_.validate();
  if (!sleeper_) {
    sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }
  if (config_.kind == BackendKind::HttpChat) {
    if (!transport_) transport_ = make_http_transport();
    slots_ = std::make_unique<std::counting_semaphore<1024>>(config_.max_concurrent);
  }
}

std::size_t Gateway::remaining_script() const {
  std::lock_guard lock(mu_);
  return script_.size();
}

std::string Gateway::pop_script() {
  std::lock_guard lock(mu_);
  if (script_.empty()) throw Error(ErrorKind::MockExhausted, "scripted mock has no responses left");
  auto out = std::move(script_.front());
  script_.pop_front();
  return out;
}

std::string Gateway::complete(const LlmRequest& request) {
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
    throw Error(ErrorKind::InvalidInput, "temperature must lie in [0, 2]");
  }
  if (request.max_output_tokens <= 0) throw Error(ErrorKind::InvalidInput, "max_output_tokens must be positive");
  switch (config_.kind) {
    case BackendKind::ScriptedMock: return pop_script();
    case BackendKind::EchoEvidenceMock: return extract_working_memory(request.prompt).value_or(kEchoFallback);
    case BackendKind::HttpChat: return complete_http(request);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown backend kind");
}

std::string Gateway::complete_http(const LlmRequest& request) {
  HttpHeaders headers = {{"Content-Type", "application/json"}};
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  const auto body = chat_request_body(config_, request);

  struct SlotGuard {
    std::counting_semaphore<1024>& s;
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
  } guard(*slots_);

  bool last_rate_limited = false;
  std::string last_error;
  const int attempts = config_.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      double jitter = 0.0;
      {
        std::lock_guard lock(mu_);
        jitter = std::uniform_real_distribution<double>(0.0, 0.25)(jitter_rng_);
      }
      const double delay = config_.backoff_base_seconds * std::pow(2.0, attempt - 1) * (1.0 + jitter);
      sleeper_(std::chrono::duration<double>(delay));
    }
    const auto response = transport_->post(config_.endpoint, body, headers, config_.timeout_seconds);
    if (!response) {
      last_rate_limited = false;
      last_error = "request timed out or failed to connect";
      continue;
    }
    if (response->status == 429) {
      last_rate_limited = true;
      last_error = "rate limited (HTTP 429)";
      continue;
    }
    if (response->status >= 500) {
      last_rate_limited = false;
      last_error = "server error (HTTP " + std::to_string(response->status) + ")";
      continue;
    }
    if (response->status < 200 || response->status >= 300) {
      throw Error(ErrorKind::Backend, "HTTP " + std::to_string(response->status) + ": " + response->body);
    }
    return parse_chat_response(response->body);
  }
  const auto summary = last_error + " after " + std::to_string(attempts) + " attempts";
  if (last_rate_limited) throw Error(ErrorKind::RateLimited, summary);
  throw Error(ErrorKind::BackendUnavailable, summary);
}

}  // namespace llmaug
