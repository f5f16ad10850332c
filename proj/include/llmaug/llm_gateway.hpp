#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

namespace llmaug {

enum class BackendKind { HttpChat, ScriptedMock, EchoEvidenceMock };

const char* to_string(BackendKind kind);
/// Accepts "http", "scripted", "echo". Throws InvalidConfig.
BackendKind parse_backend_kind(const std::string& name);

struct BackendConfig {
  BackendKind kind = BackendKind::EchoEvidenceMock;
  // HttpChat
  std::string endpoint;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int max_concurrent = 4;
  double backoff_base_seconds = 1.0;
  // ScriptedMock
  std::vector<std::string> responses;

  /// Throws InvalidConfig when fields required by `kind` are missing.
  void validate() const;
};

struct LlmRequest {
  std::string prompt;
  int max_output_tokens = 512;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences = {};
};

/// FIFO mock. Throws InvalidInput on an empty list.
BackendConfig scripted_mock(std::vector<std::string> responses);
BackendConfig echo_evidence_mock();
BackendConfig http_chat(std::string endpoint, std::string model, std::string api_key_env = "OPENAI_API_KEY");

/// Reply of the echo mock when the prompt carries no working memory.
inline constexpr const char* kEchoFallback = "No knowledge is available to answer this.";

/// Text between "Working Memory:" and the next line starting with
/// "Context:" or "Question:", trimmed. nullopt when there is no memory block.
std::optional<std::string> extract_working_memory(const std::string& prompt);

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// One POST. Returns nullopt on a transport failure (connect error,
/// timeout).
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual std::optional<HttpResponse> post(const std::string& url, const std::string& body,
                                           const HttpHeaders& headers, double timeout_seconds) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// The single entry point to the black-box LLM. Thread-safe.
class Gateway {
 public:
  explicit Gateway(BackendConfig config, std::shared_ptr<HttpTransport> transport = nullptr, Sleeper sleeper = {},
                   std::uint64_t jitter_seed = 0);

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  std::string complete(const LlmRequest& request);

  const BackendConfig& config() const { return config_; }
  std::size_t remaining_script() const;

 private:
  std::string complete_http(const LlmRequest& request);
  std::string pop_script();

  BackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  mutable std::mutex mu_;
  std::deque<std::string> script_;
  std::mt19937_64 jitter_rng_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

/// Request body in the chat-completions wire format.
std::string chat_request_body(const BackendConfig& config, const LlmRequest& request);
/// choices[0].message.content. Throws Backend on a malformed body.
std::string parse_chat_response(const std::string& body);

}  // namespace llmaug
