#pragma once

// Chat-completions client for the models under evaluation, with frozen
// prompt templates and greedy decoding.

#include "chartcycle/metrics.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace chartcycle {

/// A rendered chart as handed to a model. `content_key` identifies the
/// (spec, data) pair it was rendered from; `png` is empty when no renderer
/// is configured.
struct ChartImage {
  std::string png;
  std::string content_key;
};

struct ModelReply {
  std::string raw;        // model text as received
  std::string extracted;  // spec document, CSV, answer or VQL line
  std::vector<std::string> warnings;
};

/// The four lifecycle tasks plus the VQL variant. Implementations throw
/// TransportError, RateLimited or EmptyResponse.
class ChartModel {
 public:
  virtual ~ChartModel() = default;
  virtual ModelReply nl2chart(const nlohmann::ordered_json& table_info, const std::string& query) = 0;
  virtual ModelReply parse_schema(const ChartImage& image, const nlohmann::ordered_json& table_info) = 0;
  virtual ModelReply parse_data(const ChartImage& image, const std::string& spec_text) = 0;
  virtual ModelReply answer_qa(const ChartImage& image, const std::string& question) = 0;
  virtual ModelReply nl2vql(const nlohmann::ordered_json& table_info, const std::string& query) = 0;
  virtual std::string name() const = 0;
};

namespace prompts {
extern const char* const kNl2Chart;
extern const char* const kSchemaParsing;
extern const char* const kDataParsing;
extern const char* const kChartQA;
extern const char* const kNl2Vql;
extern const char* const kParaphrase;
}  // namespace prompts

struct ModelEndpoint {
  std::string name;
  std::string kind = "openai";  // "openai" or "oracle" (built-in mock)
  std::string base_url;  // e.g. https://host/v1; requests go to {base_url}/chat/completions
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the key
  int max_output_tokens = 2048;
  double temperature = 0.0;
  double top_p = 1.0;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::size_t concurrency = 4;
  // Minimum spacing between request starts; zero disables the limiter.
  std::chrono::milliseconds min_interval{0};

  static ModelEndpoint from_json(const std::string& name, const nlohmann::json& j);
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws TransportError when no response arrives.
  virtual HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                            std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib client; https URLs use OpenSSL.
class HttpTransport final : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                    std::chrono::milliseconds timeout) override;
};

/// Splits scheme://host[:port]/path into ("scheme://host[:port]", "/path").
/// Throws ConfigError.
std::pair<std::string, std::string> split_url(const std::string& url);

/// Byte-stable chat-completions payload: system prompt, then a user turn
/// whose content is the text part followed by the optional PNG data URI.
std::string build_chat_request(const ModelEndpoint& e, const std::string& system, const std::string& user_text,
                               const std::string* png);

/// choices[0].message.content as text. Throws EmptyResponse.
std::string parse_chat_response(const std::string& body);

/// First balanced JSON object in the text after code-fence removal.
/// Throws EmptyResponse.
std::string extract_spec_document(const std::string& text);
/// Removes surrounding code fences and whitespace. Throws EmptyResponse.
std::string extract_csv(const std::string& text);
/// First non-empty line; warns about dropped lines and lowercase keywords.
ModelReply extract_vql(const std::string& text);

class RemoteChartModel final : public ChartModel {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RemoteChartModel(ModelEndpoint endpoint, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  ModelReply nl2chart(const nlohmann::ordered_json& table_info, const std::string& query) override;
  ModelReply parse_schema(const ChartImage& image, const nlohmann::ordered_json& table_info) override;
  ModelReply parse_data(const ChartImage& image, const std::string& spec_text) override;
  ModelReply answer_qa(const ChartImage& image, const std::string& question) override;
  ModelReply nl2vql(const nlohmann::ordered_json& table_info, const std::string& query) override;
  std::string name() const override { return endpoint_.name; }

  /// Question paraphrase for the QA hook.
  std::string rewrite_question(const std::string& question);

  /// Sends one request with retries and returns the reply text.
  std::string complete(const std::string& system, const std::string& user_text, const std::string* png);

 private:
  void pace();

  ModelEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::mutex pace_mutex_;
  std::chrono::steady_clock::time_point next_start_{};
};

/// Embedder over POST {url} {"image": base64 PNG} -> {"embedding": [...]}.
class HttpImageEmbedder final : public ImageEmbedder {
 public:
  HttpImageEmbedder(std::string url, std::shared_ptr<Transport> transport,
                    std::chrono::milliseconds timeout = std::chrono::milliseconds(60000));
  std::vector<double> embed(const std::string& png) override;
  std::string describe() const override { return "http: " + url_; }

 private:
  std::string url_;
  std::shared_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
};

}  // namespace chartcycle
