#include "chartcycle/model_client.hpp"

#include "chartcycle/error.hpp"
#include "chartcycle/text.hpp"
#include "chartcycle/util.hpp"

#include <cctype>
#include <cstdlib>
#include <set>
#include <thread>

namespace chartcycle {

using OJson = nlohmann::ordered_json;

ModelEndpoint ModelEndpoint::from_json(const std::string& name, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("endpoint '" + name + "' must be an object");
  static const std::set<std::string> known = {"kind",        "base_url",     "model",      "api_key_env",
                                              "max_tokens",  "temperature",  "top_p",      "timeout_s",
                                              "max_retries", "backoff_ms",   "concurrency", "min_interval_ms"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("endpoint '" + name + "': unknown key '" + k + "'");
  ModelEndpoint e;
  e.name = name;
  try {
    e.kind = j.value("kind", e.kind);
    e.base_url = j.value("base_url", "");
    e.model = j.value("model", "");
    e.api_key_env = j.value("api_key_env", "");
    e.max_output_tokens = j.value("max_tokens", e.max_output_tokens);
    e.temperature = j.value("temperature", e.temperature);
    e.top_p = j.value("top_p", e.top_p);
    e.timeout = std::chrono::milliseconds(static_cast<long long>(j.value("timeout_s", 120.0) * 1000));
    e.max_retries = j.value("max_retries", e.max_retries);
    e.backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
    e.concurrency = j.value("concurrency", e.concurrency);
    e.min_interval = std::chrono::milliseconds(j.value("min_interval_ms", 0));
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("endpoint '" + name + "': " + ex.what());
  }
  if (e.kind != "openai" && e.kind != "oracle") throw ConfigError("endpoint '" + name + "': unknown kind " + e.kind);
  if (e.kind == "openai" && (e.base_url.empty() || e.model.empty()))
    throw ConfigError("endpoint '" + name + "' needs base_url and model");
  if (e.max_retries < 0 || e.max_output_tokens <= 0 || e.concurrency == 0)
    throw ConfigError("endpoint '" + name + "': retries, tokens and concurrency must be positive");
  return e;
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || scheme == 0) throw ConfigError("not an absolute URL: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  if (path == scheme + 3) throw ConfigError("URL has no host: " + url);
  return {url.substr(0, path), url.substr(path)};
}

std::string build_chat_request(const ModelEndpoint& e, const std::string& system, const std::string& user_text,
                               const std::string* png) {
  OJson content = OJson::array();
  content.push_back({{"type", "text"}, {"text", user_text}});
  if (png)
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(*png)}}}});
  OJson body;
  body["model"] = e.model;
  body["messages"] = OJson::array({OJson{{"role", "system"}, {"content", system}},
                                   OJson{{"role", "user"}, {"content", std::move(content)}}});
  body["temperature"] = e.temperature;
  body["top_p"] = e.top_p;
  body["max_tokens"] = e.max_output_tokens;
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  OJson j;
  try {
    j = OJson::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw TransportError("response body is not JSON");
  }
  const OJson* content = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const OJson& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content")) content = &c["message"]["content"];
  }
  std::string text;
  if (content && content->is_string()) {
    text = content->get<std::string>();
  } else if (content && content->is_array()) {
    for (const auto& part : *content)
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
  }
  if (text::trim(text).empty()) throw EmptyResponse("model returned no text");
  return text;
}

namespace {

// Body of the first fenced block, or the whole text when unfenced.
std::string strip_fences(const std::string& text) {
  const auto open = text.find("```");
  if (open == std::string::npos) return text;
  auto start = text.find('\n', open);
  if (start == std::string::npos) return {};
  ++start;
  const auto close = text.find("```", start);
  return text.substr(start, close == std::string::npos ? std::string::npos : close - start);
}

// End (exclusive) of the balanced object starting at `open`, or npos.
std::size_t balanced_end(const std::string& s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

std::string first_object(const std::string& s) {
  for (auto open = s.find('{'); open != std::string::npos; open = s.find('{', open + 1)) {
    const auto end = balanced_end(s, open);
    if (end == std::string::npos) continue;
    std::string candidate = s.substr(open, end - open);
    if (nlohmann::json::accept(candidate)) return candidate;
  }
  return {};
}

}  // namespace

std::string extract_spec_document(const std::string& text) {
  std::string doc = first_object(strip_fences(text));
  if (doc.empty()) doc = first_object(text);
  if (doc.empty()) throw EmptyResponse("no JSON object in model reply");
  return doc;
}

std::string extract_csv(const std::string& text) {
  std::string csv(text::trim(strip_fences(text)));
  if (csv.empty()) throw EmptyResponse("no table in model reply");
  return csv;
}

ModelReply extract_vql(const std::string& text) {
  ModelReply r;
  r.raw = text;
  const auto lines = text::split_lines(strip_fences(text));
  std::size_t kept = 0;
  for (const auto& line : lines) {
    const std::string t(text::trim(line));
    if (t.empty()) continue;
    if (kept++ == 0) r.extracted = t;
  }
  if (r.extracted.empty()) throw EmptyResponse("no VQL line in model reply");
  if (kept > 1) r.warnings.push_back("multi-line reply; kept the first line");
  static const std::set<std::string> keywords = {"SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER",
                                                 "LIMIT",  "ASC",  "DESC",  "AND",   "OR", "BIN"};
  const auto tokens = text::split_whitespace(r.extracted);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string upper = tokens[i];
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const bool is_mark = i == 1 && text::to_lower(tokens[0]) == "visualize";
    if ((keywords.count(upper) || is_mark) && upper != tokens[i])
      r.warnings.push_back("keyword not uppercase: " + tokens[i]);
  }
  if (tokens.empty() || text::to_lower(tokens[0]) != "visualize")
    r.warnings.push_back("statement does not start with Visualize");
  return r;
}

RemoteChartModel::RemoteChartModel(ModelEndpoint endpoint, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!transport_) throw ConfigError("model endpoint '" + endpoint_.name + "' has no transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void RemoteChartModel::pace() {
  if (endpoint_.min_interval.count() <= 0) return;
  std::chrono::steady_clock::time_point start;
  {
    std::lock_guard lock(pace_mutex_);
    start = std::max(std::chrono::steady_clock::now(), next_start_);
    next_start_ = start + endpoint_.min_interval;
  }
  const auto wait = start - std::chrono::steady_clock::now();
  if (wait.count() > 0) sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(wait));
}

std::string RemoteChartModel::complete(const std::string& system, const std::string& user_text,
                                       const std::string* png) {
  Headers headers = {{"Content-Type", "application/json"}};
  if (!endpoint_.api_key_env.empty()) {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + endpoint_.api_key_env + " is not set");
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const std::string body = build_chat_request(endpoint_, system, user_text, png);
  const std::string url = endpoint_.base_url + "/chat/completions";

  for (int attempt = 0;; ++attempt) {
    pace();
    bool retryable = false;
    std::string failure;
    bool limited = false;
    try {
      const HttpResponse resp = transport_->post(url, body, headers, endpoint_.timeout);
      if (resp.status == 200) return parse_chat_response(resp.body);
      failure = "HTTP " + std::to_string(resp.status);
      limited = resp.status == 429;
      retryable = limited || resp.status >= 500;
    } catch (const TransportError& e) {
      failure = e.what();
      retryable = true;
    }
    if (!retryable || attempt >= endpoint_.max_retries) {
      const std::string msg = endpoint_.name + ": " + failure + " after " + std::to_string(attempt + 1) + " attempt(s)";
      if (limited) throw RateLimited(msg);
      throw TransportError(msg);
    }
    sleeper_(endpoint_.backoff * (1LL << attempt));
  }
}

namespace {

const std::string& require_image(const ChartImage& image) {
  if (image.png.empty()) throw TransportError("no chart image to attach");
  return image.png;
}

std::string query_text(const OJson& table_info, const std::string& query) {
  return "Natural language query: " + query + "\nTable info:\n" + table_info.dump(2);
}

}  // namespace

ModelReply RemoteChartModel::nl2chart(const OJson& table_info, const std::string& query) {
  ModelReply r;
  r.raw = complete(prompts::kNl2Chart, query_text(table_info, query), nullptr);
  r.extracted = extract_spec_document(r.raw);
  return r;
}

ModelReply RemoteChartModel::parse_schema(const ChartImage& image, const OJson& table_info) {
  ModelReply r;
  r.raw = complete(prompts::kSchemaParsing, "Table info:\n" + table_info.dump(2), &require_image(image));
  r.extracted = extract_spec_document(r.raw);
  return r;
}

ModelReply RemoteChartModel::parse_data(const ChartImage& image, const std::string& spec_text) {
  ModelReply r;
  r.raw = complete(prompts::kDataParsing, "Vega-Lite spec:\n" + spec_text, &require_image(image));
  r.extracted = extract_csv(r.raw);
  return r;
}

ModelReply RemoteChartModel::answer_qa(const ChartImage& image, const std::string& question) {
  ModelReply r;
  r.raw = complete(prompts::kChartQA, "Question: " + question, &require_image(image));
  r.extracted = std::string(text::trim(strip_fences(r.raw)));
  if (r.extracted.empty()) throw EmptyResponse("no answer in model reply");
  return r;
}

ModelReply RemoteChartModel::nl2vql(const OJson& table_info, const std::string& query) {
  return extract_vql(complete(prompts::kNl2Vql, query_text(table_info, query), nullptr));
}

std::string RemoteChartModel::rewrite_question(const std::string& question) {
  return std::string(text::trim(complete(prompts::kParaphrase, question, nullptr)));
}

HttpImageEmbedder::HttpImageEmbedder(std::string url, std::shared_ptr<Transport> transport,
                                     std::chrono::milliseconds timeout)
    : url_(std::move(url)), transport_(std::move(transport)), timeout_(timeout) {
  if (!transport_) throw EmbedderUnavailable("embedder has no transport");
}

std::vector<double> HttpImageEmbedder::embed(const std::string& png) {
  const std::string body = OJson{{"image", base64_encode(png)}}.dump();
  HttpResponse resp;
  try {
    resp = transport_->post(url_, body, {{"Content-Type", "application/json"}}, timeout_);
  } catch (const TransportError& e) {
    throw EmbedderUnavailable(std::string("embedder: ") + e.what());
  }
  if (resp.status != 200) throw EmbedderUnavailable("embedder: HTTP " + std::to_string(resp.status));
  try {
    const auto j = nlohmann::json::parse(resp.body);
    auto v = j.at("embedding").get<std::vector<double>>();
    if (v.empty()) throw EmbedderUnavailable("embedder returned an empty vector");
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw EmbedderUnavailable(std::string("embedder: malformed reply: ") + e.what());
  }
}

}  // namespace chartcycle
