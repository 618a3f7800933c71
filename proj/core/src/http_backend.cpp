// HTTP backends for OpenAI-compatible chat-completion and embedding endpoints.

#include <httplib.h>
#include <json.hpp>

#include "mango/embedding.hpp"
#include "mango/errors.hpp"
#include "mango/gateway.hpp"

namespace mango {
namespace {

using json = nlohmann::json;

json post_json(const std::string& endpoint, const std::string& api_key,
               std::chrono::seconds timeout, const json& body) {
  auto [origin, path] = llm::split_url(endpoint);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransientError("HTTP request to " + endpoint + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("HTTP " + std::to_string(res->status) + " from " + endpoint);
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint + ": " +
                         res->body.substr(0, 500));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw TransientError("malformed JSON body from " + endpoint);
  }
}

}  // namespace

namespace llm {

std::pair<std::string, std::string> split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw std::invalid_argument("URL lacks a scheme: " + std::string(url));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw std::invalid_argument("chat endpoint is not configured");
  if (config_.model.empty()) throw std::invalid_argument("chat model is not configured");
}

CompletionResult HttpChatBackend::complete(const CompletionRequest& request) {
  json body;
  body["model"] = config_.model;
  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  if (request.structured_output) body["response_format"] = {{"type", "json_object"}};

  const json reply = post_json(config_.endpoint, config_.api_key, config_.timeout, body);
  CompletionResult result;
  try {
    result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw TransientError("chat reply lacks choices[0].message.content");
  }
  if (reply.contains("usage") && reply["usage"].is_object()) {
    const auto& u = reply["usage"];
    result.usage = TokenUsage{u.value("prompt_tokens", std::uint64_t{0}),
                              u.value("completion_tokens", std::uint64_t{0})};
  }
  return result;
}

}  // namespace llm

namespace embedding {

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw std::invalid_argument("embedding endpoint is not configured");
  if (config_.model.empty()) throw std::invalid_argument("embedding model is not configured");
  if (config_.dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  json body;
  body["model"] = config_.model;
  body["input"] = std::vector<std::string>(texts.begin(), texts.end());
  const json reply = post_json(config_.endpoint, config_.api_key, config_.timeout, body);

  std::vector<std::vector<float>> out(texts.size());
  const auto& data = reply.at("data");
  for (std::size_t pos = 0; pos < data.size(); ++pos) {
    const auto& item = data[pos];
    const std::size_t idx = item.value("index", pos);
    if (idx >= out.size()) throw TransportError("embedding reply index out of range");
    out[idx] = item.at("embedding").get<std::vector<float>>();
    if (out[idx].size() != config_.dimension) {
      throw TransportError("embedding reply has dimension " + std::to_string(out[idx].size()) +
                           ", expected " + std::to_string(config_.dimension));
    }
  }
  for (const auto& v : out) {
    if (v.empty()) throw TransportError("embedding reply is missing entries");
  }
  return out;
}

}  // namespace embedding
}  // namespace mango
