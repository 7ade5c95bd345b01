#include "fmea/features.hpp"

// httplib must come after Eigen: its OpenSSL includes leak macros that
// mangle Eigen's internal declarations.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/llm.hpp"

namespace fmea {

namespace {

using nlohmann::json;

// Splits "https://host:port/base/path" into (scheme://host:port, /base/path).
std::pair<std::string, std::string> split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  std::size_t path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string HttpLlm::complete(const std::string& system_prompt,
                              const std::string& user_prompt) {
  if (config_.base_url.empty()) {
    throw Error(Errc::LlmUnavailable, "FMEA_LLM_BASE_URL is not set");
  }
  auto [origin, base_path] = split_url(config_.base_url);
  httplib::Client client(origin);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_connection_timeout(config_.timeout_seconds, 0);

  json body;
  body["model"] = config_.model;
  body["temperature"] = 0;
  body["messages"] = json::array({
      json{{"role", "system"}, {"content", system_prompt}},
      json{{"role", "user"}, {"content", user_prompt}},
  });

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto result = client.Post(base_path + "/chat/completions", headers,
                            body.dump(), "application/json");
  if (!result) {
    throw Error(Errc::LlmUnavailable,
                "chat completion request failed: " +
                    httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(Errc::LlmUnavailable,
                "chat completion returned status " +
                    std::to_string(result->status));
  }
  json response = json::parse(result->body, nullptr, false);
  if (response.is_discarded() || !response.contains("choices") ||
      response["choices"].empty() ||
      !response["choices"][0].contains("message")) {
    throw Error(Errc::LlmUnavailable, "malformed chat completion response");
  }
  return response["choices"][0]["message"]["content"].get<std::string>();
}

Eigen::MatrixXd HttpEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
  if (config_.base_url.empty()) {
    throw Error(Errc::ProviderUnavailable, "embeddings base URL is not set");
  }
  if (texts.empty()) return Eigen::MatrixXd(0, config_.dim);
  auto [origin, base_path] = split_url(config_.base_url);
  httplib::Client client(origin);
  client.set_read_timeout(config_.timeout_seconds, 0);

  json body;
  body["model"] = config_.model;
  body["input"] = texts;

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto result = client.Post(base_path + "/embeddings", headers, body.dump(),
                            "application/json");
  if (!result || result->status != 200) {
    throw Error(Errc::ProviderUnavailable,
                "embeddings request failed" +
                    (result ? " with status " + std::to_string(result->status)
                            : std::string()));
  }
  json response = json::parse(result->body, nullptr, false);
  if (response.is_discarded() || !response.contains("data") ||
      response["data"].size() != texts.size()) {
    throw Error(Errc::ProviderUnavailable, "malformed embeddings response");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), config_.dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const json& vec = response["data"][i]["embedding"];
    if (static_cast<int>(vec.size()) != config_.dim) {
      throw Error(Errc::ProviderUnavailable,
                  "embedding width " + std::to_string(vec.size()) +
                      " does not match configured dim " +
                      std::to_string(config_.dim));
    }
    for (int k = 0; k < config_.dim; ++k) {
      out(static_cast<Eigen::Index>(i), k) = vec[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

}  // namespace fmea
