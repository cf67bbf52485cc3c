#include "graphit/providers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace graphit {

namespace fs = std::filesystem;
using nlohmann::json;

// --- retry ------------------------------------------------------------------

std::string retry_with_backoff(const std::function<std::string()>& fn, const RetryPolicy& policy,
                               const std::function<void(int)>& sleep_ms) {
  const auto do_sleep = sleep_ms ? sleep_ms : [](int ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  };
  // Jitter is the one place nondeterminism is fine: it only shapes live
  // retry timing, never output.
  static std::atomic<uint64_t> jitter_state{0x5bd1e995};
  double delay = policy.base_delay_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransientError&) {
      if (attempt >= policy.max_attempts) throw;
      uint64_t s = jitter_state.fetch_add(0x9e3779b9);
      const double unit = static_cast<double>(splitmix64(s) >> 11) / 9007199254740992.0;
      const double jittered = delay * (1.0 + policy.jitter * (2.0 * unit - 1.0));
      do_sleep(static_cast<int>(jittered));
      delay *= policy.multiplier;
    }
  }
}

// --- scripted chat ------------------------------------------------------------

void ScriptedChat::add_exact(std::string user, std::string response) {
  exact_.emplace(std::move(user), std::move(response));
}

void ScriptedChat::add_rule(ScriptRule rule) { rules_.push_back(std::move(rule)); }

void ScriptedChat::add_rule(std::vector<std::string> contains, std::string response) {
  rules_.push_back({std::move(contains), std::move(response)});
}

std::string ScriptedChat::complete(const ChatRequest& request) {
  if (request.user.empty()) throw Error("chat request has empty user message");
  if (!std::isfinite(request.temperature)) throw Error("temperature must be finite");
  calls_.fetch_add(1);
  const auto it = exact_.find(request.user);
  if (it != exact_.end()) return it->second;
  for (const ScriptRule& rule : rules_) {
    const bool all = std::all_of(rule.contains.begin(), rule.contains.end(),
                                 [&](const std::string& s) { return contains(request.user, s); });
    if (all && !rule.contains.empty()) return rule.response;
  }
  if (strict_) {
    const std::string head = request.user.substr(0, 200);
    throw ProviderError("unscripted prompt: \"" + head + (request.user.size() > 200 ? "..." : "") +
                        "\"");
  }
  return fallback_;
}

ScriptedChat ScriptedChat::from_file(const fs::path& path) {
  std::ifstream file(path);
  if (!file) throw UserError("cannot open script file " + path.string());
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw UserError("script file " + path.string() + ": " + e.what());
  }
  const bool strict = doc.value("mode", "strict") == std::string("strict");
  ScriptedChat chat(strict, doc.value("default", ""));
  if (doc.contains("exact")) {
    for (const auto& [prompt, response] : doc["exact"].items()) {
      chat.add_exact(prompt, response.get<std::string>());
    }
  }
  if (doc.contains("rules")) {
    for (const auto& rule : doc["rules"]) {
      chat.add_rule(rule.at("contains").get<std::vector<std::string>>(),
                    rule.at("response").get<std::string>());
    }
  }
  return chat;
}

// --- hash-bag embedder ----------------------------------------------------------

HashBagEmbedder::HashBagEmbedder(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw Error("embedding dimension must be >= 1");
}

EmbeddingVector HashBagEmbedder::token_vector(std::string_view token) const {
  uint64_t state = fnv1a64(token);
  EmbeddingVector v(dimension_);
  for (int i = 0; i < dimension_; ++i) {
    const double unit = static_cast<double>(splitmix64(state) >> 11) / 9007199254740992.0;
    v[i] = 2.0 * unit - 1.0;
  }
  v.normalize();
  return v;
}

EmbeddingVector HashBagEmbedder::embed_one(std::string_view text) const {
  std::vector<std::string> tokens = tokenize_lower(text);
  std::sort(tokens.begin(), tokens.end());
  EmbeddingVector sum = EmbeddingVector::Zero(dimension_);
  for (const std::string& token : tokens) sum += token_vector(token);
  const double norm = sum.norm();
  if (norm > 0.0) sum /= norm;
  return sum;
}

std::vector<EmbeddingVector> HashBagEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) out.push_back(embed_one(text));
  return out;
}

// --- cache ----------------------------------------------------------------------

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace

CacheKey make_cache_key(std::string_view provider_id, std::string_view model,
                        std::string_view canonical_payload) {
  std::string material;
  material.reserve(provider_id.size() + model.size() + canonical_payload.size() + 2);
  material.append(provider_id);
  material.push_back('\x1f');
  material.append(model);
  material.push_back('\x1f');
  material.append(canonical_payload);
  return CacheKey{sha256_hex(material)};
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw UserError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

fs::path ResponseCache::entry_path(const CacheKey& key) const { return dir_ / key.digest; }

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  std::ifstream file(entry_path(key), std::ios::binary);
  if (!file) return std::nullopt;
  std::string value((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (!file.good() && !file.eof()) throw Error("cache read failed for " + key.digest);
  return value;
}

void ResponseCache::put(const CacheKey& key, std::string_view value) {
  // Unique temp name per writer, then atomic rename onto the final path.
  static std::atomic<uint64_t> counter{0};
  const fs::path final_path = entry_path(key);
  const fs::path tmp_path =
      dir_ / (key.digest + ".tmp" + std::to_string(::getpid()) + "." +
              std::to_string(counter.fetch_add(1)));
  {
    std::ofstream file(tmp_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cache write failed: cannot open " + tmp_path.string());
    file.write(value.data(), static_cast<std::streamsize>(value.size()));
    if (!file.good()) throw Error("cache write failed for " + key.digest);
  }
  std::error_code ec;
  fs::rename(tmp_path, final_path, ec);
  if (ec) {
    fs::remove(tmp_path);
    throw Error("cache rename failed for " + key.digest + ": " + ec.message());
  }
}

size_t ResponseCache::entry_count() const {
  size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension().empty()) ++n;
  }
  return n;
}

size_t ResponseCache::total_bytes() const {
  size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file()) n += entry.file_size();
  }
  return n;
}

size_t ResponseCache::clear() {
  size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file()) {
      fs::remove(entry.path());
      ++n;
    }
  }
  return n;
}

std::string canonical_chat_payload(const ChatRequest& request) {
  json payload;  // plain json objects keep keys sorted
  if (request.system) payload["system"] = *request.system;
  payload["user"] = request.user;
  payload["temperature"] = request.temperature;
  payload["max_tokens"] = request.max_tokens;
  payload["model"] = request.model;
  return payload.dump();
}

std::string CachingChat::complete(const ChatRequest& request) {
  const CacheKey key = make_cache_key(inner_.id(), request.model, canonical_chat_payload(request));
  if (auto hit = cache_.get(key)) return *hit;
  const std::string value = inner_.complete(request);
  cache_.put(key, value);
  return value;
}

std::vector<EmbeddingVector> CachingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<size_t> misses;
  for (size_t i = 0; i < texts.size(); ++i) {
    const CacheKey key = make_cache_key(inner_.id(), "", texts[i]);
    if (auto hit = cache_.get(key)) {
      const json values = json::parse(*hit);
      EmbeddingVector v(values.size());
      for (size_t d = 0; d < values.size(); ++d) v[static_cast<long>(d)] = values[d].get<double>();
      out[i] = std::move(v);
    } else {
      misses.push_back(i);
    }
  }
  if (!misses.empty()) {
    std::vector<std::string> batch;
    batch.reserve(misses.size());
    for (size_t i : misses) batch.push_back(texts[i]);
    std::vector<EmbeddingVector> fresh = inner_.embed(batch);
    for (size_t m = 0; m < misses.size(); ++m) {
      const size_t i = misses[m];
      out[i] = fresh[m];
      json values = json::array();
      for (long d = 0; d < out[i].size(); ++d) values.push_back(out[i][d]);
      cache_.put(make_cache_key(inner_.id(), "", texts[i]), values.dump());
    }
  }
  return out;
}

// --- OpenAI-compatible client ------------------------------------------------------

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // base path, no trailing slash
};

ParsedUrl parse_base_url(const std::string& base_url) {
  const size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw UserError("base URL must start with http:// or https://: " + base_url);
  }
  const size_t path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.path = base_url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  }
  return out;
}

json post_json(const OpenAiConfig& config, const std::string& endpoint, const json& body) {
  const ParsedUrl url = parse_base_url(config.base_url);
  const auto once = [&]() -> std::string {
    httplib::Client client(url.origin);
    client.set_connection_timeout(config.timeout_seconds);
    client.set_read_timeout(config.timeout_seconds);
    httplib::Headers headers;
    if (!config.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config.api_key);
    }
    const auto result =
        client.Post(url.path + endpoint, headers, body.dump(), "application/json");
    if (!result) {
      throw TransientError("transport failure for " + endpoint + ": " +
                           httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403) {
      throw AuthError("authentication failed (" + std::to_string(result->status) + ") for " +
                      endpoint);
    }
    if (result->status == 429 || result->status >= 500) {
      throw TransientError("status " + std::to_string(result->status) + " for " + endpoint);
    }
    if (result->status != 200) {
      throw ProviderError("status " + std::to_string(result->status) + " for " + endpoint + ": " +
                          result->body.substr(0, 500));
    }
    return result->body;
  };
  const std::string body_text = retry_with_backoff(once, config.retry);
  try {
    return json::parse(body_text);
  } catch (const json::exception& e) {
    throw ProviderError("invalid JSON from " + endpoint + ": " + e.what());
  }
}

}  // namespace

std::string OpenAiChat::complete(const ChatRequest& request) {
  if (request.user.empty()) throw Error("chat request has empty user message");
  if (!std::isfinite(request.temperature)) throw Error("temperature must be finite");
  json messages = json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  json body = {
      {"model", request.model.empty() ? config_.model : request.model},
      {"messages", messages},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  const json response = post_json(config_, "/chat/completions", body);
  try {
    if (response.contains("error")) {
      throw ProviderError("provider error: " + response["error"].dump());
    }
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected chat response shape: ") + e.what());
  }
}

std::vector<EmbeddingVector> OpenAiEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  json body = {{"model", config_.model}, {"input", texts}};
  const json response = post_json(config_, "/embeddings", body);
  try {
    if (response.contains("error")) {
      throw ProviderError("provider error: " + response["error"].dump());
    }
    const auto& data = response.at("data");
    std::vector<EmbeddingVector> out(texts.size());
    for (const auto& item : data) {
      const size_t index = item.at("index").get<size_t>();
      const auto& values = item.at("embedding");
      EmbeddingVector v(values.size());
      for (size_t d = 0; d < values.size(); ++d) v[static_cast<long>(d)] = values[d].get<double>();
      if (index >= out.size()) throw ProviderError("embedding index out of range");
      out[index] = std::move(v);
    }
    long dimension = -1;
    for (const auto& v : out) {
      if (v.size() == 0) throw ProviderError("embedding response missing an input");
      if (dimension < 0) dimension = v.size();
      if (v.size() != dimension) throw ProviderError("embedding dimensions differ within batch");
    }
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected embeddings response shape: ") + e.what());
  }
}

}  // namespace graphit
