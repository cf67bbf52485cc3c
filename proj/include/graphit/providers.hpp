#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "graphit/util.hpp"

namespace graphit {

// All vectors from one provider share a dimension; entries are finite.
using EmbeddingVector = Eigen::VectorXd;

struct ChatRequest {
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 512;
  std::string model;  // empty -> provider default
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Output order matches input order.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string id() const = 0;
};

// --- retry ------------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 1000;
  double multiplier = 2.0;
  double jitter = 0.2;  // +-20%
};

// Retries fn on TransientError with exponential backoff. AuthError and other
// exceptions propagate immediately. `sleep_ms` is injectable for tests.
std::string retry_with_backoff(const std::function<std::string()>& fn, const RetryPolicy& policy,
                               const std::function<void(int)>& sleep_ms = {});

// --- scripted chat mock -------------------------------------------------------

// Rule matched when every `contains` fragment occurs in the user message.
struct ScriptRule {
  std::vector<std::string> contains;
  std::string response;
};

// Deterministic chat backend for offline runs and tests. Lookup order: exact
// user-message match, then rules in insertion order, then the strict/lenient
// fallback. Strict mode raises on an unscripted prompt.
class ScriptedChat final : public ChatProvider {
 public:
  explicit ScriptedChat(bool strict = true, std::string fallback = "")
      : strict_(strict), fallback_(std::move(fallback)) {}

  ScriptedChat(ScriptedChat&& other) noexcept
      : exact_(std::move(other.exact_)),
        rules_(std::move(other.rules_)),
        strict_(other.strict_),
        fallback_(std::move(other.fallback_)),
        calls_(other.calls_.load()) {}

  void add_exact(std::string user, std::string response);
  void add_rule(ScriptRule rule);
  void add_rule(std::vector<std::string> contains, std::string response);

  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return "scripted"; }

  int calls() const { return calls_.load(); }

  // Script file: {"mode": "strict"|"lenient", "default": str,
  //               "exact": {prompt: response},
  //               "rules": [{"contains": [str...], "response": str}]}
  static ScriptedChat from_file(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> exact_;
  std::vector<ScriptRule> rules_;
  bool strict_;
  std::string fallback_;
  std::atomic<int> calls_{0};
};

// --- hash-bag embedding mock --------------------------------------------------

// Maps a text to the L2-normalized sum of per-token unit vectors derived from
// token hashes. Identical token multisets give identical vectors (tokens are
// sorted before summing so float addition order cannot differ). Texts sharing
// more tokens land closer in cosine.
class HashBagEmbedder final : public EmbeddingProvider {
 public:
  explicit HashBagEmbedder(int dimension = 256);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::string id() const override { return "hashbag-" + std::to_string(dimension_); }

  int dimension() const { return dimension_; }

  EmbeddingVector embed_one(std::string_view text) const;

 private:
  EmbeddingVector token_vector(std::string_view token) const;
  int dimension_;
};

// --- response cache -----------------------------------------------------------

struct CacheKey {
  std::string digest;  // hex SHA-256 of (provider id, model, canonical payload)
};

CacheKey make_cache_key(std::string_view provider_id, std::string_view model,
                        std::string_view canonical_payload);

// Content-addressed file cache. Writes go through a temp file and rename, so
// concurrent writers of the same key are safe and a reader never sees a torn
// file. Values persist across processes.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, std::string_view value);

  size_t entry_count() const;
  size_t total_bytes() const;
  size_t clear();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const CacheKey& key) const;
  std::filesystem::path dir_;
};

// Caching decorators. The key covers provider id, model, and the full request
// payload (temperature included), so any change misses.

class CachingChat final : public ChatProvider {
 public:
  CachingChat(ChatProvider& inner, ResponseCache& cache) : inner_(inner), cache_(cache) {}

  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return inner_.id(); }

 private:
  ChatProvider& inner_;
  ResponseCache& cache_;
};

// Embeddings are cached per text so different batches can reuse entries.
class CachingEmbedder final : public EmbeddingProvider {
 public:
  CachingEmbedder(EmbeddingProvider& inner, ResponseCache& cache)
      : inner_(inner), cache_(cache) {}

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::string id() const override { return inner_.id(); }

 private:
  EmbeddingProvider& inner_;
  ResponseCache& cache_;
};

// --- OpenAI-compatible HTTP backend --------------------------------------------

struct OpenAiConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model;
  RetryPolicy retry;
  int timeout_seconds = 120;
};

class OpenAiChat final : public ChatProvider {
 public:
  explicit OpenAiChat(OpenAiConfig config) : config_(std::move(config)) {}

  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return "openai-chat"; }

 private:
  OpenAiConfig config_;
};

class OpenAiEmbedder final : public EmbeddingProvider {
 public:
  explicit OpenAiEmbedder(OpenAiConfig config) : config_(std::move(config)) {}

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::string id() const override { return "openai-embed"; }

 private:
  OpenAiConfig config_;
};

// Canonical JSON for a chat request, used for cache keys: object keys sorted,
// no whitespace.
std::string canonical_chat_payload(const ChatRequest& request);

}  // namespace graphit
