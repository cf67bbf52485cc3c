#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graphit {

// Base error for anything this library raises. UserError marks problems with
// user-supplied input (files, flags, config) and maps to exit code 1 at the
// CLI; everything else maps to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UserError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

// Retryable transport-level failure (connection reset, 429, 5xx).
class TransientError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// Credential rejection; never retried.
class AuthError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// --- deterministic hashing and RNG -----------------------------------------
//
// std::hash and the <random> distributions are implementation-defined, so any
// value that ends up in an artifact or a seeded sample goes through these
// instead. FNV-1a for stable hashing, splitmix64 for stream generation.

uint64_t fnv1a64(std::string_view data);

uint64_t splitmix64(uint64_t& state);

// Mixes a seed with a tag (index or name) into a new seed.
uint64_t derive_seed(uint64_t seed, uint64_t tag);
uint64_t derive_seed(uint64_t seed, std::string_view tag);

// Minimal deterministic generator. Identical output on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

  uint64_t next() { return splitmix64(state_); }

  // Uniform-ish draw in [0, n). Modulo bias is irrelevant at the sizes used
  // here and determinism matters more.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  // Uniform-ish double in [0, 1).
  double unit();

 private:
  uint64_t state_;
};

// In-place Fisher-Yates shuffle driven by Rng.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// --- text helpers -----------------------------------------------------------

// Lowercased alphanumeric runs. Bytes >= 0x80 (UTF-8 continuations and lead
// bytes) are treated as word characters so multi-byte sequences stay intact.
std::vector<std::string> tokenize_lower(std::string_view text);

std::string to_lower(std::string_view text);

std::string trim(std::string_view text);

// Collapses every whitespace run (including newlines) to a single space and
// trims. Used to keep template fields single-line.
std::string normalize_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains(std::string_view haystack, std::string_view needle);

std::vector<std::string> split(std::string_view text, char sep);

// --- misc -------------------------------------------------------------------

// Injectable time source. Artifacts embed timestamps from a Clock so that
// runs against deterministic providers can be bit-reproducible.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string now_iso8601() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::string now_iso8601() const override;
};

class FixedClock final : public Clock {
 public:
  explicit FixedClock(std::string value = "1970-01-01T00:00:00Z")
      : value_(std::move(value)) {}
  std::string now_iso8601() const override { return value_; }

 private:
  std::string value_;
};

// Default clock used when none is supplied: fixed epoch, so library-level
// runs are reproducible unless a caller opts into wall-clock time.
const Clock& default_clock();

// Runs fn(i) for i in [0, n) on up to `parallelism` threads. fn must handle
// its own per-item failures; an escaping exception is rethrown on the caller
// thread after all workers finish.
void parallel_for(size_t n, int parallelism, const std::function<void(size_t)>& fn);

namespace logging {

enum class Level { Quiet = 0, Normal = 1, Verbose = 2 };

void set_level(Level level);
Level level();

void warn(const std::string& message);
void info(const std::string& message);

}  // namespace logging

}  // namespace graphit
