#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "agr/error.hpp"

namespace agr {

enum class PromptKind { ItemAttributes, AestheticAttributes };

/// The fixed prompt for `kind`, byte for byte.
std::string_view render_prompt(PromptKind kind) noexcept;

/// "item" / "aesthetic" as used in the extraction output file.
std::string_view kind_label(PromptKind kind) noexcept;
PromptKind parse_kind_label(std::string_view label);

/// Splits on commas and newlines, trims whitespace and trailing periods,
/// lowercases, drops empties and deduplicates in order. Throws
/// ErrorKind::Extraction ("no keywords extracted") when nothing survives.
std::vector<std::string> parse_keyword_response(std::string_view raw);

struct ExtractionRecord {
  std::string item_id;
  PromptKind kind = PromptKind::ItemAttributes;
  std::vector<std::string> keywords;
  std::string backend_name;
  std::string retrieved_at;  // ISO-8601 UTC

  friend bool operator==(const ExtractionRecord&, const ExtractionRecord&) = default;
};

std::string record_to_json(const ExtractionRecord& record);
ExtractionRecord record_from_json(std::string_view line);

struct BackendRequest {
  std::string item_id;
  PromptKind kind;
  std::string_view prompt;
  std::string image_ref;
};

/// A vision-language model that answers a prompt about one image with text.
/// Transport failures are reported by throwing ErrorKind::Backend.
class VisionBackend {
 public:
  virtual ~VisionBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string describe(const BackendRequest& request) = 0;
};

/// Deterministic backend answering from a keyword map
/// `{ "<item_id>": { "item": "...", "aesthetic": "..." } }`.
/// Missing entries answer with an empty string.
class FixtureBackend : public VisionBackend {
 public:
  FixtureBackend() = default;
  explicit FixtureBackend(std::map<std::pair<std::string, PromptKind>, std::string> answers)
      : answers_(std::move(answers)) {}
  FixtureBackend(FixtureBackend&& other) noexcept
      : answers_(std::move(other.answers_)), calls_(other.calls_.load()) {}

  static FixtureBackend from_file(const std::filesystem::path& path);
  static FixtureBackend from_json(std::string_view text);

  void set(std::string item_id, PromptKind kind, std::string answer);

  std::string name() const override { return "fixture"; }
  std::string describe(const BackendRequest& request) override;

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::map<std::pair<std::string, PromptKind>, std::string> answers_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpBackendConfig {
  std::string base_url;              // e.g. http://localhost:8080
  std::string path = "/v1/describe";
  std::string token_env;             // name of the env var holding the bearer token
  std::chrono::seconds timeout{60};

  /// Reads `key = value` lines (base_url, path, token_env, timeout_seconds).
  static HttpBackendConfig from_file(const std::filesystem::path& path);
};

/// Generic JSON-over-HTTP adapter. Sends
/// `{"prompt", "item_id", "image_ref", "image_base64"?}` and accepts either a
/// JSON body with a "text" field or a plain-text body.
class HttpBackend : public VisionBackend {
 public:
  /// Throws Config when token_env is set but the variable is absent.
  explicit HttpBackend(HttpBackendConfig config);

  std::string name() const override { return "http"; }
  std::string describe(const BackendRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string token_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

/// Caches extraction records by (item_id, kind, backend_name).
class ExtractionCache {
 public:
  std::optional<ExtractionRecord> get(const std::string& item_id, PromptKind kind,
                                      const std::string& backend) const;
  void put(ExtractionRecord record);
  std::size_t size() const;
  std::size_t hits() const noexcept { return hits_; }

 private:
  using Key = std::tuple<std::string, PromptKind, std::string>;
  mutable std::mutex mutex_;
  std::map<Key, ExtractionRecord> records_;
  mutable std::size_t hits_ = 0;
};

using Clock = std::function<std::string()>;

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_now_iso8601();

/// Returns the cached record or queries the backend with the prompt for
/// `kind`, retrying transport failures with exponential backoff.
ExtractionRecord extract(const std::string& item_id, const std::string& image_ref, PromptKind kind,
                         VisionBackend& backend, ExtractionCache& cache,
                         const RetryPolicy& retry = {}, const Clock& clock = utc_now_iso8601);

struct BatchItem {
  std::string item_id;
  std::string image_ref;
};

struct SkippedPair {
  std::string item_id;
  PromptKind kind;
  std::string reason;
};

struct BatchSummary {
  std::size_t ok = 0;
  std::size_t cached = 0;
  std::size_t skipped = 0;
  std::vector<SkippedPair> skip_report;
};

struct BatchOptions {
  std::vector<PromptKind> kinds = {PromptKind::ItemAttributes, PromptKind::AestheticAttributes};
  std::size_t concurrency_limit = 4;
  RetryPolicy retry;
  Clock clock = utc_now_iso8601;
};

/// Appends one JSON line per new record to `out_path`. Pairs already present
/// in the file count as cached and are not queried again.
BatchSummary run_extraction_batch(const std::vector<BatchItem>& items, VisionBackend& backend,
                                  const std::filesystem::path& out_path,
                                  const BatchOptions& options = {});

/// Loads every record in an extraction output file.
std::vector<ExtractionRecord> read_extraction_file(const std::filesystem::path& path);

}  // namespace agr
