#include "agr/extractor.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agr/text.hpp"

namespace agr {

using nlohmann::json;

namespace {

constexpr std::string_view kPromptItem =
    "Describe the item in the image using keywords. Describe the color, material, pattern, "
    "style, and feeling of the item using simple, common, and many English keywords. Output as "
    "keyword1, keyword2, keyword3, ... keywordn.";

// No trailing period; kept exactly as published.
constexpr std::string_view kPromptAesthetic =
    "Describe the image aesthetics independent of the item using keywords. Describe qualities "
    "including image composition, color scheme, lighting, balance, symmetry, contrast, texture, "
    "and overall visual harmony, feeling of the image using simple and common English keywords. "
    "Output as keyword1, keyword2, keyword3, ... keywordn";

std::string base64_encode(std::string_view bytes) {
  static constexpr char kTable[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kTable[(n >> 18) & 63];
    out += kTable[(n >> 12) & 63];
    out += kTable[(n >> 6) & 63];
    out += kTable[n & 63];
  }
  if (i < bytes.size()) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kTable[(n >> 18) & 63];
    out += kTable[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kTable[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::optional<std::string> read_local_file(const std::string& ref) {
  if (ref.empty() || ref.find("://") != std::string::npos) return std::nullopt;
  std::ifstream in(ref, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Trailing '.' and U+2026 (horizontal ellipsis), with whitespace between them.
std::string_view strip_trailing_dots(std::string_view s) {
  constexpr std::string_view kEllipsis = "\xE2\x80\xA6";
  for (;;) {
    s = text::trim(s);
    if (!s.empty() && s.back() == '.') {
      s.remove_suffix(1);
    } else if (s.ends_with(kEllipsis)) {
      s.remove_suffix(kEllipsis.size());
    } else {
      return s;
    }
  }
}

bool has_word_char(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

}  // namespace

std::string_view render_prompt(PromptKind kind) noexcept {
  return kind == PromptKind::ItemAttributes ? kPromptItem : kPromptAesthetic;
}

std::string_view kind_label(PromptKind kind) noexcept {
  return kind == PromptKind::ItemAttributes ? "item" : "aesthetic";
}

PromptKind parse_kind_label(std::string_view label) {
  if (label == "item") return PromptKind::ItemAttributes;
  if (label == "aesthetic") return PromptKind::AestheticAttributes;
  throw Error(ErrorKind::Parse, "unknown extraction kind '" + std::string(label) + "'");
}

std::vector<std::string> parse_keyword_response(std::string_view raw) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const auto end = raw.find_first_of(",\n", start);
    auto piece = raw.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    piece = text::trim(piece);
    piece = strip_trailing_dots(piece);
    if (has_word_char(piece) && !text::has_control_chars(piece)) {
      auto keyword = text::lower(piece);
      if (seen.insert(keyword).second) out.push_back(std::move(keyword));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (out.empty()) {
    throw Error(ErrorKind::Extraction, "no keywords extracted from response: \"" + std::string(raw) + "\"");
  }
  return out;
}

std::string record_to_json(const ExtractionRecord& r) {
  json obj = {{"item_id", r.item_id},
              {"kind", kind_label(r.kind)},
              {"keywords", r.keywords},
              {"backend", r.backend_name},
              {"retrieved_at", r.retrieved_at}};
  return obj.dump();
}

ExtractionRecord record_from_json(std::string_view line) {
  try {
    const auto obj = json::parse(line);
    ExtractionRecord r;
    r.item_id = obj.at("item_id").get<std::string>();
    r.kind = parse_kind_label(obj.at("kind").get<std::string>());
    r.keywords = obj.at("keywords").get<std::vector<std::string>>();
    r.backend_name = obj.value("backend", "");
    r.retrieved_at = obj.value("retrieved_at", "");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("invalid extraction record: ") + e.what());
  }
}

FixtureBackend FixtureBackend::from_json(std::string_view text) {
  FixtureBackend backend;
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("invalid fixture JSON: ") + e.what());
  }
  if (!obj.is_object()) throw Error(ErrorKind::Parse, "fixture must be a JSON object");
  for (const auto& [item, answers] : obj.items()) {
    for (const auto& [label, answer] : answers.items()) {
      backend.set(item, parse_kind_label(label), answer.get<std::string>());
    }
  }
  return backend;
}

FixtureBackend FixtureBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open fixture " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void FixtureBackend::set(std::string item_id, PromptKind kind, std::string answer) {
  answers_[{std::move(item_id), kind}] = std::move(answer);
}

std::string FixtureBackend::describe(const BackendRequest& request) {
  ++calls_;
  auto it = answers_.find({request.item_id, request.kind});
  return it == answers_.end() ? std::string() : it->second;
}

HttpBackendConfig HttpBackendConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open backend config " + path.string());
  HttpBackendConfig config;
  std::string line;
  while (std::getline(in, line)) {
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Config, "backend config: expected key = value, got '" + std::string(body) + "'");
    }
    const auto key = text::trim(body.substr(0, eq));
    const auto value = std::string(text::trim(body.substr(eq + 1)));
    if (key == "base_url") config.base_url = value;
    else if (key == "path") config.path = value;
    else if (key == "token_env") config.token_env = value;
    else if (key == "timeout_seconds") config.timeout = std::chrono::seconds(std::stoll(value));
    else throw Error(ErrorKind::Config, "backend config: unknown key '" + std::string(key) + "'");
  }
  return config;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw Error(ErrorKind::Config, "http backend needs a base URL");
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw Error(ErrorKind::Config,
                  "http backend: auth environment variable " + config_.token_env + " is not set");
    }
    token_ = token;
  }
}

std::string HttpBackend::describe(const BackendRequest& request) {
  httplib::Client client(config_.base_url);
  const auto seconds = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(seconds, 0);
  client.set_read_timeout(seconds, 0);
  client.set_write_timeout(seconds, 0);

  json body = {{"prompt", request.prompt},
               {"item_id", request.item_id},
               {"image_ref", request.image_ref}};
  if (auto bytes = read_local_file(request.image_ref)) body["image_base64"] = base64_encode(*bytes);

  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::Backend, "http backend: " + httplib::to_string(res.error()));
  }
  if (res->status >= 500 || res->status == 429) {
    throw Error(ErrorKind::Backend, "http backend: status " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::Extraction,
                "http backend: status " + std::to_string(res->status) + ": " + res->body);
  }
  const auto parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_object() && parsed.contains("text") && parsed["text"].is_string()) {
    return parsed["text"].get<std::string>();
  }
  return res->body;
}

std::optional<ExtractionRecord> ExtractionCache::get(const std::string& item_id, PromptKind kind,
                                                     const std::string& backend) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find({item_id, kind, backend});
  if (it == records_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void ExtractionCache::put(ExtractionRecord record) {
  std::lock_guard lock(mutex_);
  Key key{record.item_id, record.kind, record.backend_name};
  records_.insert_or_assign(std::move(key), std::move(record));
}

std::size_t ExtractionCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ExtractionRecord extract(const std::string& item_id, const std::string& image_ref, PromptKind kind,
                         VisionBackend& backend, ExtractionCache& cache, const RetryPolicy& retry,
                         const Clock& clock) {
  const auto backend_name = backend.name();
  if (auto hit = cache.get(item_id, kind, backend_name)) return *hit;

  const BackendRequest request{item_id, kind, render_prompt(kind), image_ref};
  std::string raw;
  auto backoff = retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      raw = backend.describe(request);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Backend || attempt >= retry.attempts) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }

  ExtractionRecord record{item_id, kind, parse_keyword_response(raw), backend_name, clock()};
  cache.put(record);
  return record;
}

std::vector<ExtractionRecord> read_extraction_file(const std::filesystem::path& path) {
  std::vector<ExtractionRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

BatchSummary run_extraction_batch(const std::vector<BatchItem>& items, VisionBackend& backend,
                                  const std::filesystem::path& out_path,
                                  const BatchOptions& options) {
  std::set<std::pair<std::string, PromptKind>> done;
  for (const auto& r : read_extraction_file(out_path)) done.emplace(r.item_id, r.kind);

  BatchSummary summary;
  std::deque<std::pair<const BatchItem*, PromptKind>> queue;
  std::set<std::pair<std::string, PromptKind>> queued;
  for (const auto& item : items) {
    for (auto kind : options.kinds) {
      std::pair<std::string, PromptKind> key{item.item_id, kind};
      if (done.contains(key) || queued.contains(key)) {
        ++summary.cached;
        continue;
      }
      queued.insert(std::move(key));
      queue.emplace_back(&item, kind);
    }
  }

  std::ofstream out(out_path, std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + out_path.string() + " for append");

  ExtractionCache cache;
  std::mutex mutex;  // guards queue, out, summary
  std::optional<Error> io_failure;

  auto worker = [&] {
    for (;;) {
      std::pair<const BatchItem*, PromptKind> job;
      {
        std::lock_guard lock(mutex);
        if (queue.empty() || io_failure) return;
        job = queue.front();
        queue.pop_front();
      }
      const auto& [item, kind] = job;
      try {
        auto record = extract(item->item_id, item->image_ref, kind, backend, cache, options.retry,
                              options.clock);
        std::lock_guard lock(mutex);
        out << record_to_json(record) << '\n';
        out.flush();
        if (!out) {
          io_failure = Error(ErrorKind::Io, "write failed on " + out_path.string());
          return;
        }
        ++summary.ok;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Extraction && e.kind() != ErrorKind::Backend) {
          std::lock_guard lock(mutex);
          io_failure = e;
          return;
        }
        std::lock_guard lock(mutex);
        ++summary.skipped;
        summary.skip_report.push_back({item->item_id, kind, e.what()});
      }
    }
  };

  const auto n_threads = std::max<std::size_t>(1, std::min(options.concurrency_limit, queue.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (io_failure) throw *io_failure;

  std::sort(summary.skip_report.begin(), summary.skip_report.end(),
            [](const SkippedPair& a, const SkippedPair& b) {
              return std::tie(a.item_id, a.kind) < std::tie(b.item_id, b.kind);
            });
  return summary;
}

}  // namespace agr
