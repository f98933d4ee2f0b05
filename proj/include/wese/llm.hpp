#pragma once

#include <array>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wese::llm {

struct TokenUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;

  long long total() const { return prompt_tokens + completion_tokens; }
  TokenUsage& operator+=(const TokenUsage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;

  void validate() const;  // throws UsageError on empty prompt / max_tokens < 1
};

struct CompletionResult {
  std::string text;
  TokenUsage usage;
};

/// Whitespace-normalized stable hash of a prompt; keys transcript entries so
/// incidental formatting drift does not break a replay.
std::string prompt_fingerprint(std::string_view prompt);

/// Pre-flight budget heuristic only: ceil(chars / 4). Accounting always uses
/// backend-reported usage.
long long estimate_tokens(std::string_view text);

// ── Cost accounting ─────────────────────────────────────────────

enum class CostRole { WeakExplore = 0, StrongExplore, StrongExploit, Extraction };
constexpr int kCostRoleCount = 4;

std::string_view role_name(CostRole role);
std::optional<CostRole> role_from_name(std::string_view name);

struct RoleTotals {
  TokenUsage usage;
  long long calls = 0;
};

/// Per-role token accumulators plus dollar pricing. Recording is serialized
/// internally; backends may be shared across concurrent episodes.
class CostLedger {
 public:
  CostLedger();

  void record(CostRole role, const TokenUsage& usage);

  RoleTotals totals(CostRole role) const;
  TokenUsage grand_total() const;
  long long call_count() const;

  void set_price(CostRole role, double dollars_per_1k);
  double price(CostRole role) const;

  /// (prompt + completion) / 1000 × price, rounded to cents half-up.
  long long expense_cents(CostRole role) const;
  /// Sum of the per-role rounded expenses.
  long long total_expense_cents() const;

  struct Event {
    long long seq = 0;
    CostRole role = CostRole::WeakExplore;
    TokenUsage usage;
  };
  std::vector<Event> events() const;

  CostLedger(const CostLedger& o);
  CostLedger& operator=(const CostLedger& o);

 private:
  mutable std::mutex mu_;
  std::array<RoleTotals, kCostRoleCount> totals_{};
  std::array<double, kCostRoleCount> prices_{};
  std::vector<Event> events_;
  long long next_seq_ = 0;
};

/// Default pricing: $0.02 per 1k tokens for the strong roles, $0 for the
/// locally hosted weak/extraction roles.
constexpr double kDefaultStrongPricePer1k = 0.02;

CostLedger make_default_ledger();

long long usage_expense_cents(const TokenUsage& usage, double dollars_per_1k);

// ── Backends ────────────────────────────────────────────────────

/// Endpoint or transport failure. `retryable` marks transient transport
/// errors; context overflow and malformed responses are final.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool retryable_)
      : std::runtime_error(what), retryable(retryable_) {}
  bool retryable;
};

class ContextOverflowError : public BackendError {
 public:
  explicit ContextOverflowError(const std::string& what) : BackendError(what, false) {}
};

class ReplayMismatchError : public BackendError {
 public:
  ReplayMismatchError(size_t index, const std::string& expected_fp, const std::string& got_fp);
  size_t index;
  std::string expected_fp;
  std::string got_fp;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string kind() const = 0;
};

/// Runs the request against the backend and records the reported usage into
/// the ledger under the caller's role. Never mutates the request.
CompletionResult complete(CompletionBackend& backend, const CompletionRequest& request,
                          CostLedger& ledger, CostRole role);

// ── Replay transcripts ──────────────────────────────────────────

struct TranscriptEntry {
  std::string fp;
  std::string text;
  TokenUsage usage;
};

/// JSON Lines: {"fp": "...", "text": "...", "prompt_tokens": n, "completion_tokens": m}
std::vector<TranscriptEntry> load_transcript(const std::string& path);
std::string transcript_to_jsonl(const std::vector<TranscriptEntry>& entries);
void save_transcript(const std::vector<TranscriptEntry>& entries, const std::string& path);

/// Deterministic offline backend: serves a recorded transcript strictly in
/// order, verifying each request's prompt fingerprint. Single-episode only;
/// concurrent calls are refused.
class ReplayBackend : public CompletionBackend {
 public:
  explicit ReplayBackend(std::vector<TranscriptEntry> entries);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string kind() const override { return "replay"; }

  size_t remaining() const;

 private:
  std::vector<TranscriptEntry> entries_;
  size_t next_ = 0;
  std::atomic<bool> in_call_{false};
};

/// Records every (request, result) pair flowing through an inner backend as
/// transcript entries; used to synthesize replay fixtures.
class RecordingBackend : public CompletionBackend {
 public:
  explicit RecordingBackend(CompletionBackend& inner) : inner_(inner) {}

  CompletionResult complete(const CompletionRequest& request) override;
  std::string kind() const override { return "recording(" + inner_.kind() + ")"; }

  const std::vector<TranscriptEntry>& recorded() const { return recorded_; }

 private:
  CompletionBackend& inner_;
  std::vector<TranscriptEntry> recorded_;
};

// ── OpenAI-compatible HTTP endpoint ─────────────────────────────

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key;
  int max_retries = 3;     // attempts, exponential backoff with jitter
  int backoff_ms = 100;
  int timeout_s = 60;
};

/// JSON-over-HTTP client for an OpenAI-completions-compatible endpoint:
/// request {model, prompt, max_tokens, temperature, stop}; response
/// choices[0].text plus usage.{prompt_tokens,completion_tokens}.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(EndpointConfig config);
  ~HttpBackend() override;

  CompletionResult complete(const CompletionRequest& request) override;
  std::string kind() const override { return "http"; }

 private:
  EndpointConfig config_;
};

}  // namespace wese::llm
