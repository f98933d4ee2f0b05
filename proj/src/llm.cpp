#include "wese/llm.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wese/errors.hpp"
#include "wese/log.hpp"
#include "wese/text.hpp"

namespace wese::llm {

void CompletionRequest::validate() const {
  if (prompt.empty()) throw UsageError("completion request with empty prompt");
  if (max_tokens < 1) throw UsageError("completion request with max_tokens < 1");
  if (temperature < 0) throw UsageError("completion request with negative temperature");
}

std::string prompt_fingerprint(std::string_view prompt) {
  return hex64(fnv1a64(collapse_ws(prompt)));
}

long long estimate_tokens(std::string_view text) {
  return static_cast<long long>((text.size() + 3) / 4);
}

std::string_view role_name(CostRole role) {
  switch (role) {
    case CostRole::WeakExplore: return "weak-explore";
    case CostRole::StrongExplore: return "strong-explore";
    case CostRole::StrongExploit: return "strong-exploit";
    case CostRole::Extraction: return "extraction";
  }
  return "?";
}

std::optional<CostRole> role_from_name(std::string_view name) {
  for (int i = 0; i < kCostRoleCount; ++i) {
    auto role = static_cast<CostRole>(i);
    if (role_name(role) == name) return role;
  }
  return std::nullopt;
}

CostLedger::CostLedger() = default;

CostLedger::CostLedger(const CostLedger& o) {
  std::lock_guard<std::mutex> lock(o.mu_);
  totals_ = o.totals_;
  prices_ = o.prices_;
  events_ = o.events_;
  next_seq_ = o.next_seq_;
}

CostLedger& CostLedger::operator=(const CostLedger& o) {
  if (this == &o) return *this;
  std::scoped_lock lock(mu_, o.mu_);
  totals_ = o.totals_;
  prices_ = o.prices_;
  events_ = o.events_;
  next_seq_ = o.next_seq_;
  return *this;
}

void CostLedger::record(CostRole role, const TokenUsage& usage) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& t = totals_[static_cast<int>(role)];
  t.usage += usage;
  t.calls += 1;
  events_.push_back(Event{next_seq_++, role, usage});
}

RoleTotals CostLedger::totals(CostRole role) const {
  std::lock_guard<std::mutex> lock(mu_);
  return totals_[static_cast<int>(role)];
}

TokenUsage CostLedger::grand_total() const {
  std::lock_guard<std::mutex> lock(mu_);
  TokenUsage out;
  for (const auto& t : totals_) out += t.usage;
  return out;
}

long long CostLedger::call_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  long long n = 0;
  for (const auto& t : totals_) n += t.calls;
  return n;
}

void CostLedger::set_price(CostRole role, double dollars_per_1k) {
  std::lock_guard<std::mutex> lock(mu_);
  prices_[static_cast<int>(role)] = dollars_per_1k;
}

double CostLedger::price(CostRole role) const {
  std::lock_guard<std::mutex> lock(mu_);
  return prices_[static_cast<int>(role)];
}

long long usage_expense_cents(const TokenUsage& usage, double dollars_per_1k) {
  // tokens/1000 × $/1k × 100 cents = tokens × price / 10; half-up.
  double cents = static_cast<double>(usage.total()) * dollars_per_1k / 10.0;
  return std::llround(cents + 1e-9);
}

long long CostLedger::expense_cents(CostRole role) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto& t = totals_[static_cast<int>(role)];
  return usage_expense_cents(t.usage, prices_[static_cast<int>(role)]);
}

long long CostLedger::total_expense_cents() const {
  long long sum = 0;
  for (int i = 0; i < kCostRoleCount; ++i) sum += expense_cents(static_cast<CostRole>(i));
  return sum;
}

std::vector<CostLedger::Event> CostLedger::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

CostLedger make_default_ledger() {
  CostLedger ledger;
  ledger.set_price(CostRole::StrongExplore, kDefaultStrongPricePer1k);
  ledger.set_price(CostRole::StrongExploit, kDefaultStrongPricePer1k);
  ledger.set_price(CostRole::WeakExplore, 0.0);
  ledger.set_price(CostRole::Extraction, 0.0);
  return ledger;
}

CompletionResult complete(CompletionBackend& backend, const CompletionRequest& request,
                          CostLedger& ledger, CostRole role) {
  request.validate();
  CompletionResult result = backend.complete(request);
  if (result.usage.prompt_tokens < 0 || result.usage.completion_tokens < 0) {
    throw BackendError("backend reported negative token usage", false);
  }
  ledger.record(role, result.usage);
  return result;
}

// ── Transcripts ─────────────────────────────────────────────────

ReplayMismatchError::ReplayMismatchError(size_t index_, const std::string& expected_fp_,
                                         const std::string& got_fp_)
    : BackendError("replay mismatch at step " + std::to_string(index_) + ": expected fingerprint " +
                       expected_fp_ + ", got " + got_fp_,
                   false),
      index(index_),
      expected_fp(expected_fp_),
      got_fp(got_fp_) {}

std::vector<TranscriptEntry> load_transcript(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open transcript file: " + path);
  std::vector<TranscriptEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("fp") || !j.contains("text")) {
      throw ConfigError("bad transcript record at " + path + ":" + std::to_string(line_no));
    }
    TranscriptEntry e;
    e.fp = j["fp"].get<std::string>();
    e.text = j["text"].get<std::string>();
    e.usage.prompt_tokens = j.value("prompt_tokens", 0ll);
    e.usage.completion_tokens = j.value("completion_tokens", 0ll);
    out.push_back(std::move(e));
  }
  return out;
}

std::string transcript_to_jsonl(const std::vector<TranscriptEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["fp"] = e.fp;
    j["text"] = e.text;
    j["prompt_tokens"] = e.usage.prompt_tokens;
    j["completion_tokens"] = e.usage.completion_tokens;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_transcript(const std::vector<TranscriptEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write transcript file: " + path);
  out << transcript_to_jsonl(entries);
}

ReplayBackend::ReplayBackend(std::vector<TranscriptEntry> entries) : entries_(std::move(entries)) {}

CompletionResult ReplayBackend::complete(const CompletionRequest& request) {
  if (in_call_.exchange(true)) {
    throw UsageError("replay backend used concurrently; transcripts are single-episode");
  }
  struct Reset {
    std::atomic<bool>& flag;
    ~Reset() { flag.store(false); }
  } reset{in_call_};

  std::string fp = prompt_fingerprint(request.prompt);
  if (next_ >= entries_.size()) {
    throw ReplayMismatchError(next_, "<end of transcript>", fp);
  }
  const auto& entry = entries_[next_];
  if (entry.fp != fp) {
    throw ReplayMismatchError(next_, entry.fp, fp);
  }
  ++next_;
  return CompletionResult{entry.text, entry.usage};
}

size_t ReplayBackend::remaining() const { return entries_.size() - next_; }

CompletionResult RecordingBackend::complete(const CompletionRequest& request) {
  CompletionResult result = inner_.complete(request);
  recorded_.push_back(TranscriptEntry{prompt_fingerprint(request.prompt), result.text, result.usage});
  return result;
}

}  // namespace wese::llm
