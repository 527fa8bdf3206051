#pragma once

// Model gateway: the only concurrent part of the pipeline. Predictor and
// scorer calls go through a content-addressed cache, bounded per-provider
// parallelism, a spend meter and exponential-backoff retries.

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "liftbench/cache.hpp"
#include "liftbench/jsonl.hpp"
#include "liftbench/scaffold.hpp"

namespace liftbench {

enum class ReasoningEffort { None, Low, Medium, High };

std::string_view effort_name(ReasoningEffort e);
ReasoningEffort parse_effort(std::string_view s);

struct PredictorSetting {
  std::string provider_id;
  std::string model_id;
  ReasoningEffort reasoning_effort = ReasoningEffort::None;
  double temperature = 1.0;
  std::size_t max_forecast_chars = 0;  // 0: the cut's own budget applies

  /// "provider/model:effort"
  std::string label() const;
  /// Parses "provider/model:effort"; effort defaults to none.
  static PredictorSetting parse(std::string_view spec);
};

Json to_json(const PredictorSetting& s);
PredictorSetting predictor_setting_from_json(const Json& j);

/// What a predictor backend returns for one prompt.
struct PredictorResponse {
  std::string text;
  std::optional<long> hidden_reasoning_tokens;
  std::optional<long> visible_tokens;
  long latency_ms = 0;
};

struct Forecast {
  std::string cut_id;
  PredictorSetting setting;
  int sample = 0;
  std::string z_raw;
  std::string z_truncated;
  std::optional<long> hidden_reasoning_tokens;
  std::optional<long> visible_tokens;
  long latency_ms = 0;
};

Json to_json(const Forecast& f);
Forecast forecast_from_json(const Json& j);

/// Scorer wire token: text plus natural-log probability. The first token of
/// an echoed prompt may carry no logprob.
struct WireToken {
  std::string text;
  std::optional<double> logprob;
};

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  double logprob = 0.0;
};

struct ScoreRecord {
  std::string cut_id;
  std::string paper_id;
  std::string condition;
  std::string scorer_id;
  std::size_t prompt_char_len = 0;
  std::vector<TokenSpan> tokens;  // spans over prompt_text + target_text
  std::vector<std::size_t> target_token_indices;
  bool straddle_flag = false;

  std::vector<double> target_lambdas() const;
};

Json to_json(const ScoreRecord& r);
ScoreRecord score_record_from_json(const Json& j);

/// Thrown by backends for failures worth retrying (timeouts, 429, 5xx).
class RetryableFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PredictorBackend {
 public:
  virtual ~PredictorBackend() = default;
  virtual PredictorResponse generate(const std::string& prompt, const PredictorSetting& setting) = 0;
};

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  /// Tokens covering `text` in order, each with its log-probability given
  /// everything before it.
  virtual std::vector<WireToken> echo_logprobs(const std::string& text, const std::string& model) = 0;
};

/// Rebuilds character spans from cumulative token lengths. Throws
/// AlignmentError when the tokens do not tile `text` exactly.
std::vector<TokenSpan> spans_from_wire(std::span<const WireToken> tokens, std::string_view text);

struct TargetAlignment {
  std::vector<std::size_t> indices;
  bool straddle = false;
};

/// Target tokens are those whose span ends past the prompt; a token
/// crossing the boundary is assigned to the target and flagged.
TargetAlignment align_target_tokens(std::span<const TokenSpan> tokens, std::size_t prompt_char_len);

class SpendMeter {
 public:
  explicit SpendMeter(double cap = INFINITY) : cap_(cap) {}
  /// Throws BudgetExceeded if the charge would pass the cap.
  void charge(double units);
  double spent() const;
  double cap() const { return cap_; }

 private:
  mutable std::mutex mu_;
  double cap_;
  double spent_ = 0.0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
};

struct ProviderLimits {
  int max_in_flight = 4;
  double cost_per_call = 0.0;
};

struct GatewayStats {
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

class ModelGateway {
 public:
  ModelGateway(std::shared_ptr<ResponseCache> cache, std::shared_ptr<SpendMeter> spend, RetryPolicy retry = {});

  void register_predictor(const std::string& provider_id, std::shared_ptr<PredictorBackend> backend,
                          ProviderLimits limits = {});
  void register_scorer(const std::string& provider_id, std::shared_ptr<ScorerBackend> backend,
                       ProviderLimits limits = {});

  /// z_truncated is cut to `budget` characters (or setting.max_forecast_chars
  /// when that is smaller and nonzero). Cached by (prompt, setting, sample).
  Forecast generate_forecast(const std::string& prompt, const PredictorSetting& setting, std::size_t budget,
                             const std::string& cut_id, int sample = 0);

  /// scorer_id is "provider/model". Cached by (prompt, target, scorer_id).
  ScoreRecord score_target(const ScoredPrompt& sp, const std::string& scorer_id, const std::string& cut_id,
                           const std::string& condition);

  GatewayStats stats() const;

 private:
  struct Provider {
    std::shared_ptr<PredictorBackend> predictor;
    std::shared_ptr<ScorerBackend> scorer;
    ProviderLimits limits;
    std::unique_ptr<std::counting_semaphore<1024>> slots;
  };

  Provider& provider(const std::string& id);
  template <class F>
  auto call_with_retry(Provider& p, const std::string& what, F&& f) -> decltype(f());

  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<SpendMeter> spend_;
  RetryPolicy retry_;
  std::mutex providers_mu_;
  std::map<std::string, std::unique_ptr<Provider>> providers_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

/// Splits "provider/model" at the first slash.
std::pair<std::string, std::string> split_model_id(std::string_view id);

}  // namespace liftbench
