#pragma once

// Softened per-token scores over target log-likelihoods (natural log).
// Every score is a per-token mean of a transformed lambda, so higher is
// better and 0 is the maximum.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace liftbench {

class TokenLogLikelihoods {
 public:
  /// Throws EmptyTarget when empty, Error when any value is > 0 or NaN.
  explicit TokenLogLikelihoods(std::vector<double> lambdas);

  std::span<const double> lambdas() const { return lambdas_; }
  std::size_t t_count() const { return lambdas_.size(); }

 private:
  std::vector<double> lambdas_;
};

struct MetricKind {
  enum class Family { RawLL, ClipLL, SqrtLoss, LogOnePlus };

  Family family = Family::ClipLL;
  double k = 2.0;  // clip floor, ClipLL only

  static MetricKind raw_ll() { return {Family::RawLL, 0.0}; }
  static MetricKind clip_ll(double k);
  static MetricKind sqrt_loss() { return {Family::SqrtLoss, 0.0}; }
  static MetricKind log_one_plus() { return {Family::LogOnePlus, 0.0}; }

  /// "raw_ll", "clip_ll_2", "sqrt_loss", "log_one_plus", ...
  std::string name() const;
  static MetricKind parse(std::string_view name);

  bool operator==(const MetricKind&) const = default;
};

/// raw_ll, clip_ll_{2,3,5}, sqrt_loss, log_one_plus.
std::vector<MetricKind> standard_metric_suite();

/// Per-token transform: lambda, max(lambda, -k), -sqrt(-lambda), -log(1 - lambda).
double transform(double lambda, MetricKind kind);

double score(const TokenLogLikelihoods& lams, MetricKind kind);

/// Score over the first min(n, T) tokens. n must be >= 1.
double window_score(const TokenLogLikelihoods& lams, std::size_t n, MetricKind kind);

/// Window sizes reported for prose continuations.
inline constexpr std::size_t kStandardWindows[] = {50, 100, 200, 400};

double lift(double cond_score, double control_score);

/// A score tagged with what it was computed from, so lifts between
/// incompatible scores are rejected.
struct MetricValue {
  double value = 0.0;
  MetricKind kind;
  std::string scorer_id;
  std::string target_digest;
  std::optional<std::size_t> window;
};

/// Throws MetricMismatch unless metric, scorer, target and window agree.
double lift(const MetricValue& cond, const MetricValue& control);

}  // namespace liftbench
