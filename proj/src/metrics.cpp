#include "liftbench/metrics.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

#include "liftbench/errors.hpp"

namespace liftbench {

TokenLogLikelihoods::TokenLogLikelihoods(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.empty()) throw EmptyTarget("no target tokens to score");
  for (double l : lambdas_) {
    if (std::isnan(l) || l > 0.0) throw Error(fmt::format("invalid token log-likelihood {}", l));
  }
}

MetricKind MetricKind::clip_ll(double k) {
  if (!(k > 0.0)) throw Error(fmt::format("clip_ll floor must be positive, got {}", k));
  return {Family::ClipLL, k};
}

std::string MetricKind::name() const {
  switch (family) {
    case Family::RawLL:
      return "raw_ll";
    case Family::ClipLL:
      return fmt::format("clip_ll_{}", k);
    case Family::SqrtLoss:
      return "sqrt_loss";
    case Family::LogOnePlus:
      return "log_one_plus";
  }
  return "unknown";
}

MetricKind MetricKind::parse(std::string_view name) {
  if (name == "raw_ll") return raw_ll();
  if (name == "sqrt_loss") return sqrt_loss();
  if (name == "log_one_plus") return log_one_plus();
  constexpr std::string_view clip = "clip_ll_";
  if (name.starts_with(clip)) {
    const std::string k(name.substr(clip.size()));
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(k, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == k.size() && used > 0) return clip_ll(v);
  }
  throw Error(fmt::format("unknown metric '{}'", name));
}

std::vector<MetricKind> standard_metric_suite() {
  return {MetricKind::raw_ll(),    MetricKind::clip_ll(2),    MetricKind::clip_ll(3),
          MetricKind::clip_ll(5), MetricKind::sqrt_loss(), MetricKind::log_one_plus()};
}

double transform(double lambda, MetricKind kind) {
  switch (kind.family) {
    case MetricKind::Family::RawLL:
      return lambda;
    case MetricKind::Family::ClipLL:
      return std::max(lambda, -kind.k);
    case MetricKind::Family::SqrtLoss:
      return -std::sqrt(-lambda);
    case MetricKind::Family::LogOnePlus:
      return -std::log1p(-lambda);
  }
  return lambda;
}

double window_score(const TokenLogLikelihoods& lams, std::size_t n, MetricKind kind) {
  if (n == 0) throw Error("window size must be >= 1");
  const auto all = lams.lambdas();
  const auto used = all.first(std::min(n, all.size()));
  double sum = 0.0;
  for (double l : used) sum += transform(l, kind);
  return sum / static_cast<double>(used.size());
}

double score(const TokenLogLikelihoods& lams, MetricKind kind) { return window_score(lams, lams.t_count(), kind); }

double lift(double cond_score, double control_score) { return cond_score - control_score; }

double lift(const MetricValue& cond, const MetricValue& control) {
  if (!(cond.kind == control.kind)) {
    throw MetricMismatch(cond.kind.name() + " vs " + control.kind.name());
  }
  if (cond.scorer_id != control.scorer_id) throw MetricMismatch("scorer " + cond.scorer_id + " vs " + control.scorer_id);
  if (cond.target_digest != control.target_digest) throw MetricMismatch("different scored targets");
  if (cond.window != control.window) throw MetricMismatch("different scoring windows");
  return lift(cond.value, control.value);
}

}  // namespace liftbench
