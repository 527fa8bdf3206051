#include "liftbench/analysis.hpp"

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "liftbench/errors.hpp"

namespace liftbench {

namespace {

// Correctly rounded sum of `xs` (Shewchuk partials with a half-way
// correction), so the result depends only on the multiset of values and
// negating every input negates the sum exactly.
double exact_sum(std::span<const double> xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    lo = y - (hi - x);
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

}  // namespace

MeanSe clustered_mean_se(std::span<const ClusteredValue> values) {
  std::map<std::string, std::vector<double>> by_paper;
  std::vector<double> all;
  all.reserve(values.size());
  for (const auto& v : values) {
    by_paper[v.paper_id].push_back(v.x);
    all.push_back(v.x);
  }

  struct Cluster {
    double sum = 0.0;
    std::size_t size = 0;
  };
  std::vector<Cluster> clusters;
  for (const auto& [_, xs] : by_paper) clusters.push_back({exact_sum(xs), xs.size()});
  const double total = exact_sum(all);
  if (clusters.size() < 2) {
    throw TooFewClusters(fmt::format("need at least 2 papers, got {}", clusters.size()));
  }

  const auto n = static_cast<double>(all.size());
  const auto c = static_cast<double>(clusters.size());
  const double mean = total / n;
  double ss = 0.0;
  for (const auto& cl : clusters) {
    const double r = cl.sum - static_cast<double>(cl.size) * mean;
    ss += r * r;
  }
  const double var = c / (c - 1.0) * ss / (n * n);
  return {mean, std::sqrt(var), all.size(), clusters.size()};
}

LiftAggregate aggregate_lifts(const std::string& contrast_id, std::span<const CutValue> values) {
  std::vector<ClusteredValue> cv;
  cv.reserve(values.size());
  std::size_t positive = 0;
  for (const auto& v : values) {
    cv.push_back({v.paper_id, v.value});
    positive += v.value > 0.0 ? 1 : 0;
  }
  const MeanSe ms = clustered_mean_se(cv);
  LiftAggregate agg;
  agg.contrast_id = contrast_id;
  agg.mean = ms.mean;
  agg.clustered_se = ms.se;
  agg.n_cuts = ms.n;
  agg.n_papers = ms.clusters;
  agg.frac_positive = static_cast<double>(positive) / static_cast<double>(values.size());
  return agg;
}

std::vector<CutValue> paired_differences(std::span<const CutValue> lhs, std::span<const CutValue> rhs) {
  std::map<std::string, const CutValue*> right;
  for (const auto& r : rhs) {
    if (!right.emplace(r.cut_id, &r).second) throw CutSetMismatch("duplicate cut " + r.cut_id + " in rhs");
  }
  if (lhs.size() != rhs.size()) {
    throw CutSetMismatch(fmt::format("{} cuts vs {} cuts", lhs.size(), rhs.size()));
  }
  std::set<std::string> seen;
  std::vector<CutValue> diffs;
  diffs.reserve(lhs.size());
  for (const auto& l : lhs) {
    if (!seen.insert(l.cut_id).second) throw CutSetMismatch("duplicate cut " + l.cut_id + " in lhs");
    const auto it = right.find(l.cut_id);
    if (it == right.end()) throw CutSetMismatch("cut " + l.cut_id + " missing from rhs");
    if (it->second->paper_id != l.paper_id) throw CutSetMismatch("cut " + l.cut_id + " has inconsistent paper ids");
    diffs.push_back({l.cut_id, l.paper_id, l.value - it->second->value});
  }
  std::sort(diffs.begin(), diffs.end(), [](const CutValue& a, const CutValue& b) { return a.cut_id < b.cut_id; });
  return diffs;
}

LiftAggregate paired_contrast(const std::string& contrast_id, std::span<const CutValue> lhs,
                              std::span<const CutValue> rhs) {
  const auto diffs = paired_differences(lhs, rhs);
  return aggregate_lifts(contrast_id, diffs);
}

double normal_quantile(double p) {
  if (p <= 0.0) return -INFINITY;
  if (p >= 1.0) return INFINITY;
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

bool significance_flag(const LiftAggregate& agg, double alpha) {
  if (agg.clustered_se == 0.0) throw ZeroSE("contrast " + agg.contrast_id + " has zero standard error");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(fmt::format("alpha must be in (0, 1], got {}", alpha));
  return std::abs(agg.mean) / agg.clustered_se > normal_quantile(1.0 - alpha / 2.0);
}

std::vector<EcdfPoint> ecdf(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<EcdfPoint> out;
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error("median of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[(sorted.size() - 1) / 2];
}

std::vector<std::string> subset_by_baseline_quantile(std::span<const CutValue> baseline, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(fmt::format("quantile must be in (0, 1), got {}", q));
  std::vector<const CutValue*> order;
  order.reserve(baseline.size());
  for (const auto& b : baseline) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const CutValue* a, const CutValue* b) {
    return a->value != b->value ? a->value < b->value : a->cut_id < b->cut_id;
  });
  // small epsilon so q*n landing a hair under an integer still counts
  const auto take = static_cast<std::size_t>(std::floor(q * static_cast<double>(order.size()) + 1e-9));
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(order[i]->cut_id);
  return out;
}

}  // namespace liftbench
