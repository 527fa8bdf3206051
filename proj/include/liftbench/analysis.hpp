#pragma once

// Aggregation of per-cut lifts: paper-clustered means and standard errors,
// paired contrasts, significance under a normal approximation, ECDFs and
// baseline-quantile subsets.
//
// Sums are correctly rounded, so results are bit-identical under any
// permutation of cuts or papers and flip sign exactly when every input does.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace liftbench {

struct ClusteredValue {
  std::string paper_id;
  double x = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::size_t clusters = 0;
};

/// mean = sum(x)/n and the cluster-robust SE
///   se^2 = C/(C-1) * sum_c (S_c - n_c * mean)^2 / n^2
/// with C clusters, S_c the cluster sums and n_c the cluster sizes.
/// Throws TooFewClusters with fewer than two distinct papers.
MeanSe clustered_mean_se(std::span<const ClusteredValue> values);

struct CutValue {
  std::string cut_id;
  std::string paper_id;
  double value = 0.0;
};

struct LiftAggregate {
  std::string contrast_id;
  double mean = 0.0;
  double clustered_se = 0.0;
  std::size_t n_cuts = 0;
  std::size_t n_papers = 0;
  std::optional<double> frac_positive;
};

/// Aggregates per-cut values that are already lifts.
LiftAggregate aggregate_lifts(const std::string& contrast_id, std::span<const CutValue> values);

/// Per-cut lhs - rhs over identical cut sets (CutSetMismatch otherwise),
/// with the fraction of strictly positive differences.
LiftAggregate paired_contrast(const std::string& contrast_id, std::span<const CutValue> lhs,
                              std::span<const CutValue> rhs);

/// Per-cut differences lhs - rhs, ordered by cut_id.
std::vector<CutValue> paired_differences(std::span<const CutValue> lhs, std::span<const CutValue> rhs);

/// Standard normal quantile.
double normal_quantile(double p);

/// |mean| / se > z(1 - alpha/2). Throws ZeroSE when se == 0.
bool significance_flag(const LiftAggregate& agg, double alpha);

struct EcdfPoint {
  double x = 0.0;
  double f = 0.0;
};

/// Right-continuous step ECDF at each distinct value, ascending.
std::vector<EcdfPoint> ecdf(std::span<const double> values);

/// Lower median for even counts. Throws Error when empty.
double median(std::span<const double> values);

/// The floor(q * n) cut ids with the smallest baseline lift, ties by cut_id.
std::vector<std::string> subset_by_baseline_quantile(std::span<const CutValue> baseline, double q);

}  // namespace liftbench
