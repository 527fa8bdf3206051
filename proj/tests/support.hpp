#pragma once

// Helpers shared by the unit tests and the acceptance binary: synthetic TeX
// text, an in-memory tar.gz writer, the cluster bootstrap oracle and
// fixture-run plumbing.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liftbench/analysis.hpp"
#include "liftbench/config.hpp"
#include "liftbench/cuts.hpp"

namespace testsupport {

std::string fixtures_dir();
std::string golden_dir();
/// Fresh empty directory under the build tree.
std::string scratch_dir(const std::string& name);

/// Operator-free prose of exactly `n` bytes: lowercase words, spaces and
/// periods, no blank lines, no math.
std::string filler(std::size_t n, std::uint64_t seed);

/// Prose of exactly `n` bytes split into paragraphs by blank lines.
std::string filler_paragraphs(std::size_t n, std::size_t paragraph_len, std::uint64_t seed);

/// ustar image of the given (name, data) members, gzip-compressed.
std::string make_tar_gz(const std::vector<std::pair<std::string, std::string>>& members);
std::string gzip_bytes(const std::string& data);

/// Cluster bootstrap SE of the mean: resample whole papers with
/// replacement `resamples` times and take the SD of the pooled means.
double cluster_bootstrap_se(std::span<const liftbench::ClusteredValue> values, int resamples, std::uint64_t seed);

/// Every EquationCut invariant, checked from first principles against the
/// paper text. Returns one message per violation.
std::vector<std::string> equation_cut_violations(const liftbench::PaperSource& paper,
                                                 const std::vector<liftbench::EquationCut>& cuts,
                                                 const liftbench::EquationCutConfig& config = {});

/// Scaffold reconstruction checks for one cut: the true-suffix scaffold
/// holds the original equation contiguously, every condition scores the
/// same target, and the same-budget control has exactly B characters of
/// pre-equation source.
std::vector<std::string> scaffold_violations(const liftbench::PaperSource& paper, const liftbench::EquationCut& cut);

/// Papers from tests/fixtures/papers, sorted by id.
std::vector<liftbench::PaperSource> fixture_papers();

/// Run config for one of the committed fixture configs with output under
/// `out_dir`. The run id stays the one in the fixture.
liftbench::RunConfig fixture_config(const std::string& fixture_name, const std::string& out_dir);

}  // namespace testsupport
