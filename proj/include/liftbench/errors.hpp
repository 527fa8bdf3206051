#pragma once

#include <stdexcept>
#include <string>

namespace liftbench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LIFTBENCH_DEFINE_ERROR(Name)              \
  class Name : public Error {                     \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Error(std::string(#Name ": ") + what) {} \
  };

// corpus_ingest
LIFTBENCH_DEFINE_ERROR(CorruptArchive)
LIFTBENCH_DEFINE_ERROR(NoTexFound)
LIFTBENCH_DEFINE_ERROR(NoRootCandidate)

// scaffolding
LIFTBENCH_DEFINE_ERROR(MissingZ)
LIFTBENCH_DEFINE_ERROR(InsufficientSource)
LIFTBENCH_DEFINE_ERROR(InvalidCondition)

// model_gateway
LIFTBENCH_DEFINE_ERROR(ProviderError)
LIFTBENCH_DEFINE_ERROR(BudgetExceeded)
LIFTBENCH_DEFINE_ERROR(AlignmentError)

// metrics
LIFTBENCH_DEFINE_ERROR(EmptyTarget)
LIFTBENCH_DEFINE_ERROR(MetricMismatch)

// analysis
LIFTBENCH_DEFINE_ERROR(TooFewClusters)
LIFTBENCH_DEFINE_ERROR(CutSetMismatch)
LIFTBENCH_DEFINE_ERROR(ZeroSE)

// report_cli
LIFTBENCH_DEFINE_ERROR(ConfigError)
LIFTBENCH_DEFINE_ERROR(MissingInput)

#undef LIFTBENCH_DEFINE_ERROR

}  // namespace liftbench
