#pragma once

#include <stdexcept>
#include <string>

namespace mmfuse {

// All library failures derive from Error so the CLI can map them to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MMFUSE_DEFINE_ERROR(Name)              \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

MMFUSE_DEFINE_ERROR(MissingFile);
MMFUSE_DEFINE_ERROR(SchemaError);
MMFUSE_DEFINE_ERROR(UnknownColumn);
MMFUSE_DEFINE_ERROR(InvalidK);
MMFUSE_DEFINE_ERROR(DegenerateSplit);
MMFUSE_DEFINE_ERROR(AllMissingColumn);
MMFUSE_DEFINE_ERROR(RankError);
MMFUSE_DEFINE_ERROR(SingleClassError);
MMFUSE_DEFINE_ERROR(ShapeMismatch);
MMFUSE_DEFINE_ERROR(DivergenceError);
MMFUSE_DEFINE_ERROR(InvalidProbability);
MMFUSE_DEFINE_ERROR(LengthMismatch);
MMFUSE_DEFINE_ERROR(UndefinedMetric);
MMFUSE_DEFINE_ERROR(ConfigError);

#undef MMFUSE_DEFINE_ERROR

}  // namespace mmfuse
