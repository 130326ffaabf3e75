#pragma once

#include <stdexcept>
#include <string>

namespace dabench {

/// Base of every error the library throws. The `kind()` string is stable and
/// used by the CLI to choose an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DABENCH_DEFINE_ERROR(Name, tag)                                 \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(tag, what) {}        \
  };

DABENCH_DEFINE_ERROR(SchemaError, "schema")
DABENCH_DEFINE_ERROR(ParseError, "parse")
DABENCH_DEFINE_ERROR(EmptyInputError, "empty-input")
DABENCH_DEFINE_ERROR(ProtocolError, "invalid-protocol")
DABENCH_DEFINE_ERROR(StratificationError, "stratification")
DABENCH_DEFINE_ERROR(ShapeError, "shape")
DABENCH_DEFINE_ERROR(DegenerateDomainError, "degenerate-domain")
DABENCH_DEFINE_ERROR(DegenerateDataError, "degenerate-data")
DABENCH_DEFINE_ERROR(DegenerateLabelsError, "degenerate-labels")
DABENCH_DEFINE_ERROR(NumericError, "numeric")
DABENCH_DEFINE_ERROR(DesignError, "design")
DABENCH_DEFINE_ERROR(RangeError, "out-of-range")
DABENCH_DEFINE_ERROR(BoundaryError, "boundary")
DABENCH_DEFINE_ERROR(ConfigError, "config")
DABENCH_DEFINE_ERROR(IoError, "io")

#undef DABENCH_DEFINE_ERROR

}  // namespace dabench
