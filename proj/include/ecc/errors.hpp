#pragma once

#include <stdexcept>
#include <string>

namespace ecc {

// Exit-code families used by the CLI.
enum class ErrorClass { Config = 2, Numerical = 3, Invariant = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define ECC_DEFINE_ERROR(Name, Cls)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, #Name ": " + what) {} \
  };

ECC_DEFINE_ERROR(ConfigError, Config)
ECC_DEFINE_ERROR(DimensionError, Config)
ECC_DEFINE_ERROR(CauchySchwarzViolation, Config)
ECC_DEFINE_ERROR(SizeMismatch, Config)
ECC_DEFINE_ERROR(NonIntegrable, Numerical)
ECC_DEFINE_ERROR(QuadratureFailure, Numerical)
ECC_DEFINE_ERROR(SolveFailure, Numerical)
ECC_DEFINE_ERROR(DegenerateNormalizer, Numerical)
ECC_DEFINE_ERROR(AllDegenerate, Numerical)
ECC_DEFINE_ERROR(ZeroDirection, Numerical)
ECC_DEFINE_ERROR(InvariantViolation, Invariant)

#undef ECC_DEFINE_ERROR

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace ecc
