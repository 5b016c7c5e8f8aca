#pragma once

#include <stdexcept>
#include <string>

namespace ecmbq {

// Broad failure classes; the CLI maps them onto process exit codes.
enum class ErrorKind { Config = 2, Data = 3, Numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

#define ECMBQ_DEFINE_ERROR(Name, Kind)                                                     \
    class Name : public Error {                                                            \
    public:                                                                                \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name ": " + what) {} \
    };

ECMBQ_DEFINE_ERROR(ConfigError, Config)
ECMBQ_DEFINE_ERROR(SchemaError, Data)
ECMBQ_DEFINE_ERROR(IoError, Data)
ECMBQ_DEFINE_ERROR(InvalidGrid, Data)
ECMBQ_DEFINE_ERROR(MissingMetadata, Data)
ECMBQ_DEFINE_ERROR(DegenerateParams, Numeric)
ECMBQ_DEFINE_ERROR(NonPsdCovariance, Numeric)
ECMBQ_DEFINE_ERROR(CholeskyFailure, Numeric)
ECMBQ_DEFINE_ERROR(NegativeRadicand, Numeric)
ECMBQ_DEFINE_ERROR(DegenerateWeights, Numeric)
ECMBQ_DEFINE_ERROR(NumericOverflow, Numeric)

#undef ECMBQ_DEFINE_ERROR

}  // namespace ecmbq
