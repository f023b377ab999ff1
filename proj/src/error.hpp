#pragma once

#include <stdexcept>
#include <string>

namespace relaxcrb {

// Values are part of the C API (see relaxcrb.h) and must stay in sync.
enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    InvalidTissue = 2,
    InvalidProtocol = 3,
    NonFiniteModel = 4,
    DegenerateStep = 5,
    SingularInformation = 6,
    CollinearVectors = 7,
    NoFeasiblePoint = 8,
    ConfigError = 9,
    MissingField = 10,
    UnitError = 11,
    IoError = 12,
    AllTrialsFailed = 13,
    Internal = 99,
};

const char *error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace relaxcrb
