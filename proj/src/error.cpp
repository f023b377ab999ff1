#include "error.hpp"

namespace relaxcrb {

const char *error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidTissue: return "InvalidTissue";
    case ErrorCode::InvalidProtocol: return "InvalidProtocol";
    case ErrorCode::NonFiniteModel: return "NonFiniteModel";
    case ErrorCode::DegenerateStep: return "DegenerateStep";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::CollinearVectors: return "CollinearVectors";
    case ErrorCode::NoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnitError: return "UnitError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::AllTrialsFailed: return "AllTrialsFailed";
    case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

} // namespace relaxcrb
