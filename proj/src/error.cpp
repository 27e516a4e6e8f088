#include "fracpod/error.hpp"

namespace fracpod {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "InvalidParameter";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::DivisionByZero: return "DivisionByZero";
        case ErrorKind::SpaceMismatch: return "SpaceMismatch";
        case ErrorKind::OutsideDomain: return "OutsideDomain";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::RankExceeded: return "RankExceeded";
        case ErrorKind::NonSymmetric: return "NonSymmetric";
        case ErrorKind::FactorizationFailure: return "FactorizationFailure";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

}  // namespace fracpod
