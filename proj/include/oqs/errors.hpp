// errors.hpp — exception types thrown across the library. Every message is
// prefixed "<module>/<operation>:" so failures surfaced at the CLI name their
// origin.

#pragma once

#include <stdexcept>
#include <string>

namespace oqs {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error {
    using Error::Error;
};
struct SizeLimitError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};
struct NormalizationError : Error {
    using Error::Error;
};
struct QuadratureError : Error {
    using Error::Error;
};
struct StepError : Error {
    using Error::Error;
};
struct CutoffError : Error {
    using Error::Error;
};
struct OverflowGuardError : Error {
    using Error::Error;
};
struct IncommensurableError : Error {
    using Error::Error;
};
struct ContractError : Error {
    using Error::Error;
};
struct CompletenessError : Error {
    using Error::Error;
};
struct InsufficientDataError : Error {
    using Error::Error;
};
struct EmptyGridError : Error {
    using Error::Error;
};
struct NotAStateError : Error {
    using Error::Error;
};
struct NotProductError : Error {
    using Error::Error;
};
struct WrongKindError : Error {
    using Error::Error;
};
struct UnsupportedOrderError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace oqs
