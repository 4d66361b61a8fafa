#pragma once

#include <stdexcept>
#include <string>

namespace divrel {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// data / numerics
struct InvalidData : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct InvalidDirection : Error { using Error::Error; };
struct InvalidCovariance : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };

// valuation
struct DegenerateSpectrum : Error { using Error::Error; };
struct EmptySelection : Error { using Error::Error; };
struct InvalidWeight : Error { using Error::Error; };
struct InvalidAlpha : Error { using Error::Error; };

// tables / files
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

// protocol / transport
struct SessionError : Error { using Error::Error; };
struct ProtocolViolation : Error { using Error::Error; };
struct TransportError : Error { using Error::Error; };
struct TimeoutError : TransportError { using TransportError::TransportError; };

}  // namespace divrel
