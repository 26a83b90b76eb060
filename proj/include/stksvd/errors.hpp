#pragma once

#include <stdexcept>
#include <string>

namespace stksvd {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct ZeroColumn : Error {
  using Error::Error;
};
struct SparsityOutOfRange : Error {
  using Error::Error;
};
struct UnusedAtom : Error {
  using Error::Error;
};
struct IndexOutOfRange : Error {
  using Error::Error;
};
struct TooFewSignals : Error {
  using Error::Error;
};
struct UnknownLabel : Error {
  using Error::Error;
};
struct NonPositiveSigma : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct LabelCoverage : Error {
  using Error::Error;
};
struct NoOverlap : Error {
  using Error::Error;
};
struct NonPositiveDims : Error {
  using Error::Error;
};
struct EmptyLowDictionary : Error {
  using Error::Error;
};
struct FileNotFound : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct EmptyGroundTruth : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace stksvd
