#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fftp {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatU8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed container or file contents.
struct ParseError : Error {
  using Error::Error;
};

// Well-formed input we deliberately do not handle (e.g. non-PCM16 WAV).
struct UnsupportedError : Error {
  using Error::Error;
};

// Patch/window geometry that does not fit the input.
struct GeometryError : Error {
  using Error::Error;
};

// Tensor dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Input shorter than one analysis frame.
struct TooShortError : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// Metric is undefined for the given inputs (e.g. mAP with no positives).
struct MetricError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// NaN/Inf encountered where finite values are required (e.g. training loss).
struct NumericError : Error {
  using Error::Error;
};

// Carries the offending key path so the CLI can report it on exit code 2.
struct ConfigError : Error {
  ConfigError(std::string key, const std::string& msg)
      : Error(key + ": " + msg), key_path(std::move(key)) {}
  std::string key_path;
};

}  // namespace fftp
