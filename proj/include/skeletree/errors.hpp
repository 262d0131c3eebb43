// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skeletree {

// Base of the error taxonomy; every failure raised by the library derives
// from this so callers can catch one type at the boundary.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileNotFound : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line_number)
      : Error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
  std::size_t line;
};

struct EmptyCloud : Error {
  using Error::Error;
};

struct EmptyInput : Error {
  using Error::Error;
};

struct MissingIntensity : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct DegenerateInput : Error {
  using Error::Error;
};

struct DegenerateExtent : Error {
  using Error::Error;
};

struct InvalidN : Error {
  using Error::Error;
};

struct OutOfExtent : Error {
  using Error::Error;
};

struct NotForeground : Error {
  using Error::Error;
};

struct EmptyGrid : Error {
  using Error::Error;
};

struct DegenerateFit : Error {
  using Error::Error;
};

struct NotAnEllipse : Error {
  using Error::Error;
};

struct EmptySlice : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

struct InvalidSpec : Error {
  using Error::Error;
};

struct InvalidCount : Error {
  using Error::Error;
};

struct NoRoot : Error {
  using Error::Error;
};

struct FilterRemovedEverything : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Wraps a stage failure inside the pipeline with the stage name.
struct PipelineError : Error {
  PipelineError(const std::string& stage_name, const std::string& msg)
      : Error(stage_name + ": " + msg), stage(stage_name) {}
  std::string stage;
};

}  // namespace skeletree
