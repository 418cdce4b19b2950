#pragma once

#include <stdexcept>
#include <string>

namespace pwolff {

// Input/file problems (malformed CSV, bad config values, missing files).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Time stepping aborted: NaN detected or a stability check failed.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric routine could not deliver its contract (bracket exhausted,
// scan not stabilized). Reported, never silently clamped.
struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pwolff
