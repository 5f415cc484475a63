#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace ducfem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mesh failed one of its structural invariants.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Linear solve failure. `residual()` is the last relative residual (iterative)
/// or a reciprocal condition estimate (dense).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class RankError : public Error {
 public:
  RankError(const std::string& what, Eigen::Index attainable)
      : Error(what + " (attainable rank " + std::to_string(attainable) + ")"),
        attainable_(attainable) {}
  Eigen::Index attainable_rank() const noexcept { return attainable_; }

 private:
  Eigen::Index attainable_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ducfem
