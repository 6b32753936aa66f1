#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wifiloc/point.hpp"

namespace wifiloc {

/// Coarse failure class; the CLI maps it onto its exit codes.
enum class ErrorKind {
  kUsage,      // bad caller input / flags
  kData,       // malformed or inconsistent data
  kNumerical,  // the math could not produce an answer
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  /// Stable machine-readable identifier, e.g. "parse_error".
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(long line, const std::string& what)
      : Error(ErrorKind::kData, "parse_error",
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what)
      : Error(ErrorKind::kData, "integrity_error", what) {}
};

class SchemaError : public Error {
 public:
  SchemaError(std::int64_t node_id, const std::string& what)
      : Error(ErrorKind::kData, "schema_error",
              "node " + std::to_string(node_id) + ": " + what),
        node_id_(node_id) {}
  std::int64_t node_id() const { return node_id_; }

 private:
  std::int64_t node_id_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::kUsage, "domain_error", what) {}
};

class UnderdeterminedError : public Error {
 public:
  explicit UnderdeterminedError(const std::string& what)
      : Error(ErrorKind::kNumerical, "underdetermined", what) {}
};

/// Anchors too close to a line (or plane) to pin the solution down.
class DegenerateGeometryError : public Error {
 public:
  DegenerateGeometryError(const std::string& what, LocalPoint3 best_effort)
      : Error(ErrorKind::kNumerical, "degenerate_geometry", what),
        best_effort_(best_effort) {}
  const LocalPoint3& best_effort() const { return best_effort_; }

 private:
  LocalPoint3 best_effort_;
};

class RankError : public Error {
 public:
  explicit RankError(const std::string& what)
      : Error(ErrorKind::kNumerical, "rank_error", what) {}
};

class InsufficientPairsError : public Error {
 public:
  InsufficientPairsError(std::string pair_class, const std::string& what)
      : Error(ErrorKind::kData, "insufficient_pairs", what),
        pair_class_(std::move(pair_class)) {}
  /// "los", "nlos" or "surveyed_aps".
  const std::string& pair_class() const { return pair_class_; }

 private:
  std::string pair_class_;
};

class InsufficientSignalError : public Error {
 public:
  explicit InsufficientSignalError(const std::string& what)
      : Error(ErrorKind::kData, "insufficient_signal", what) {}
};

class InsufficientAnchorsError : public Error {
 public:
  InsufficientAnchorsError(std::vector<std::string> unknown, const std::string& what)
      : Error(ErrorKind::kData, "insufficient_anchors", what),
        unknown_(std::move(unknown)) {}
  const std::vector<std::string>& unknown_ap_ids() const { return unknown_; }

 private:
  std::vector<std::string> unknown_;
};

class EmptyError : public Error {
 public:
  EmptyError(std::string code, const std::string& what)
      : Error(ErrorKind::kData, std::move(code), what) {}
};

}  // namespace wifiloc
