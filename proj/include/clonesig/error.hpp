// Part of the clonesig project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clonesig {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Corpus ingestion failed (missing path, unreadable directory, ...).
class IngestError : public Error {
public:
  using Error::Error;
};

/// A package directory yielded no accepted source files.
class EmptyPackageError : public IngestError {
public:
  using IngestError::IngestError;
};

/// Source text could not be parsed. Carries the byte offset of the
/// offending token so callers can report line/column.
class ParseError : public Error {
public:
  ParseError(const std::string& what, uint32_t offset)
      : Error(what), offset_(offset) {}

  uint32_t offset() const { return offset_; }

private:
  uint32_t offset_;
};

/// A node kind fell outside the frozen vocabulary (adapter bug).
class VocabularyError : public Error {
public:
  using Error::Error;
};

/// Two clusterings do not cover the same package universe.
class EvaluationError : public Error {
public:
  using Error::Error;
};

/// Signature derivation or mutation violated its contract.
class SignatureError : public Error {
public:
  using Error::Error;
};

/// A persisted artifact is corrupt or internally inconsistent.
class IntegrityError : public Error {
public:
  using Error::Error;
};

/// Invalid pipeline configuration; names the offending field.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace clonesig
