#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jointgt {

// Base for every error the library raises on bad input or misuse.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// API called out of contract (double backward, missing gradients, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

class GraphHasNoTriples : public Error {
 public:
  GraphHasNoTriples() : Error("knowledge graph has no triples") {}
};

class CorpusParseError : public Error {
 public:
  CorpusParseError(std::size_t line, const std::string& what)
      : Error("corpus line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus is empty") {}
};

class MarginalError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace jointgt
