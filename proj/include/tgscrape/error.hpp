#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tgscrape {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A single invariant violation, tagged with the offending field or flag.
struct FieldIssue {
  std::string field;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldIssue> issues);
  ValidationError(std::string field, std::string message);

  const std::vector<FieldIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<FieldIssue> issues_;
};

// Transport faults, split by the level at which the engine contains them.
class ChannelError : public Error {
 public:
  using Error::Error;
};

class ThreadError : public Error {
 public:
  using Error::Error;
};

class MessageError : public Error {
 public:
  using Error::Error;
};

// Archive I/O and format errors.
class SinkError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace tgscrape
