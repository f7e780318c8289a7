#pragma once

#include <stdexcept>
#include <string>

namespace mpi {

/// Bad input files, malformed configuration or invalid arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A text-generation backend failed (credentials, transport, replay miss).
class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many completions could not be parsed into a Likert choice.
class InvalidResponsesError : public std::runtime_error {
 public:
  InvalidResponsesError(std::size_t invalid, std::size_t total)
      : std::runtime_error("too many invalid responses (" + std::to_string(invalid) + "/" +
                           std::to_string(total) + ")"),
        invalid_(invalid),
        total_(total) {}

  std::size_t invalid() const { return invalid_; }
  std::size_t total() const { return total_; }

 private:
  std::size_t invalid_;
  std::size_t total_;
};

}  // namespace mpi
