#pragma once

#include <stdexcept>
#include <string>

namespace jfd {

enum class Errc {
  invalid_input,
  parameter_mismatch,
  capacity,
  wrong_grant,
  corrupted_grant,
  infeasible_parameters,
  missing_file,
  io,
  malformed_record,
  duplicate_record,
  unsupported_format,
  unsupported_depth,
  truncated,
  bad_magic,
  version_mismatch,
  size_mismatch,
  corrupt_container,
};

const char* to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace jfd
