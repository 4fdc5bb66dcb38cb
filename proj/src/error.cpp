#include "jfd/error.hpp"

namespace jfd {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "invalid input";
    case Errc::parameter_mismatch: return "parameter mismatch";
    case Errc::capacity: return "insufficient capacity";
    case Errc::wrong_grant: return "wrong grant";
    case Errc::corrupted_grant: return "corrupted grant";
    case Errc::infeasible_parameters: return "infeasible parameters";
    case Errc::missing_file: return "missing file";
    case Errc::io: return "i/o error";
    case Errc::malformed_record: return "malformed record";
    case Errc::duplicate_record: return "duplicate record";
    case Errc::unsupported_format: return "unsupported format";
    case Errc::unsupported_depth: return "unsupported depth";
    case Errc::truncated: return "truncated data";
    case Errc::bad_magic: return "bad magic";
    case Errc::version_mismatch: return "version mismatch";
    case Errc::size_mismatch: return "size mismatch";
    case Errc::corrupt_container: return "corrupt container";
  }
  return "unknown error";
}

}  // namespace jfd
