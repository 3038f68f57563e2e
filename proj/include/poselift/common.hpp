// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace poselift {

// Every failure mode in the library maps to one of these codes so callers
// (and tests) can react to the condition instead of parsing messages.
enum class ErrorCode {
    shape_mismatch,
    axis_out_of_range,
    not_scalar,
    detached_from_tape,
    batch_too_small,
    invalid_probability,
    kernel_too_large,
    missing_pair_weight,
    index_out_of_range,
    duplicate_edge,
    self_loop,
    disconnected_graph,
    zero_row,
    invalid_hop_range,
    invalid_ratio,
    invalid_spec,
    degenerate_configuration,
    parse_error,
    joint_count_mismatch,
    invalid_image_size,
    empty_dataset,
    config_invalid,
    io_failure,
    shape_conflict,
    version_mismatch,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace poselift
