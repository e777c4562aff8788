/**
 * Copyright (c) 2026 The parabench authors.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace parabench {

// Machine-readable failure codes. The CLI prints the code name on stderr and
// maps validation-class codes to exit 3, everything else to exit 1.
enum class ErrorCode {
  zero_vector,
  bad_magic,
  bad_header,
  truncated_payload,
  non_finite_value,
  dim_mismatch,
  k_out_of_range,
  list_too_short,
  invalid_k,
  duplicate_index,
  not_same_permutation_domain,
  empty_relevance_set,
  label_out_of_range,
  zero_variance,
  out_of_range,
  invalid_config,
  diverged_training,
  shape_mismatch,
  batch_too_small,
  bad_manifest,
  io_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::bad_header: return "BadHeader";
    case ErrorCode::truncated_payload: return "TruncatedPayload";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::dim_mismatch: return "DimMismatch";
    case ErrorCode::k_out_of_range: return "KOutOfRange";
    case ErrorCode::list_too_short: return "ListTooShort";
    case ErrorCode::invalid_k: return "InvalidK";
    case ErrorCode::duplicate_index: return "DuplicateIndex";
    case ErrorCode::not_same_permutation_domain: return "NotSamePermutationDomain";
    case ErrorCode::empty_relevance_set: return "EmptyRelevanceSet";
    case ErrorCode::label_out_of_range: return "LabelOutOfRange";
    case ErrorCode::zero_variance: return "ZeroVariance";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::diverged_training: return "DivergedTraining";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::batch_too_small: return "BatchTooSmall";
    case ErrorCode::bad_manifest: return "BadManifest";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

// Errors raised before any computation touches the data (bad configs and
// malformed manifests) are "validation" failures for exit-code purposes.
inline bool is_validation_error(ErrorCode code) {
  return code == ErrorCode::invalid_config || code == ErrorCode::bad_manifest;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace parabench
