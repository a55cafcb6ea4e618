#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jamaica {

// Machine-readable failure codes. Every code maps to exactly one HTTP
// (status, wire code) pair; see errc_http_status / errc_code.
enum class Errc {
  duplicate_domain_name,
  duplicate_tag_name,
  empty_tag_list,
  unknown_domain,
  unknown_tag,
  self_relation,
  invalid_interval,
  invalid_coordinates,
  invalid_confidence,
  malformed_filter,
  dimension_mismatch,
  non_finite_feature,
  insufficient_training,
  empty_batch,
  bad_quantiles,
  degenerate_range,
  unknown_class,
  empty_model,
  unknown_job,
  wrong_state,
  missing_labels,
  invalid_config,
  malformed_json,
  schema_violation,
  broker_unreachable,
  unknown_subscription,
  bad_timestamp,
  journal_error,
  journal_corrupt,
  file_not_found,
  bad_row,
  bad_spec,
  empty_source,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Wire code carried in HTTP error envelopes and CLI messages. The two
// duplicate-name failures share the "duplicate_name" code on purpose.
std::string_view errc_code(Errc code) noexcept;

// 4xx for caller faults, 5xx for internal ones.
int errc_http_status(Errc code) noexcept;

[[noreturn]] inline void raise(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace jamaica
