#include "jamaica/errors.hpp"

namespace jamaica {

std::string_view errc_code(Errc code) noexcept {
  switch (code) {
    case Errc::duplicate_domain_name: return "duplicate_name";
    case Errc::duplicate_tag_name: return "duplicate_name";
    case Errc::empty_tag_list: return "empty_tag_list";
    case Errc::unknown_domain: return "unknown_domain";
    case Errc::unknown_tag: return "unknown_tag";
    case Errc::self_relation: return "self_relation";
    case Errc::invalid_interval: return "invalid_interval";
    case Errc::invalid_coordinates: return "invalid_coordinates";
    case Errc::invalid_confidence: return "invalid_confidence";
    case Errc::malformed_filter: return "malformed_filter";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::non_finite_feature: return "non_finite_feature";
    case Errc::insufficient_training: return "insufficient_training";
    case Errc::empty_batch: return "empty_batch";
    case Errc::bad_quantiles: return "bad_quantiles";
    case Errc::degenerate_range: return "degenerate_range";
    case Errc::unknown_class: return "unknown_class";
    case Errc::empty_model: return "empty_model";
    case Errc::unknown_job: return "unknown_job";
    case Errc::wrong_state: return "wrong_state";
    case Errc::missing_labels: return "missing_labels";
    case Errc::invalid_config: return "invalid_config";
    case Errc::malformed_json: return "malformed_json";
    case Errc::schema_violation: return "schema_violation";
    case Errc::broker_unreachable: return "broker_unreachable";
    case Errc::unknown_subscription: return "unknown_subscription";
    case Errc::bad_timestamp: return "bad_timestamp";
    case Errc::journal_error: return "journal_error";
    case Errc::journal_corrupt: return "journal_corrupt";
    case Errc::file_not_found: return "file_not_found";
    case Errc::bad_row: return "bad_row";
    case Errc::bad_spec: return "bad_spec";
    case Errc::empty_source: return "empty_source";
    case Errc::internal: return "internal";
  }
  return "internal";
}

int errc_http_status(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_json:
      return 400;
    case Errc::unknown_domain:
    case Errc::unknown_tag:
    case Errc::unknown_job:
    case Errc::unknown_subscription:
    case Errc::file_not_found:
      return 404;
    case Errc::duplicate_domain_name:
    case Errc::duplicate_tag_name:
    case Errc::wrong_state:
    case Errc::insufficient_training:
      return 409;
    case Errc::empty_tag_list:
    case Errc::self_relation:
    case Errc::invalid_interval:
    case Errc::invalid_coordinates:
    case Errc::invalid_confidence:
    case Errc::malformed_filter:
    case Errc::dimension_mismatch:
    case Errc::non_finite_feature:
    case Errc::empty_batch:
    case Errc::bad_quantiles:
    case Errc::degenerate_range:
    case Errc::unknown_class:
    case Errc::empty_model:
    case Errc::missing_labels:
    case Errc::invalid_config:
    case Errc::schema_violation:
    case Errc::bad_timestamp:
    case Errc::bad_row:
    case Errc::bad_spec:
    case Errc::empty_source:
      return 422;
    case Errc::broker_unreachable:
      return 502;
    case Errc::journal_error:
    case Errc::journal_corrupt:
      return 503;
    case Errc::internal:
      return 500;
  }
  return 500;
}

}  // namespace jamaica
