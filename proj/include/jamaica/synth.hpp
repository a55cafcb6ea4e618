#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jamaica/observation.hpp"

namespace jamaica {

// Parameters for the synthetic PM10-style experiment: a clean training
// archive plus a stream salted with negative readings (sensor malfunctions)
// and values above the danger limit.
struct SynthSpec {
  std::size_t n_train = 1000;
  std::size_t n_stream = 40000;
  double band_low = 5.0;
  double band_high = 45.0;
  double frac_negative = 0.05;
  double frac_high = 0.03;
  std::uint64_t seed = 42;
  // High anomalies are drawn from (limit, limit + 50]; keeping limit at or
  // above band_high guarantees they sit strictly outside a [0, limit] band.
  double limit = 50.0;
  std::string entity_id = "urn:oc:entity:synth:1";
  std::string entity_type = "AirQualityObserved";
  std::string attribute = "PM10";
  // Stream rows start here, spaced step_ms apart; training rows end just
  // before it on the same spacing.
  std::int64_t start_unix_ms = 1451606400000;  // 2016-01-01T00:00:00.000Z
  std::int64_t step_ms = 150000;               // 6 readings per 15 minutes

  void validate() const;  // raises bad_spec
};

struct SynthData {
  std::vector<Observation> train;
  std::vector<Observation> stream;
  std::size_t negative_rows = 0;
  std::size_t high_rows = 0;
};

// Deterministic for a given spec: the generator consumes its RNG in a fixed
// order (training values, position shuffle, stream values).
SynthData generate_synth_data(const SynthSpec& spec);

struct SynthResult {
  std::filesystem::path train_path;
  std::filesystem::path stream_path;
  std::size_t train_rows = 0;
  std::size_t stream_rows = 0;
  std::size_t negative_rows = 0;
  std::size_t high_rows = 0;
};

// Writes <out_dir>/train.csv and <out_dir>/stream.csv.
SynthResult write_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace jamaica
