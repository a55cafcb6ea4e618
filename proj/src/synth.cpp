#include "jamaica/synth.hpp"

#include <cmath>
#include <random>
#include <utility>

#include "jamaica/errors.hpp"
#include "jamaica/ingest.hpp"

namespace jamaica {

namespace {

// Standard library distributions are implementation-defined, so identical
// seeds would not give identical files across toolchains. This maps the top
// 53 bits of one engine draw onto [0, 1) instead.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + uniform01(rng) * (hi - lo);
}

enum class RowKind : unsigned char { nominal, negative, high };

}  // namespace

void SynthSpec::validate() const {
  if (n_train == 0 || n_stream == 0) raise(Errc::bad_spec, "n_train and n_stream must be > 0");
  if (!std::isfinite(band_low) || !std::isfinite(band_high) || !(band_low < band_high))
    raise(Errc::bad_spec, "nominal band needs finite low < high");
  if (!std::isfinite(frac_negative) || !std::isfinite(frac_high) || frac_negative < 0.0 ||
      frac_high < 0.0)
    raise(Errc::bad_spec, "anomaly fractions must be >= 0");
  if (frac_negative + frac_high >= 1.0)
    raise(Errc::bad_spec, "anomaly fractions must sum to less than 1");
  if (!std::isfinite(limit) || limit < band_high)
    raise(Errc::bad_spec, "limit must be at least the nominal band high");
  if (entity_id.empty() || entity_type.empty() || attribute.empty())
    raise(Errc::bad_spec, "entity_id, entity_type and attribute must be non-empty");
  if (step_ms <= 0) raise(Errc::bad_spec, "step_ms must be > 0");
}

SynthData generate_synth_data(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  auto make_row = [&](double value, std::int64_t unix_ms) {
    Observation obs;
    obs.entity_id = spec.entity_id;
    obs.entity_type = spec.entity_type;
    obs.attribute = spec.attribute;
    obs.value = value;
    obs.timestamp = Timestamp(unix_ms);
    return obs;
  };

  SynthData data;
  const std::int64_t train_start =
      spec.start_unix_ms - static_cast<std::int64_t>(spec.n_train) * spec.step_ms;
  data.train.reserve(spec.n_train);
  for (std::size_t i = 0; i < spec.n_train; ++i)
    data.train.push_back(make_row(uniform(rng, spec.band_low, spec.band_high),
                                  train_start + static_cast<std::int64_t>(i) * spec.step_ms));

  // The 1e-6 slack keeps frac*n that is an integer in real arithmetic from
  // flooring down when the product lands just below it in binary.
  const auto n_negative = static_cast<std::size_t>(
      std::floor(spec.frac_negative * static_cast<double>(spec.n_stream) + 1e-6));
  const auto n_high = static_cast<std::size_t>(
      std::floor(spec.frac_high * static_cast<double>(spec.n_stream) + 1e-6));
  data.negative_rows = n_negative;
  data.high_rows = n_high;

  std::vector<RowKind> kinds(spec.n_stream, RowKind::nominal);
  for (std::size_t i = 0; i < n_negative; ++i) kinds[i] = RowKind::negative;
  for (std::size_t i = 0; i < n_high; ++i) kinds[n_negative + i] = RowKind::high;
  for (std::size_t i = kinds.size() - 1; i > 0; --i)
    std::swap(kinds[i], kinds[rng() % (i + 1)]);

  data.stream.reserve(spec.n_stream);
  for (std::size_t i = 0; i < spec.n_stream; ++i) {
    double value = 0.0;
    switch (kinds[i]) {
      case RowKind::nominal:
        value = uniform(rng, spec.band_low, spec.band_high);
        break;
      case RowKind::negative:
        value = uniform(rng, -10.0, -0.1);
        break;
      case RowKind::high:
        // (limit, limit + 50]: 1 - u is in (0, 1].
        value = spec.limit + (1.0 - uniform01(rng)) * 50.0;
        break;
    }
    data.stream.push_back(
        make_row(value, spec.start_unix_ms + static_cast<std::int64_t>(i) * spec.step_ms));
  }
  return data;
}

SynthResult write_synth(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  SynthData data = generate_synth_data(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  SynthResult result;
  result.train_path = out_dir / "train.csv";
  result.stream_path = out_dir / "stream.csv";
  write_observations_csv(result.train_path, data.train);
  write_observations_csv(result.stream_path, data.stream);
  result.train_rows = data.train.size();
  result.stream_rows = data.stream.size();
  result.negative_rows = data.negative_rows;
  result.high_rows = data.high_rows;
  return result;
}

}  // namespace jamaica
