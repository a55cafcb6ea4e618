"""Smart-city annotation toolkit.

The native core exposes the pieces that are useful outside the service:
anomaly detectors (local outlier factor and value bands), a deterministic
multiclass perceptron, the synthetic archive generator, and histogram and
summary reports. The annotation service itself is operated through its REST
API and the command-line tool.
"""

from ._core import (
    Band,
    ClassifierModel,
    Error,
    GeoPoint,
    HistogramReport,
    LabeledExample,
    LofModel,
    Observation,
    RangeModel,
    SummaryReport,
    SynthData,
    SynthResult,
    SynthSpec,
    Timestamp,
    __version__,
    build_histogram,
    build_summary,
    generate_synth_data,
    histogram_to_csv,
    new_ulid,
    write_synth,
)

__all__ = [
    "Band",
    "ClassifierModel",
    "Error",
    "GeoPoint",
    "HistogramReport",
    "LabeledExample",
    "LofModel",
    "Observation",
    "RangeModel",
    "SummaryReport",
    "SynthData",
    "SynthResult",
    "SynthSpec",
    "Timestamp",
    "__version__",
    "build_histogram",
    "build_summary",
    "generate_synth_data",
    "histogram_to_csv",
    "new_ulid",
    "write_synth",
]
