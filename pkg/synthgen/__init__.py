from synthgen.generator import SynthSpec, RawDataset, generate, split_identities
from synthgen.feature_io import (
    FEATURE_MAGIC,
    FeatureFormatError,
    BadMagicError,
    UnsupportedVersionError,
    TruncatedPayloadError,
    InvalidDimensionError,
    write_features,
    read_features,
    write_truth_csv,
    read_truth_csv
)

__all__ = [
    "SynthSpec",
    "RawDataset",
    "generate",
    "split_identities",
    "FEATURE_MAGIC",
    "FeatureFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedPayloadError",
    "InvalidDimensionError",
    "write_features",
    "read_features",
    "write_truth_csv",
    "read_truth_csv"
]
