"""Forward-only online analytic learning engine (Python bindings)."""

import json as _json

from ._foal import (
    AccuracyMatrix,
    AnalyticClassifier,
    ConfigError,
    DimensionError,
    FoalError,
    FormatError,
    IoError,
    ManifestError,
    NumericalError,
    ProjectionSpec,
    average_accuracy,
    cli,
    closed_form,
    encode_batch,
    forgetting,
    fuse_blocks,
    init_projection,
    make_synthetic,
    one_hot,
    read_feature_header,
    read_features,
    smooth_project,
    validate_manifest,
    write_features,
)
from ._foal import run_experiment as _run_experiment


def run_experiment(manifest, **config):
    """Run the one-pass stream; returns (results dict, trained classifier)."""
    text, classifier = _run_experiment(str(manifest), **config)
    return _json.loads(text), classifier


__all__ = [name for name in dir() if not name.startswith("_")]
