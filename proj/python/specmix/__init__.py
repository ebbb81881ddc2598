"""Hyperspectral unmixing with attention-fused endmember extraction ensembles."""

import json

from ._core import (
    TrainingError,
    add_noise,
    atgp,
    build_ensembles,
    evaluate,
    nfindr,
    simplex_volume,
    synth_scene,
    vca,
)
from ._core import unmix as _unmix

__all__ = [
    "TrainingError",
    "add_noise",
    "atgp",
    "build_ensembles",
    "evaluate",
    "nfindr",
    "simplex_volume",
    "synth_scene",
    "unmix",
    "vca",
]
__version__ = "0.1.0"


def unmix(pixels, height, width, endmembers, **options):
    """Run the full pipeline; the report comes back as a dict."""
    out = _unmix(pixels, height, width, endmembers, **options)
    out["report"] = json.loads(out["report"])
    return out
