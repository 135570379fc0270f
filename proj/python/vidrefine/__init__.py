"""Python bindings for the vidrefine refinement loop."""

from ._core import (
    VidrefineError,
    converged,
    default_context,
    format_delta,
    load_dataset,
    load_manifest,
    normalize,
    render_analyst_input,
    report,
    resume,
    run,
    select_best,
    similarity,
)

__all__ = [
    "VidrefineError",
    "converged",
    "default_context",
    "format_delta",
    "load_dataset",
    "load_manifest",
    "normalize",
    "render_analyst_input",
    "report",
    "resume",
    "run",
    "select_best",
    "similarity",
]
