"""Text-driven parametric body shapes: measurement, labeling, text and solving."""

from ._core import (
    BodyShapeError,
    __version__,
    asset_info,
    calibrate_bins_json,
    default_bins_json,
    evaluate,
    evaluate_mesh,
    format_shape_params,
    generate_dataset,
    generate_description,
    jsonl_line,
    labels,
    loss_llm,
    loss_measurements,
    loss_shape,
    measure,
    measurement_names,
    parse_description,
    parse_shape_string,
    solve,
)

__all__ = [
    "BodyShapeError",
    "__version__",
    "asset_info",
    "calibrate_bins_json",
    "default_bins_json",
    "evaluate",
    "evaluate_mesh",
    "format_shape_params",
    "generate_dataset",
    "generate_description",
    "jsonl_line",
    "labels",
    "loss_llm",
    "loss_measurements",
    "loss_shape",
    "measure",
    "measurement_names",
    "parse_description",
    "parse_shape_string",
    "solve",
]
