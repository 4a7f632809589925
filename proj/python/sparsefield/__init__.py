"""Sparse sensing and spatiotemporal field reconstruction.

Thin wrapper over the compiled core: synthetic field generation,
QR-pivot / random sensor placement, gappy linear reconstruction, the
recurrent neural reconstructor, and the evaluation metrics.
"""

from ._core import (
    ArgumentError,
    ConnectivityReport,
    Model,
    NumericalError,
    ParseError,
    Placement,
    PrincipalBasis,
    Series,
    analyze_connectivity,
    evaluate_strategies,
    fit_principal_basis,
    improvement_pct,
    insert_bridges,
    load_model,
    load_placement,
    load_series,
    measure_series,
    mse_at_n,
    random_placement,
    reconstruct_linear,
    render_pgm,
    save_placement,
    save_series,
    select_sampling_locations,
    split_series,
    synth_series,
    train_model,
    var_at_n,
)

__all__ = [
    "ArgumentError",
    "ConnectivityReport",
    "Model",
    "NumericalError",
    "ParseError",
    "Placement",
    "PrincipalBasis",
    "Series",
    "analyze_connectivity",
    "evaluate_strategies",
    "fit_principal_basis",
    "improvement_pct",
    "insert_bridges",
    "load_model",
    "load_placement",
    "load_series",
    "measure_series",
    "mse_at_n",
    "random_placement",
    "reconstruct_linear",
    "render_pgm",
    "save_placement",
    "save_series",
    "select_sampling_locations",
    "split_series",
    "synth_series",
    "train_model",
    "var_at_n",
]
