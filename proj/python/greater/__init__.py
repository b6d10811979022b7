"""Relational table synthesis pipeline (Python bindings)."""

from ._core import (
    STAGES,
    Config,
    GreaterError,
    Table,
    __version__,
    association_matrix,
    attach_parent,
    cramers_v,
    decode_sentence,
    detect_contextual,
    encode_row,
    encode_table,
    extract_parent,
    fidelity_report,
    flatten_join,
    hierarchical_independent,
    ks_p,
    ks_statistic,
    load_config,
    parse_config,
    read_csv,
    run,
    run_stage,
    threshold_independent,
    w_dist,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
