"""Coverage model for multi-table grid hashing, verified three ways.

The package answers one question exactly and then refuses to take its own
word for it: for m independently shifted unit-cell grids, what fraction of a
unit query cube is covered by at least ell of the cells containing the query
point? The closed forms (:mod:`gridlsh.model`) are cross-checked by exact
per-trial Monte Carlo geometry (:mod:`gridlsh.montecarlo`), by numerical
quadrature of the underlying integral table (:mod:`gridlsh.integrals`), and
by recall measurements on a real toroidal grid index (:mod:`gridlsh.index`).
"""

from .index import (
    CsvFormatError,
    GridConfig,
    GridIndex,
    PointSet,
    RecallReport,
    build_index,
    cell_coords,
    generate_uniform,
    load_csv,
    measure_recall,
    measure_recall_replicated,
    query_candidates,
    range_query_bruteforce,
)
from .integrals import (
    IntegralCheck,
    IntegralEvaluation,
    IntegralId,
    Verdict,
    check_all,
    derived_closed_form,
    eval_integral,
    printed_closed_form,
    tensor_quadrature,
)
from .model import (
    ModelQuery,
    ScaleParams,
    binomial,
    p_at_least,
    p_intersection,
    p_union,
    p_union_stated_variant,
    per_dim_coverage_q,
    quadrant_sum_p1,
)
from .montecarlo import (
    CellSample,
    McEstimate,
    coverage_at_least,
    intersection_volume,
    mc_estimate_p,
    raster_oracle,
    sample_cells,
    trial_offsets,
    union_volume,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "ModelQuery",
    "ScaleParams",
    "binomial",
    "per_dim_coverage_q",
    "quadrant_sum_p1",
    "p_intersection",
    "p_union",
    "p_union_stated_variant",
    "p_at_least",
    # montecarlo
    "CellSample",
    "McEstimate",
    "sample_cells",
    "trial_offsets",
    "intersection_volume",
    "union_volume",
    "coverage_at_least",
    "raster_oracle",
    "mc_estimate_p",
    # integrals
    "IntegralId",
    "Verdict",
    "IntegralEvaluation",
    "IntegralCheck",
    "printed_closed_form",
    "derived_closed_form",
    "eval_integral",
    "tensor_quadrature",
    "check_all",
    # index
    "PointSet",
    "GridConfig",
    "GridIndex",
    "RecallReport",
    "CsvFormatError",
    "generate_uniform",
    "load_csv",
    "cell_coords",
    "build_index",
    "query_candidates",
    "range_query_bruteforce",
    "measure_recall",
    "measure_recall_replicated",
]
