"""Coarse geometry of finite metric graphs and metric graph bundles."""

from .graphs import DottedPath, GraphError, MetricGraph
from .coarse import (
    Barycenter,
    DeltaReport,
    QiCertificate,
    barycenter,
    certify_quasigeodesic,
    chained_projection_path,
    graph_approximation,
    gromov_delta,
    gromov_product,
    hausdorff_distance,
    project,
    quasiconvexity_constant,
    slim_triangle_defect,
    tightest_certificate,
)

__version__ = "0.1.0"
