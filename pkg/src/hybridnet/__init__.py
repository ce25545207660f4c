"""hybridnet: simulator and algorithms for networks that combine a fixed
local graph with a node-capacitated global channel."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .graphs import INF, GraphError, WeightedGraph, gen_graph, read_graph, write_graph

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "INF",
    "GraphError",
    "WeightedGraph",
    "gen_graph",
    "read_graph",
    "write_graph",
    "__version__",
]
