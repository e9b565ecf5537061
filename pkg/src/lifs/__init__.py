"""Local iterated function systems on discretized compact metric spaces."""
from .ambient import CompactSetApprox, GridSpace, SymbolSpace, hausdorff
from .errors import LifsError
from .ifs_core import Branch, LocalIFS, attractor, basin_classify, hutchinson, iterate
from .scene import load_graph, load_ifs, parse_scene

__version__ = "0.1.0"
