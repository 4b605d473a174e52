"""DOT emitters for cube complexes, trees and bipartite graphs of groups."""

from __future__ import annotations

from pathlib import Path

import networkx as nx

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def _q(s) -> str:
    s = str(s).replace("\\", "\\\\").replace('"', '\\"')
    return '"' + s.replace("\n", "\\n") + '"'


def _gog_lines(gamma) -> list:
    g = gamma.graph
    lines = []
    for v in sorted(g.nodes()):
        d = g.nodes[v]
        shape = "box" if d["part"] == "V0" else "circle"
        label = "\n".join((v, d["name"], d["group"]))
        lines.append(f"  {_q(v)} [shape={shape}, label={_q(label)}];")
    edges = sorted((min(u, v), max(u, v), d["group"]) for u, v, d in g.edges(data=True))
    for u, v, grp in edges:
        lines.append(f"  {_q(u)} -- {_q(v)} [label={_q(grp)}];")
    return lines


def _complex_lines(C) -> list:
    lines = []
    basic = set(C.basic)
    for i, v in enumerate(C.vertices):
        bits = "".join("1" if b else "0" for b in v)
        style = ", style=filled, fillcolor=\"#eeeeee\"" if i in basic else ""
        lines.append(f"  {i} [shape=point, xlabel={_q(bits)}{style}];")
    for u, v, p in C.edges:
        lines.append(f"  {u} -- {v} [color={_q(PALETTE[p % len(PALETTE)])}, label={_q(p)}];")
    return lines


def _graph_lines(T: nx.Graph) -> list:
    lines = []
    order = sorted(T.nodes(), key=str)
    ids = {v: i for i, v in enumerate(order)}
    for v in order:
        d = T.nodes[v]
        shape = "box" if d.get("part") == "V0" else "circle"
        lines.append(f"  {ids[v]} [shape={shape}, label={_q(d.get('label', v))}];")
    for a, b in sorted((tuple(sorted((ids[u], ids[v]))) for u, v in T.edges())):
        lines.append(f"  {a} -- {b};")
    return lines


def to_dot(obj, name: str = "G") -> str:
    from .cubing import CubeComplex
    from .regnbhd import BipartiteGraphOfGroups

    if obj is None:
        body = []
    elif isinstance(obj, BipartiteGraphOfGroups):
        body = _gog_lines(obj)
    elif isinstance(obj, CubeComplex):
        body = _complex_lines(obj)
    elif isinstance(obj, nx.Graph):
        body = _graph_lines(obj)
    else:
        raise TypeError(f"no DOT emitter for {type(obj).__name__}")
    return "\n".join([f"graph {_q(name)} {{", *body, "}"]) + "\n"


def emit_dot(obj, path, name: str = "G") -> Path:
    path = Path(path)
    path.write_text(to_dot(obj, name))
    return path
