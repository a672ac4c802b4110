"""File formats shared by the command line front end.

Everything here is plain text: edge lists, CSV matrices, CSV result
tables, and one JSON report per solve. Numeric cells use repr for table
values and full-precision scientific notation for matrices, so reruns
can be compared byte for byte and reloads are exact.
"""

import json
import math
import re
from dataclasses import asdict

import numpy as np

from .errors import EmptyFile, ParseError, RaggedRows, SelfLoop
from .graphbench import Graph

SCHEMA_VERSION = 1

_NODES_HEADER = re.compile(r"#\s*nodes\s*=\s*(\d+)\s*$")


def load_edge_list(path):
    """Graph from 'u v' lines; '#' comments; optional '# nodes=N' header."""
    nodes_override = None
    edges = []
    seen = set()
    max_index = -1
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _NODES_HEADER.match(line)
                if m:
                    nodes_override = int(m.group(1))
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected 'u v', got %r" % line, line=lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError("non-integer endpoint in %r" % line, line=lineno)
            if u < 0 or v < 0:
                raise ParseError("negative node index in %r" % line, line=lineno)
            if u == v:
                raise SelfLoop("self loop at node %d" % u, line=lineno)
            max_index = max(max_index, u, v)
            key = (min(u, v), max(u, v))
            if key not in seen:
                seen.add(key)
                edges.append(key)
    if max_index < 0 and nodes_override is None:
        raise EmptyFile("%s has no edges and no nodes header" % path)
    node_count = nodes_override if nodes_override is not None else max_index + 1
    if max_index >= node_count:
        raise ParseError("node index %d exceeds declared nodes=%d" % (max_index, node_count))
    return Graph(node_count, edges).validate()


def write_edge_list(path, g):
    g.validate()
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("# nodes=%d\n" % g.node_count)
        for u, v in sorted(g.edges):
            f.write("%d %d\n" % (u, v))


def _load_rows(path):
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise ParseError("non-numeric cell in %r" % line, line=lineno)
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise RaggedRows(
                    "row has %d columns, expected %d" % (len(vals), width), line=lineno
                )
            rows.append(vals)
    if not rows:
        raise EmptyFile("%s has no data rows" % path)
    return np.asarray(rows, dtype=np.float64)


def load_point_cloud(path):
    """n x d matrix from comma-separated rows."""
    return _load_rows(path)


def load_dense_matrix(path):
    M = _load_rows(path)
    if M.shape[0] != M.shape[1]:
        raise ParseError("matrix is %dx%d, not square" % M.shape)
    return M


def load_weights(path):
    """One marginal vector, either a single CSV row or one value per line."""
    M = _load_rows(path)
    if M.shape[0] != 1 and M.shape[1] != 1:
        raise ParseError("weights must be a single row or column, got %dx%d" % M.shape)
    return M.ravel()


def write_matrix_csv(path, M):
    M = np.asarray(M, dtype=np.float64)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        for row in np.atleast_2d(M):
            f.write(",".join("%.17e" % x for x in row))
            f.write("\n")


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "unbounded" if v > 0 else "-unbounded"
        return repr(v)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_table(path, header, rows_of_cells):
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(header + "\n")
        for cells in rows_of_cells:
            f.write(",".join(_cell(c) for c in cells) + "\n")


def write_sweep_csv(path, rows):
    _write_table(
        path,
        "epsilon,rgw_value,balanced_value,bound,converged_rgw,converged_balanced,seed",
        (
            (r.epsilon, r.rgw_value, r.balanced_value, r.bound,
             r.converged_rgw, r.converged_balanced, r.seed)
            for r in rows
        ),
    )


def write_rho_csv(path, rows):
    _write_table(
        path,
        "rho,bound,rgw_value,converged",
        ((r.rho, r.bound, r.rgw_value, r.converged) for r in rows),
    )


def write_bench_csv(path, rows):
    _write_table(
        path,
        "nodes,fraction,seed,method,accuracy,iterations,wall_time_s,objective",
        (
            (r.nodes, r.fraction, r.seed, r.method, r.accuracy,
             r.iterations, r.wall_time_s, r.objective)
            for r in rows
        ),
    )


def write_solution(path_prefix, coupling, alpha, beta, report, params=None, seed=None):
    """Write <prefix>.coupling.csv and <prefix>.report.json."""
    from . import __version__

    write_matrix_csv(str(path_prefix) + ".coupling.csv", coupling)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "seed": seed,
        "params": asdict(params) if params is not None else None,
        "alpha": [float(x) for x in np.asarray(alpha, dtype=np.float64)],
        "beta": [float(x) for x in np.asarray(beta, dtype=np.float64)],
        "report": asdict(report),
    }
    with open(str(path_prefix) + ".report.json", "w", encoding="ascii", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return str(path_prefix) + ".coupling.csv", str(path_prefix) + ".report.json"
