import json
import math

import numpy as np
import pytest

from rgw.bpalm import RgwParams, solve_rgw
from rgw.errors import EmptyFile, ParseError, RaggedRows, SelfLoop
from rgw.graphbench import Graph, generate_ba_graph
from rgw.ioformats import (
    SCHEMA_VERSION,
    load_dense_matrix,
    load_edge_list,
    load_point_cloud,
    load_weights,
    write_bench_csv,
    write_edge_list,
    write_matrix_csv,
    write_rho_csv,
    write_solution,
    write_sweep_csv,
)
from rgw.robustness import RhoRow, SweepRow
from rgw.graphbench import BenchRow


def put(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="ascii")
    return str(p)


class TestEdgeListLoader:
    def test_single_edge(self, tmp_path):
        g = load_edge_list(put(tmp_path, "a.txt", "0 1\n"))
        assert g.node_count == 2 and g.edges == [(0, 1)]

    def test_undirected_dedup(self, tmp_path):
        g = load_edge_list(put(tmp_path, "a.txt", "0 1\n1 0\n"))
        assert g.edges == [(0, 1)]

    def test_malformed_line_number(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            load_edge_list(put(tmp_path, "a.txt", "0 x\n"))
        assert exc.value.line == 1

    def test_self_loop_line_number(self, tmp_path):
        with pytest.raises(SelfLoop) as exc:
            load_edge_list(put(tmp_path, "a.txt", "0 1\n2 2\n"))
        assert exc.value.line == 2

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        g = load_edge_list(put(tmp_path, "a.txt", "# comment\n\n0 1\n\n# end\n"))
        assert g.edges == [(0, 1)]

    def test_nodes_header_overrides_count(self, tmp_path):
        g = load_edge_list(put(tmp_path, "a.txt", "# nodes=5\n0 1\n"))
        assert g.node_count == 5

    def test_header_smaller_than_max_index(self, tmp_path):
        with pytest.raises(ParseError):
            load_edge_list(put(tmp_path, "a.txt", "# nodes=2\n0 3\n"))

    def test_edgeless_needs_header(self, tmp_path):
        with pytest.raises(EmptyFile):
            load_edge_list(put(tmp_path, "a.txt", "# just a comment\n"))
        g = load_edge_list(put(tmp_path, "b.txt", "# nodes=3\n"))
        assert g.node_count == 3 and g.edges == []

    def test_negative_index(self, tmp_path):
        with pytest.raises(ParseError):
            load_edge_list(put(tmp_path, "a.txt", "-1 0\n"))

    def test_three_tokens(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            load_edge_list(put(tmp_path, "a.txt", "0 1 2\n"))
        assert exc.value.line == 1

    def test_write_load_round_trip(self, tmp_path):
        g = generate_ba_graph(25, 2, seed=3)
        path = str(tmp_path / "g.txt")
        write_edge_list(path, g)
        g2 = load_edge_list(path)
        assert g2.node_count == g.node_count
        assert sorted(g2.edges) == sorted(g.edges)


class TestMatrixLoaders:
    def test_point_cloud(self, tmp_path):
        M = load_point_cloud(put(tmp_path, "p.csv", "0,0\n3,4\n"))
        assert np.array_equal(M, [[0.0, 0.0], [3.0, 4.0]])

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFile):
            load_point_cloud(put(tmp_path, "p.csv", ""))

    def test_ragged_rows_line_number(self, tmp_path):
        with pytest.raises(RaggedRows) as exc:
            load_point_cloud(put(tmp_path, "p.csv", "0,0\n1,2,3\n"))
        assert exc.value.line == 2

    def test_non_numeric_cell(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            load_point_cloud(put(tmp_path, "p.csv", "0,oops\n"))
        assert exc.value.line == 1

    def test_dense_matrix_must_be_square(self, tmp_path):
        with pytest.raises(ParseError):
            load_dense_matrix(put(tmp_path, "m.csv", "0,1\n"))

    def test_weights_row_or_column(self, tmp_path):
        row = load_weights(put(tmp_path, "w.csv", "0.25,0.75\n"))
        col = load_weights(put(tmp_path, "w2.csv", "0.25\n0.75\n"))
        assert np.array_equal(row, [0.25, 0.75])
        assert np.array_equal(col, [0.25, 0.75])
        with pytest.raises(ParseError):
            load_weights(put(tmp_path, "w3.csv", "1,2\n3,4\n"))

    def test_matrix_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        M = rng.normal(size=(6, 4)) * np.exp(rng.uniform(-20, 20, size=(6, 4)))
        path = str(tmp_path / "m.csv")
        write_matrix_csv(path, M)
        assert np.array_equal(load_point_cloud(path), M)

    def test_matrix_format_is_full_precision_scientific(self, tmp_path):
        path = str(tmp_path / "m.csv")
        write_matrix_csv(path, np.array([[1.0]]))
        assert open(path).read() == "%.17e\n" % 1.0


class TestResultTables:
    def test_sweep_header_and_cells(self, tmp_path):
        rows = [
            SweepRow(0.0, 0.5, 0.5, 0.5, True, False, 7),
            SweepRow(0.1, 0.25, 1.75, math.inf, False, True, 7),
        ]
        path = str(tmp_path / "s.csv")
        write_sweep_csv(path, rows)
        lines = open(path).read().splitlines()
        assert lines[0] == "epsilon,rgw_value,balanced_value,bound,converged_rgw,converged_balanced,seed"
        assert lines[1] == "0.0,0.5,0.5,0.5,true,false,7"
        assert lines[2] == "0.1,0.25,1.75,unbounded,false,true,7"

    def test_rho_header(self, tmp_path):
        path = str(tmp_path / "r.csv")
        write_rho_csv(path, [RhoRow(0.2, 1.5, 1.25, True)])
        lines = open(path).read().splitlines()
        assert lines[0] == "rho,bound,rgw_value,converged"
        assert lines[1] == "0.2,1.5,1.25,true"

    def test_bench_header(self, tmp_path):
        path = str(tmp_path / "b.csv")
        write_bench_csv(path, [BenchRow(100, 0.5, 0, "rgw", 94.0, 12, 1.5, 0.125)])
        lines = open(path).read().splitlines()
        assert lines[0] == "nodes,fraction,seed,method,accuracy,iterations,wall_time_s,objective"
        assert lines[1] == "100,0.5,0,rgw,94.0,12,1.5,0.125"

    def test_negative_infinity_cell(self, tmp_path):
        path = str(tmp_path / "r.csv")
        write_rho_csv(path, [RhoRow(0.0, -math.inf, 0.0, False)])
        assert "-unbounded" in open(path).read()

    def test_numpy_scalars_serialize_like_python(self, tmp_path):
        rows = [
            SweepRow(np.float64(0.1), np.float64(0.5), 0.5, 0.5, np.bool_(True), False, np.int64(3))
        ]
        path = str(tmp_path / "s.csv")
        write_sweep_csv(path, rows)
        assert open(path).read().splitlines()[1] == "0.1,0.5,0.5,0.5,true,false,3"


class TestSolutionWriter:
    def solve_tiny(self):
        D = np.array([[0.0, 1.0], [1.0, 0.0]])
        mu = np.array([0.5, 0.5])
        params = RgwParams(max_outer_iterations=50)
        pi, alpha, beta, report = solve_rgw(D, D, mu, mu, params=params)
        return pi, alpha, beta, report, params

    def test_report_round_trip(self, tmp_path):
        pi, alpha, beta, report, params = self.solve_tiny()
        prefix = str(tmp_path / "run")
        cpath, jpath = write_solution(prefix, pi, alpha, beta, report, params=params, seed=4)
        payload = json.loads(open(jpath).read())
        assert payload["schema_version"] == SCHEMA_VERSION
        assert payload["seed"] == 4
        assert payload["report"]["objective_trace"][-1] == report.objective_trace[-1]
        assert payload["params"]["rho1"] == params.rho1
        assert payload["alpha"] == [float(x) for x in alpha]

    def test_coupling_file_matches_dims_and_values(self, tmp_path):
        pi, alpha, beta, report, params = self.solve_tiny()
        cpath, _ = write_solution(str(tmp_path / "run"), pi, alpha, beta, report)
        back = load_point_cloud(cpath)
        assert back.shape == pi.shape
        assert np.array_equal(back, pi)

    def test_single_cell_coupling(self, tmp_path):
        pi, alpha, beta, report, _ = self.solve_tiny()
        cpath, _ = write_solution(str(tmp_path / "one"), np.array([[1.0]]),
                                  np.array([1.0]), np.array([1.0]), report)
        assert open(cpath).read() == "%.17e\n" % 1.0
