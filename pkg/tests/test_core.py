import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixsdp.core import (
    FactorMatrix,
    InputError,
    OptionError,
    ParseError,
    SolveOptions,
    build_cost,
    default_rank,
    format_cost,
    from_dense,
    objective,
    parse_cost,
    random_init,
)

from helpers import dense_objective


def dense_symmetrize(n, entries):
    M = np.zeros((n, n))
    for i, j, w in entries:
        if i == j:
            continue
        M[i, j] += w
        if i != j:
            M[j, i] += w
    return M


entries_strategy = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.tuples(
                st.integers(0, n - 1),
                st.integers(0, n - 1),
                st.integers(-3, 3).map(float),
            ),
            max_size=30,
        ),
    )
)


class TestBuildCost:
    def test_single_edge(self):
        C = build_cost(2, [(0, 1, 1.0)])
        assert C.rows == [[(1, 1.0)], [(0, 1.0)]]
        assert list(C.row_norms1) == [1.0, 1.0]
        assert C.nnz == 2

    def test_diagonal_dropped(self):
        C = build_cost(2, [(0, 0, 5.0), (0, 1, 2.0)])
        assert C.rows == [[(1, 2.0)], [(0, 2.0)]]
        assert C.dropped_diagonal == 1

    def test_duplicates_summed(self):
        C = build_cost(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 3.0)])
        assert C.rows == [[(1, 2.0)], [(0, 2.0), (2, 3.0)], [(1, 3.0)]]

    @given(entries_strategy)
    @settings(max_examples=200, deadline=None)
    def test_matches_dense_symmetrization(self, case):
        n, entries = case
        C = build_cost(n, entries)
        np.testing.assert_array_equal(C.dense(), dense_symmetrize(n, entries))

    @given(entries_strategy)
    @settings(max_examples=100, deadline=None)
    def test_invariants(self, case):
        n, entries = case
        C = build_cost(n, entries)
        M = C.dense()
        assert np.array_equal(M, M.T)
        assert np.all(np.diag(M) == 0)
        for i, row in enumerate(C.rows):
            cols = [j for j, _ in row]
            assert cols == sorted(set(cols))
            assert i not in cols
            assert C.row_norms1[i] == sum(abs(w) for _, w in row)
        assert C.nnz == sum(len(r) for r in C.rows)

    @given(entries_strategy)
    @settings(max_examples=100, deadline=None)
    def test_export_roundtrip(self, case):
        n, entries = case
        C = build_cost(n, entries)
        assert build_cost(n, C.triples()) == C
        assert parse_cost(format_cost(C)) == C

    def test_index_out_of_range(self):
        with pytest.raises(InputError):
            build_cost(2, [(0, 2, 1.0)])
        with pytest.raises(InputError):
            build_cost(2, [(-1, 0, 1.0)])

    def test_non_finite(self):
        with pytest.raises(InputError):
            build_cost(2, [(0, 1, math.inf)])
        with pytest.raises(InputError):
            build_cost(2, [(0, 1, math.nan)])

    def test_arrays_read_only(self):
        C = build_cost(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            C.data[0] = 3.0

    def test_from_dense(self):
        M = np.array([[7.0, 1.0, 0.0], [1.0, 0.0, -2.0], [0.0, -2.0, 0.0]])
        C = from_dense(M)
        expected = M.copy()
        np.fill_diagonal(expected, 0)
        np.testing.assert_array_equal(C.dense(), expected)


class TestCostFile:
    def test_parse(self):
        text = "# comment\n% another\n3 2\n1 2 1.5\n2 3 -1\n"
        C = parse_cost(text)
        assert C.rows == [[(1, 1.5)], [(0, 1.5), (2, -1.0)], [(1, -1.0)]]

    @pytest.mark.parametrize(
        "text, lineno",
        [
            ("2 1\n1 3 1\n", 2),
            ("2 1\n1 2\n", 2),
            ("2 1\n1 x 1\n", 2),
            ("two 1\n", 1),
            ("2 1\n1 2 nan\n", 2),
        ],
    )
    def test_errors_carry_line_numbers(self, text, lineno):
        with pytest.raises(ParseError) as ei:
            parse_cost(text)
        assert ei.value.lineno == lineno

    def test_count_mismatch(self):
        with pytest.raises(ParseError):
            parse_cost("2 2\n1 2 1\n")


class TestObjective:
    def test_orthogonal(self):
        C = build_cost(2, [(0, 1, 1.0)])
        assert objective(C, FactorMatrix([[1, 0], [0, 1]])) == 0.0

    def test_antipodal(self):
        C = build_cost(2, [(0, 1, 1.0)])
        assert objective(C, FactorMatrix([[1, 0], [-1, 0]])) == -2.0

    def test_matches_dense(self, rng):
        M = rng.normal(size=(6, 6))
        M = np.triu(M, 1)
        M = M + M.T
        C = from_dense(M)
        V = random_init(6, 3, 4)
        assert objective(C, V) == pytest.approx(dense_objective(M, V.cols), rel=1e-12)

    def test_dimension_mismatch(self):
        C = build_cost(3, [(0, 1, 1.0)])
        with pytest.raises(InputError):
            objective(C, random_init(2, 2, 0))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_rotation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        M = np.triu(rng.normal(size=(7, 7)), 1)
        C = from_dense(M + M.T)
        V = random_init(7, 4, seed)
        u = rng.normal(size=4)
        H = np.eye(4) - 2 * np.outer(u, u) / (u @ u)
        f = objective(C, V)
        g = objective(C, FactorMatrix(V.cols @ H.T))
        assert g == pytest.approx(f, rel=1e-9, abs=1e-12)

    def test_diagonal_entries_do_not_matter(self, rng):
        base = [(0, 1, 1.0), (1, 2, -2.0), (0, 3, 0.5)]
        V = random_init(4, 3, 9)
        f1 = objective(build_cost(4, base), V)
        f2 = objective(build_cost(4, base + [(i, i, float(rng.normal())) for i in range(4)]), V)
        assert f1 == f2


class TestDefaultRank:
    @staticmethod
    def by_search(n):
        c = 0
        while c * c < 2 * n:
            c += 1
        return min(n, c + 1)

    def test_examples(self):
        assert default_rank(1) == 1
        assert default_rank(8) == 5
        assert default_rank(2000) == 65

    @pytest.mark.parametrize("n", list(range(1, 200)) + [2000, 4097, 123456])
    def test_matches_integer_search(self, n):
        k = default_rank(n)
        assert k == self.by_search(n)
        if k < n:
            assert k > math.sqrt(2 * n)


class TestRandomInit:
    def test_deterministic(self):
        a = random_init(3, 2, 7)
        b = random_init(3, 2, 7)
        assert np.array_equal(a.cols, b.cols)
        assert not np.array_equal(a.cols, random_init(3, 2, 8).cols)

    @given(st.integers(1, 40), st.integers(1, 12), st.integers(0, 2**63))
    @settings(max_examples=50, deadline=None)
    def test_unit_columns(self, n, k, seed):
        V = random_init(n, k, seed)
        assert V.cols.shape == (n, k)
        np.testing.assert_allclose(V.norms(), 1.0, atol=1e-12)

    def test_one_dimensional_signs_balanced(self):
        V = random_init(10000, 1, 0)
        assert set(np.unique(V.cols)) <= {-1.0, 1.0}
        assert -0.05 < V.cols.mean() < 0.05


class TestSolveOptions:
    def test_defaults(self):
        o = SolveOptions()
        assert o.tol_rel == 1e-4 and o.max_sweeps == 10000 and o.step_size is None
        assert o.degeneracy_delta == 1e-12 and o.trace_every == 1

    @pytest.mark.parametrize(
        "kw",
        [
            {"tol_rel": 0},
            {"tol_rel": -1},
            {"step_size": -0.1},
            {"step_size": 0.0},
            {"step_size": "big"},
            {"rank": 0},
            {"rank": "huge"},
            {"max_sweeps": 0},
            {"trace_every": 0},
            {"seed": -1},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(OptionError):
            SolveOptions(**kw)
