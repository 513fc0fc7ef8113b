import io
import json

import numpy as np
import pandas as pd
import pytest

from sobolsa.errors import AlignmentError, CombinationError, ConstantOutputError, DesignError, InvalidOutputError
from sobolsa.estimators import (FIRST_ESTIMATORS, TOTAL_ESTIMATORS, EstimatorConfig, IndexTable, estimate_first,
                                estimate_higher, estimate_total, estimate_variance_summary, required_blocks,
                                sobol_dummy, sobol_indices, validate_combination)
from sobolsa.sampling import SampleDesign, SampleMatrix, sobol_matrices
from sobolsa.testfunctions import analytic_indices, ishigami, sobol_g

FULL = frozenset({"A", "B", "AB", "BA"})


def _run(model, design, config=None, **kw):
    m = sobol_matrices(design)
    return sobol_indices(model(m.values), design, config, **kw)


def _loop_first(name, a, b, ab, ba):
    # element-by-element restatement of the first-order formulas
    n = len(a)
    f0 = sum(a[v] + b[v] for v in range(n)) / (2 * n)
    vy = sum((a[v] - f0) ** 2 + (b[v] - f0) ** 2 for v in range(n)) / (2 * n - 1)
    if name == "sobol":
        return (sum(a[v] * ba[v] for v in range(n)) / n - f0**2) / vy
    if name == "saltelli":
        return sum(b[v] * (ab[v] - a[v]) for v in range(n)) / n / vy
    if name == "jansen":
        return (vy - sum((b[v] - ab[v]) ** 2 for v in range(n)) / (2 * n)) / vy
    num = 2 * sum((ba[v] - b[v]) * (a[v] - ab[v]) for v in range(n))
    den = sum((a[v] - b[v]) ** 2 + (ba[v] - ab[v]) ** 2 for v in range(n))
    return num / den


def _loop_total(name, a, b, ab, ba):
    n = len(a)
    f0 = sum(a[v] + b[v] for v in range(n)) / (2 * n)
    vy = sum((a[v] - f0) ** 2 + (b[v] - f0) ** 2 for v in range(n)) / (2 * n - 1)
    if name == "jansen":
        return sum((a[v] - ab[v]) ** 2 for v in range(n)) / (2 * n) / vy
    if name == "sobol":
        return sum(a[v] * (a[v] - ab[v]) for v in range(n)) / n / vy
    if name == "homma":
        return (vy - sum(a[v] * ab[v] for v in range(n)) / n + f0**2) / vy
    if name == "saltelli":
        return 1 - (sum(b[v] * ba[v] for v in range(n)) / n - f0**2) / (sum(x * x for x in a) / n - f0**2)
    if name == "janon":
        g0 = sum((a[v] + ab[v]) / 2 for v in range(n)) / n
        num = sum(a[v] * ab[v] for v in range(n)) / n - g0**2
        den = sum((a[v] ** 2 + ab[v] ** 2) / 2 for v in range(n)) / n - g0**2
        return 1 - num / den
    if name == "glen":
        return 1 - np.corrcoef(a, ab)[0, 1]
    num = sum((b[v] - ba[v]) ** 2 + (a[v] - ab[v]) ** 2 for v in range(n))
    den = sum((a[v] - b[v]) ** 2 + (ba[v] - ab[v]) ** 2 for v in range(n))
    return num / den


class TestValidateCombination:
    def test_invalid_pair(self):
        with pytest.raises(CombinationError):
            validate_combination("sobol", "glen", {"A", "AB", "BA"})

    def test_default_pair(self):
        validate_combination("saltelli", "jansen", {"A", "B", "AB"})

    def test_azzini_pair(self):
        validate_combination("azzini", "azzini", FULL)

    def test_missing_blocks_named(self):
        with pytest.raises(CombinationError, match="BA"):
            validate_combination("azzini", "jansen", {"A", "B", "AB"})

    def test_table_of_supported_pairs(self):
        expected = {}
        for f in ("saltelli", "jansen"):
            for t in ("jansen", "sobol", "homma", "janon", "glen"):
                expected[(f, t)] = {"A", "B", "AB"}
        expected[("sobol", "saltelli")] = {"A", "B", "BA"}
        for other in FIRST_ESTIMATORS:
            expected[(other, "azzini")] = set(FULL)
        for other in TOTAL_ESTIMATORS:
            expected[("azzini", other)] = set(FULL)
        for f in FIRST_ESTIMATORS:
            for t in TOTAL_ESTIMATORS:
                if (f, t) in expected:
                    assert required_blocks(f, t) == expected[(f, t)]
                else:
                    with pytest.raises(CombinationError):
                        required_blocks(f, t)

    def test_config_rejects_unsupported(self):
        with pytest.raises(CombinationError):
            EstimatorConfig("sobol", "jansen")


class TestVarianceSummary:
    def test_hand_values(self):
        s = estimate_variance_summary([0, 2], [1, 1])
        assert s.f0 == 1.0
        assert s.vy == pytest.approx(2 / 3)

    def test_constant(self):
        with pytest.raises(ConstantOutputError):
            estimate_variance_summary([3, 3, 3], [3, 3, 3])

    def test_mean_scales(self):
        s1 = estimate_variance_summary([1, 2], [3, 5])
        s2 = estimate_variance_summary([7, 14], [21, 35])
        assert s2.f0 == pytest.approx(7 * s1.f0)
        assert s2.vy == pytest.approx(49 * s1.vy)


class TestFormulas:
    def setup_method(self):
        rng = np.random.default_rng(11)
        self.a, self.b, self.ab, self.ba = rng.normal(2.0, 1.0, (4, 40))

    @pytest.mark.parametrize("name", FIRST_ESTIMATORS)
    def test_first_against_loop(self, name):
        got = estimate_first(name, self.a, self.b, self.ab, self.ba)
        assert got[0] == pytest.approx(_loop_first(name, self.a, self.b, self.ab, self.ba), rel=1e-12)

    @pytest.mark.parametrize("name", TOTAL_ESTIMATORS)
    def test_total_against_loop(self, name):
        got = estimate_total(name, self.a, self.b, self.ab, self.ba)
        assert got[0] == pytest.approx(_loop_total(name, self.a, self.b, self.ab, self.ba), rel=1e-12)

    def test_missing_block(self):
        with pytest.raises(DesignError):
            estimate_first("saltelli", self.a, self.b, None, self.ba)
        with pytest.raises(DesignError):
            estimate_total("saltelli", self.a, self.b, self.ab, None)

    def test_column_stacks(self):
        stack = np.column_stack([self.ab, self.ba])
        got = estimate_total("jansen", self.a, self.b, stack)
        assert got.shape == (2,)
        assert got[1] == pytest.approx(_loop_total("jansen", self.a, self.b, self.ba, None))

    def test_higher_inclusion_exclusion(self):
        closed = estimate_first("jansen", self.a, self.b, self.ab)[0]
        got = estimate_higher("jansen", self.a, self.b, self.ab[:, None], None, [(0, 1)], {(0,): 0.1, (1,): 0.2})
        assert got[0] == pytest.approx(closed - 0.3)


class TestSimpleModels:
    def test_identity_single_input(self):
        d = SampleDesign(2**12, ["x1"])
        t = _run(lambda x: x[:, 0], d)
        assert abs(t.value("Si", "x1") - 1) < 0.02
        assert abs(t.value("Ti", "x1") - 1) < 0.02

    def test_additive_two_inputs(self):
        d = SampleDesign(2**12, ["x1", "x2"])
        t = _run(lambda x: x[:, 0] + x[:, 1], d)
        assert abs(t.value("Si", "x1") - 0.5) < 0.03
        assert abs(t.value("Si", "x2") - 0.5) < 0.03

    def test_additive_has_no_interactions(self):
        d = SampleDesign(2**12, ["a", "b", "c"], order="second")
        t = _run(lambda x: x @ np.array([1.0, 2.0, 3.0]), d)
        assert np.all(np.abs(t.select("Sij")["original"]) < 0.03)

    def test_product_interaction(self):
        # V = 7/144, V1 = V2 = 1/48, so S1 = S2 = 3/7 and S12 = 1/7
        d = SampleDesign(2**14, ["x1", "x2"], order="second")
        t = _run(lambda x: x[:, 0] * x[:, 1], d)
        assert t.value("Si", "x1") == pytest.approx(3 / 7, abs=0.02)
        assert t.value("Si", "x2") == pytest.approx(3 / 7, abs=0.02)
        assert t.value("Sij", "x1.x2") == pytest.approx(1 / 7, abs=0.02)

    def test_third_order_rows(self):
        d = SampleDesign(2**10, ["a", "b", "c", "d"], order="third")
        t = _run(lambda x: x[:, 0] * x[:, 1] * x[:, 2], d)
        counts = t.results["sensitivity"].value_counts()
        assert counts["Si"] == 4 and counts["Ti"] == 4 and counts["Sij"] == 6 and counts["Sijk"] == 4
        assert t.value("Sijk", "a.b.c") > 0.02

    def test_ishigami_structure(self):
        d = SampleDesign(2**13, ["x1", "x2", "x3"])
        t = _run(lambda x: ishigami(x, rescale=True), d)
        assert abs(t.value("Si", "x3")) < 0.02
        assert t.value("Ti", "x3") > 0.1


class TestSobolG:
    def test_printed_first_order(self):
        d = SampleDesign(2**10, [f"X{i}" for i in range(1, 9)])
        t = _run(sobol_g, d)
        assert t.value("Si", "X1") == pytest.approx(0.724, abs=0.05)
        assert t.value("Si", "X2") == pytest.approx(0.184, abs=0.05)
        assert t.value("Ti", "X1") == pytest.approx(0.799, abs=0.03)
        assert t.value("Ti", "X2") == pytest.approx(0.243, abs=0.03)
        assert len(t.results) == 16

    def test_uncentred_matches_printed_sum(self):
        d = SampleDesign(2**10, [f"X{i}" for i in range(1, 9)])
        t = _run(sobol_g, d, EstimatorConfig(center=False))
        assert t.sum_first_order == pytest.approx(0.9419303, abs=5e-8)
        assert t.value("Si", "X1") == pytest.approx(0.724, abs=5e-4)

    def test_sum_first_order(self):
        d = SampleDesign(2**10, [f"X{i}" for i in range(1, 9)])
        t = _run(sobol_g, d)
        assert t.sum_first_order == pytest.approx(t.select("Si")["original"].sum())

    def test_closed_index_dominates(self):
        d = SampleDesign(2**12, [f"X{i}" for i in range(1, 9)], order="second")
        m = sobol_matrices(d)
        t = sobol_indices(sobol_g(m.values), d)
        si = dict(zip(t.select("Si")["parameters"], t.select("Si")["original"]))
        for _, row in t.select("Sij").iterrows():
            i, j = row["parameters"].split(".")
            closed = row["original"] + si[i] + si[j]
            assert closed >= max(si[i], si[j]) - 0.02

    def test_analytic_agreement_every_pair(self):
        d = SampleDesign(2**14, [f"X{i}" for i in range(1, 9)], blocks=FULL)
        y = sobol_g(sobol_matrices(d).values)
        exact = analytic_indices("sobol_g")
        for f in FIRST_ESTIMATORS:
            t = sobol_indices(y, d, EstimatorConfig(f, "azzini"))
            assert np.max(np.abs(t.select("Si")["original"] - exact.first)) < 0.02
        for tot in TOTAL_ESTIMATORS:
            first = "sobol" if tot == "saltelli" else "azzini"
            t = sobol_indices(y, d, EstimatorConfig(first, tot))
            assert np.max(np.abs(t.select("Ti")["original"] - exact.total)) < 0.02


class TestSobolIndicesIO:
    def setup_method(self):
        self.design = SampleDesign(64, ["a", "b", "c"], blocks=FULL)
        self.matrix = sobol_matrices(self.design)
        self.y = self.matrix.values @ np.array([1.0, 2.0, 0.5]) + self.matrix.values[:, 0] * self.matrix.values[:, 1]

    def test_length_mismatch(self):
        with pytest.raises(AlignmentError, match="short by 1"):
            sobol_indices(self.y[:-1], self.design)

    def test_nan_rows_named(self):
        y = self.y.copy()
        y[[5, 70]] = np.nan
        with pytest.raises(InvalidOutputError) as err:
            sobol_indices(y, self.design)
        assert err.value.rows == (5, 70)

    def test_tagged_rows_permuted(self):
        base = sobol_indices(self.y, self.design)
        perm = np.random.default_rng(0).permutation(len(self.y))
        tags = SampleMatrix(self.matrix.values[perm], self.matrix.labels[perm], self.matrix.base_row[perm],
                            self.matrix.params)
        shuffled = sobol_indices(self.y[perm], self.design, tags=tags)
        assert np.allclose(shuffled.results["original"], base.results["original"], rtol=0, atol=1e-14)

    def test_order_above_design(self):
        with pytest.raises(DesignError):
            sobol_indices(self.y, self.design, EstimatorConfig(order="second"))

    def test_lower_order_than_design(self):
        d = SampleDesign(64, ["a", "b", "c"], order="second")
        y = sobol_matrices(d).values.sum(axis=1)
        t = sobol_indices(y, d, EstimatorConfig(order="first"))
        assert set(t.results["sensitivity"]) == {"Si", "Ti"}

    def test_csv_and_json(self):
        t = sobol_indices(self.y, self.design)
        buf = io.StringIO()
        t.to_csv(buf)
        assert buf.getvalue().splitlines()[0] == "original,sensitivity,parameters"
        back = IndexTable.from_json(t.to_json())
        assert back.total_runs == t.total_runs
        assert np.allclose(back.results["original"], t.results["original"])
        assert json.loads(t.to_json())["first_estimator"] == "saltelli"

    def test_printed_header(self):
        text = str(sobol_indices(self.y, self.design))
        assert "Total number of model runs: 512" in text
        assert "Sum of first order indices:" in text


class TestDummy:
    def test_small_at_desk_scale(self):
        d = SampleDesign(2**10, [f"X{i}" for i in range(1, 9)])
        t = sobol_dummy(sobol_g(sobol_matrices(d).values), d)
        assert abs(t.value("Si", "dummy")) < 0.05
        assert abs(t.value("Ti", "dummy")) < 0.05

    def test_inert_column_matches_configured_estimator(self):
        # with an inert extra column the sobol-first and homma-total forms reduce to the dummy formulas
        d = SampleDesign(256, ["a", "b", "dummy"], blocks=FULL, generator="R", seed=4)
        m = sobol_matrices(d)
        y = np.sin(6 * m.values[:, 0]) + m.values[:, 1] ** 2
        dummy = sobol_dummy(y, d)
        si = sobol_indices(y, d, EstimatorConfig("sobol", "azzini")).value("Si", "dummy")
        ti = sobol_indices(y, d, EstimatorConfig("saltelli", "homma")).value("Ti", "dummy")
        assert dummy.value("Si", "dummy") == pytest.approx(si, abs=1e-12)
        assert dummy.value("Ti", "dummy") == pytest.approx(ti, abs=1e-12)

    def test_constant_model(self):
        d = SampleDesign(16, ["a", "b"])
        with pytest.raises(ConstantOutputError):
            sobol_dummy(np.ones(64), d)

    def test_results_frame(self):
        d = SampleDesign(32, ["a", "b"])
        t = sobol_dummy(sobol_matrices(d).values.sum(axis=1), d)
        assert list(t.results["sensitivity"]) == ["Si", "Ti"]
        assert isinstance(t.results, pd.DataFrame)
