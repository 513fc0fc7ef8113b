"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import time

import numpy as np
import pandas as pd
import pytest
from scipy.stats import norm

from sobolsa.bootstrap import BootConfig, bootstrap_statistics
from sobolsa.cli import build_config, make_matrix, reproduce, run_model
from sobolsa.distributions import standard_normal_quantile
from sobolsa.estimators import (FIRST_ESTIMATORS, TOTAL_ESTIMATORS, EstimatorConfig, deconstruct,
                                required_blocks, sobol_dummy, sobol_indices)
from sobolsa.errors import CombinationError
from sobolsa.ode import TimeGrid, rk4_integrate
from sobolsa.sampling import SampleDesign, block_label, sobol_matrices, total_rows, vars_matrices
from sobolsa.testfunctions import analytic_indices, ishigami, sobol_g
from sobolsa.vars import vars_to

G_PARAMS = [f"X{i}" for i in range(1, 9)]
ALL_BLOCKS = frozenset({"A", "B", "AB", "BA"})


def _supported_pairs():
    pairs = []
    for first in FIRST_ESTIMATORS:
        for total in TOTAL_ESTIMATORS:
            try:
                required_blocks(first, total)
            except CombinationError:
                continue
            pairs.append((first, total))
    return pairs


def _values(frame, sens):
    part = frame[frame["sensitivity"] == sens]
    return dict(zip(part["parameters"], part["original"]))


def check_sobol_g(c, frame, sum_first):
    si, ti = _values(frame, "Si"), _values(frame, "Ti")
    c.within("S1", si["X1"], 0.724, 0.05)
    c.within("S2", si["X2"], 0.184, 0.04)
    c.within("T1", ti["X1"], 0.799, 0.04)
    c.within("T2", ti["X2"], 0.243, 0.03)
    c.within("sum", sum_first, 0.94, 0.03)


def check_logistic(c, frame, sum_first):
    si, ti, sij = _values(frame, "Si"), _values(frame, "Ti"), _values(frame, "Sij")
    c.within("S_r.N0", sij["r.N0"], 0.673, 0.05)
    c.within("sum", sum_first, 0.257, 0.05)
    c.holds("T_N0 > S_N0 + 0.3", ti["N0"] > si["N0"] + 0.3, f"({ti['N0']:.3f} vs {si['N0']:.3f})")


def check_vars(c, total):
    c.within("T1", total[0], 0.82, 0.05)
    ordered = total[0] > total[1] > total[2] > total[3] > total[4:].max()
    c.holds("T1>T2>T3>T4>T5..8", bool(ordered), str(np.round(total, 4)))


def test_criterion_1_run_counts(criterion):
    with criterion(1, "run-count laws") as c:
        start = time.perf_counter()
        c.holds("10240", total_rows(SampleDesign(1024, G_PARAMS)) == 10240)
        c.holds("114688", total_rows(SampleDesign(8192, ["r", "K", "N0"], blocks=ALL_BLOCKS,
                                                  order="second")) == 114688)
        c.holds("7300", vars_matrices(100, 0.1, G_PARAMS).total_runs == 7300)
        c.holds("<1s", time.perf_counter() - start < 1)


def test_criterion_2_sobol_g(criterion):
    with criterion(2, "Sobol' G indices") as c:
        start = time.perf_counter()
        design = SampleDesign(2**10, G_PARAMS)
        table = sobol_indices(sobol_g(sobol_matrices(design).values), design)
        check_sobol_g(c, table.results, table.sum_first_order)

        exact = analytic_indices("sobol_g")
        big = SampleDesign(2**14, G_PARAMS, blocks=ALL_BLOCKS)
        y = sobol_g(sobol_matrices(big).values)
        worst = {}
        for first, total in _supported_pairs():
            res = sobol_indices(y, big, EstimatorConfig(first, total)).results
            s = res[res["sensitivity"] == "Si"]["original"].to_numpy()
            t = res[res["sensitivity"] == "Ti"]["original"].to_numpy()
            worst[f"first:{first}"] = max(worst.get(f"first:{first}", 0), np.abs(s - exact.first).max())
            worst[f"total:{total}"] = max(worst.get(f"total:{total}", 0), np.abs(t - exact.total).max())
        # VARS-TO on a star design with the same run budget
        n_star = big.n_base * (len(G_PARAMS) + 2) // (len(G_PARAMS) * 9 + 1)
        star = vars_matrices(n_star, 0.1, G_PARAMS)
        worst["total:vars"] = np.abs(vars_to(sobol_g(star.points), star).total - exact.total).max()
        c.holds("twelve estimators", len(worst) == 12, str(sorted(worst)))
        for name, err in worst.items():
            c.within(f"|{name}-exact|", err, 0.0, 0.02)
        c.holds("<10s", time.perf_counter() - start < 10)


def test_criterion_3_logistic(criterion):
    with criterion(3, "logistic second order") as c:
        start = time.perf_counter()
        cfg = build_config({"model": {"builtin": "logistic", "options": {"steps": 20}},
                            "design": {"N": 2**13, "blocks": ["A", "B", "AB", "BA"], "order": "second",
                                       "generator": "LHS", "seed": 2},
                            "estimators": {"first": "azzini", "total": "azzini"}})
        y = run_model(cfg, make_matrix(cfg).values)["y"].to_numpy()
        table = sobol_indices(y, cfg.design, cfg.estimators)
        check_logistic(c, table.results, table.sum_first_order)
        c.holds("<60s", time.perf_counter() - start < 60)


def test_criterion_4_vars(criterion):
    with criterion(4, "VARS-TO") as c:
        start = time.perf_counter()
        star = vars_matrices(100, 0.1, G_PARAMS)
        check_vars(c, vars_to(sobol_g(star.points), star).total)
        c.holds("<5s", time.perf_counter() - start < 5)


def test_criterion_5_properties(criterion):
    with criterion(5, "property suite") as c:
        pairs = _supported_pairs()
        design = SampleDesign(256, G_PARAMS, blocks=ALL_BLOCKS, order="second")
        y = sobol_g(sobol_matrices(design).values)
        drift = 0.0
        for first, total in pairs:
            cfg = EstimatorConfig(first, total, order="second")
            base = sobol_indices(y, design, cfg).results["original"].to_numpy()
            for scale, shift in ((2.5, -7.0), (-0.01, 3.0), (1e3, 1e5)):
                moved = sobol_indices(scale * y + shift, design, cfg).results["original"].to_numpy()
                drift = max(drift, np.max(np.abs(moved - base) / np.maximum(np.abs(base), 1.0)))
        c.within("invariance", drift, 0.0, 1e-12)

        for name, f, k in (("sobol_g", sobol_g, 8), ("ishigami", lambda v: ishigami(v, rescale=True), 3)):
            big = SampleDesign(2**14, [f"X{i}" for i in range(1, k + 1)], blocks=ALL_BLOCKS)
            yy = f(sobol_matrices(big).values)
            stacks = np.array([sobol_indices(yy, big, EstimatorConfig(*p)).results["original"].to_numpy()
                               for p in pairs])
            c.within(f"spread {name}", np.ptp(stacks, axis=0).max(), 0.0, 0.02)

        add = SampleDesign(2**12, ["a", "b", "c", "d"])
        x = sobol_matrices(add).values
        res = sobol_indices(x @ [1.0, 2.0, 0.5, 3.0] + np.sin(2 * np.pi * x[:, 0]), add).results
        c.within("additive sum", res[res["sensitivity"] == "Si"]["original"].sum(), 1.0, 0.03)

        law = SampleDesign(8, ["a", "b", "c", "d"], blocks=ALL_BLOCKS, order="third")
        m = sobol_matrices(law)
        ok = True
        for kind, cols in law.layout():
            block = m.block(block_label(kind, cols))
            base, donor = (m.block("A"), m.block("B")) if kind in ("A", "AB") else (m.block("B"), m.block("A"))
            mask = np.isin(np.arange(law.k), cols)
            ok &= np.array_equal(block[:, mask], donor[:, mask]) and np.array_equal(block[:, ~mask], base[:, ~mask])
        c.holds("swap law", bool(ok))

        enc = SampleDesign(30, ["a", "b", "c"], blocks=ALL_BLOCKS, order="second")
        n_blocks = len(enc.labels())
        codes = np.concatenate([np.arange(30) * 100.0 + j for j in range(n_blocks)])
        aligned = []

        def statistic(bo):
            rows = bo.values[:, 0] // 100
            aligned.append(bool(np.all(bo.values // 100 == rows[:, None])
                                and np.all(bo.values % 100 == np.arange(n_blocks))))
            return np.array([rows.mean()])

        bootstrap_statistics(deconstruct(codes, enc), statistic, BootConfig(R=20, seed=5), np.array([0.0]))
        c.holds("joint resampling", len(aligned) == 20 and all(aligned))

        sizes = [2**p for p in range(7, 13)]
        medians = []
        for n in sizes:
            vals = []
            for seed in range(20):
                d = SampleDesign(n, G_PARAMS, generator="R", seed=seed)
                vals.append(abs(sobol_dummy(sobol_g(sobol_matrices(d).values), d).results["original"].iloc[1]))
            medians.append(np.median(vals))
        c.within("dummy slope", np.polyfit(np.log(sizes), np.log(medians), 1)[0], -0.5, 0.2)

        steps = [0.2, 0.1, 0.05, 0.025]
        errs = [abs(rk4_integrate(lambda t, s, p: -s, [1.0], TimeGrid.regular(0, 2, h, output=[2.0]))[0, 0]
                    - np.exp(-2)) for h in steps]
        c.within("RK4 slope", np.polyfit(np.log(steps), np.log(errs), 1)[0], 4.0, 0.3)

        p = np.concatenate([np.logspace(-12, -1, 50), np.linspace(0.01, 0.99, 99), 1 - np.logspace(-12, -1, 50)])
        c.within("quantile round trip", np.abs(norm.cdf(standard_normal_quantile(p)) - p).max(), 0.0, 1e-9)


def test_criterion_6_ishigami(criterion):
    with criterion(6, "Ishigami structure") as c:
        start = time.perf_counter()
        design = SampleDesign(2**13, ["X1", "X2", "X3"])
        table = sobol_indices(ishigami(sobol_matrices(design).values, rescale=True), design)
        si, ti = _values(table.results, "Si"), _values(table.results, "Ti")
        c.within("S3", si["X3"], 0.0, 0.02)
        c.holds("T3 > 0.1", ti["X3"] > 0.1, f"({ti['X3']:.3f})")
        c.holds("S2 < 0.02", si["X2"] < 0.02, f"({si['X2']:.3f})")
        c.holds("<10s", time.perf_counter() - start < 10)


def _first_table(outdir):
    frame = pd.read_csv(outdir / "indices.csv")
    return frame, frame[frame["sensitivity"] == "Si"]["original"].sum()


def test_criterion_7_reproduce(criterion, tmp_path, capsys):
    with criterion(7, "reproduction commands") as c:
        reproduce("example1", tmp_path / "ex1")
        frame, total = _first_table(tmp_path / "ex1")
        check_sobol_g(c, frame, total)
        c.holds("example1 CIs", {"low.ci", "high.ci"} <= set(frame.columns))

        reproduce("example2", tmp_path / "ex2")
        frame, total = _first_table(tmp_path / "ex2")
        check_logistic(c, frame, total)

        reproduce("annex-vars", tmp_path / "vars")
        check_vars(c, pd.read_csv(tmp_path / "vars" / "vars_to.csv")["original"].to_numpy())

        reproduce("example3", tmp_path / "ex3")
        frame = pd.read_csv(tmp_path / "ex3" / "indices.csv")
        groups = frame.groupby(["variable", "time"])
        c.holds("18 tables", groups.ngroups == 18, f"({groups.ngroups})")
        c.holds("20 rows each", bool((groups.size() == 20).all()))
        c.holds("18 figures", len(list((tmp_path / "ex3").glob("indices-*.svg"))) == 18)
        late = frame[(frame["variable"] == "B") & (frame["time"] == 150) & (frame["sensitivity"] == "Ti")]
        top = late.loc[late["original"].idxmax(), "parameters"]
        c.holds("T_K largest for B at t=150", top == "K", f"(top is {top})")
    capsys.readouterr()
