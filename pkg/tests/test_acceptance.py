"""Acceptance criteria 1-8.

Each test records one ``PASS``/``FAIL`` line; the lines are printed in the
pytest terminal summary, or directly when this file is run as a script.
Runtime budgets are part of each criterion and are asserted.
"""

import io
import math
import sys
import time
from contextlib import redirect_stdout
from pathlib import Path

import mpmath
import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from rnnbounds import BoundQuery, ModelWeights, audit, display, dudley_erc, geometric_ratio  # noqa: E402
from rnnbounds import load_model, vanilla_erc_bound  # noqa: E402
from rnnbounds.audit import NormProfile  # noqa: E402
from rnnbounds.bounds import class_range, margin_covering_log  # noqa: E402
from rnnbounds.cli import main as cli_main  # noqa: E402
from rnnbounds.data import gen_synthetic  # noqa: E402
from rnnbounds.experiments import loglog_slope, ours_growth, synthetic_profile  # noqa: E402
from rnnbounds.reports import read_csv  # noqa: E402
from rnnbounds.train import gradient_check, init_vanilla  # noqa: E402
from rnnbounds.verify import (  # noqa: E402
    ResponseClass,
    VanillaClass,
    estimate_erc_mc,
    margin_lipschitz_pair,
    verify_conv_orthogonality,
    verify_hidden_norm,
    verify_margin_lipschitz,
    verify_output_lipschitz,
)

FIXTURES = Path(__file__).parent / "fixtures"
CELLS = ("vanilla", "mgu", "lstm", "conv")
RESULTS = []


def record(number, title, ok, detail, elapsed, budget):
    ok = ok and elapsed < budget
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail} "
                   f"[{elapsed:.2f}s < {budget:g}s]")
    return ok


def test_criterion_1_audit_arithmetic():
    start = time.perf_counter()
    stable = 13.6823 / 2.6801
    two_one = 154.5439 / 13.6823
    p = NormProfile("vanilla", 128, 128, 128, {"U": 2.6801}, {"U": 13.6823}, {"U": 154.5439})
    row = next(p.rows())
    ok = (round(stable, 3) == 5.105 and display(stable) == "5.1"
          and round(two_one, 3) == 11.295 and display(two_one) == "11.3"
          and row["stable_rank"] == round(stable, 4) and row["two_one_over_frobenius"] == round(two_one, 4)
          and stable < math.sqrt(128) / 2)
    detail = (f"stable rank {row['stable_rank']} -> {display(stable)}, "
              f"(2,1)/F ratio {row['two_one_over_frobenius']} -> {display(two_one)}")
    assert record(1, "audit arithmetic", ok, detail, time.perf_counter() - start, 1)


def test_criterion_2_comparison_ordering(tmp_path):
    start = time.perf_counter()
    model = FIXTURES / "vanilla_model.json"
    p = audit(load_model(model), B_x=1.0)
    half_width = math.sqrt(p.width) / 2
    pre = p.B("U") > 1 and all(v < half_width for v in p.stable_rank.values())
    out = tmp_path / "compare.csv"
    code = cli_main(["compare", "--model", str(model), "--data", str(FIXTURES / "running_sign.json"),
                     "--gamma", "1", "--t", "20", "--out", str(out)])
    v = {r["bound_id"]: float(r["value"]) for r in read_csv(out.read_text())}
    ok = (pre and code == 0 and v["ours"] < v["bound3"] <= v["bound2"]
          and v["ours"] / v["bound1"] < 1e-3 and v["ours"] == min(v.values()))
    detail = (f"B_U={p.B('U'):.3g}, max stable rank {max(p.stable_rank.values()):.3f} < sqrt(d)/2={half_width:.3f}; "
              f"ours={v['ours']:.4g} < bound3={v['bound3']:.4g} <= bound2={v['bound2']:.4g}; "
              f"ours/bound1={v['ours'] / v['bound1']:.3g}")
    assert record(2, "comparison ordering", ok, detail, time.perf_counter() - start, 30)


def test_criterion_3_regime_slopes():
    start = time.perf_counter()
    ts = 2 ** np.arange(4, 11)
    # regime II: B_W R = 1e-3 t stays below sqrt(d) over the whole range
    slopes = {
        "I": loglog_slope(ts, ours_growth(synthetic_profile(0.5), ts)),
        "II": loglog_slope(ts, ours_growth(synthetic_profile(1.0, B_W=1e-3), ts)),
        "III": loglog_slope(ts, ours_growth(synthetic_profile(1.5), ts)),
    }
    ok = slopes["I"] <= 0.2 and 0.85 <= slopes["II"] <= 1.2 and 0.4 <= slopes["III"] <= 0.65
    detail = ", ".join(f"regime {k} slope {v:.4f}" for k, v in slopes.items())
    assert record(3, "log-log slopes", ok, detail, time.perf_counter() - start, 5)


def test_criterion_4_lipschitz_and_norm_verification():
    start = time.perf_counter()
    reports = [verify_hidden_norm(c, trials=1000, seed=0) for c in CELLS]
    reports += [verify_output_lipschitz(c, trials=1000, seed=0) for c in CELLS]
    windows = (1, 2, 3)
    banks = [verify_conv_orthogonality(k, 6, trials=100, seed=0) for k in windows]
    ok = all(r.violations == 0 for r in reports + banks) and all(r.trials >= 100 for r in reports + banks)
    detail = "; ".join(f"{r.kind} {r.violations}/{r.trials}" for r in reports)
    detail += "; " + "; ".join(f"conv_orthogonality k={k} {r.violations}/{r.trials}" for k, r in zip(windows, banks))
    assert record(4, "norm and Lipschitz checks", ok, detail, time.perf_counter() - start, 60)


def test_criterion_5_margin_dual_test():
    start = time.perf_counter()
    r = verify_margin_lipschitz(trials=10_000, seed=0)
    lhs, dist = margin_lipschitz_pair([1.0, -1.0], [-1.0, 1.0], 1)
    pair_flagged = lhs == 4.0 and math.isclose(dist, 2 * math.sqrt(2)) and lhs > dist and lhs <= 2 * dist
    ok = r.violations == 0 and r.trials == 10_000 and pair_flagged
    detail = (f"factor-2 form {r.violations}/{r.trials} violations; constant-1 form violated by "
              f"{r.extra['uncorrected_violations']} pairs incl. (1,-1)/(-1,1): 4 > {dist:.3f} (documented)")
    assert record(5, "margin Lipschitz", ok, detail, time.perf_counter() - start, 2)


def test_criterion_6_erc_sandwich():
    start = time.perf_counter()
    data = gen_synthetic(20, 3, 2, 2, "running-sign", seed=0)
    est = estimate_erc_mc(VanillaClass(data, d_h=2, t=3, gamma=1.0), draws=200, candidates=500, seed=0)
    w = ModelWeights("vanilla", {"U": np.eye(2), "V": np.eye(2), "W": np.eye(2)})
    bound = vanilla_erc_bound(BoundQuery(audit(w, B_x=1.0), t=3, m=20, gamma=1.0)).value
    exact = estimate_erc_mc(ResponseClass([[1.0] * 4, [-1.0] * 4]), exhaustive=True).estimate
    ok = 0 <= est.estimate <= bound and exact == 0.375
    detail = f"estimate {est.estimate:.4f} (se {est.std_error:.4f}) <= bound {bound:.2f}; two-constant class ERC {exact}"
    assert record(6, "ERC sandwich", ok, detail, time.perf_counter() - start, 60)


def test_criterion_7_gradient_check():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng([seed, 7])
        d_h, T = int(rng.integers(1, 5)), int(rng.integers(1, 6))
        d_x, K = int(rng.integers(1, 4)), int(rng.integers(2, 4))
        w = init_vanilla(d_x, d_h, K, seed)
        w = w.replace(U=w["U"] * 3.0)
        X = rng.standard_normal((8, T, d_x))
        z = rng.integers(1, K + 1, size=8)
        worst = max(worst, gradient_check(w, X, z, step=1e-5))
    ok = worst <= 1e-5
    assert record(7, "BPTT gradient check", ok, f"worst relative error {worst:.2e} over 10 seeds",
                  time.perf_counter() - start, 10)


def test_criterion_8_closed_form_consistency():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst, checked = 0.0, 0
    for _ in range(100):
        B_U, B_V, B_W = rng.uniform(0.1, 2.5), rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0)
        t, m = int(rng.integers(1, 60)), int(rng.integers(2, 5000))
        d_x, d_h, d_y = (int(v) for v in rng.integers(1, 9, size=3))
        p = NormProfile("vanilla", d_x, d_h, d_y, {"U": B_U, "V": B_V, "W": B_W}, {}, {}, B_x=1.0)
        q = BoundQuery(p, t=t, m=m, gamma=1.0)
        numeric = dudley_erc(margin_covering_log(q), class_range(q), m)
        closed = float(oracles.dudley_closed_form(B_U, B_V, B_W, 1.0, t, m, d_x, d_h, d_y))
        worst = max(worst, numeric / closed)
        checked += 1
    gaps = []
    for steps in (1, 10, 100, 1000):
        for eps in (1e-7, 1e-10, 1e-12, 1e-13):
            for base in (1 - eps, 1 + eps):
                with mpmath.workdps(40):
                    exact = float(oracles.ratio(mpmath.mpf(base), steps))
                gaps.append(abs(geometric_ratio(base, steps).value - exact) / exact)
                gaps.append(abs(geometric_ratio(base, steps).value - steps) / steps
                            if eps <= 1e-12 else 0.0)
    ok = worst <= 1.0 and max(gaps) <= 1e-9 and checked == 100
    detail = (f"max numeric/closed-form ratio {worst:.4f} over {checked} grid points; "
              f"max ratio error near base 1 {max(gaps):.1e}")
    assert record(8, "closed-form consistency", ok, detail, time.perf_counter() - start, 10)


if __name__ == "__main__":
    import tempfile

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for test in tests:
        try:
            with redirect_stdout(io.StringIO()):
                if "tmp_path" in test.__code__.co_varnames[: test.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        test(Path(d))
                else:
                    test()
        except AssertionError:
            pass
    print("\n".join(RESULTS))
    sys.exit(0 if all(line.startswith("PASS") for line in RESULTS) else 1)
