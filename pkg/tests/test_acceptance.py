"""Acceptance criteria, one test per criterion.

Criteria that need the published response data read it from the CSV named by
``PSYCHKIT_CCTT_CSV`` (grades 3-4) or ``PSYCHKIT_CCTT_EXTENDED_CSV`` (grades
3-6), in the package's input format. Without them those checks are reported
as BLOCKED; every pure-arithmetic or simulation part still runs.
"""

import time

import numpy as np
import pytest

from psychkit import ctt, diagnostics, dif, irt, proficiency, reference, simulate
from psychkit.dataset import AnalysisConfig, load_csv, subset
from psychkit.report import run_report

from conftest import DATA_ENV, EXTENDED_ENV, data_path

pytestmark = pytest.mark.acceptance

SEED = AnalysisConfig().random_seed


def _public(acceptance, env=DATA_ENV, exclude=()):
    path = data_path(env)
    if path is None:
        acceptance.blocked(f"dataset unavailable (set {env})")
    return load_csv(path, AnalysisConfig(excluded_items=frozenset(exclude)))


@pytest.mark.acceptance("C1")
def test_c1_descriptives(acceptance):
    data = _public(acceptance)
    bad = []
    t0 = time.perf_counter()
    for g in (3, 4):
        d = ctt.descriptives(subset(data, grade=g).totals())
        _, mean, _, sd, skew, kurt, lo, hi = reference.DESCRIPTIVES[g]
        checks = [
            ("mean", d.mean, mean, 0.05), ("sd", d.sd, sd, 0.05),
            ("skew", d.skew, skew, 0.02), ("kurtosis", d.kurtosis, kurt, 0.02),
            ("min", d.min, lo, 0), ("max", d.max, hi, 0),
        ]
        bad += [f"g{g} {name} {got:.4f} vs {want}" for name, got, want, tol in checks if abs(got - want) > tol + 1e-12]
    elapsed = time.perf_counter() - t0
    acceptance.check(not bad and elapsed < 1, "; ".join(bad) or f"published grade 3-4 descriptives within tolerance ({elapsed:.2f}s)")


@pytest.mark.acceptance("C2")
def test_c2_reliability(acceptance):
    data = _public(acceptance)
    alphas = {g: ctt.item_analysis(subset(data, grade=g)).reliability.alpha for g in (3, 4)}
    ok = all(abs(alphas[g] - reference.CRONBACH_ALPHA[g]) <= 0.005 for g in alphas)
    acceptance.check(ok, ", ".join(f"alpha_{g}={v:.4f}" for g, v in alphas.items()))


@pytest.mark.acceptance("C3")
def test_c3_norm_tables(acceptance):
    data = _public(acceptance)
    worst_z, worst_p = 0.0, 0
    for g in (3, 4):
        table = ctt.norm_table(subset(data, grade=g).totals(), 25)
        for row, (z, pct) in zip(table.rows, reference.NORMS[g]):
            worst_z = max(worst_z, abs(row.z - z))
            worst_p = max(worst_p, abs(row.percentile - pct))
    acceptance.check(worst_z <= 0.005 and worst_p <= 1, f"max |dz|={worst_z:.4f}, max |dpct|={worst_p}")


@pytest.mark.acceptance("C4")
def test_c4_irt_parameters(acceptance):
    # pure arithmetic: the 62% column from the published (a, b)
    worst = 0.0
    for g in (3, 4):
        for b, a, t62 in reference.GRADE_2PL[g]:
            worst = max(worst, abs(proficiency.adjusted_difficulty(a, b) - t62))
    if worst > 0.005:
        acceptance.failed(f"62% column mismatch {worst:.4f}")
    data = _public(acceptance, exclude=("Q2",))
    msgs, ok = [f"62% column max diff {worst:.4f}"], True
    for g in (3, 4):
        t0 = time.perf_counter()
        model = irt.fit(subset(data, grade=g), "2PL")
        elapsed = time.perf_counter() - t0
        _, a, b = reference.item_bank(g)
        da, db = np.abs(model.a - a).max(), np.abs(model.b - b).max()
        ok &= da <= 0.1 and db <= 0.1 and elapsed < 30
        msgs.append(f"g{g} max|da|={da:.3f} max|db|={db:.3f} ({elapsed:.1f}s)")
    acceptance.check(ok, "; ".join(msgs))


@pytest.mark.acceptance("C5")
def test_c5_model_comparison_arithmetic(acceptance):
    p1, p2 = irt.n_params("1PL", 24), irt.n_params("2PL", 24)
    worst = 0.0
    for g, row in reference.MODEL_FIT.items():
        n = row["n"]
        for kind, p in (("1PL", p1), ("2PL", p2)):
            aic, bic, ll = row[kind]
            a, b = irt.information_criteria(ll, p, n)
            worst = max(worst, abs(a - aic), abs(b - bic))
        stat, df, _ = irt.lrt(row["1PL"][2], p1, row["2PL"][2], p2)
        worst = max(worst, abs(stat - row["lrt"]))
        if df != row["df"]:
            acceptance.failed(f"grade {g}: df {df} vs {row['df']}")
    ok = worst <= 0.02 and (p1, p2) == (25, 48)
    acceptance.check(ok, f"n_params=({p1},{p2}), max cell diff {worst:.4f}")


@pytest.mark.acceptance("C6")
def test_c6_parameter_recovery(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    a, b = simulate.random_item_bank(25, rng)
    x, _ = simulate.simulate_2pl(a, b, 2000, rng)
    model = irt.fit(x, "2PL")
    fine = irt.fit(x, "2PL", irt.QuadratureGrid.normal(121))
    elapsed = time.perf_counter() - t0
    rmse_b = float(np.sqrt(np.mean((model.b - b) ** 2)))
    rmse_a = float(np.sqrt(np.mean((model.a - a) ** 2)))
    h = np.array(model.ll_history)
    monotone = bool(np.all(np.diff(h) >= -1e-6 * np.abs(h[1:])))
    shift = float(max(np.abs(fine.a - model.a).max(), np.abs(fine.b - model.b).max()))
    detail = (f"seed {SEED}: RMSE(b)={rmse_b:.3f} (<=0.10), RMSE(a)={rmse_a:.3f} (<=0.15), "
              f"monotone LL={monotone}, 61->121 nodes max shift={shift:.1e}, {elapsed:.1f}s")
    acceptance.check(rmse_b <= 0.10 and rmse_a <= 0.15 and monotone and shift < 0.01 and elapsed < 10, detail)


def _dif_bank():
    items, a, b = reference.item_bank(3)
    studied = int(np.argmin(np.abs(b)))  # item closest to the middle of the scale
    return items, a, b, studied


@pytest.mark.slow
@pytest.mark.acceptance("C7")
def test_c7_dif_calibration_and_power(acceptance):
    items, a, b, studied = _dif_bank()
    t0 = time.perf_counter()
    flags = {m: 0 for m in dif.METHODS}
    any_flag = {m: 0 for m in dif.METHODS}
    n_null = 200
    for rep in range(n_null):
        m = simulate.two_group_dif(a, b, 500, np.random.default_rng([SEED, 0, rep]))
        res = dif.purify_and_synthesize(m, "gender", reference="ref", focal="focal")
        assert not res.errors, res.errors
        for method, r in res.results.items():
            flags[method] += len(r.flagged)
            any_flag[method] += bool(r.flagged)
    rates = {m: flags[m] / (n_null * len(items)) for m in flags}
    hits, n_power = 0, 100
    for rep in range(n_power):
        m = simulate.two_group_dif(a, b, 500, np.random.default_rng([SEED, 1, rep]), dif_item=studied, dif_shift=0.6)
        res = dif.purify_and_synthesize(m, "gender", reference="ref", focal="focal")
        hits += res.votes()[m.items[studied]] >= 2
    power = hits / n_power
    elapsed = time.perf_counter() - t0
    detail = (", ".join(f"{k} flag rate {v:.4f} (any-item {any_flag[k] / n_null:.2f})" for k, v in rates.items())
              + f"; power on {items[studied]} {power:.2f}; {elapsed:.0f}s")
    acceptance.check(all(v <= 0.07 for v in rates.values()) and power >= 0.8 and elapsed < 300, detail)


@pytest.mark.acceptance("C8")
def test_c8_dif_published_cohort(acceptance):
    data = _public(acceptance, EXTENDED_ENV)
    gender = dif.purify_and_synthesize(data, "gender")
    grade = dif.purify_and_synthesize(data, "grade", reference=["3", "4"], focal=["5", "6"])
    g_votes = gender.votes()
    votes = grade.votes()
    n_dif_gender = sum(v >= 2 for v in g_votes.values())
    all_two = all(v >= 2 for v in votes.values())
    three = sum(v == 3 for v in votes.values())
    acceptance.check(n_dif_gender == 0 and all_two and three >= 14,
                     f"gender DIF items {n_dif_gender}; grade: all >=2/3 {all_two}, 3/3 count {three}")


@pytest.mark.acceptance("C9")
def test_c9_proficiency_levels(acceptance):
    items, a, b = reference.item_bank()
    model = irt.IrtModel("2PL", items, a, b, 0.0, 48, True, 0, 0)
    prof = proficiency.build_profile(model, origin=0.0)
    got = tuple(lv.items for lv in prof.levels)
    if got != reference.GRADE_AGNOSTIC_LEVELS:
        acceptance.failed(f"assignment differs: {got}")
    path = data_path(EXTENDED_ENV)
    if path is None:
        acceptance.blocked(f"item assignment matches the published levels exactly; percentages need {EXTENDED_ENV}")
    data = load_csv(path, AnalysisConfig(excluded_items=frozenset({"Q2"})))
    fitted = irt.fit(data, "2PL")
    est = irt.eap(data, fitted)
    prof = proficiency.build_profile(fitted, {str(g): est.eap[data.grades == g] for g in (3, 4, 5, 6)})
    worst = max(abs(x - y) for g in (3, 4, 5, 6)
                for x, y in zip(prof.student_distribution[str(g)], reference.LEVEL_PERCENTAGES[g]))
    acceptance.check(worst <= 2.0, f"assignment exact; max percentage diff {worst:.2f} pts")


@pytest.mark.slow
@pytest.mark.acceptance("C10")
def test_c10_local_independence(acceptance):
    items, a, b = reference.item_bank(3)
    maxima = []
    for rep in range(100):
        x, _ = simulate.simulate_2pl(a, b, 2000, np.random.default_rng([SEED, 2, rep]))
        model = irt.fit(x, "2PL", items=items)
        maxima.append(diagnostics.yen_q3(x, model, irt.eap(x, model)).max_abs)
    share = float(np.mean(np.array(maxima) < 0.2))
    acceptance.check(share >= 0.95, f"max|Q3| < 0.2 in {share:.0%} of 100 reps (largest {max(maxima):.3f})")


@pytest.mark.acceptance("C11")
def test_c11_report_determinism(acceptance, cohort_csv, tmp_path):
    data, cfg = cohort_csv
    _, c1 = run_report(data, cfg, tmp_path / "r1", seed=SEED)
    _, c2 = run_report(data, cfg, tmp_path / "r2", seed=SEED)
    same = (tmp_path / "r1" / "report.json").read_bytes() == (tmp_path / "r2" / "report.json").read_bytes()
    sidecars = sorted(p.name for p in (tmp_path / "r1").glob("*.csv"))
    same_csv = all((tmp_path / "r1" / n).read_bytes() == (tmp_path / "r2" / n).read_bytes() for n in sidecars)
    acceptance.check(same and same_csv and c1 == c2 == 0,
                     f"report.json identical={same}, {len(sidecars)} CSV sidecars identical={same_csv}, exit codes {c1},{c2}")
