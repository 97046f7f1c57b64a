"""End-to-end report: dataset -> CTT -> group comparisons -> IRT -> DIF -> proficiency."""

from __future__ import annotations

import csv
import json
import math
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, ctt, diagnostics, dif, inference, irt, proficiency
from .dataset import AnalysisConfig, ResponseMatrix, group_levels, load_csv, subset


def clean(obj):
    """JSON-safe, deterministic conversion (NaN/inf -> None)."""
    if is_dataclass(obj):
        return clean(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [clean(v) for v in seq]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in r])


def model_summary(model: irt.IrtModel) -> dict:
    return clean(model.to_dict())


def ctt_section(matrix: ResponseMatrix) -> dict:
    ia = ctt.item_analysis(matrix)
    totals = matrix.totals()
    out = {
        "n_students": matrix.n_students,
        "item_analysis": clean(ia.items),
        "reliability": clean(ia.reliability),
        "norm_table": clean(ctt.norm_table(totals, matrix.n_items).rows),
    }
    try:
        out["descriptives"] = clean(ctt.descriptives(totals))
    except ValueError as exc:
        out["descriptives"] = {"error": str(exc)}
    return out


def compare_section(matrix: ResponseMatrix, factor: str, factor2: str | None = None) -> dict:
    totals = matrix.totals().astype(float)
    levels = group_levels(matrix, factor)
    col = matrix.column(factor)
    groups = [totals[col == lv] for lv in levels]
    out: dict = {"outcome": "total", "factor": factor, "levels": levels}
    out["one_way_anova"] = clean(inference.one_way_anova(groups))
    dunn = inference.dunn_test(groups, levels)
    out["dunn"] = [
        {"pair": list(pair), "mean_difference": float(groups[levels.index(pair[1])].mean() - groups[levels.index(pair[0])].mean()), **clean(res)}
        for pair, res in dunn.items()
    ]
    mde = inference.min_detectable_effect([g.size for g in groups])
    out["min_detectable_effect"] = clean(mde)
    if factor2:
        tw = inference.two_way_anova(totals, col, matrix.column(factor2), names=(factor, factor2))
        out["two_way_anova"] = {"ss_type": "I (sequential)", **{k: clean(v) for k, v in tw.items()}}
    return out


def irt_section(matrix: ResponseMatrix) -> tuple[dict, dict]:
    """Fitted 1PL/2PL with comparison and diagnostics; also returns live objects."""
    m1 = irt.fit(matrix, "1PL")
    m2 = irt.fit(matrix, "2PL")
    comp = irt.compare(m1, m2, matrix.n_students)
    abil = irt.eap(matrix, m2)
    out = {
        "n_students": matrix.n_students,
        "models": {"1PL": model_summary(m1), "2PL": model_summary(m2)},
        "comparison": clean(comp),
        "classification": diagnostics.classify_items(m2),
        "eap_reliability": abil.eap_reliability,
        "abilities": [
            {"student_id": sid, "eap": float(t), "posterior_sd": float(s)}
            for sid, t, s in zip(abil.student_ids, abil.eap, abil.posterior_sd)
        ],
    }
    try:
        q3 = diagnostics.yen_q3(matrix, m2, abil)
        out["q3"] = {"max_abs": q3.max_abs, "pairs_ge_0.2": clean(q3.flagged_pairs)}
    except ValueError as exc:
        out["q3"] = {"error": str(exc)}
    try:
        screen = diagnostics.unidimensionality_screen(matrix)
        out["unidimensionality"] = {"eigen_ratio": screen.ratio, "verdict": screen.verdict, "clamped_pairs": clean(screen.clamped_pairs)}
    except ValueError as exc:
        out["unidimensionality"] = {"error": str(exc)}
    return clean(out), {"1PL": m1, "2PL": m2, "abilities": abil}


def dif_section(analysis: dif.DifAnalysis) -> dict:
    return clean({
        "methods": {
            m: {"reference": r.reference, "focal": r.focal, "anchors": r.anchors, "meta": r.meta, "items": r.items}
            for m, r in analysis.results.items()
        },
        "synthesis": analysis.synthesis,
        "purification": analysis.trace,
        "errors": analysis.errors,
    })


def profile_section(profile: proficiency.ProficiencyProfile) -> dict:
    return clean({
        "origin": profile.origin,
        "target_p": profile.target_p,
        "levels": [
            {
                "index": lv.index,
                "lower": lv.lower if math.isfinite(lv.lower) else None,
                "upper": lv.upper if math.isfinite(lv.upper) else None,
                "items": lv.items,
                "anchor": lv.anchor,
                "sparse": lv.sparse,
            }
            for lv in profile.levels
        ],
        "item_location": profile.item_location,
        "student_distribution": profile.student_distribution,
        "meta": profile.meta,
    })


def run_report(input_path, config: AnalysisConfig | str | Path | None, out_dir, seed: int | None = None) -> tuple[dict, int]:
    """Run every stage, write ``report.json`` plus CSV sidecars; returns (report, exit code).

    A failing stage is recorded in ``failures`` (and ``failures.json``); later
    stages that do not depend on it still run.
    """
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config is None:
        config = AnalysisConfig()
    elif not isinstance(config, AnalysisConfig):
        config = AnalysisConfig.from_file(config)
    if seed is not None:
        config = AnalysisConfig(**{**config.__dict__, "random_seed": seed})
    chash = config.hash()
    report: dict = {
        "tool": {"name": "psychkit", "version": __version__},
        "config": config.to_dict(),
        "config_hash": chash,
    }
    failures: list[dict] = []

    def stage(module, where, fn):
        try:
            return fn()
        except Exception as exc:  # surfaced in the manifest, run continues
            failures.append({"module": module, "where": where, "error": f"{type(exc).__name__}: {exc}", "trace": traceback.format_exc(limit=3)})
            return None

    matrix = stage("dataset", str(input_path), lambda: load_csv(input_path, config))
    if matrix is None:
        report["failures"] = [{k: v for k, v in f.items() if k != "trace"} for f in failures]
        _finalize(out, report, failures, started, t0)
        return report, 1

    gv = config.grouping_variable
    levels = stage("dataset", gv, lambda: group_levels(matrix, gv)) or []
    groups = {lv: subset(matrix, {gv: lv}) for lv in levels}
    report["dataset"] = {
        "config_hash": chash,
        "n_raw_rows": matrix.n_raw_rows,
        "n_students": matrix.n_students,
        "items": list(matrix.items),
        "excluded_items": sorted(config.excluded_items),
        "group_sizes": {lv: g.n_students for lv, g in groups.items()},
        "categories": clean(matrix.categories),
    }

    # CTT
    report["ctt"] = {"config_hash": chash, "groups": {}}
    for lv, g in groups.items():
        sec = stage("ctt", f"{gv}={lv}", lambda g=g: ctt_section(g))
        if sec is not None:
            report["ctt"]["groups"][lv] = sec
            _write_csv(out / f"norms_{gv}_{lv}.csv", ["score", "z", "percentile"], [[r["score"], r["z"], r["percentile"]] for r in sec["norm_table"]])

    # group comparisons
    factor2 = "gender" if gv != "gender" and len(matrix.categories.get("gender", ())) >= 2 else None
    sec = stage("inference", gv, lambda: compare_section(matrix, gv, factor2))
    if sec is not None:
        report["inference"] = {"config_hash": chash, **sec}

    # IRT per group and combined
    targets = list(groups.items()) + [("all", matrix)]
    with ThreadPoolExecutor(max_workers=min(4, len(targets))) as pool:
        futures = [(name, pool.submit(irt_section, m)) for name, m in targets]
        fitted = {}
        for name, fut in futures:
            res = stage("irt", f"{gv}={name}", fut.result)
            if res is not None:
                fitted[name] = res
    report["irt"] = {"config_hash": chash, "groups": {name: res[0] for name, res in fitted.items()}}
    for name, (sec, live) in fitted.items():
        ct = irt.curves(live["2PL"])
        header, rows = ct.to_rows()
        _write_csv(out / f"curves_{name}.csv", header, rows)
        wm = diagnostics.wright_map_data(live["2PL"], live["abilities"])
        _write_csv(out / f"wright_{name}.csv", ["kind", "label", "lower", "upper", "value"],
                   [["person", "", lo, hi, c] for lo, hi, c in wm.bins] + [["item", it, "", "", b] for it, b in wm.items])

    # DIF
    report["dif"] = {"config_hash": chash, "analyses": {}}
    comparisons = []
    genders = matrix.categories.get("gender", ())
    if len(genders) == 2:
        comparisons.append(("gender", "gender", (genders[0],), (genders[1],)))
    for ref, foc in config.dif_pairs:
        comparisons.append((f"{gv} {'+'.join(ref)} vs {'+'.join(foc)}", gv, ref, foc))
    for name, column, ref, foc in comparisons:
        res = stage("dif", name, lambda c=column, r=ref, f=foc: dif.purify_and_synthesize(
            matrix, c, config.dif_methods, reference=r, focal=f, alpha=config.dif_alpha))
        if res is None:
            continue
        report["dif"]["analyses"][name] = dif_section(res)
        if res.errors:
            for m, err in res.errors.items():
                failures.append({"module": "dif", "where": f"{name}/{m}", "error": err})
        rows = []
        for m, r in res.results.items():
            for it in r.items:
                rows.append([m, it.item, it.statistic, it.df, it.p_value, it.p_adjusted, it.effect_size, it.effect_class or "", int(it.flagged)])
        slug = name.replace(" ", "_").replace("+", "-")
        _write_csv(out / f"dif_{slug}.csv", ["method", "item", "statistic", "df", "p_value", "p_adjusted", "effect_size", "effect_class", "flagged"], rows)

    # proficiency: grade-agnostic model with per-group distributions, then per-group models
    report["proficiency"] = {"config_hash": chash, "profiles": {}}
    if "all" in fitted:
        live = fitted["all"][1]
        theta_by_group = {lv: live["abilities"].eap[matrix.column(gv) == lv] for lv in levels}
        prof = stage("proficiency", "all", lambda: proficiency.build_profile(live["2PL"], theta_by_group, config.proficiency_origin))
        if prof is not None:
            report["proficiency"]["profiles"]["all"] = profile_section(prof)
    for lv in levels:
        if lv in fitted:
            live = fitted[lv][1]
            prof = stage("proficiency", f"{gv}={lv}", lambda live=live, lv=lv: proficiency.build_profile(live["2PL"], {lv: live["abilities"]}, config.proficiency_origin))
            if prof is not None:
                report["proficiency"]["profiles"][lv] = profile_section(prof)

    report["failures"] = [{k: v for k, v in f.items() if k != "trace"} for f in failures]
    _finalize(out, report, failures, started, t0)
    return report, 1 if failures else 0


def _finalize(out: Path, report: dict, failures, started, t0):
    with (out / "report.json").open("w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, allow_nan=False)
        fh.write("\n")
    meta = {
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "elapsed_s": time.perf_counter() - t0,
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
    if failures:
        (out / "failures.json").write_text(json.dumps(failures, indent=1) + "\n", encoding="utf-8")
