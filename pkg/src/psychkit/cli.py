"""Command-line front end: ``psychkit <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import ctt, diagnostics, dif, irt, proficiency
from .dataset import AnalysisConfig, DataError, group_levels, load_csv, subset
from .report import clean, compare_section, ctt_section, dif_section, profile_section, run_report


def _config(args) -> AnalysisConfig:
    cfg = AnalysisConfig.from_file(args.config) if args.config else AnalysisConfig()
    updates = {}
    if getattr(args, "exclude", None):
        updates["excluded_items"] = cfg.excluded_items | {s.strip() for s in args.exclude.split(",") if s.strip()}
    if args.seed is not None:
        updates["random_seed"] = args.seed
    if args.group:
        updates["grouping_variable"] = args.group
    return AnalysisConfig(**{**cfg.__dict__, **updates}) if updates else cfg


def _load(args):
    cfg = _config(args)
    matrix = load_csv(args.input, cfg)
    for cond in getattr(args, "where", None) or []:
        key, _, value = cond.partition("=")
        matrix = subset(matrix, {key: value.split(",")})
    return matrix, cfg


def _dump(obj, path):
    text = json.dumps(clean(obj), indent=1, allow_nan=False) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_ctt(args):
    matrix, cfg = _load(args)
    gv = cfg.grouping_variable
    out = {"config_hash": cfg.hash(), "grouping_variable": gv, "groups": {}}
    for lv in group_levels(matrix, gv):
        sec = ctt_section(subset(matrix, {gv: lv}))
        out["groups"][lv] = sec
        if args.csv:
            d = Path(args.csv)
            d.mkdir(parents=True, exist_ok=True)
            with (d / f"norms_{gv}_{lv}.csv").open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["score", "z", "percentile"])
                for r in sec["norm_table"]:
                    w.writerow([r["score"], f"{r['z']:.4f}", r["percentile"]])
    _dump(out, args.out)


def cmd_compare(args):
    if args.outcome != "total":
        raise SystemExit("only --outcome total is supported")
    matrix, cfg = _load(args)
    sec = compare_section(matrix, args.factor, args.factor2)
    results = [{"test": "one-way ANOVA", **sec["one_way_anova"]}]
    results += [{"test": "Dunn", **d} for d in sec["dunn"]]
    if "two_way_anova" in sec:
        results += [{"test": f"two-way ANOVA {k}", **v} for k, v in sec["two_way_anova"].items() if k != "ss_type"]
    results.append({"test": "minimum detectable effect", **sec["min_detectable_effect"]})
    _dump(results, args.out)


def _write_abilities(path, matrix, est):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["student_id", "grade", "gender", "eap", "posterior_sd"])
        for i in range(matrix.n_students):
            w.writerow([matrix.student_ids[i], int(matrix.grades[i]), matrix.genders[i], repr(float(est.eap[i])), repr(float(est.posterior_sd[i]))])


def _read_abilities(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: no abilities")
    return rows


def cmd_irt_fit(args):
    matrix, cfg = _load(args)
    grid = irt.QuadratureGrid.normal(args.nodes)
    model = irt.fit(matrix, args.model.upper(), grid, tol=args.tol, max_iter=args.max_iter)
    d = model.to_dict()
    d["meta"]["config_hash"] = cfg.hash()
    d["meta"]["excluded_items"] = sorted(cfg.excluded_items)
    _dump(d, args.out)
    if args.abilities_out:
        _write_abilities(args.abilities_out, matrix, irt.eap(matrix, model, grid))


def cmd_irt_curves(args):
    model = irt.IrtModel.load(args.model)
    table = irt.curves(model, lo=args.min, hi=args.max, step=args.step)
    header, rows = table.to_rows()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([[f"{v:.6g}" for v in r] for r in rows])


def cmd_irt_wright(args):
    model = irt.IrtModel.load(args.model)
    theta = np.array([float(r["eap"]) for r in _read_abilities(args.abilities)])
    wm = diagnostics.wright_map_data(model, theta, args.bin_width)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "label", "lower", "upper", "value"])
        for lo, hi, c in wm.bins:
            w.writerow(["person", "", lo, hi, c])
        for it, b in wm.items:
            w.writerow(["item", it, "", "", b])


def cmd_dif(args):
    matrix, cfg = _load(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    res = dif.purify_and_synthesize(
        matrix,
        args.group or "gender",
        methods,
        max_rounds=args.max_rounds,
        reference=args.reference.split(",") if args.reference else None,
        focal=args.focal.split(",") if args.focal else None,
        alpha=args.alpha,
    )
    out = {"config_hash": cfg.hash(), **dif_section(res)}
    _dump(out, args.out)
    return 1 if res.errors else 0


def cmd_proficiency(args):
    model = irt.IrtModel.load(args.model)
    abilities = {}
    if args.abilities:
        rows = _read_abilities(args.abilities)
        col = args.group or "grade"
        for r in rows:
            abilities.setdefault(r.get(col, "all"), []).append(float(r["eap"]))
        abilities = {k: np.array(v) for k, v in sorted(abilities.items())}
    prof = proficiency.build_profile(model, abilities, origin=args.origin, min_items=args.min_items)
    out = profile_section(prof)
    out["semantics"] = clean(proficiency.verify_level_semantics(prof, model))
    _dump(out, args.out)


def cmd_report(args):
    cfg = _config(args)
    _, code = run_report(args.input, cfg, args.out or "report", seed=args.seed)
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="response CSV")
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output path ('-' for stdout)")
    common.add_argument("--group", help="grouping column (grade, gender or a custom column)")
    common.add_argument("--exclude", help="comma-separated items to drop")
    common.add_argument("--where", action="append", metavar="COL=V1,V2", help="keep rows whose COL is one of the values")

    p = argparse.ArgumentParser(prog="psychkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ctt", parents=[common], help="item analysis, descriptives and norm tables per group")
    s.add_argument("--csv", metavar="DIR", help="also write one norm-table CSV per group")
    s.set_defaults(func=cmd_ctt)

    s = sub.add_parser("compare", parents=[common], help="ANOVA, Dunn's test, Cohen's d, MDES")
    s.add_argument("--outcome", default="total")
    s.add_argument("--factor", default="grade")
    s.add_argument("--factor2")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("irt", help="fit models and export curves / Wright-map data")
    isub = s.add_subparsers(dest="irt_command", required=True)
    f = isub.add_parser("fit", parents=[common])
    f.add_argument("--model", default="2pl", choices=["1pl", "2pl", "1PL", "2PL"])
    f.add_argument("--nodes", type=int, default=61)
    f.add_argument("--tol", type=float, default=1e-4)
    f.add_argument("--max-iter", type=int, default=500)
    f.add_argument("--abilities-out", help="write EAP abilities CSV")
    f.set_defaults(func=cmd_irt_fit)
    c = isub.add_parser("curves", parents=[common])
    c.add_argument("--model", required=True)
    c.add_argument("--min", type=float, default=-6.0)
    c.add_argument("--max", type=float, default=6.0)
    c.add_argument("--step", type=float, default=0.01)
    c.set_defaults(func=cmd_irt_curves)
    w = isub.add_parser("wright", parents=[common])
    w.add_argument("--model", required=True)
    w.add_argument("--abilities", required=True)
    w.add_argument("--bin-width", type=float, default=0.25)
    w.set_defaults(func=cmd_irt_wright)

    s = sub.add_parser("dif", parents=[common], help="MH / logistic / Lord DIF with purification")
    s.add_argument("--methods", default="mh,logistic,lord")
    s.add_argument("--reference", help="comma-separated reference level(s)")
    s.add_argument("--focal", help="comma-separated focal level(s)")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--max-rounds", type=int, default=10)
    s.set_defaults(func=cmd_dif)

    s = sub.add_parser("proficiency", parents=[common], help="proficiency levels from a 2PL model")
    s.add_argument("--model", required=True)
    s.add_argument("--abilities")
    s.add_argument("--origin", type=float, default=0.0)
    s.add_argument("--min-items", type=int, default=3)
    s.set_defaults(func=cmd_proficiency)

    s = sub.add_parser("report", parents=[common], help="run the full pipeline into an output directory")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    needs_input = args.func in (cmd_ctt, cmd_compare, cmd_irt_fit, cmd_dif, cmd_report)
    if needs_input and not args.input:
        print("error: --input is required", file=sys.stderr)
        return 2
    try:
        code = args.func(args)
    except (DataError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
