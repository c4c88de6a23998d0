"""Command-line front end.

Exit codes: 0 the property holds, 1 it is refuted, 2 usage / input errors,
3 the two fairness decision procedures disagree (a bug).  Reports are JSON on
stdout, diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import catalog
from .classifiers import (
    ClassificationData,
    build_classification_model,
    grid_domain,
    perturb,
    read_dataset_csv,
    read_label_table,
    write_dataset_csv,
)
from .divergence import Divergence, DivergenceSpec, GroundMetric, LipschitzSpec
from .errors import StatelError
from .formula import FormulaSyntaxError, IntervalError, parse_epistemic, parse_interval, parse_number, parse_static, to_text
from .modelfile import dump_model, load_model, model_to_dict
from .semantics import Evaluator

HOLDS, REFUTED, USAGE, INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(report: dict) -> None:
    json.dump(report, sys.stdout, indent=2, default=str)
    sys.stdout.write("\n")


def _fraction(text: str) -> Fraction:
    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


# --------------------------------------------------------------------------
# check
# --------------------------------------------------------------------------


def cmd_check(args) -> int:
    m = load_model(args.model)
    text = args.formula if args.formula is not None else Path(args.formula_file).read_text().strip()
    phi = parse_epistemic(text)
    ev = Evaluator(m, trace=args.trace)
    report = {"formula": to_text(phi), "universe_size": len(m.worlds),
              "scope": "declared worlds only"}
    if args.world is not None:
        w = m.world(args.world)
        verdict = ev.eval(w, phi)
        report["world"] = w.id
        p = catalog.measured_probability(m, w, phi)
        if p is not None:
            report["measured_probability"] = str(p)
        if not verdict:
            report["witness"] = w.id
    else:
        verdict = True
        for w in m.world_list:
            if not ev.eval(w, phi):
                verdict = False
                report["witness"] = w.id
                p = catalog.measured_probability(m, w, phi)
                if p is not None:
                    report["measured_probability"] = str(p)
                break
        report["world"] = None
    report["verdict"] = "holds" if verdict else "refuted"
    notes = sorted({e["note"] for e in ev.log if "note" in e})
    if notes:
        report["notes"] = notes
    if args.trace:
        report["trace"] = ev.log
    _emit(report)
    return HOLDS if verdict else REFUTED


# --------------------------------------------------------------------------
# audit
# --------------------------------------------------------------------------


def _load_data(path, classifier=None, oracle=None):
    data = read_dataset_csv(path)
    c = read_label_table(classifier) if classifier else None
    h = read_label_table(oracle) if oracle else None
    return data, c, h


def cmd_audit(args) -> int:
    data, c, h = _load_data(args.data, args.classifier, args.oracle)
    interval = parse_interval(args.interval) if args.interval else None
    kind = catalog.ConfusionKind(args.property)
    cm = build_classification_model({"w_re": data}, c, h, labels=[args.label])
    m = cm.model
    w = m.world("w_re")
    phi = catalog.confusion_formula(kind, args.label, interval)
    report = {"property": kind.value, "label": args.label, "universe_size": len(m.worlds)}
    if kind.is_static:
        # a state property: report its mass and whether it holds on the whole sample
        p = m.mass(w, phi)
        verdict = p == 1 if interval is None else interval.contains(p)
        report.update(formula=to_text(phi), value=str(p),
                      interval=None if interval is None else str(interval))
    else:
        ev = Evaluator(m, trace=True)
        verdict = ev.eval(w, phi)
        p = catalog.measured_probability(m, w, phi)
        report.update(formula=to_text(phi), interval=str(interval),
                      value=None if p is None else str(p))
        notes = sorted({e["note"] for e in ev.log if "note" in e})
        if notes:
            report["notes"] = notes
    report["verdict"] = "holds" if verdict else "refuted"
    _emit(report)
    return HOLDS if verdict else REFUTED


# --------------------------------------------------------------------------
# fairness
# --------------------------------------------------------------------------


def _fairness_kind(args):
    if args.kind == "parity":
        if not (args.g0 and args.g1):
            raise UsageError("parity needs --g0 and --g1")
        return catalog.GroupFairness(args.g0, args.g1, args.epsilon, "w_d")
    if args.kind == "eqopp":
        if not (args.group and args.label):
            raise UsageError("equal opportunity needs --group and --label")
        return catalog.EqualOpportunity(args.group, args.label, "w_d")
    div = Divergence(args.divergence, GroundMetric(args.output_metric) if args.divergence == "winf" else None)
    return catalog.IndividualFairness(args.epsilon, "w_d", GroundMetric(args.metric), div,
                                      pointwise=not args.whole_dataset)


def cmd_fairness(args) -> int:
    data, c, _ = _load_data(args.data, args.classifier)
    kind = _fairness_kind(args)
    cm = catalog.build_fairness_model({"w_d": data}, kind, c)
    audit = catalog.audit_fairness(cm, kind)
    fast = audit.fast_path
    report = {
        "kind": args.kind,
        "formula": to_text(audit.formula),
        "epsilon": str(getattr(kind, "epsilon", 0)),
        "universe_size": audit.universe_size,
        "semantic_verdict": audit.semantic_verdict,
        "fast_path_verdict": fast.verdict,
        "pairs": fast.pairs,
        "notes": fast.notes,
    }
    values = [p["value"] for p in fast.pairs if p["value"] is not None and p["from"] != p["to"]]
    if isinstance(kind, catalog.GroupFairness) and values:
        report["value"] = values[0]
    if not audit.agree:
        report["verdict"] = "internal error: decision procedures disagree"
        _emit(report)
        print("fairness formula and fast path disagree", file=sys.stderr)
        return INVARIANT
    report["verdict"] = "holds" if audit.semantic_verdict else "refuted"
    _emit(report)
    return HOLDS if audit.semantic_verdict else REFUTED


# --------------------------------------------------------------------------
# robustness
# --------------------------------------------------------------------------


def cmd_robust(args) -> int:
    base, c, h = _load_data(args.data, args.classifier, args.oracle)
    datasets = {"w_re": base}
    for i, path in enumerate(sorted(_expand(args.perturbed))):
        datasets[f"w_{i + 1}"] = read_dataset_csv(path)
    metric = GroundMetric(args.metric)
    spec = DivergenceSpec("x", Divergence("winf", metric), args.epsilon)
    cm = build_classification_model(datasets, c, h, relations={"a": spec}, real_world="w_re",
                                    labels=[args.label])
    m = cm.model
    if args.kind == "targeted":
        if args.target is None or args.delta is None:
            raise UsageError("targeted robustness needs --target and --delta")
        phi = catalog.robustness_formula(catalog.Targeted(args.label, args.delta, args.target), "a")
    else:
        if args.interval is None:
            raise UsageError(f"{args.kind} needs --interval")
        interval = parse_interval(args.interval)
        if args.kind == "total":
            phi = catalog.robustness_formula(catalog.NonTargeted(args.label, interval), "a")
        else:
            phi = catalog.robust_confusion_formula(catalog.ConfusionKind(args.kind), args.label,
                                                   interval, "a")
    ev = Evaluator(m)
    w_re = m.world("w_re")
    verdict = ev.eval(w_re, phi)
    succ = ev.successors("a", w_re)
    report = {
        "formula": to_text(phi),
        "universe_size": len(m.worlds),
        "scope": f"{len(m.worlds)} declared datasets; W-infinity over {metric.kind}, "
                 f"epsilon {args.epsilon}",
        "related_worlds": [w.id for w in succ],
        "divergences": {w.id: str(m.relations["a"].values.get((w_re.id, w.id))) for w in succ},
        "verdict": "holds" if verdict else "refuted",
    }
    if not verdict:
        body = phi.body
        report["witnesses"] = [w.id for w in succ if not ev.eval(w, body)]
    _emit(report)
    return HOLDS if verdict else REFUTED


def _expand(paths) -> list[Path]:
    out = []
    for p in paths or []:
        p = Path(p)
        out.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    return out


# --------------------------------------------------------------------------
# perturb
# --------------------------------------------------------------------------


def _read_domain(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]
    if rows and not all(_numeric(c) for c in rows[0]):
        rows = rows[1:]
    return [tuple(parse_number(c) for c in r) for r in rows]


def _numeric(text: str) -> bool:
    try:
        parse_number(text.strip())
        return True
    except (ValueError, ZeroDivisionError):
        return False


def cmd_perturb(args) -> int:
    data = read_dataset_csv(args.data)
    if args.metric != "discrete" and any(isinstance(r.x, str) for r in data.rows):
        raise UsageError(f"metric {args.metric} needs numeric features")
    dim = len(data.x_columns)
    if args.domain:
        domain = _read_domain(args.domain)
    elif args.grid:
        parts = args.grid.split(":")
        if len(parts) not in (2, 3):
            raise UsageError("--grid expects lo:hi or lo:hi:step")
        lo, hi = parse_number(parts[0]), parse_number(parts[1])
        step = parse_number(parts[2]) if len(parts) == 3 else Fraction(1)
        domain = grid_domain(lo, hi, dim, step)
    else:
        domain = sorted({r.x for r in data.rows})
    if any(len(v) != dim for v in domain if not isinstance(v, str)):
        raise UsageError(f"domain points must have dimension {dim}")
    out = perturb(data, domain, GroundMetric(args.metric), args.epsilon, args.k)
    files = []
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for i, ds in enumerate(out):
            path = d / f"d_{i:04d}.csv"
            write_dataset_csv(ds, path)
            files.append(str(path))
    _emit({"count": len(out), "metric": args.metric, "epsilon": str(args.epsilon), "k": args.k,
           "domain_size": len(domain), "files": files})
    return HOLDS


# --------------------------------------------------------------------------
# props
# --------------------------------------------------------------------------


def cmd_props(args) -> int:
    if args.max_states < 1 or args.max_worlds < 1 or args.trials < 0:
        raise UsageError("bounds must be at least 1 and trials non-negative")
    r1, r2 = catalog.run_prop_trials(args.trials, args.seed, args.max_states, args.max_worlds,
                                     mutant=args.inject_mutant)
    ok = r1.disagreements == 0 and r2.disagreements == 0
    _emit({"seed": args.seed, "trials": args.trials, "max_states": args.max_states,
           "max_worlds": args.max_worlds, "prop1": r1.to_dict(), "prop2": r2.to_dict(),
           "verdict": "holds" if ok else "refuted"})
    return HOLDS if ok else REFUTED


# --------------------------------------------------------------------------
# build
# --------------------------------------------------------------------------


def _relation_arg(text: str):
    """``id=divergence:var:tv:eps``, ``id=divergence:var:winf:metric:eps`` or
    ``id=lipschitz:input_metric:eps`` (TV on predictions)."""
    rid, _, spec = text.partition("=")
    parts = spec.split(":")
    try:
        if parts[0] == "divergence" and len(parts) == 4 and parts[2] == "tv":
            return rid, DivergenceSpec(parts[1], Divergence("tv"), parse_number(parts[3]))
        if parts[0] == "divergence" and len(parts) == 5 and parts[2] == "winf":
            return rid, DivergenceSpec(parts[1], Divergence("winf", GroundMetric(parts[3])),
                                       parse_number(parts[4]))
        if parts[0] == "lipschitz" and len(parts) == 3:
            return rid, LipschitzSpec("x", "yhat", Divergence("tv"), GroundMetric(parts[1]),
                                      parse_number(parts[2]))
    except ValueError as e:
        raise UsageError(f"bad relation {text!r}: {e}") from None
    raise UsageError(f"bad relation {text!r}")


def cmd_build(args) -> int:
    datasets: dict[str, ClassificationData] = {}
    for item in args.data:
        name, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--data expects name=path, got {item!r}")
        datasets[name] = read_dataset_csv(path)
    c = read_label_table(args.classifier) if args.classifier else None
    h = read_label_table(args.oracle) if args.oracle else None
    relations = dict(_relation_arg(r) for r in args.relation or [])
    restrictions = []
    for item in args.restrict or []:
        name, sep, cond = item.partition("=")
        if not sep:
            raise UsageError(f"--restrict expects name=formula, got {item!r}")
        restrictions.append((name, parse_static(cond)))
    cm = build_classification_model(datasets, c, h, relations=relations,
                                    restrictions=restrictions, real_world=args.real_world)
    if args.out:
        dump_model(cm.model, args.out)
        _emit({"written": args.out, "universe_size": len(cm.model.worlds)})
    else:
        _emit(model_to_dict(cm.model))
    return HOLDS


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="statel", description="Statistical epistemic logic checker.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="evaluate a formula on a model file")
    c.add_argument("-m", "--model", required=True)
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("-f", "--formula")
    g.add_argument("--formula-file")
    c.add_argument("-w", "--world", help="world id; omit to check every declared world")
    c.add_argument("--trace", action="store_true")
    c.set_defaults(func=cmd_check)

    a = sub.add_parser("audit", help="table-of-confusion property on one dataset")
    a.add_argument("--data", required=True)
    a.add_argument("--classifier", help="input,label CSV; defaults to the yhat column")
    a.add_argument("--oracle", help="input,label[,score] CSV; defaults to the y column")
    a.add_argument("--property", required=True, choices=[k.value for k in catalog.ConfusionKind])
    a.add_argument("--label", required=True)
    a.add_argument("--interval")
    a.set_defaults(func=cmd_audit)

    f = sub.add_parser("fairness", help="group / individual fairness, equal opportunity")
    f.add_argument("--data", required=True)
    f.add_argument("--classifier")
    f.add_argument("--kind", required=True, choices=["parity", "individual", "eqopp"])
    f.add_argument("--g0")
    f.add_argument("--g1")
    f.add_argument("--group")
    f.add_argument("--label")
    f.add_argument("--epsilon", type=_fraction, default=Fraction(0))
    f.add_argument("--metric", default="l1", choices=["l1", "l2", "linf", "discrete"],
                   help="input metric for individual fairness")
    f.add_argument("--divergence", default="tv", choices=["tv", "winf"])
    f.add_argument("--output-metric", default="discrete", choices=["l1", "l2", "linf", "discrete"])
    f.add_argument("--whole-dataset", action="store_true",
                   help="individual fairness on the whole dataset rather than input pairs")
    f.set_defaults(func=cmd_fairness)

    r = sub.add_parser("robust", help="robustness over perturbed datasets")
    r.add_argument("--data", required=True, help="the real dataset")
    r.add_argument("--perturbed", nargs="*", default=[], help="dataset CSVs or directories")
    r.add_argument("--classifier", required=True)
    r.add_argument("--oracle")
    r.add_argument("--kind", default="total",
                   choices=["total", "targeted"] + [k.value for k in catalog.ConfusionKind
                                                    if not k.is_static])
    r.add_argument("--label", required=True)
    r.add_argument("--target")
    r.add_argument("--delta", type=_fraction)
    r.add_argument("--interval")
    r.add_argument("--epsilon", type=_fraction, required=True)
    r.add_argument("--metric", default="linf", choices=["l1", "l2", "linf", "discrete"])
    r.set_defaults(func=cmd_robust)

    t = sub.add_parser("perturb", help="enumerate datasets within a perturbation budget")
    t.add_argument("--data", required=True)
    t.add_argument("--metric", default="linf", choices=["l1", "l2", "linf", "discrete"])
    t.add_argument("--epsilon", type=_fraction, required=True)
    t.add_argument("-k", "--max-substitutions", dest="k", type=int, required=True)
    t.add_argument("--domain", help="CSV of candidate inputs, one per row")
    t.add_argument("--grid", help="lo:hi[:step] rational grid over the feature dimension")
    t.add_argument("--out-dir")
    t.set_defaults(func=cmd_perturb)

    q = sub.add_parser("props", help="randomized checks of the indistinguishability characterizations")
    q.add_argument("--trials", type=int, default=500)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--max-states", type=int, default=4)
    q.add_argument("--max-worlds", type=int, default=6)
    q.add_argument("--inject-mutant", choices=["complement"], help=argparse.SUPPRESS)
    q.set_defaults(func=cmd_props)

    b = sub.add_parser("build", help="build a model file from datasets")
    b.add_argument("--data", action="append", required=True, help="name=path, repeatable")
    b.add_argument("--classifier")
    b.add_argument("--oracle")
    b.add_argument("--relation", action="append", help="id=spec, repeatable")
    b.add_argument("--restrict", action="append", help="dataset=static formula, repeatable")
    b.add_argument("--real-world")
    b.add_argument("-o", "--out")
    b.set_defaults(func=cmd_build)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormulaSyntaxError as e:
        print(f"parse error: {e}", file=sys.stderr)
    except (UsageError, StatelError, IntervalError, OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
    return USAGE


if __name__ == "__main__":
    sys.exit(main())
