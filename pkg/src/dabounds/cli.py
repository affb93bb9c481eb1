"""Command-line entry point: ``dabounds <command> [--config PATH] [--seed N] ...``.

Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 training diverged.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import jsonschema

from . import adversarial as adv
from . import counterexample as cx
from . import properties
from .bounds import (
    VIOLATED,
    BoundReport,
    bendavid_bound,
    empirical_upper_bound,
    lower_bound_check,
    population_upper_bound,
    rademacher,
)
from .domain import SCHEMA, DiscreteDistribution, Domain, AtomFunction, AtomMap, from_dict, labeled_sample, sample
from .errors import ConfigError, DABoundsError, DivergedTraining
from .hypotheses import (
    AllBinaryOnFinite,
    ThresholdGrid,
    IntervalGrid,
    best_joint_hypothesis,
    class_from_dict,
    critical_grid,
)
from .svg import counterexample_figure, trajectory_figure

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3
DEFAULT_SEED = 42

_OBJ = {"type": "object"}
_GLOBAL = {
    "schema": {"const": SCHEMA},
    "seed": {"type": "integer"},
    "output_dir": {"type": "string"},
    "format": {"enum": ["json", "csv", "both"]},
    "plot": {"enum": ["none", "svg"]},
}
_COMMAND_FIELDS = {
    "counterexample": {"transform": _OBJ, "grid_points": {"type": "integer", "minimum": 2}},
    "bounds": {
        "source": _OBJ,
        "target": _OBJ,
        "class": _OBJ,
        "hypothesis": _OBJ,
        "n": {"type": "integer", "minimum": 1},
        "delta": {"type": "number"},
        "vc_dim": {"type": "integer", "minimum": 1},
        "rademacher_trials": {"type": "integer", "minimum": 2},
        "target_labels_known": {"type": "boolean"},
    },
    "lower-bound": {
        "source": _OBJ,
        "target": _OBJ,
        "transform_source": _OBJ,
        "transform_target": _OBJ,
        "hypothesis": _OBJ,
    },
    "rademacher": {
        "class": _OBJ,
        "points": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "distribution": _OBJ,
        "n": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["auto", "exact", "exact_enumeration", "monte_carlo"]},
        "trials": {"type": "integer", "minimum": 2},
    },
    "dann": {
        "spec": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "class_means": {"type": "array"},
                "class_stddev": {"type": "number"},
                "label_prob": {"type": "array", "items": {"type": "number"}},
                "n_train": {"type": "integer"},
                "n_test": {"type": "integer"},
            },
        },
        "hyper": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epochs": {"type": "integer"},
                "lr": {"type": "number"},
                "disc_lr": {"type": "number"},
                "batch": {"type": "integer"},
                "bottleneck": {"type": "integer"},
                "hidden": {"type": "integer"},
                "grl_coeff": {"type": "number"},
                "grl_schedule": {"enum": ["constant", "anneal"]},
                "adversarial": {"type": "boolean"},
            },
        },
        "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
    },
}


def schema_for(command: str) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["schema"],
        "properties": {**_GLOBAL, **_COMMAND_FIELDS[command]},
    }


def load_config(command: str, path: Optional[str]) -> dict:
    if path is None:
        return {"schema": SCHEMA}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, schema_for(command))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from exc
    return cfg


class Output:
    """Collects artifacts and writes them once to the output directory."""

    def __init__(self, directory: str, fmt: str, plot: str):
        self.dir = Path(directory)
        self.fmt = fmt
        self.plot = plot

    def _write(self, name: str, text: str) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text)

    def json(self, name: str, doc: dict) -> None:
        if self.fmt in ("json", "both"):
            self._write(f"{name}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, text: str) -> None:
        if self.fmt in ("csv", "both"):
            self._write(f"{name}.csv", text)

    def svg(self, name: str, text: str) -> None:
        if self.plot == "svg":
            self._write(f"{name}.svg", text)


def _reports_csv(reports) -> str:
    return "\n".join([BoundReport.CSV_HEADER] + [r.csv_row() for r in reports]) + "\n"


def _suites_csv(results) -> str:
    lines = ["name,instances,violations,vacuous,max_excess,passed"]
    lines += [f"{r.name},{r.instances},{r.violations},{r.vacuous},{r.max_excess!r},{r.passed}" for r in results]
    return "\n".join(lines) + "\n"


def _run_suites(names, n: int, seed: int, out: Output, tag: str) -> int:
    results = [properties.run_suite(name, n, seed) for name in names]
    out.json(tag, {"schema": SCHEMA, "seed": seed, "suites": [r.to_dict() for r in results]})
    out.csv(tag, _suites_csv(results))
    for r in results:
        print(f"{r.name:<28} instances={r.instances:<5} violations={r.violations}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_counterexample(cfg: dict, seed: int, out: Output, args) -> int:
    transform = from_dict(cfg["transform"]) if "transform" in cfg else None
    scenario = cx.build(transform)
    bundle = cx.verify(scenario, cfg.get("grid_points", cx.GRID_POINTS))
    bundle.update({"schema": SCHEMA, "seed": seed})
    out.json("counterexample", bundle)
    rows = [BoundReport(**_report_args(d)) for d in [bundle.get("invariance")] + list(bundle.get("joint_error", {}).values()) if d]
    out.csv("counterexample", _reports_csv(rows))
    if out.plot == "svg":
        try:
            out.svg("counterexample", counterexample_figure(scenario))
        except DABoundsError:
            pass
    for k, v in bundle["checks"].items():
        print(f"{k:<40} {'ok' if v else 'FAILED'}")
    return EXIT_OK if bundle["verified"] else EXIT_CHECK


def _report_args(d: dict) -> dict:
    return {
        "bound_name": d["bound_name"],
        "left_side": d["left_side"],
        "terms": tuple((t["name"], t["value"]) for t in d["terms"]),
        "right_side": d["right_side"],
        "verdict": d["verdict"],
        "notes": tuple(d["notes"]),
    }


def _domain(d: dict) -> Domain:
    obj = from_dict(d)
    if not isinstance(obj, Domain):
        raise ConfigError("expected a domain object")
    return obj


def cmd_bounds(cfg: dict, seed: int, out: Output, args) -> int:
    if args.random:
        return _run_suites(list(properties.SUITES), args.random, seed, out, "bounds_random")
    n = cfg.get("n", 1000)
    delta = cfg.get("delta", 0.05)
    trials = cfg.get("rademacher_trials", 200)
    extra = {}
    if "source" in cfg or "target" in cfg:
        if not ("source" in cfg and "target" in cfg and "hypothesis" in cfg):
            raise ConfigError("bounds config needs source, target and hypothesis together")
        src, tgt = _domain(cfg["source"]), _domain(cfg["target"])
        h = from_dict(cfg["hypothesis"])
        cls = class_from_dict(cfg["class"]) if "class" in cfg else ThresholdGrid(critical_grid(src, tgt))
        classic_cls, classic_src, classic_tgt = cls, src, tgt
    else:
        sc = cx.build()
        src, tgt, h = sc.source, sc.target, sc.reference_hypothesis
        cls = ThresholdGrid(critical_grid(src, tgt))
        comparison = cx.compare_bounds(sc)
        extra = {k: comparison[k] for k in ("lambda_star", "min_cross_domain_error", "induced_labeling_l1", "cross_term_tighter")}
        classic_src, classic_tgt = sc.induced()
        classic_cls = cx.IntervalComplementGrid(cx.representation_grid(sc, 101))

    _, lam = best_joint_hypothesis(classic_cls, classic_src, classic_tgt)
    errs = classic_cls.errors(classic_src)
    h_classic = h if "source" in cfg else classic_cls.member(int(errs.argmin()))
    emp_s = labeled_sample(classic_src, n, seed)
    emp_t = sample(classic_tgt.distribution, n, seed + 1)
    classic = bendavid_bound(h_classic, classic_cls, emp_s, emp_t, lam, n, cfg.get("vc_dim", 2), delta, target=classic_tgt)

    pop = population_upper_bound(h, IntervalGrid(critical_grid(src, tgt)) if "class" not in cfg else cls, src, tgt)
    s_s = labeled_sample(src, n, seed + 2)
    s_t = sample(tgt.distribution, n, seed + 3)
    doms = (src, tgt) if cfg.get("target_labels_known", True) else None
    emp = empirical_upper_bound(h, cls, s_s, s_t, delta, seed=seed, domains=doms, trials=trials)
    reports = [classic, pop, emp]
    out.json("bounds", {"schema": SCHEMA, "seed": seed, "reports": [r.to_dict() for r in reports], **extra})
    out.csv("bounds", _reports_csv(reports))
    for r in reports:
        print(r.table())
    for k, v in extra.items():
        print(f"{k} = {v}")
    return EXIT_CHECK if any(r.verdict == VIOLATED for r in (pop, emp)) else EXIT_OK


def default_lower_bound_world():
    """Label marginals Bernoulli(0.5) / Bernoulli(0.9) and a representation that forgets the domain."""
    src = Domain(DiscreteDistribution((0.0, 1.0), (0.5, 0.5)), AtomFunction({0.0: 0.0, 1.0: 1.0}))
    tgt = Domain(DiscreteDistribution((2.0, 3.0), (0.1, 0.9)), AtomFunction({2.0: 0.0, 3.0: 1.0}))
    g = AtomMap({0.0: 0.0, 1.0: 0.0, 2.0: 0.0, 3.0: 0.0})
    h = AtomFunction({0.0: 1.0})
    return src, tgt, g, g, h


def cmd_lower_bound(cfg: dict, seed: int, out: Output, args) -> int:
    if args.random:
        names = ["prediction_distance", "key_lemma", "lower_bound_theorem", "corollary_two_maps"]
        return _run_suites(names, args.random, seed, out, "lower_bound_random")
    if "source" in cfg:
        missing = [k for k in ("target", "transform_source", "hypothesis") if k not in cfg]
        if missing:
            raise ConfigError(f"lower-bound config missing {missing}")
        src, tgt = _domain(cfg["source"]), _domain(cfg["target"])
        gs = from_dict(cfg["transform_source"])
        gt = from_dict(cfg["transform_target"]) if "transform_target" in cfg else gs
        h = from_dict(cfg["hypothesis"])
    else:
        src, tgt, gs, gt, h = default_lower_bound_world()
    key, thm = lower_bound_check(src, tgt, gs, gt, h)
    out.json("lower_bound", {"schema": SCHEMA, "seed": seed, "reports": [key.to_dict(), thm.to_dict()]})
    out.csv("lower_bound", _reports_csv([key, thm]))
    print(key.table())
    print(thm.table())
    return EXIT_CHECK if VIOLATED in (key.verdict, thm.verdict) else EXIT_OK


def cmd_rademacher(cfg: dict, seed: int, out: Output, args) -> int:
    cls = class_from_dict(cfg["class"]) if "class" in cfg else AllBinaryOnFinite(range(8))
    if "points" in cfg:
        pts = cfg["points"]
    elif "distribution" in cfg:
        pts = sample(from_dict(cfg["distribution"]), cfg.get("n", 8), seed)
    else:
        pts = [float(i) for i in range(8)]
    est = rademacher(cls, pts, mode=cfg.get("mode", "auto"), trials=cfg.get("trials", 1000), seed=seed)
    doc = {"schema": SCHEMA, "seed": seed, "n": len(pts), "class_size": len(cls), **est.to_dict()}
    out.json("rademacher", doc)
    out.csv("rademacher", "value,mode,trials,std_error\n" + f"{est.value!r},{est.mode},{est.trials},{est.std_error!r}\n")
    print(f"rademacher = {est.value:.6f} ({est.mode}, trials={est.trials}, std_error={est.std_error:.3g})")
    return EXIT_OK


def cmd_dann(cfg: dict, seed: int, out: Output, args) -> int:
    spec_kw = dict(cfg.get("spec", {}))
    try:
        hyper = adv.Hyper(**cfg.get("hyper", {}))
        specs = [adv.SyntheticDomainSpec(seed=s, **spec_kw) for s in cfg.get("seeds", [seed])]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    runs = []
    for spec in specs:
        traj = adv.train(spec, hyper)
        s = adv.summary(traj)
        s["seed"] = spec.seed
        runs.append(s)
        out.csv(f"dann_seed{spec.seed}", traj.to_csv())
        out.svg(f"dann_seed{spec.seed}", trajectory_figure(traj, s["peak_epoch"], s["post_peak_slope"]))
        print(
            f"seed {spec.seed}: peak {s['peak_target_acc']:.3f} at epoch {s['peak_epoch']}, "
            f"final {s['final_target_acc']:.3f}, post-peak slope {s['post_peak_slope']:.5f}"
        )
    doc = {"schema": SCHEMA, "seed": seed, "spec": adv.spec_to_dict(specs[0]), "hyper": hyper.__dict__, "runs": runs}
    out.json("dann_summary", doc)
    return EXIT_OK if all(r["lower_bound_consistent"] for r in runs) else EXIT_CHECK


COMMANDS = {
    "counterexample": cmd_counterexample,
    "bounds": cmd_bounds,
    "lower-bound": cmd_lower_bound,
    "rademacher": cmd_rademacher,
    "dann": cmd_dann,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dabounds", description="Domain adaptation bounds, checked numerically.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config (schema da-bounds/v1)")
        p.add_argument("--seed", type=int, default=None, help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--output", default=None, help="output directory (default: current directory)")
        p.add_argument("--format", choices=["json", "csv", "both"], default=None)
        p.add_argument("--plot", choices=["none", "svg"], default=None)
        p.add_argument("--random", type=int, default=0, metavar="N", help="run randomized property suites with N instances")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", DEFAULT_SEED)
        out = Output(
            args.output or cfg.get("output_dir", "."),
            args.format or cfg.get("format", "json"),
            args.plot or cfg.get("plot", "none"),
        )
        if args.random < 0:
            raise ConfigError("--random must be non-negative")
        return COMMANDS[args.command](cfg, seed, out, args)
    except DivergedTraining as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DABoundsError as exc:
        # malformed objects inside an otherwise well-formed config
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
