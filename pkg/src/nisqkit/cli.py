"""Command-line runner for the pricing, gate-count, regression and classification sweeps.

Every run writes one JSON record (resolved config, seed, results) plus tidy
long-format CSV files into the output directory.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

OUT_ENV = "NISQKIT_OUT"
DEFAULT_OUT = "nisqkit_out"

log = logging.getLogger("nisqkit.cli")


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


DEFAULTS = {
    "price": {
        "market": {"s0": 2.0, "r": 0.05, "sigma": 0.4, "t": 0.1, "k": 1.9},
        "bins": 8, "width": 3.0, "eps": [0.0, 0.001, 0.003, 0.005], "max_power": [0, 1, 2, 3, 4],
        "schedule": "linear", "shots": 10000, "alpha": 0.05, "native": None, "repeats": 10,
        "seed": 0,
    },
    "gatecount": {
        "bins": [2, 4, 8, 16, 32, 64, 128, 256, 512], "kappa": 0.5, "m": 1,
        "natives": ["CNOT", "PARTIAL_ISWAP", "BEST"], "seed": 0,
    },
    "fit": {
        "target": "tanh", "imag_target": None, "benchmark": "z", "family": "UAT",
        "layers": [1, 2, 3, 4, 5], "points": 50, "restarts": 10, "max_evals": 600,
        "gradient_audit": False, "seed": 0,
    },
    "classify": {
        "problem": "circle", "family": "CLASSIFIER_U3", "qubits": 1, "layers": [1, 2],
        "entangling": False, "cost": "weighted", "n_train": None, "n_test": 4000,
        "restarts": 10, "max_evals": 500, "seed": 0,
    },
}
MARKET_KEYS = ("s0", "r", "sigma", "t", "k")


# ---------------------------------------------------------------- config handling

def _key_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def load_config(command: str, path: str | None, seed: int | None) -> dict:
    """Merge a JSON file over the command defaults; unknown keys are errors."""
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"{path}: cannot read config ({e.strerror})") from e
        try:
            user = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e
        if not isinstance(user, dict):
            raise ConfigError(f"{path}:1: top level must be a JSON object")
        for key, val in user.items():
            if key not in cfg:
                raise ConfigError(f"{path}:{_key_line(text, key) or '?'}: unknown key {key!r} "
                                  f"for {command} (allowed: {', '.join(sorted(cfg))})")
            if key == "market":
                if not isinstance(val, dict):
                    raise ConfigError(f"{path}:{_key_line(text, key)}: market must be an object")
                for mk in val:
                    if mk not in MARKET_KEYS:
                        raise ConfigError(f"{path}:{_key_line(text, mk) or '?'}: unknown market "
                                          f"key {mk!r} (allowed: {', '.join(MARKET_KEYS)})")
                cfg["market"].update(val)
            else:
                cfg[key] = val
    if seed is not None:
        cfg["seed"] = seed
    _validate(command, cfg)
    return cfg


def _as_list(cfg, key, kind=float):
    v = cfg[key]
    v = v if isinstance(v, list) else [v]
    try:
        return [kind(x) for x in v]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: expected a list of {kind.__name__}") from e


def _validate(command: str, cfg: dict):
    from .datasets import PROBLEMS, TARGETS_1D, TARGETS_2D
    from .reupload import FAMILIES
    from .unary import NATIVE_SETS

    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if command == "price":
        from .market import OptionSpec
        try:
            OptionSpec(**{k: float(cfg["market"][k]) for k in MARKET_KEYS})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"market: {e}") from e
        if int(cfg["bins"]) < 2:
            raise ConfigError("bins must be >= 2")
        if any(not 0 <= e <= 1 for e in _as_list(cfg, "eps")):
            raise ConfigError("eps values must lie in [0, 1]")
        if any(m < 0 for m in _as_list(cfg, "max_power", int)):
            raise ConfigError("max_power values must be >= 0")
        if cfg["schedule"] not in ("linear", "exponential"):
            raise ConfigError("schedule must be linear or exponential")
        if int(cfg["shots"]) < 1 or int(cfg["repeats"]) < 1:
            raise ConfigError("shots and repeats must be >= 1")
        if cfg["native"] not in (None, *NATIVE_SETS):
            raise ConfigError(f"native must be null or one of {NATIVE_SETS}")
    elif command == "gatecount":
        if any(b < 2 for b in _as_list(cfg, "bins", int)):
            raise ConfigError("bins must be >= 2")
        if not 0 <= float(cfg["kappa"]) <= 1:
            raise ConfigError("kappa must lie in [0, 1]")
        for nat in cfg["natives"]:
            if nat not in NATIVE_SETS:
                raise ConfigError(f"unknown native set {nat!r}")
    elif command == "fit":
        for key in ("target", "imag_target"):
            name = cfg[key]
            if name is None and key == "imag_target":
                continue
            if name not in TARGETS_1D and name not in TARGETS_2D:
                raise ConfigError(f"unknown target {name!r}")
        if cfg["benchmark"] not in ("z", "xy"):
            raise ConfigError("benchmark must be z or xy")
        if cfg["benchmark"] == "xy" and (cfg["imag_target"] is None or cfg["target"] in TARGETS_2D):
            raise ConfigError("xy benchmark needs 1D target and imag_target")
        if cfg["family"] not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}")
        if any(k < 1 for k in _as_list(cfg, "layers", int)):
            raise ConfigError("layers must be >= 1")
    elif command == "classify":
        if cfg["problem"] not in PROBLEMS:
            raise ConfigError(f"unknown problem {cfg['problem']!r}")
        if cfg["family"] not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}")
        if cfg["cost"] not in ("weighted", "fidelity"):
            raise ConfigError("cost must be weighted or fidelity")
        if any(k < 1 for k in _as_list(cfg, "layers", int)):
            raise ConfigError("layers must be >= 1")
        if int(cfg["qubits"]) < 1 or (cfg["entangling"] and int(cfg["qubits"]) < 2):
            raise ConfigError("entangling needs qubits >= 2")
    for key in ("restarts", "max_evals", "points"):
        if key in cfg and int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be >= 1")


# ---------------------------------------------------------------- output helpers

def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _subseeds(seed: int, k: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(k)]


def _pmap(fn, tasks, jobs: int):
    """Ordered map; results come back in task order regardless of ``jobs``."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


# ---------------------------------------------------------------- commands

def _price_point(task):
    from .iqae import SchedulePolicy, estimate
    from .market import OptionSpec, binned_payoff, discretize
    from .sim import NoiseModel
    from .unary import build_bundle

    cfg, eps, J, rep, seed = task
    spec = OptionSpec(**{k: float(cfg["market"][k]) for k in MARKET_KEYS})
    grid = discretize(spec, int(cfg["bins"]), float(cfg["width"]))
    bundle = build_bundle(grid, spec.k, cfg["native"])
    exact = binned_payoff(grid, spec.k)
    noise = NoiseModel(eps) if eps > 0 else None
    rec = estimate(bundle, SchedulePolicy(cfg["schedule"], J), int(cfg["shots"]), noise,
                   float(cfg["alpha"]), seed)
    acc = [r["accepted"] / r["shots"] for r in rec.rounds]
    ok = rec.status == "ok"
    return {"eps": eps, "max_power": J, "repeat": rep, "seed": seed, "status": rec.status,
            "payoff": rec.payoff if ok else None, "payoff_err": rec.payoff_err if ok else None,
            "rel_error": abs(rec.payoff - exact) / exact if ok else None,
            "acceptance": float(np.mean(acc)) if acc else 0.0, "exact": exact}


def cmd_price(cfg: dict, jobs: int, out: Path) -> int:
    eps_grid, js = _as_list(cfg, "eps"), _as_list(cfg, "max_power", int)
    keys = [(e, j, r) for e in eps_grid for j in js for r in range(int(cfg["repeats"]))]
    seeds = _subseeds(cfg["seed"], len(keys))
    rows = _pmap(_price_point, [(cfg, e, j, r, s) for (e, j, r), s in zip(keys, seeds)], jobs)
    summary = []
    for e in eps_grid:
        for j in js:
            pts = [r for r in rows if r["eps"] == e and r["max_power"] == j and r["payoff"] is not None]
            if pts:
                summary.append({"eps": e, "max_power": j,
                                "mean_rel_error": float(np.mean([p["rel_error"] for p in pts])),
                                "mean_uncertainty": float(np.mean([p["payoff_err"] for p in pts])),
                                "median_acceptance": float(np.median([p["acceptance"] for p in pts])),
                                "payoff_std": float(np.std([p["payoff"] for p in pts]))})
    failed = [r for r in rows if r["status"] != "ok"]
    rec = {"command": "price", "config": cfg, "seed": cfg["seed"], "runs": rows,
           "summary": summary, "failures": len(failed)}
    _atomic_write(out / "price.json", json.dumps(_jsonable(rec), indent=1))
    long = []
    for s in summary:
        for series in ("mean_rel_error", "mean_uncertainty", "median_acceptance", "payoff_std"):
            long.append([s["eps"], s["max_power"], series, repr(s[series])])
    _atomic_write(out / "price_errors.csv", _csv(long, ["eps", "max_power", "series", "value"]))
    if failed:
        log.error("%d run(s) rejected every shot", len(failed))
        return 3
    return 0


def cmd_gatecount(cfg: dict, jobs: int, out: Path) -> int:
    import math
    from .unary import GateCountModel, crossover_bins, gate_counts

    long, cross = [], {}
    for nat in cfg["natives"]:
        for b in _as_list(cfg, "bins", int):
            u = gate_counts(GateCountModel("unary", nat, b, float(cfg["kappa"]), m=int(cfg["m"])))
            bi = gate_counts(GateCountModel("binary", nat, math.log2(b), float(cfg["kappa"]),
                                            m=int(cfg["m"])))
            for rep, c in (("unary", u), ("binary", bi)):
                for key in ("one_qubit", "two_qubit", "depth", "total"):
                    long.append([b, f"{rep}_{nat}_{key}", repr(float(c[key]))])
        cross[nat] = crossover_bins(nat, float(cfg["kappa"]), int(cfg["m"]))
    rec = {"command": "gatecount", "config": cfg, "seed": cfg["seed"], "crossover_bins": cross}
    _atomic_write(out / "gatecount.json", json.dumps(_jsonable(rec), indent=1))
    _atomic_write(out / "gatecount.csv", _csv(long, ["bins", "series", "value"]))
    return 0


def _fit_point(task):
    from .datasets import complex_target, regression_grid, target_functions, TARGETS_2D
    from .reupload import ReuploadModel, simulate, readout_z, readout_xy, train, xy_objective, z_objective

    cfg, layers, seed = task
    two_d = cfg["target"] in TARGETS_2D
    x = regression_grid(int(cfg["points"]), 2 if two_d else 1, seed if two_d else None)
    d = 2 if two_d else 1
    model = ReuploadModel(cfg["family"], layers, data_dim=d)
    if cfg["benchmark"] == "z":
        y = target_functions(cfg["target"], x)
        obj = z_objective(model, x, y)
    else:
        y = complex_target(cfg["target"], cfg["imag_target"], x)
        obj = xy_objective(model, x, y)
    tr = train(obj, restarts=int(cfg["restarts"]), seed=seed, max_evals=int(cfg["max_evals"]))
    out = {"layers": layers, "seed": seed, "chi2": tr.result.best_loss,
           "evaluations": tr.result.evaluations, "model": tr.model.to_dict()}
    if cfg["gradient_audit"]:
        th = tr.result.best_params
        g = obj.grad(th)
        h = 1e-5
        fd = np.array([(obj.value(th + h * e) - obj.value(th - h * e)) / (2 * h)
                       for e in np.eye(obj.dim)])
        out["gradient_audit_max_abs_diff"] = float(np.abs(g - fd).max())
    psi = simulate(tr.model, x, "plus" if cfg["benchmark"] == "xy" else "zero")
    pred = readout_z(psi, 1)[:, 0] if cfg["benchmark"] == "z" else readout_xy(psi, 1)
    out["predictions"] = (x.tolist(), np.asarray(y).real.tolist(), np.asarray(y).imag.tolist(),
                          np.asarray(pred).tolist())
    return out


def cmd_fit(cfg: dict, jobs: int, out: Path) -> int:
    layers = _as_list(cfg, "layers", int)
    seeds = _subseeds(cfg["seed"], len(layers))
    res = _pmap(_fit_point, [(cfg, k, s) for k, s in zip(layers, seeds)], jobs)
    if any(not np.isfinite(r["chi2"]) for r in res):
        return 3
    chi_rows = [[r["layers"], "chi2", repr(r["chi2"])] for r in res]
    pred_rows = []
    for r in res:
        x, yr, yi, pred = r.pop("predictions")
        for i, xv in enumerate(x):
            xs = xv if isinstance(xv, float) else ";".join(map(repr, xv))
            pred_rows.append([r["layers"], xs, "target_real", repr(yr[i])])
            if cfg["benchmark"] == "xy":
                pred_rows.append([r["layers"], xs, "target_imag", repr(yi[i])])
                pred_rows.append([r["layers"], xs, "model_x", repr(pred[i][0])])
                pred_rows.append([r["layers"], xs, "model_y", repr(pred[i][1])])
            else:
                pred_rows.append([r["layers"], xs, "model_z", repr(pred[i])])
    rec = {"command": "fit", "config": cfg, "seed": cfg["seed"], "results": res}
    _atomic_write(out / "fit.json", json.dumps(_jsonable(rec), indent=1))
    _atomic_write(out / "fit_chi2.csv", _csv(chi_rows, ["layers", "series", "value"]))
    _atomic_write(out / "fit_predictions.csv", _csv(pred_rows, ["layers", "x", "series", "value"]))
    return 0


def _classify_point(task):
    from .datasets import LabelSet, make_dataset
    from .reupload import (ReuploadModel, accuracy, classify, fidelity_objective, train,
                           weighted_objective)

    cfg, layers, seed = task
    ds = make_dataset(cfg["problem"], cfg["n_train"], int(cfg["n_test"]), cfg["seed"])
    nq = int(cfg["qubits"])
    labels = LabelSet.for_classes(ds.classes)
    model = ReuploadModel(cfg["family"], layers, data_dim=ds.points.shape[1], n_qubits=nq,
                          entangling="CZ_alternating" if cfg["entangling"] else "none")
    if cfg["cost"] == "weighted":
        obj, measure = weighted_objective(model, ds.train, labels), "reduced"
    else:
        obj, measure = fidelity_objective(model, ds.train, labels), "reduced" if nq == 1 else "basis"
    tr = train(obj, restarts=int(cfg["restarts"]), seed=seed, max_evals=int(cfg["max_evals"]))
    w = tr.extra if tr.extra.size else None
    guess, _ = classify(tr.model, labels, ds.test.points, measure, w)
    return {"layers": layers, "seed": seed, "loss": tr.result.best_loss,
            "train_accuracy": accuracy(tr.model, labels, ds.train, None, measure, w),
            "test_accuracy": float(np.mean(guess == ds.test.labels)),
            "class_weights": tr.extra.tolist(), "model": tr.model.to_dict(),
            "guesses": guess.tolist()}


def cmd_classify(cfg: dict, jobs: int, out: Path) -> int:
    from .datasets import make_dataset

    layers = _as_list(cfg, "layers", int)
    seeds = _subseeds(cfg["seed"], len(layers))
    res = _pmap(_classify_point, [(cfg, k, s) for k, s in zip(layers, seeds)], jobs)
    if any(not np.isfinite(r["loss"]) for r in res):
        return 3
    ds = make_dataset(cfg["problem"], cfg["n_train"], int(cfg["n_test"]), cfg["seed"]).test
    acc_rows, guess_rows = [], []
    for r in res:
        acc_rows.append([r["layers"], "train_accuracy", repr(r["train_accuracy"])])
        acc_rows.append([r["layers"], "test_accuracy", repr(r["test_accuracy"])])
        for p, lab, g in zip(ds.points, ds.labels, r.pop("guesses")):
            guess_rows.append([r["layers"], *map(repr, p.tolist()), int(lab), g])
    rec = {"command": "classify", "config": cfg, "seed": cfg["seed"], "results": res}
    _atomic_write(out / "classify.json", json.dumps(_jsonable(rec), indent=1))
    _atomic_write(out / "classify_accuracy.csv", _csv(acc_rows, ["layers", "series", "value"]))
    head = ["layers"] + [f"x{i}" for i in range(ds.points.shape[1])] + ["label", "guess"]
    _atomic_write(out / "classify_guesses.csv", _csv(guess_rows, head))
    return 0


COMMANDS = {"price": cmd_price, "gatecount": cmd_gatecount, "fit": cmd_fit,
            "classify": cmd_classify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nisqkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"price": "unary option pricing with IQAE over noise and power grids",
             "gatecount": "closed-form gate counts and the unary/binary crossover",
             "fit": "re-uploading regression sweep over layer counts",
             "classify": "re-uploading classifier sweep over layer counts"}
    for name, h in helps.items():
        s = sub.add_parser(name, help=h)
        s.add_argument("--config", help="JSON config file (unknown keys are rejected)")
        s.add_argument("--seed", type=int, help="overrides the config seed")
        s.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
        s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.command, args.config, args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = COMMANDS[args.command](cfg, args.jobs, out)
    except (FloatingPointError, np.linalg.LinAlgError, NumericalFailure) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    if code == 0:
        print(f"wrote results to {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
