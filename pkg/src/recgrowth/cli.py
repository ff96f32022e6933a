"""Command-line front end: ``recgrowth steady|classify|simulate|datasets``.

Reports are JSON with sorted keys written to stdout; datasets and paths
are CSV files written atomically. Exit codes: 0 success, 2 bad input,
3 solver failure, 4 model assumptions violated.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .autarky import autarky_stability, lemma1_check, solve_autarky, value_iterate
from .errors import AssumptionViolated, DegenerateClassification, RecGrowthError
from .markov import (
    classify_stability,
    compare_openloop,
    markov_local_stability,
    operator_T,
    simulate_markov,
    solve_markov,
    stationary_strategies,
)
from .model import Agent, DiscountFamily, ModelSpec, TechnologyFamily, UtilityFamily, validate_model
from .openloop import (
    admissible_bracket,
    compare_autarky,
    consumption_curves,
    manifold_slopes,
    mrs_partials,
    ol_coefficients,
    ol_jacobian_spectrum,
    ol_local_stability,
    regularity_checks,
    simulate_openloop,
    solve_openloop,
)

__all__ = ["main", "load_config", "config_hash", "ConfigError", "write_csv", "to_jsonable"]

log = logging.getLogger("recgrowth")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_ASSUMPTION = 0, 2, 3, 4
CURVE_NODES = 400

_NUMERIC_DEFAULTS = {
    "grid_n": None, "tol": None, "eps": 0.05, "lambda_lip": None,
    "g11_i": 0.0, "g11_j": 0.0, "seed": 0,
}


class ConfigError(ValueError):
    """Malformed or unreadable configuration document."""


@dataclasses.dataclass(frozen=True)
class Config:
    model: ModelSpec
    numerics: dict
    digest: str


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _num(doc: dict, key: str, where: str) -> float:
    if not isinstance(doc, dict) or key not in doc:
        raise ConfigError(f"missing field {where}.{key}")
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field {where}.{key} must be a number")
    return float(val)


def _agent(doc: Any, tag: str) -> Agent:
    where = f"agents.{tag}"
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    al, u = doc.get("alpha"), doc.get("u")
    return Agent(
        DiscountFamily(_num(al, "alpha0", where + ".alpha"), _num(al, "alpha_bar", where + ".alpha"),
                       _num(al, "a", where + ".alpha")),
        UtilityFamily(_num(u, "sigma", where + ".u"), _num(u, "scale", where + ".u")),
    )


def parse_config(doc: Any) -> tuple[ModelSpec, dict]:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    agents = doc.get("agents")
    if not isinstance(agents, dict):
        raise ConfigError("missing object 'agents'")
    tech = doc.get("technology")
    model = ModelSpec(
        agent_i=_agent(agents.get("i"), "i"),
        agent_j=_agent(agents.get("j"), "j"),
        technology=TechnologyFamily(_num(tech, "A", "technology"), _num(tech, "beta", "technology")),
        theta_i=_num(doc.get("shares", {"theta_i": 0.6}), "theta_i", "shares"),
    )
    raw = doc.get("numerics", {})
    if not isinstance(raw, dict):
        raise ConfigError("'numerics' must be an object")
    unknown = set(raw) - set(_NUMERIC_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown numerics fields: {sorted(unknown)}")
    numerics = dict(_NUMERIC_DEFAULTS)
    for key, val in raw.items():
        if val is not None and (isinstance(val, bool) or not isinstance(val, (int, float))):
            raise ConfigError(f"numerics.{key} must be a number")
        numerics[key] = val
    if numerics["grid_n"] is not None:
        numerics["grid_n"] = int(numerics["grid_n"])
    return model, numerics


def load_config(path: str | os.PathLike) -> Config:
    """Read, parse and validate a configuration file.

    Raises
    ------
    ConfigError
        Unreadable file, invalid JSON or schema violation.
    AssumptionViolated
        The model fails :func:`validate_model`.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    model, numerics = parse_config(doc)
    validate_model(model)
    return Config(model=model, numerics=numerics, digest=config_hash(doc))


def to_jsonable(obj: Any) -> Any:
    """Plain-Python view of results; non-finite floats become ``None``."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _emit(report: dict, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    stream.write(json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False))
    stream.write("\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if not math.isfinite(x) else format(x, ".15g")


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Sequence[Sequence]) -> int:
    """Write rows with 15 significant digits; temp file then atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(rows)


# ---------------------------------------------------------------- steady

def _autarky_block(model: ModelSpec) -> dict:
    out = {}
    for tag, ag in (("i", model.agent_i), ("j", model.agent_j)):
        eqs = solve_autarky(ag, model.technology)
        out[tag] = [{
            "k_a": e.k_a, "c_a": e.c_a, "eta": e.eta, "stable": e.stable,
            "residual": e.residual(ag, model.technology),
            "stability": to_jsonable(autarky_stability(e, ag, model.technology)),
        } for e in eqs]
    out["ordering"] = to_jsonable(lemma1_check(model))
    return out


def _openloop_block(model: ModelSpec):
    ss = solve_openloop(model)
    der = ol_coefficients(ss)
    reg = regularity_checks(ss, model)
    spec = ol_jacobian_spectrum(ss, der)
    block = {
        "k_bar": ss.k, "c_i": ss.c_i, "c_j": ss.c_j, "residuals": ss.residuals(),
        "eta_i": ss.eta_i, "eta_j": ss.eta_j,
        "derivatives": to_jsonable(der),
        "regularity": dict(to_jsonable(reg), all_hold=reg.all_hold),
        "spectrum": {
            "roots": list(spec.roots.roots), "all_real": spec.roots.all_real,
            "trace": spec.trace, "quad_coeff": spec.quad_coeff, "det": spec.det,
            "ordering_ok": spec.ordering_ok, "hyperbolic": spec.hyperbolic,
            "lemma_b1": spec.lemma_b1, "lemma_b2": spec.lemma_b2, "lemma_b3": spec.lemma_b3,
        },
        "mrs": dict(to_jsonable(mrs_partials(ss)), cross_sum=mrs_partials(ss).cross_sum),
        "comparison_autarky": to_jsonable(compare_autarky(ss, model)),
        "local_stability_value": ol_local_stability(ss),
    }
    try:
        slopes = manifold_slopes(ss, spec, der)
        block["manifold"] = {"pi_i": slopes.pi_i, "pi_j": slopes.pi_j,
                             "direction_error": slopes.direction_error}
    except RecGrowthError as exc:
        block["manifold"] = {"error": str(exc)}
    return ss, block


def _markov_block(model: ModelSpec, numerics: dict):
    mss = solve_markov(model, (float(numerics["g11_i"]), float(numerics["g11_j"])))
    e = mss.effects
    block = {"k_star": mss.k_star, "c_i": mss.c_i, "c_j": mss.c_j,
             "residuals": mss.residuals(), "effects": to_jsonable(e),
             "local_stability": to_jsonable(markov_local_stability(mss))}
    try:
        block["classification"] = classify_stability(e.a, e.b).as_dict()
    except DegenerateClassification as exc:
        block["classification"] = {"case": "degenerate", "boundary": exc.boundary}
    return mss, block


def cmd_steady(cfg: Config, mode: str) -> dict:
    results, diags = {}, []
    if mode in ("autarky", "all"):
        results["autarky"] = _autarky_block(cfg.model)
    ols = mss = None
    if mode in ("openloop", "all"):
        ols, results["openloop"] = _openloop_block(cfg.model)
    if mode in ("markov", "all"):
        mss, results["markov"] = _markov_block(cfg.model, cfg.numerics)
        if ols is None:
            ols = solve_openloop(cfg.model)
        results["markov"]["comparison_openloop"] = to_jsonable(compare_openloop(mss, ols))
    if mode == "all":
        a = results["autarky"]
        kai, kaj = a["i"][0]["k_a"], a["j"][0]["k_a"]
        cai = a["i"][0]["c_a"]
        o = results["openloop"]
        chain = mss.k_star < ols.k <= kaj <= kai
        results["orderings"] = {
            "k_star_lt_k_bar_le_k_a_j_le_k_a_i": chain,
            "c_bar_i_le_c_bar_j": o["c_i"] <= o["c_j"],
            "c_bar_i_le_c_a_i": o["c_i"] <= cai,
        }
        if not chain:
            diags.append("capital ordering chain fails")
    if "openloop" in results and not results["openloop"]["regularity"]["all_hold"]:
        diags.append("regularity conditions P1-P3 not all satisfied")
    return {"results": results, "diagnostics": diags}


# ---------------------------------------------------------------- classify

def cmd_classify(a: float, b: float) -> dict:
    try:
        cls = classify_stability(a, b)
    except DegenerateClassification as exc:
        return {"results": {"a": a, "b": b, "case": "degenerate", "boundary": exc.boundary},
                "diagnostics": []}
    return {"results": cls.as_dict(), "diagnostics": []}


# ---------------------------------------------------------------- simulate

def _markov_policy(cfg: Config):
    num = cfg.numerics
    mss = solve_markov(cfg.model, (float(num["g11_i"]), float(num["g11_j"])))
    kwargs = {"eps": float(num["eps"]) * mss.k_star}
    if num["grid_n"] is not None:
        kwargs["n_grid"] = num["grid_n"]
    if num["tol"] is not None:
        kwargs["tol"] = float(num["tol"])
    if num["lambda_lip"] is not None:
        kwargs["lambda_lip"] = float(num["lambda_lip"])
    return mss, operator_T(mss, model=cfg.model, **kwargs)


def cmd_simulate(cfg: Config, mode: str, k0: float | None, periods: int, out: str) -> dict:
    if periods < 1:
        raise ConfigError("--periods must be positive")
    diags = []
    if mode == "openloop":
        ss = solve_openloop(cfg.model)
        der = ol_coefficients(ss)
        spec = ol_jacobian_spectrum(ss, der)
        slopes = manifold_slopes(ss, spec, der)
        k0 = 0.9 * ss.k if k0 is None else k0
        traj = simulate_openloop(ss, der, slopes, k0, periods, spec)
        diags += traj.warnings
        extra = {"k_bar": ss.k, "sign_monotone": traj.sign_monotone()}
    else:
        mss, fp = _markov_policy(cfg)
        k0 = mss.k_star + 0.5 * (fp.h.hi - mss.k_star) if k0 is None else k0
        if not fp.h.lo <= k0 <= fp.h.hi:
            raise ConfigError(f"--k0 must lie in [{fp.h.lo:.15g}, {fp.h.hi:.15g}]")
        traj, osc = simulate_markov(fp, k0, periods)
        extra = {"k_star": mss.k_star, "oscillating": osc,
                 "slope_at_kstar": fp.slope_at_kstar, "iterations": fp.iterations}
    rows = list(zip(traj.t.astype(int), traj.k, traj.c_i, traj.c_j, traj.dev_k))
    n = write_csv(out, ["t", "k", "c_i", "c_j", "dev_k"], rows)
    return {"results": dict(extra, mode=mode, k0=k0, periods=periods, rows=n, out=str(out)),
            "diagnostics": diags}


# ---------------------------------------------------------------- datasets

def _safe(fn, *args):
    try:
        val = fn(*args)
    except (RecGrowthError, ValueError, ZeroDivisionError, OverflowError):
        return None
    return val


def _curve_rows(model: ModelSpec) -> list[list]:
    tech = model.technology
    lo, hi = admissible_bracket(model)
    rows = []
    for k in np.linspace(lo, hi, CURVE_NODES):
        k = float(k)
        net = float(tech.value(k)) - k
        inv = [None, None]
        if net >= 0.0:
            inv = [1.0 / float(ag.alpha.value(net)) for ag in model.agents]
        ol = _safe(consumption_curves, model, k) or (None, None)
        mk = _safe(stationary_strategies, model, k) or (None, None, 0)
        c_sum = None if None in ol else ol[0] + ol[1]
        g_sum = None if mk[0] is None else mk[0] + mk[1]
        rows.append([k, float(tech.d1(k)), inv[0], inv[1], ol[0], ol[1], c_sum, net,
                     mk[0], mk[1], g_sum])
    return rows


def cmd_datasets(cfg: Config, kind: str, out: str) -> dict:
    if kind == "curves":
        header = ["k", "fprime", "inv_alpha_i", "inv_alpha_j", "c_i", "c_j", "c_sum",
                  "net_output", "G_i", "G_j", "G_sum"]
        rows = _curve_rows(cfg.model)
        extra = {}
    elif kind == "policy":
        mss, fp = _markov_policy(cfg)
        header = ["k", "h"]
        rows = list(zip(fp.h.nodes, fp.h.values))
        extra = {"k_star": mss.k_star, "iterations": fp.iterations,
                 "slope_at_kstar": fp.slope_at_kstar, "lipschitz_ok": fp.lipschitz_ok}
    else:
        num = cfg.numerics
        kwargs = {}
        if num["grid_n"] is not None:
            kwargs["n_grid"] = num["grid_n"]
        if num["tol"] is not None:
            kwargs["tol"] = float(num["tol"])
        vt = value_iterate(cfg.model.agent_i, cfg.model.technology, **kwargs)
        header = ["k", "v", "policy"]
        rows = list(zip(vt.grid, vt.v, vt.policy))
        extra = {"agent": "i", "iterations": vt.iterations, "residual": vt.residual,
                 "monotone": vt.monotone}
    n = write_csv(out, header, rows)
    return {"results": dict(extra, kind=kind, rows=n, out=str(out)), "diagnostics": []}


# ---------------------------------------------------------------- entry

def _configure_logging() -> None:
    level = os.environ.get("RECGROWTH_LOG", "quiet").strip().lower()
    levels = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    log.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(levels.get(level, logging.ERROR))
    log.propagate = False
    if level not in levels:
        log.error("unknown RECGROWTH_LOG value %r; using quiet", level)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recgrowth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("steady", help="steady states and their diagnostics")
    s.add_argument("--config", required=True)
    s.add_argument("--mode", choices=["autarky", "openloop", "markov", "all"], default="all")
    s.add_argument("--seed", type=int, default=None)

    c = sub.add_parser("classify", help="stability region of (a, b)")
    c.add_argument("--a", type=float, required=True)
    c.add_argument("--b", type=float, required=True)

    m = sub.add_parser("simulate", help="equilibrium path to CSV")
    m.add_argument("--config", required=True)
    m.add_argument("--mode", choices=["openloop", "markov"], default="openloop")
    m.add_argument("--k0", type=float, default=None)
    m.add_argument("--periods", type=int, default=200)
    m.add_argument("--out", required=True)
    m.add_argument("--seed", type=int, default=None)

    d = sub.add_parser("datasets", help="curve, policy or value tables to CSV")
    d.add_argument("--config", required=True)
    d.add_argument("--kind", choices=["curves", "policy", "value"], default="curves")
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, default=None)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    start = time.perf_counter()
    try:
        if args.command == "classify":
            if not (args.a > 0.0) or not math.isfinite(args.a) or not math.isfinite(args.b):
                raise ConfigError("--a must be positive and --b finite")
            report = cmd_classify(args.a, args.b)
            digest = None
        else:
            cfg = load_config(args.config)
            digest = cfg.digest
            log.info("config %s loaded (hash %s)", args.config, digest[:12])
            if args.command == "steady":
                report = cmd_steady(cfg, args.mode)
            elif args.command == "simulate":
                report = cmd_simulate(cfg, args.mode, args.k0, args.periods, args.out)
            else:
                report = cmd_datasets(cfg, args.kind, args.out)
    except ConfigError as exc:
        print(f"recgrowth: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssumptionViolated as exc:
        print(f"recgrowth: model assumptions violated: {', '.join(exc.failures)}: {exc}",
              file=sys.stderr)
        return EXIT_ASSUMPTION
    except (RecGrowthError, ArithmeticError) as exc:
        print(f"recgrowth: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    seed = getattr(args, "seed", None)
    if seed is None and args.command != "classify":
        seed = cfg.numerics["seed"]
    report.update({
        "command": {k: v for k, v in sorted(vars(args).items())},
        "config_hash": digest,
        "seed": seed,
        "version": __version__,
        "wall_time": time.perf_counter() - start,
    })
    _emit(report)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
