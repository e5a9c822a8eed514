"""Experiment definitions: configuration checking and one runner per subcommand."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .approx import (
    NoRationalPoints,
    TooFewRecords,
    best_records,
    circle_oracle,
    cover_dimension,
    dirichlet_constant,
    exponent,
    simplex_verify,
    strong_simplex_verify,
)
from .cache import cache_get_or_build
from .flow import (
    DaniConstants,
    NotGoodForm,
    build_context,
    constants,
    dani_sweep,
    dual_use_ratio,
    transported_constants,
)
from .game import BobStrategy, ClosureFailure, NoFeasibleBall, certify_ba, play, two_branch_check
from .geometry import dist_many, make_rng, perturb_on_quadric, sample_on_submanifold_many, sample_points, unit
from .points import enumerate_array, parametrized_array, qrank_bounds, row_heights
from .quadform import QuadFormError, QuadraticForm, good_form, hyperbolic_normalize, is_good_form

EXPERIMENTS = (
    "enumerate", "qrank", "normalize", "simplex-verify", "strong-simplex-verify",
    "dani-verify", "exponent", "dirichlet", "cover-count", "game",
)

COMMON = {"form": None, "h_max": None, "seed": 0, "cache_dir": ".quadric-cache"}

_SIMPLEX = {"samples": 1000, "rho_min": 1e-3, "rho_max": 1e-1, "constant": "auto", "base": None,
            "anchor_fraction": 0.5, "exclude_tol": 1e-6}

PARAMS: dict[str, dict[str, Any]] = {
    "enumerate": {"method": "auto", "base": None},
    "qrank": {"moduli": None},
    "normalize": {"e": None},
    "simplex-verify": dict(_SIMPLEX),
    "strong-simplex-verify": dict(_SIMPLEX),
    "dani-verify": {"samples": 200, "pairs": 50, "t_max": 12.0, "anchor_fraction": 0.5,
                    "ratio_tol": 1e-9, "q_tol": 1e-6, "group_tol": 1e-9},
    "exponent": {"samples": 100, "slice": None, "h_min": 1, "min_records": 5,
                 "mean_range": [0.8, 1.2], "floor": 0.8},
    "dirichlet": {"samples": 100, "slice": None},
    "cover-count": {"betas": [1.5, 2.0, 3.0], "p_min": 6, "p_max": 12, "sample_budget": 1_000_000,
                    "slope_beta": 2.0, "slope_max": 0.7},
    "game": {"games": 100, "beta": 0.1, "rounds": 40, "strategies": ["random", "greedy", "stubborn"],
             "rho0": 0.05, "slice": None, "constant": "auto", "base": None},
}

DEFAULT_H = {"enumerate": 25, "qrank": 50, "normalize": 25, "exponent": 100_000,
             "dirichlet": 100_000, "game": 1000}


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------------------


def _line_of(text: str, key: str) -> str:
    for n, line in enumerate(text.splitlines(), 1):
        if re.search(r'"%s"\s*:' % re.escape(key), line):
            return f"line {n}: "
    return ""


def _form_from(spec, base_dir: Path) -> QuadraticForm:
    if isinstance(spec, list):
        return QuadraticForm(spec)
    if isinstance(spec, dict) and set(spec) == {"gram"}:
        return QuadraticForm(spec["gram"])
    if isinstance(spec, dict) and set(spec) == {"good_form"}:
        return good_form(spec["good_form"])
    if isinstance(spec, dict) and set(spec) == {"file"}:
        path = Path(spec["file"])
        if not path.is_absolute():
            path = base_dir / path
        try:
            return QuadraticForm.from_json(path.read_text())
        except OSError as err:
            raise ConfigError(f"cannot read form file {path}: {err}") from None
    raise ConfigError('form must be a Gram matrix, {"gram": ...}, {"good_form": residual} or {"file": path}')


def _check(cond: bool, key: str, msg: str, text: str = "") -> None:
    if not cond:
        raise ConfigError(f"{_line_of(text, key)}{key}: {msg}")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@dataclass
class ExperimentConfig:
    experiment: str
    form: QuadraticForm
    values: dict[str, Any]

    @property
    def h_max(self) -> Optional[int]:
        return self.values["h_max"]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def __getitem__(self, key):
        return self.values[key]

    def resolved(self) -> dict[str, Any]:
        out = dict(self.values)
        out["form"] = [list(r) for r in self.form.gram]
        out.pop("cache_dir")
        return out

    def digest(self) -> str:
        blob = json.dumps({"experiment": self.experiment, **self.resolved()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(experiment: str, raw: dict, text: str = "", base_dir: Path = Path("."),
                overrides: Optional[dict] = None) -> ExperimentConfig:
    """Merge defaults, reject unknown keys and check ranges."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {**COMMON, **PARAMS[experiment]}
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"{_line_of(text, unknown[0])}unknown key(s) for {experiment}: {', '.join(unknown)}")
    vals = {**allowed, **raw}
    for k, v in (overrides or {}).items():
        if v is not None:
            vals[k] = v
    if vals["form"] is None:
        raise ConfigError("form: required")
    try:
        form = _form_from(vals["form"], base_dir)
    except QuadFormError as err:
        raise ConfigError(f"{_line_of(text, 'form')}form: {err}") from None
    if vals["h_max"] is None and experiment in DEFAULT_H:
        vals["h_max"] = DEFAULT_H[experiment]
    _check(vals["h_max"] is None or (_is_int(vals["h_max"]) and vals["h_max"] >= 1), "h_max", "must be an integer >= 1", text)
    _check(_is_int(vals["seed"]) and vals["seed"] >= 0, "seed", "must be a non-negative integer", text)
    _check(isinstance(vals["cache_dir"], str), "cache_dir", "must be a path string", text)
    _validate_params(experiment, vals, text)
    return ExperimentConfig(experiment, form, vals)


def _validate_params(exp: str, v: dict, text: str) -> None:
    def pos_int(k):
        _check(_is_int(v[k]) and v[k] >= 1, k, "must be an integer >= 1", text)

    def vec_or_none(k):
        _check(v[k] is None or (isinstance(v[k], list) and all(_is_int(a) for a in v[k])), k,
               "must be a list of integers", text)

    def slice_ok(k):
        s = v[k]
        _check(s is None or (isinstance(s, list) and len(s) == 3 and all(
            isinstance(r, list) and all(_is_num(a) for a in r) for r in s)), k, "must be three vectors", text)

    if exp == "enumerate":
        _check(v["method"] in ("auto", "bruteforce", "parametrized"), "method", "auto, bruteforce or parametrized", text)
        vec_or_none("base")
        _check(v["method"] != "parametrized" or v["base"] is not None, "base", "required for the parametrized method", text)
    elif exp == "qrank":
        _check(v["moduli"] is None or (isinstance(v["moduli"], list) and all(_is_int(m) and m >= 2 for m in v["moduli"])),
               "moduli", "must be a list of integers >= 2", text)
    elif exp == "normalize":
        vec_or_none("e")
    elif exp in ("simplex-verify", "strong-simplex-verify"):
        pos_int("samples")
        _check(_is_num(v["rho_min"]) and _is_num(v["rho_max"]) and 0 < v["rho_min"] <= v["rho_max"] < 1,
               "rho_min", "need 0 < rho_min <= rho_max < 1", text)
        _check(v["constant"] in ("auto", "good", "transported") or (_is_num(v["constant"]) and v["constant"] > 0),
               "constant", "auto, good, transported or a positive number", text)
        vec_or_none("base")
        _check(_is_num(v["anchor_fraction"]) and 0 <= v["anchor_fraction"] <= 1, "anchor_fraction", "must lie in [0, 1]", text)
        _check(_is_num(v["exclude_tol"]) and v["exclude_tol"] >= 0, "exclude_tol", "must be >= 0", text)
    elif exp == "dani-verify":
        pos_int("samples")
        pos_int("pairs")
        _check(_is_num(v["t_max"]) and v["t_max"] > 0, "t_max", "must be > 0", text)
        _check(_is_num(v["anchor_fraction"]) and 0 <= v["anchor_fraction"] <= 1, "anchor_fraction", "must lie in [0, 1]", text)
        for k in ("ratio_tol", "q_tol", "group_tol"):
            _check(_is_num(v[k]) and v[k] >= 0, k, "must be >= 0", text)
    elif exp in ("exponent", "dirichlet"):
        pos_int("samples")
        slice_ok("slice")
        if exp == "exponent":
            pos_int("h_min")
            pos_int("min_records")
            mr = v["mean_range"]
            _check(isinstance(mr, list) and len(mr) == 2 and all(_is_num(a) for a in mr) and mr[0] <= mr[1],
                   "mean_range", "must be [low, high]", text)
            _check(_is_num(v["floor"]), "floor", "must be a number", text)
    elif exp == "cover-count":
        _check(isinstance(v["betas"], list) and v["betas"] and all(_is_num(b) and b >= 1 for b in v["betas"]),
               "betas", "must be a non-empty list of numbers >= 1", text)
        pos_int("p_min")
        pos_int("p_max")
        _check(v["p_min"] < v["p_max"] <= 20, "p_max", "need p_min < p_max <= 20", text)
        pos_int("sample_budget")
        _check(v["slope_beta"] in v["betas"], "slope_beta", "must be one of betas", text)
        _check(_is_num(v["slope_max"]), "slope_max", "must be a number", text)
    elif exp == "game":
        pos_int("games")
        pos_int("rounds")
        _check(_is_num(v["beta"]) and 0 < v["beta"] < 1 / 3, "beta", "must lie in (0, 1/3)", text)
        _check(isinstance(v["strategies"], list) and v["strategies"]
               and all(s in [b.value for b in BobStrategy] for s in v["strategies"]),
               "strategies", "subset of random, greedy, stubborn", text)
        _check(_is_num(v["rho0"]) and 0 < v["rho0"] < 1, "rho0", "must lie in (0, 1)", text)
        slice_ok("slice")
        _check(v["constant"] in ("auto", "good", "transported") or (_is_num(v["constant"]) and v["constant"] > 0),
               "constant", "auto, good, transported or a positive number", text)
        vec_or_none("base")


# -- results -----------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    header: list[str]
    rows: list[list]
    summary: dict[str, Any]
    passed: bool
    seeds: dict[str, Any] = field(default_factory=dict)


def _table(cfg: ExperimentConfig, h: int) -> np.ndarray:
    return cache_get_or_build(cfg.form, h, cfg["cache_dir"], seed=cfg.seed).table


def simplex_constant(form: QuadraticForm, spec, base, table_small: Optional[np.ndarray] = None):
    """(c, label) for the simplex constant requested by ``spec``."""
    if _is_num(spec):
        return float(spec), "given"
    if spec in ("auto", "good") and is_good_form(form) and form.gram[0][-1] == 1:
        return constants(form).c_small, "good"
    if spec == "good":
        raise ConfigError("constant: the form is not in hyperbolic normal form")
    if base is None:
        pts = table_small if table_small is not None else enumerate_array(form, 10)
        if len(pts) == 0:
            raise ConfigError("base: no rational point of height <= 10; give one")
        base = pts[0].tolist()
    try:
        return transported_constants(form, base).c_small, "transported"
    except (NotGoodForm, QuadFormError) as err:
        raise ConfigError(f"base: {err}") from None


def _unit_sphere_form(form: QuadraticForm) -> bool:
    n = form.size
    return form.gram == tuple(tuple((1 if i < n - 1 else -1) if i == j else 0 for j in range(n)) for i in range(n))


def _fmt(x: float) -> str:
    return repr(float(x))


# -- runners -----------------------------------------------------------------------------


def run_enumerate(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg["method"] == "parametrized":
        table = parametrized_array(cfg.form, cfg["base"], cfg.h_max)
    elif cfg["method"] == "bruteforce":
        from .points import bruteforce_array
        table = bruteforce_array(cfg.form, cfg.h_max)
    else:
        table = _table(cfg, cfg.h_max)
    hs = row_heights(table)
    header = [f"x{i + 1}" for i in range(cfg.form.size)] + ["height"]
    rows = [[int(a) for a in v] + [int(h)] for v, h in zip(table, hs)]
    return ExperimentResult(header, rows, {"count": len(rows), "h_max": cfg.h_max}, True)


def run_qrank(cfg: ExperimentConfig) -> ExperimentResult:
    b = qrank_bounds(cfg.form, cfg.h_max, moduli=cfg["moduli"])
    witness = [list(v) for v in b.witness.basis] if b.witness else []
    summary = {"lower": b.lower, "upper": b.upper, "exact": b.exact, "obstruction": b.obstruction, "witness": witness}
    row = [b.lower, b.upper, b.obstruction if b.obstruction is not None else "", json.dumps(witness)]
    return ExperimentResult(["lower", "upper", "obstruction", "witness"], [row], summary, b.lower <= b.upper)


def run_normalize(cfg: ExperimentConfig) -> ExperimentResult:
    e = cfg["e"]
    if e is None:
        pts = _table(cfg, cfg.h_max)
        if len(pts) == 0:
            raise ConfigError(f"e: no rational point of height <= {cfg.h_max}; give one")
        e = pts[0].tolist()
    hb = hyperbolic_normalize(cfg.form, e)
    g = hb.transformed_gram(cfg.form)
    good = all(float(a) == int(a) for r in g for a in r) and is_good_form(QuadraticForm.from_rational(g))
    rows = [[str(a) for a in col] for col in hb.basis]
    summary = {"e": list(e), "transformed_gram": [[str(a) for a in r] for r in g], "good_form": good}
    return ExperimentResult([f"b{i + 1}" for i in range(cfg.form.size)], rows, summary, True)


def _simplex_points(cfg, table, c, rng):
    n = cfg["samples"]
    form = cfg.form
    lo, hi = math.log(cfg["rho_min"]), math.log(cfg["rho_max"])
    n_anchor = int(round(n * cfg["anchor_fraction"]))
    xs, rhos = [], []
    pool = table[row_heights(table) <= c / cfg["rho_min"]]
    units = unit(table.astype(np.float64)) if len(table) else table
    tol = cfg["exclude_tol"]
    while len(xs) < n:
        rho = math.exp(rng.uniform(lo, hi))
        if len(xs) < n_anchor and len(pool):
            v = unit(pool[rng.integers(len(pool))])
            x = perturb_on_quadric(form, v, rho * rng.uniform(0.05, 1.5), rng)
        else:
            x = sample_points(form, 1, (int(rng.integers(2**31)),))[0]
        if tol and len(table):
            # |<u, x>| close to 1 is a cheap superset of dist < tol
            near = table[np.abs(units @ x) >= 1 - max(tol, 1e-9)]
            if len(near) and dist_many(x, near).min() < tol:
                continue
        xs.append(x)
        rhos.append(rho)
    return np.array(xs), np.array(rhos)


def run_simplex(cfg: ExperimentConfig, strong: bool) -> ExperimentResult:
    c, label = simplex_constant(cfg.form, cfg["constant"], cfg["base"])
    need = max(1, math.floor(c / cfg["rho_min"]))
    h = cfg.h_max if cfg.h_max is not None else need
    if h < need:
        raise ConfigError(f"h_max: must be >= c/rho_min = {need}")
    table = _table(cfg, h)
    rng = make_rng((cfg.seed, 1))
    xs, rhos = _simplex_points(cfg, table, c, rng)
    hs = row_heights(table)
    oracle = _unit_sphere_form(cfg.form)
    verify = strong_simplex_verify if strong else simplex_verify
    header = [f"x{i + 1}" for i in range(cfg.form.size)] + ["rho", "members", "span_dim", "passed", "oracle"]
    rows, fails, disagree, largest = [], 0, 0, 0
    for x, rho in zip(xs, rhos):
        # tables are height-sorted and members have H <= c/rho
        rep = verify(cfg.form, x, float(rho), c, table[: np.searchsorted(hs, c / rho, side="right")])
        fails += not rep.passed
        largest = max(largest, rep.size)
        verdict = ""
        if oracle:
            orc = circle_oracle(rep.members, float(rho), c)
            agree = rep.passed and (rep.size <= 1 or not orc.predicts_at_most_one or strong)
            disagree += not agree
            verdict = "agree" if agree else "disagree"
        dim = rep.subspace.dim if rep.subspace is not None else 0
        rows.append([_fmt(a) for a in x] + [_fmt(rho), rep.size, dim, int(rep.passed), verdict])
    summary = {"instances": len(rows), "pass_count": len(rows) - fails, "fail_count": fails, "max_members": largest, "c": c, "constant": label,
               "table_height": h, "oracle_applied": oracle, "oracle_disagreements": disagree}
    return ExperimentResult(header, rows, summary, fails == 0 and disagree == 0)


def run_dani(cfg: ExperimentConfig) -> ExperimentResult:
    form = cfg.form
    try:
        consts = constants(form)
        exact = True
    except NotGoodForm:
        consts, exact = DaniConstants(math.nan, math.nan, 1.0, math.nan), False
    c_big = consts.c_big
    h = cfg.h_max or 1000
    table = _table(cfg, h)
    rng = make_rng((cfg.seed, 4))
    a = form.matrix.astype(np.float64)
    n_anchor = int(round(cfg["samples"] * cfg["anchor_fraction"]))
    worst, worst_q, worst_g, worst_dual, count = 0.0, 0.0, 0.0, 0.0, 0
    rows = []
    for k in range(cfg["samples"]):
        pairs = cfg["pairs"]
        vs = table[rng.integers(len(table), size=pairs)]
        if k < n_anchor:
            anchor = table[rng.integers(len(table))]
            x = perturb_on_quadric(form, unit(anchor), 10.0 ** (-rng.uniform(0, 6)), rng)
            vs[: pairs // 2] = anchor
        else:
            x = sample_points(form, 1, (int(rng.integers(2**31)),))[0]
        ctx = build_context(form, x)
        ts = rng.uniform(0, cfg["t_max"], size=pairs)
        reps = dani_sweep(ctx, consts, vs, ts)
        r = max(rep.ratio for rep in reps)
        s, t = rng.uniform(0, cfg["t_max"] / 2, size=2)
        gs, gt, gst = ctx.matrix(s), ctx.matrix(t), ctx.matrix(s + t)
        group = np.abs(gst - gs @ gt).max() / max(1.0, np.abs(gs).max() * np.abs(gt).max())
        w = rng.standard_normal(form.size)
        gw = gt @ w
        qerr = abs(gw @ a @ gw - w @ a @ w) / max(1.0, gw @ gw)
        dual = dual_use_ratio(ctx, consts, table, 10.0 ** (-rng.uniform(1, 3))) if exact else 0.0
        worst, worst_q, worst_g = max(worst, r), max(worst_q, qerr), max(worst_g, group)
        worst_dual = max(worst_dual, dual)
        count += pairs
        rows.append([_fmt(v) for v in x] + [ctx.mode, _fmt(r), _fmt(qerr), _fmt(group)])
    header = [f"x{i + 1}" for i in range(form.size)] + ["mode", "max_ratio", "q_error", "group_error"]
    summary = {"triples": count, "max_ratio": worst, "q_error": worst_q, "group_error": worst_g,
               "exact_constant": exact, "C": c_big, "dual_use_ratio": worst_dual}
    ok = worst_q <= cfg["q_tol"] and worst_g <= cfg["group_tol"]
    if exact:
        ok = ok and worst <= 1 + cfg["ratio_tol"] and worst_dual <= 1 + cfg["ratio_tol"]
    else:
        summary["fitted_C"] = worst
    return ExperimentResult(header, rows, summary, ok)


def _sample_x(cfg: ExperimentConfig, rng_tag: int) -> np.ndarray:
    seed = (cfg.seed, rng_tag)
    if cfg["slice"] is not None:
        return sample_on_submanifold_many(cfg.form, cfg["slice"], cfg["samples"], seed)
    return sample_points(cfg.form, cfg["samples"], seed)


def run_exponent(cfg: ExperimentConfig) -> ExperimentResult:
    xs = _sample_x(cfg, 5)
    rows, betas, empty, short = [], [], 0, 0
    for x in xs:
        try:
            recs = best_records(cfg.form, x, cfg.h_max)
        except NoRationalPoints:
            empty += 1
            rows.append([_fmt(a) for a in x] + [0, "", "", ""])
            continue
        try:
            est = exponent(recs, cfg["h_min"], cfg["min_records"])
            b = est.beta_hat
            betas.append(b)
        except TooFewRecords:
            short += 1
            b = math.nan
        rows.append([_fmt(a) for a in x] + [len(recs), recs[-1].h, _fmt(recs[-1].d), _fmt(b)])
    mean = float(np.mean(betas)) if betas else math.nan
    lo, hi = cfg["mean_range"]
    summary = {"samples": len(xs), "empty": empty, "too_few_records": short, "mean_beta": mean,
               "min_beta": min(betas) if betas else None, "max_beta": max(betas) if betas else None,
               "below_floor": sum(b < cfg["floor"] for b in betas)}
    # points with too few records carry no estimate; they are reported, not judged
    ok = empty == 0 and bool(betas) and lo <= mean <= hi and min(betas) >= cfg["floor"]
    header = [f"x{i + 1}" for i in range(cfg.form.size)] + ["records", "last_h", "last_d", "beta_hat"]
    return ExperimentResult(header, rows, summary, ok)


def run_dirichlet(cfg: ExperimentConfig) -> ExperimentResult:
    xs = _sample_x(cfg, 6)
    rows, vals = [], []
    for x in xs:
        recs = best_records(cfg.form, x, cfg.h_max)
        d = dirichlet_constant(recs)
        vals.append(d)
        rows.append([_fmt(a) for a in x] + [len(recs), _fmt(d)])
    summary = {"samples": len(xs), "max": max(vals), "median": float(np.median(vals))}
    header = [f"x{i + 1}" for i in range(cfg.form.size)] + ["records", "dirichlet"]
    return ExperimentResult(header, rows, summary, True)


def run_cover(cfg: ExperimentConfig) -> ExperimentResult:
    h = 2 ** (cfg["p_max"] + 1) - 1
    table = _table(cfg, h)
    ps = range(cfg["p_min"], cfg["p_max"] + 1)
    rows, slopes = [], {}
    for beta in cfg["betas"]:
        diag = cover_dimension(cfg.form, float(beta), ps, table, cfg["sample_budget"])
        slopes[str(float(beta))] = diag.slope
        for cc in diag.counts:
            ratio = math.log2(cc.count) / (beta * cc.p) if cc.count else math.nan
            rows.append([_fmt(beta), cc.p, cc.qualifying, cc.count, _fmt(cc.radius), _fmt(ratio), int(cc.truncated)])
    ordered = [slopes[str(float(b))] for b in sorted(cfg["betas"])]
    monotone = all(a >= b for a, b in zip(ordered, ordered[1:]))
    main = slopes[str(float(cfg["slope_beta"]))]
    summary = {"slopes": slopes, "monotone": monotone, "slope_at_beta": main, "table_height": h}
    ok = main <= cfg["slope_max"] and monotone
    return ExperimentResult(["beta", "p", "qualifying", "count", "radius", "ratio", "truncated"], rows, summary, ok)


def run_game(cfg: ExperimentConfig) -> ExperimentResult:
    c, label = simplex_constant(cfg.form, cfg["constant"], cfg["base"])
    table = _table(cfg, cfg.h_max)
    beta = float(cfg["beta"])
    rows, invalid, violations, closure, stuck = [], 0, 0, 0, 0
    worst = math.inf
    for strat in cfg["strategies"]:
        for g in range(cfg["games"]):
            seed = (cfg.seed, g)
            try:
                res = play(cfg.form, beta, cfg["rounds"], strat, seed, c=c, table=table,
                           rho0=cfg["rho0"], slice_spec=cfg["slice"])
            except ClosureFailure as err:
                closure += 1
                rows.append([strat, g, 0, "", "", 0, 0, f"closure failure: {err}"])
                continue
            except NoFeasibleBall as err:
                stuck += 1
                rows.append([strat, g, 0, "", "", 0, 0, f"no feasible ball: {err}"])
                continue
            cert = certify_ba(res.x_final, cfg.form, beta, c, cfg.h_max, table,
                              rho_last=float(res.rounds[-1].radius))
            checked, bad = two_branch_check(res, cfg.form, table)
            invalid += not cert.valid
            violations += len(bad)
            worst = min(worst, cert.min_quality)
            rows.append([strat, g, int(cert.valid), _fmt(cert.min_quality), _fmt(cert.c0), checked, len(bad),
                         json.dumps([_fmt(a) for a in res.x_float])])
    summary = {"games": len(rows), "invalid": invalid, "branch_violations": violations, "closure_failures": closure,
               "no_feasible_ball": stuck, "min_quality": worst, "c0": c * beta * beta, "c": c, "constant": label}
    ok = invalid == 0 and violations == 0 and closure == 0 and stuck == 0
    header = ["strategy", "game", "valid", "min_quality", "c0", "branch_checked", "branch_violations", "x_final"]
    return ExperimentResult(header, rows, summary, ok)


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "enumerate": run_enumerate,
    "qrank": run_qrank,
    "normalize": run_normalize,
    "simplex-verify": lambda cfg: run_simplex(cfg, strong=False),
    "strong-simplex-verify": lambda cfg: run_simplex(cfg, strong=True),
    "dani-verify": run_dani,
    "exponent": run_exponent,
    "dirichlet": run_dirichlet,
    "cover-count": run_cover,
    "game": run_game,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)


def manifest(cfg: ExperimentConfig) -> dict:
    return {"experiment": cfg.experiment, "config": cfg.resolved(), "config_hash": cfg.digest(),
            "version": __version__, "seeds": {"seed": cfg.seed}}
