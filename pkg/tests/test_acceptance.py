"""Acceptance suite: each test prints one PASS/FAIL line and then asserts."""

import json
import time

import numpy as np
import pytest

from quadric_dioph.cli import main as cli_main
from quadric_dioph.experiments import load_config, run
from quadric_dioph.points import enumerate_bruteforce, enumerate_parametrized, qrank_bounds
from quadric_dioph.quadform import QuadraticForm

from conftest import CIRCLE, GOOD_3SPHERE, GOOD_CIRCLE, GOOD_SPHERE, GOOD_SPLIT, SPHERE, SPLIT

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def cache_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("acceptance-cache"))


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    return emit


def gram(form):
    return [list(r) for r in form.gram]


def experiment(name, cache_dir, **values):
    return run(load_config(name, {"cache_dir": cache_dir, **values}))


def test_criterion_1_enumeration(report):
    t0 = time.perf_counter()
    c1 = len(enumerate_bruteforce(CIRCLE, 1))
    c5 = len(enumerate_bruteforce(CIRCLE, 5))
    agree = []
    for form, base, hs in [(CIRCLE, (0, 1, 1), (5, 25, 100)), (SPHERE, (0, 0, 1, 1), (5, 20))]:
        for h in hs:
            agree.append(enumerate_bruteforce(form, h) == enumerate_parametrized(form, base, h))
    elapsed = time.perf_counter() - t0
    ok = c1 == 4 and c5 == 12 and all(agree) and elapsed < 60
    report(1, ok, f"counts h<=1: {c1}, h<=5: {c5}; brute == parametrized on {sum(agree)}/{len(agree)}; {elapsed:.1f}s")
    assert ok


SWEEP = [("circle", GOOD_CIRCLE, {}), ("2-sphere", GOOD_SPHERE, {}), ("3-sphere", GOOD_3SPHERE, {}),
         ("split 4x4", GOOD_SPLIT, {}), ("standard circle", CIRCLE, {"constant": "transported", "base": [1, 0, 1]})]


@pytest.mark.parametrize("n,strong", [(2, False), (3, True)])
def test_criteria_2_3_simplex(n, strong, cache_dir, report):
    name = "strong-simplex-verify" if strong else "simplex-verify"
    t0 = time.perf_counter()
    parts, ok = [], True
    for i, (label, form, extra) in enumerate(SWEEP):
        s = experiment(name, cache_dir, form=gram(form), samples=1000, rho_min=1e-3, rho_max=1e-1,
                       seed=10 + i, **extra).summary
        ok &= s["instances"] >= 1000 and s["fail_count"] == 0 and s["oracle_disagreements"] == 0
        oracle = f", oracle disagreements {s['oracle_disagreements']}" if s["oracle_applied"] else ""
        parts.append(f"{label} {s['fail_count']}/{s['instances']} fail (c={s['c']:.3g}){oracle}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report(n, ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_4_dani(cache_dir, report):
    parts, ok = [], True
    for i, (label, form) in enumerate([("circle", GOOD_CIRCLE), ("sphere", GOOD_SPHERE)]):
        s = experiment("dani-verify", cache_dir, form=gram(form), h_max=1000, samples=2000, pairs=50, seed=20 + i).summary
        ok &= (s["triples"] >= 100_000 and s["max_ratio"] <= 1 + 1e-9 and s["q_error"] <= 1e-6
               and s["group_error"] <= 1e-9 and s["exact_constant"])
        parts.append(f"{label} {s['triples']} triples, max ratio {s['max_ratio']:.4f}, "
                     f"Q err {s['q_error']:.1e}, group err {s['group_error']:.1e}")
    report(4, ok, "; ".join(parts))
    assert ok


def test_criterion_5_exponent(cache_dir, report):
    t0 = time.perf_counter()
    circle = experiment("exponent", cache_dir, form=gram(CIRCLE), h_max=100_000, samples=100, seed=5).summary
    sliced = experiment("exponent", cache_dir, form=gram(SPHERE), h_max=100_000, samples=100, seed=5,
                        slice=[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0.3, 1]]).summary
    elapsed = time.perf_counter() - t0
    ok = elapsed < 600
    parts = []
    for label, s in [("circle", circle), ("sphere slice", sliced)]:
        ok &= s["empty"] == 0 and 0.8 <= s["mean_beta"] <= 1.2 and s["min_beta"] >= 0.8
        parts.append(f"{label} mean {s['mean_beta']:.3f} min {s['min_beta']:.3f} below 0.8 {s['below_floor']}, "
                     f"empty {s['empty']}, under 5 records {s['too_few_records']}")
    report(5, ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


QRANK = [("diag(1,1,-1)", CIRCLE, 1, None), ("diag(1,1,1,-1)", SPHERE, 1, None), ("split 4x4", SPLIT, 2, None),
         ("diag(1,1,-3)", QuadraticForm.diagonal(1, 1, -3), 0, 9),
         ("diag(1,1,1)", QuadraticForm.diagonal(1, 1, 1), 0, 4)]


def test_criterion_6_qrank(report):
    parts, ok = [], True
    for label, form, rank, modulus in QRANK:
        b = qrank_bounds(form, 20)
        good = b.lower == b.upper == rank and (modulus is None or b.obstruction == modulus)
        ok &= good
        mod = f" (mod {b.obstruction})" if b.obstruction is not None else ""
        parts.append(f"{label} {b.lower}..{b.upper}{mod}")
    report(6, ok, "; ".join(parts))
    assert ok


def test_criterion_7_game(cache_dir, report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for label, form, h in [("circle", GOOD_CIRCLE, 1000), ("sphere", GOOD_SPHERE, 300)]:
        s = experiment("game", cache_dir, form=gram(form), h_max=h, games=100, beta=0.1, rounds=40, seed=7).summary
        ok &= (s["games"] == 300 and s["invalid"] == 0 and s["branch_violations"] == 0
               and s["closure_failures"] == 0 and s["no_feasible_ball"] == 0)
        parts.append(f"{label} {s['games']} games, invalid {s['invalid']}, branch violations "
                     f"{s['branch_violations']}, closure failures {s['closure_failures']}, "
                     f"min quality {s['min_quality']:.2e} vs c0 {s['c0']:.2e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    report(7, ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_8_cover(cache_dir, report):
    s = experiment("cover-count", cache_dir, form=gram(CIRCLE), betas=[1.5, 2.0, 3.0], p_min=6, p_max=12).summary
    ok = s["slope_at_beta"] <= 0.7 and s["monotone"]
    slopes = ", ".join(f"beta {b}: {v:.3f}" for b, v in s["slopes"].items())
    report(8, ok, f"slope at beta=2 {s['slope_at_beta']:.3f}; {slopes}; monotone {s['monotone']}")
    assert ok


DETERMINISM = {
    "enumerate": {"form": gram(SPHERE), "h_max": 12},
    "qrank": {"form": gram(SPLIT), "h_max": 8},
    "normalize": {"form": gram(CIRCLE), "h_max": 5},
    "simplex-verify": {"form": {"good_form": [[1, 0], [0, 1]]}, "samples": 100, "seed": 3},
    "strong-simplex-verify": {"form": gram(CIRCLE), "samples": 100, "constant": "transported", "base": [1, 0, 1]},
    "dani-verify": {"form": {"good_form": [[1]]}, "h_max": 200, "samples": 40, "pairs": 20, "seed": 1},
    "exponent": {"form": gram(CIRCLE), "h_max": 5000, "samples": 10, "seed": 2},
    "dirichlet": {"form": gram(SPHERE), "h_max": 300, "samples": 5,
                  "slice": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0.3, 1]]},
    "cover-count": {"form": gram(CIRCLE), "betas": [2.0, 3.0], "p_min": 4, "p_max": 7},
    "game": {"form": {"good_form": [[1, 0], [0, 1]]}, "h_max": 60, "games": 2, "rounds": 15, "seed": 9},
}


def test_criterion_9_determinism(tmp_path, cache_dir, report):
    same = []
    for exp, cfg in DETERMINISM.items():
        path = tmp_path / f"{exp}.json"
        path.write_text(json.dumps({**cfg, "cache_dir": cache_dir}))
        out = tmp_path / "first"
        assert cli_main([exp, "--config", str(path), "--out", str(out)]) in (0, 1)
        (d,) = list((out / exp).iterdir())
        first = {f.name: f.read_bytes() for f in sorted(d.iterdir()) if f.suffix in (".csv", ".json")}
        man = json.loads(first["manifest.json"])
        again = tmp_path / f"{exp}-manifest.json"
        again.write_text(json.dumps({**man["config"], "cache_dir": cache_dir}))
        out2 = tmp_path / "second"
        assert cli_main([exp, "--config", str(again), "--out", str(out2)]) in (0, 1)
        (d2,) = list((out2 / exp).iterdir())
        second = {f.name: f.read_bytes() for f in sorted(d2.iterdir()) if f.suffix in (".csv", ".json")}
        same.append(first == second and set(first) == {"data.csv", "summary.json", "manifest.json"})
    ok = all(same)
    report(9, ok, f"{sum(same)}/{len(same)} experiments byte-identical on rerun from manifest")
    assert ok
