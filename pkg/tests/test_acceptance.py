"""Acceptance criteria 1-8.

Each ``criterion_N`` returns ``(passed, detail)``. The pytest wrappers record
the outcome for the terminal summary and then assert it. Running this file as
a script prints one PASS/FAIL line per criterion.
"""
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, quaternion_svals_oracle, random_qmatrix, random_qvector  # noqa: E402
from quatreg.cli import ExperimentConfig, corrupt_queries, load_data, parse_config_text, report, run_experiment  # noqa: E402
from quatreg.dataio import add_mixed_noise  # noqa: E402
from quatreg.linalg import l21_norm, l21_shrink, svt, weighted_svt  # noqa: E402
from quatreg.nqmr import Dictionary, NqmrConfig, solve_nqmr, stopped_by_rule  # noqa: E402
from quatreg.quat_core import (  # noqa: E402
    embed_matrix,
    embed_vector,
    frobenius_norm,
    nuclear_norm,
)
from quatreg.rnqmr import solve_rnqmr  # noqa: E402

GRID = [0.01, 0.1, 1.0, 10.0]
SEEDS = [0, 1, 2]


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


# --- 1. algebra ------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = {"linear": 0.0, "norm2": 0.0, "matvec": 0.0, "norm_prod": 0.0, "nuclear": 0.0,
             "nuclear_oracle": 0.0, "frob": 0.0, "quad": 0.0}
    for _ in range(200):
        m, n = rng.integers(1, 9, size=2)
        p, q = random_qmatrix(rng, m, n), random_qmatrix(rng, m, n)
        v, w = random_qvector(rng, n), random_qvector(rng, n)
        a, b = rng.standard_normal(2)
        worst["linear"] = max(worst["linear"],
                              _rel(embed_matrix(p * a + q * b), a * embed_matrix(p) + b * embed_matrix(q)),
                              _rel(embed_vector(v * a + w * b), a * embed_vector(v) + b * embed_vector(w)))
        worst["norm2"] = max(worst["norm2"], abs(np.linalg.norm(embed_vector(v)) - v.l2_norm()))
        pq = embed_matrix(q) @ embed_vector(v)
        worst["matvec"] = max(worst["matvec"], _rel(embed_vector(q @ v), pq))
        worst["norm_prod"] = max(worst["norm_prod"], abs((q @ v).l2_norm() - np.linalg.norm(pq)))
        s = np.linalg.svd(embed_matrix(q), compute_uv=False)
        nuc = nuclear_norm(q)
        oracle = quaternion_svals_oracle(q).sum()
        worst["nuclear"] = max(worst["nuclear"], abs(s.sum() - 4 * oracle) / oracle)
        worst["nuclear_oracle"] = max(worst["nuclear_oracle"], abs(nuc - oracle) / oracle)
        worst["frob"] = max(worst["frob"], abs(np.linalg.norm(embed_matrix(q)) / frobenius_norm(q) - 2.0))
        quads = s.reshape(-1, 4)
        worst["quad"] = max(worst["quad"], float(np.max((quads.max(1) - quads.min(1)) / max(s[0], 1e-300))))
    elapsed = time.perf_counter() - t0
    ok = (max(worst["linear"], worst["norm2"], worst["matvec"], worst["norm_prod"]) < 1e-10
          and worst["nuclear"] < 1e-8 and worst["nuclear_oracle"] < 1e-8
          and worst["frob"] < 1e-10 and worst["quad"] < 1e-8 and elapsed < 5)
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {elapsed:.2f}s"
    return ok, detail


# --- 2. proximal operators --------------------------------------------------

def _perturb(rng, x, count=1000, size=1e-3):
    d = rng.standard_normal((count,) + x.shape)
    return x + size * d / np.linalg.norm(d.reshape(count, -1), axis=1)[:, None, None]


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    losses = {"svt": 0, "weighted_svt": 0, "l21_shrink": 0}
    for _ in range(50):
        m, n = rng.integers(2, 9, size=2)
        z = rng.standard_normal((m, n))
        gamma = rng.uniform(0.1, 2.0)
        out = svt(z, gamma)
        f = lambda x: gamma * np.linalg.svd(x, compute_uv=False).sum(-1) + 0.5 * ((x - z) ** 2).sum((-2, -1))  # noqa: E731
        losses["svt"] += int(np.sum(f(_perturb(rng, out)) < f(out) - 1e-12))

        w = np.sort(rng.uniform(0.0, 2.0, min(m, n)))
        out = weighted_svt(z, w)
        g = lambda x: np.linalg.svd(x, compute_uv=False) @ w + 0.5 * ((x - z) ** 2).sum((-2, -1))  # noqa: E731
        losses["weighted_svt"] += int(np.sum(g(_perturb(rng, out)) < g(out) - 1e-12))

        c = rng.standard_normal((4, n * m))
        t = rng.uniform(0.1, 2.0)
        out = l21_shrink(c, t)
        pert = _perturb(rng, out)
        h_pert = t * np.linalg.norm(pert, axis=1).sum(-1) + 0.5 * ((pert - c) ** 2).sum((-2, -1))
        h0 = t * l21_norm(out) + 0.5 * np.sum((out - c) ** 2)
        losses["l21_shrink"] += int(np.sum(h_pert < h0 - 1e-12))
    elapsed = time.perf_counter() - t0
    ok = sum(losses.values()) == 0 and elapsed < 10
    return ok, f"perturbations beating the output: {losses}, {elapsed:.2f}s"


# --- 3. ridge ---------------------------------------------------------------

def criterion_3():
    rng = np.random.default_rng(3)
    worst_res, worst_gap = 0.0, 0.0
    for _ in range(50):
        n_atoms = int(rng.integers(1, 11))
        m, n = rng.integers(1, 13, size=2)
        d = Dictionary([random_qmatrix(rng, m, n) for _ in range(n_atoms)])
        reg = float(10 ** rng.uniform(-3, 1))
        b = random_qmatrix(rng, m, n)
        x = embed_vector(d.fit(b, reg))
        g = embed_vector(b.vec())
        dm = d.design
        rhs = dm.T @ g
        worst_res = max(worst_res, np.linalg.norm((dm.T @ dm + reg * np.eye(dm.shape[1])) @ x - rhs)
                        / np.linalg.norm(rhs))
        k = dm.shape[1]
        oracle = np.linalg.lstsq(np.vstack([dm, np.sqrt(reg) * np.eye(k)]), np.concatenate([g, np.zeros(k)]),
                                 rcond=None)[0]
        worst_gap = max(worst_gap, np.linalg.norm(x - oracle) / max(np.linalg.norm(oracle), 1e-300))
    ok = worst_res < 1e-8 and worst_gap < 1e-8
    return ok, f"normal-equation residual {worst_res:.1e}, gap to dense solve {worst_gap:.1e}"


# --- 4. NQMR convergence ------------------------------------------------------

def criterion_4():
    t0 = time.perf_counter()
    cfg = parse_config_text("solver = nqmr\nsynth_classes = 5\nsynth_per_class = 4\nsynth_size = 8x8\n"
                            "lambda = 1\nmu = 1\neps_rel = 1e-4\nmax_iter = 100\n")
    outcome = run_experiment(cfg)
    queries = outcome.best.queries
    stopped = [stopped_by_rule(q.trace, 1e-4) and q.iterations <= 100 for q in queries]
    elapsed = time.perf_counter() - t0
    ok = all(stopped) and outcome.rate == 1.0 and elapsed < 30
    its = [q.iterations for q in queries]
    return ok, (f"{sum(stopped)}/{len(stopped)} traces met the stopping rule (iterations {min(its)}..{max(its)}), "
                f"clean rate {outcome.rate:.3f}, {elapsed:.1f}s")


# --- 5 and 7. desk-scale robustness and determinism ---------------------------

def desk_config(solver: str, seed: int) -> ExperimentConfig:
    grid = ", ".join(str(v) for v in GRID)
    text = (f"solver = {solver}\nsynth_classes = 5\nsynth_per_class = 4\nsynth_size = 8x8\n"
            "block_fraction = 0.3\nsp_probability = 0.1\ngaussian_variance = 0.01\n"
            f"seed = {seed}\ndeterministic = true\nthreads = 4\n")
    if solver == "rnqmr":
        text += f"omega = {grid}\nalpha = {grid}\nbeta = {grid}\n"
    else:
        text += f"lambda = {grid}\n"
    return parse_config_text(text)


def run_desk(out_root: Path) -> dict:
    rates = {}
    for seed in SEEDS:
        for solver in ("nqmr", "rnqmr"):
            cfg = desk_config(solver, seed)
            outcome = run_experiment(cfg)
            report(outcome, cfg, out_root / f"{solver}_seed{seed}")
            rates[solver, seed] = (outcome.rate, outcome.best.params)
    return rates


_DESK: dict = {}


def _desk_first_run():
    if "rates" not in _DESK:
        root = Path(tempfile.mkdtemp(prefix="desk_a_"))
        t0 = time.perf_counter()
        _DESK["rates"] = run_desk(root)
        _DESK["elapsed"] = time.perf_counter() - t0
        _DESK["root"] = root
    return _DESK


def criterion_5():
    desk = _desk_first_run()
    rates = desk["rates"]
    per_seed = []
    ok = desk["elapsed"] < 300
    for seed in SEEDS:
        rn, nq = rates["rnqmr", seed][0], rates["nqmr", seed][0]
        ok &= rn >= nq and rn >= 0.8
        per_seed.append(f"seed {seed}: R-NQMR {rn:.2f} vs NQMR {nq:.2f}")
    return ok, "; ".join(per_seed) + f", {desk['elapsed']:.0f}s"


def criterion_7():
    first = _desk_first_run()["root"]
    second = Path(tempfile.mkdtemp(prefix="desk_b_"))
    run_desk(second)
    same = []
    for d in sorted(p.name for p in first.iterdir()):
        same.append((first / d / "results.csv").read_bytes() == (second / d / "results.csv").read_bytes())
    return all(same), f"{sum(same)}/{len(same)} results.csv files byte-identical across reruns"


# --- 6. E1 support ---------------------------------------------------------

def criterion_6():
    """Planted salt-and-pepper queries; best grid point chosen the same way as the CLI."""
    grid = ", ".join(str(v) for v in GRID)
    cfg = parse_config_text("solver = rnqmr\nsynth_classes = 5\nsynth_per_class = 4\nsynth_size = 8x8\n"
                            f"sp_probability = 0.1\nseed = 0\nomega = {grid}\nalpha = {grid}\nbeta = {grid}\n"
                            "threads = 4\n")
    outcome = run_experiment(cfg)
    best = outcome.best.params
    dictionary, test = load_data(cfg)
    # rebuild the same corrupted queries, keeping the masks
    rng = np.random.default_rng([cfg.recipe.seed, 0x5EED])
    masked = [add_mixed_noise(b, cfg.recipe, rng, return_mask=True) for b, _ in test]
    reference = corrupt_queries(test, cfg.recipe)
    assert all(np.array_equal(a.data, r.data) for (a, _), (r, _) in zip(masked, reference))
    hits, total = 0, 0
    for noisy, mask in masked:
        res = solve_rnqmr(dictionary, noisy, cfg.solver_config(best))
        mod = res.state.E1.moduli()
        hits += int(np.sum(mod[mask] > np.median(mod)))
        total += int(mask.sum())
    frac = hits / total
    return frac >= 0.8, (f"best grid point {best} (rate {outcome.rate:.2f}): {hits}/{total} = {frac:.3f} "
                         "of corrupted pixels above the median E1 modulus")


# --- 8. complexity -------------------------------------------------------------

def criterion_8():
    rng = np.random.default_rng(8)
    sizes = [5, 10, 20, 40]
    shape = (16, 16)
    b = random_qmatrix(rng, *shape, pure=True)
    per_iter = []
    for n_atoms in sizes:
        d = Dictionary([random_qmatrix(rng, *shape, pure=True) for _ in range(n_atoms)])
        cfg = NqmrConfig(eps_rel=1e-300, max_iter=15)
        d.ridge(cfg.lam / cfg.mu)  # factorization is a one-off setup cost
        runs = []
        for _ in range(5):
            t0 = time.perf_counter()
            res = solve_nqmr(d, b, cfg)
            runs.append((time.perf_counter() - t0) / res.iterations)
        per_iter.append(min(runs))
    slope, intercept = np.polyfit(sizes, per_iter, 1)
    fit = intercept + slope * np.asarray(sizes)
    ratios = np.asarray(per_iter) / fit
    ok = bool(np.all(fit > 0) and np.all(ratios <= 2) and np.all(ratios >= 0.5))
    ms = ", ".join(f"L={n}: {t * 1e3:.2f}ms" for n, t in zip(sizes, per_iter))
    return ok, f"{ms}; measured/fit ratios {np.round(ratios, 2).tolist()}"


# --- pytest wrappers -----------------------------------------------------------

def _record(cid: str, fn):
    ok, detail = fn()
    ACCEPTANCE_LINES[cid] = (ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
    assert ok, detail


def test_criterion_1_algebra():
    _record("1 algebra", criterion_1)


def test_criterion_2_prox_oracles():
    _record("2 prox", criterion_2)


def test_criterion_3_ridge():
    _record("3 ridge", criterion_3)


def test_criterion_4_nqmr_convergence():
    _record("4 nqmr convergence", criterion_4)


@pytest.mark.slow
def test_criterion_5_desk_robustness():
    _record("5 desk robustness", criterion_5)


def test_criterion_6_e1_support():
    _record("6 E1 support", criterion_6)


@pytest.mark.slow
def test_criterion_7_determinism():
    _record("7 determinism", criterion_7)


def test_criterion_8_complexity():
    _record("8 complexity", criterion_8)


if __name__ == "__main__":
    failed = 0
    for cid, fn in [("1", criterion_1), ("2", criterion_2), ("3", criterion_3), ("4", criterion_4),
                    ("5", criterion_5), ("6", criterion_6), ("7", criterion_7), ("8", criterion_8)]:
        ok, detail = fn()
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
