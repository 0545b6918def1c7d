"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The suite covers exact
oracles (weight formula, gradients, solver orders), bitwise contracts
(reductions, determinism, checkpoints), a teacher quality gate, and the
directional multi-branch claims at matched budgets. Directional criteria are
stochastic: they compare medians across 5 seeds and are allowed one re-run
with fresh seeds.
"""

import hashlib
import os

import numpy as np
import pytest

import bdense as bd
from bdense.cli import main as cli_main
from bdense.data import ring_centers
from bdense.distill import BranchWeights, default_config, sfd_weight_objective
from bdense.network import branch_slice
from bdense.solvers import TimeGrid, sampling_grid
from bdense.tensor import clear_tape


def report(criterion: str, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


def param_digest(net) -> str:
    h = hashlib.sha256()
    for _, p in net.named_parameters():
        h.update(p.data.tobytes())
    return h.hexdigest()


# -- criterion 1 -----------------------------------------------------------


def test_c01_weight_formula_oracle():
    """exp(a*i + b) with the published (a, b) row reproduces the published
    four-branch weight vector within 1e-3 per entry.

    Note: the published coefficients are rounded to three decimals; with
    them, exp(3a + b) = 0.8905 while the published fourth weight is 0.892,
    a gap of 1.5e-3. The first three entries agree within 1e-3.
    """
    lam = np.array(bd.geometric_weights((1.386, -4.274), 4).lambdas)
    target = np.array([0.014, 0.056, 0.223, 0.892])
    gaps = np.abs(lam - target)
    report("criterion 1 (weight-formula oracle)", bool(np.all(gaps <= 1e-3)),
           f"weights {np.round(lam, 5).tolist()} vs published {target.tolist()}, "
           f"per-entry gaps {np.round(gaps, 5).tolist()} (tolerance 1e-3)")


# -- criterion 2 -----------------------------------------------------------


def test_c02_reduction_equivalence(tiny_data, vp_schedule, edm_schedule):
    """Single-branch unit-weight runs reproduce the baselines bitwise over
    >= 200 updates under shared seeds."""
    results = []

    teacher_v = bd.ScoreNet(channels=2, hidden=(64, 64), time_dim=16, seed=41)
    seq_pd, seq_pdb = [], []
    cfg = default_config("pd", steps=64, rounds=2, updates=100, batch_size=32, seed=17)
    bd.pd_distill(teacher_v, cfg, tiny_data, vp_schedule,
                  on_update=lambda u, s: seq_pd.append(param_digest(s)))
    cfg_b = default_config("pd_bdense", steps=64, rounds=2, updates=100, batch_size=32,
                           seed=17, branches=1, weights=BranchWeights((1.0,)))
    bd.pd_bdense_distill(teacher_v, cfg_b, tiny_data, vp_schedule,
                         on_update=lambda u, s: seq_pdb.append(param_digest(s)))
    results.append(("pd", len(seq_pd), seq_pd == seq_pdb))

    teacher_e = bd.ScoreNet(channels=2, hidden=(64, 64), time_dim=16, seed=42)
    grid = sampling_grid(edm_schedule, 2)
    seq_s, seq_sb = [], []
    cfg = default_config("sfd", nfe=2, updates=200, batch_size=32, substeps=1, seed=23)
    bd.sfd_distill(teacher_e, cfg, tiny_data, grid,
                   on_update=lambda u, s: seq_s.append(param_digest(s)))
    cfg_b = default_config("sfd_bdense", nfe=2, updates=200, batch_size=32, substeps=1,
                           branches=1, weights=BranchWeights((1.0,)), seed=23)
    bd.sfd_bdense_distill(teacher_e, cfg_b, tiny_data, grid,
                          on_update=lambda u, s: seq_sb.append(param_digest(s)))
    results.append(("sfd", len(seq_s), seq_s == seq_sb))

    ok = all(r[2] for r in results) and all(r[1] >= 200 for r in results)
    report("criterion 2 (reduction equivalence)", ok,
           "; ".join(f"{name}: {n} updates bitwise-equal={eq}" for name, n, eq in results))


# -- criterion 3 -----------------------------------------------------------


def test_c03_branch_init_identity():
    """After head expansion all branches match the original output within
    1e-6 on 1000 random inputs; parameter delta is exactly (K-1)(H+1)C."""
    net = bd.ScoreNet(channels=2, hidden=(128, 128, 128), time_dim=32, seed=5)
    k = 4
    wide = bd.expand_branch_head(net, k)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1000, 2)).astype(np.float32)
    u = rng.uniform(0, 1, size=1000).astype(np.float32)
    base = net(x, u).numpy()
    out = wide(x, u)
    max_gap = max(float(np.max(np.abs(branch_slice(out, i, k).numpy() - base)))
                  for i in range(k))
    delta = wide.num_parameters() - net.num_parameters()
    expected_delta = (k - 1) * (128 + 1) * 2
    clear_tape()
    report("criterion 3 (branch-init identity)",
           max_gap <= 1e-6 and delta == expected_delta,
           f"max branch/base gap {max_gap:.2e} (tol 1e-6); parameter delta "
           f"{delta} (expected {expected_delta})")


# -- criterion 4 -----------------------------------------------------------


def _f64_forward_loss(net, x, u, target):
    """Independent float64 replica of the network forward pass plus MSE."""
    half = net.time_dim // 2
    freqs = 1000.0 ** (np.arange(half) / (half - 1))
    ang = 2.0 * np.pi * u[:, None] * freqs[None, :]
    feats = np.concatenate([np.sin(ang), np.cos(ang)], axis=1)
    h = np.concatenate([x, feats], axis=1).astype(np.float64)
    for w, b in net.layers:
        z = h @ w.data.astype(np.float64) + b.data.astype(np.float64)
        h = z / (1.0 + np.exp(-z))
    out = h @ net.head_weight.data.astype(np.float64) + net.head_bias.data.astype(np.float64)
    return float(np.mean((out - target) ** 2))


def test_c04_gradient_correctness():
    """Every parameter's analytic gradient matches central finite differences
    (h = 1e-3) with max relative error < 1e-3.

    Relative error is measured per parameter tensor as the largest absolute
    element disagreement normalized by that tensor's largest gradient
    magnitude. Float32 backward accumulation carries ~1e-6 absolute noise,
    so an element-wise ratio on near-zero entries would measure rounding,
    not correctness; a wrong backward rule still fails this metric by three
    orders of magnitude."""
    net = bd.ScoreNet(channels=2, hidden=(128, 128, 128), time_dim=32, seed=9)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 2)).astype(np.float32)
    u = rng.uniform(0, 1, size=8).astype(np.float32)
    target = rng.standard_normal((8, 2)).astype(np.float64)

    out = net(x, u)
    loss = bd.reduce_loss("mse", out, bd.Tensor(target), 1.0)
    bd.backward(loss)
    clear_tape()

    h = 1e-3
    worst = 0.0
    for name, p in net.named_parameters():
        flat = p.data.reshape(-1)
        gflat = p.grad.reshape(-1).astype(np.float64)
        fd = np.empty_like(gflat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = _f64_forward_loss(net, x, u, target)
            flat[i] = orig - h
            f_minus = _f64_forward_loss(net, x, u, target)
            flat[i] = orig
            fd[i] = (f_plus - f_minus) / (2 * h)
        scale = max(np.max(np.abs(gflat)), np.max(np.abs(fd)), 1e-8)
        worst = max(worst, float(np.max(np.abs(gflat - fd)) / scale))
    report("criterion 4 (gradient correctness)", worst < 1e-3,
           f"max relative error {worst:.2e} over {net.num_parameters()} parameters "
           f"(tolerance 1e-3)")


# -- criterion 5 -----------------------------------------------------------


class _DecayField:
    """Analytic field: the state decays like exp(-(t0 - t)) along the solve."""

    def predict_x0(self, x, t, schedule):
        return np.asarray(x, dtype=np.float64) * (1.0 - float(t))


def _order_slope(method: str) -> float:
    sched = bd.build_schedule("edm_sigma", 16, sigma_min=0.005, sigma_max=2.0)
    x0 = np.array([[1.0]], dtype=np.float32)
    exact = np.exp(-(1.0 - 0.01))
    hs, errs = [], []
    for h in (0.1, 0.05, 0.025, 0.0125):
        n = round(0.99 / h)
        grid = TimeGrid(sched, tuple(np.linspace(1.0, 0.01, n + 1)))
        traj = bd.solve(_DecayField(), x0, grid, method)
        errs.append(abs(float(traj.endpoint()[0, 0]) - exact))
        hs.append(0.99 / n)
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def test_c05_solver_orders():
    """Euler slope in [0.7, 1.3]; Heun slope in [1.7, 2.3]."""
    s_euler = _order_slope("euler")
    s_heun = _order_slope("heun")
    ok = 0.7 <= s_euler <= 1.3 and 1.7 <= s_heun <= 2.3
    report("criterion 5 (solver orders)", ok,
           f"euler slope {s_euler:.3f} (expected [0.7, 1.3]); "
           f"heun slope {s_heun:.3f} (expected [1.7, 2.3])")


# -- criterion 6 -----------------------------------------------------------


def test_c06_determinism(tmp_path, tiny_data, vp_schedule, edm_schedule):
    """Fixed-seed sampling is byte-identical across invocations for every
    method and solver, and checkpoints round-trip bitwise."""
    from bdense.checkpoint import load_checkpoint, save_checkpoint

    checks = []

    def sample_twice(ckpt, nfe, solver):
        outs = []
        for i in range(2):
            out = str(tmp_path / f"s_{os.path.basename(ckpt)}_{solver}_{i}.csv")
            rc = cli_main(["sample", "--checkpoint", ckpt, "--nfe", str(nfe),
                           "--num", "64", "--seed", "3", "--solver", solver,
                           "--out", out])
            assert rc == 0
            outs.append(open(out, "rb").read())
        return outs[0] == outs[1]

    # One student per distillation method, each sampled twice per solver.
    teacher_v = bd.ScoreNet(channels=2, hidden=(32, 32), time_dim=8, seed=50)
    teacher_e = bd.ScoreNet(channels=2, hidden=(32, 32), time_dim=8, seed=51)
    students = {}
    for method in ("pd", "pd_bdense"):
        cfg = default_config(method, steps=8, rounds=1, updates=6, batch_size=8, seed=1)
        rep = bd.run_distillation(teacher_v, cfg, tiny_data, vp_schedule)
        students[method] = (rep.student, vp_schedule, 4, ("ddim",))
    for method in ("sfd", "sfd_bdense"):
        cfg = default_config(method, nfe=2, updates=6, batch_size=8, substeps=2,
                             **({"branches": 2} if method == "sfd_bdense" else {}), seed=1)
        rep = bd.run_distillation(teacher_e, cfg, tiny_data, edm_schedule)
        students[method] = (rep.student, edm_schedule, 2, ("euler", "heun"))

    for method, (net, sched, nfe, solvers) in students.items():
        ckpt = str(tmp_path / f"{method}.bdns")
        save_checkpoint(ckpt, net, sched, provenance={"method": method})
        for solver in solvers:
            checks.append((f"{method}/{solver}", sample_twice(ckpt, nfe, solver)))

    # Checkpoint round trip is bitwise lossless.
    ckpt = str(tmp_path / "teacher.bdns")
    save_checkpoint(ckpt, teacher_v, vp_schedule, provenance={"seed": 7})
    loaded, _, _ = load_checkpoint(ckpt)
    round_trip = param_digest(loaded) == param_digest(teacher_v)
    resaved = str(tmp_path / "teacher2.bdns")
    sched_loaded = load_checkpoint(ckpt)[1]
    save_checkpoint(resaved, loaded, sched_loaded, provenance={"seed": 7})
    byte_stable = open(ckpt, "rb").read() == open(resaved, "rb").read()
    checks.append(("checkpoint-roundtrip", round_trip and byte_stable))

    ok = all(c[1] for c in checks)
    report("criterion 6 (determinism)", ok,
           ", ".join(f"{name}={'ok' if good else 'MISMATCH'}" for name, good in checks))


# -- criterion 7 -----------------------------------------------------------


def test_c07_teacher_quality_gate(vp_teacher, vp_schedule, ring_holdout):
    """A from-scratch teacher reaches mode coverage >= 7/8 and SWD < 0.3 on
    the 8-mode ring at 64-step deterministic sampling."""
    grid = sampling_grid(vp_schedule, 64)
    noise = np.random.default_rng(123).standard_normal((2048, 2)).astype(np.float32)
    samples = bd.solve(vp_teacher, noise, grid, "ddim").endpoint()
    cov = bd.mode_coverage(samples, ring_centers(8, 4.0), 0.4)
    swd = bd.sliced_wasserstein(samples, ring_holdout, seed=0)
    ok = cov.value >= 7.0 / 8.0 and swd.value < 0.3
    report("criterion 7 (teacher quality gate)", ok,
           f"mode coverage {cov.value:.3f} (need >= 0.875); "
           f"SWD {swd.value:.4f} (need < 0.3)")


# -- criteria 8 and 9: directional comparisons ------------------------------


def _sfd_comparison(teacher, schedule, data, holdout, seeds, updates):
    grid2 = sampling_grid(schedule, 2)
    grid64 = sampling_grid(schedule, 64)
    noise = np.random.default_rng(999).standard_normal((4096, 2)).astype(np.float32)
    noise *= float(grid2.times[0])
    ref = bd.solve(teacher, noise, grid64, "heun")
    med = {}
    for method in ("sfd", "sfd_bdense"):
        epes, swds = [], []
        for seed in seeds:
            extra = {"branches": 4, "substeps": 4} if method == "sfd_bdense" else \
                {"substeps": 4}
            cfg = default_config(method, updates=updates, batch_size=128, lr=1e-3,
                                 nfe=2, seed=seed, **extra)
            rep = bd.run_distillation(teacher, cfg, data, schedule)
            epes.append(bd.trajectory_endpoint_error(rep.student, ref, noise,
                                                     grid2, "euler").value)
            samples = bd.solve(rep.student, noise, grid2, "euler").endpoint()
            swds.append(bd.sliced_wasserstein(samples, holdout, n_projections=96,
                                              seed=0).value)
        med[method] = (float(np.median(epes)), float(np.median(swds)))
    return med


def test_c08_directional_sfd_claim(edm_teacher, edm_schedule, ring_data,
                                   ring_holdout_big):
    """At matched budgets and paired noise, the branched trajectory student's
    median endpoint error and median SWD at 2 steps are <= the baseline's
    across 5 seeds (one re-run with fresh seeds permitted).

    Known split result at desk scale: the endpoint-error half holds robustly
    (the branched student wins it on every seed at this budget), while the
    SWD half does not - both students sample at teacher-level quality and
    the residual SWD difference is a ~1% tie that lands slightly against
    the branched student. Protocol variations (budgets 300-2000, alternate
    teachers, searched weight schedules, teacher-referenced SWD) do not
    change this; see the repository notes for the sweep data."""
    attempts = []
    for attempt, seeds in enumerate((range(5), range(100, 105))):
        med = _sfd_comparison(edm_teacher, edm_schedule, ring_data,
                              ring_holdout_big, list(seeds), updates=2000)
        ok = med["sfd_bdense"][0] <= med["sfd"][0] and \
            med["sfd_bdense"][1] <= med["sfd"][1]
        attempts.append((med, ok))
        if ok:
            break
    med, ok = attempts[-1]
    report("criterion 8 (directional multi-branch claim, trajectory stack)", ok,
           f"median endpoint MSE base={med['sfd'][0]:.4f} vs "
           f"branched={med['sfd_bdense'][0]:.4f} "
           f"({'holds' if med['sfd_bdense'][0] <= med['sfd'][0] else 'fails'}); "
           f"median SWD base={med['sfd'][1]:.4f} vs "
           f"branched={med['sfd_bdense'][1]:.4f} "
           f"({'holds' if med['sfd_bdense'][1] <= med['sfd'][1] else 'fails'}); "
           f"{len(attempts)} attempt(s)")


def _pd_comparison(teacher, schedule, data, holdout, seeds):
    g8 = sampling_grid(schedule, 8)
    noise = np.random.default_rng(5).standard_normal((2048, 2)).astype(np.float32)
    med = {}
    for method in ("pd", "pd_bdense"):
        swds = []
        for seed in seeds:
            cfg = default_config(method, steps=64, rounds=3, updates=300,
                                 batch_size=128, lr=1e-3, seed=seed)
            rep = bd.run_distillation(teacher, cfg, data, schedule)
            samples = bd.solve(rep.student, noise, g8, "ddim").endpoint()
            swds.append(bd.sliced_wasserstein(samples, holdout, seed=0).value)
        med[method] = float(np.median(swds))
    return med


def test_c09_directional_pd_claim(vp_teacher, vp_schedule, ring_data, ring_holdout):
    """After three halving rounds (64 -> 8 steps), the branched student's
    median SWD across 5 seeds is <= the baseline's (one re-run permitted).

    The comparison runs at 300 updates per round: a mid-training budget
    where supervision density differentiates the students. At several-fold
    larger budgets both methods saturate at teacher-level sample quality
    and the comparison degenerates into a tie."""
    attempts = []
    for attempt, seeds in enumerate((range(5), range(100, 105))):
        med = _pd_comparison(vp_teacher, vp_schedule, ring_data, ring_holdout,
                             list(seeds))
        ok = med["pd_bdense"] <= med["pd"]
        attempts.append((med, ok))
        if ok:
            break
    med, ok = attempts[-1]
    report("criterion 9 (directional multi-branch claim, halving stack)", ok,
           f"median SWD base={med['pd']:.4f} vs branched={med['pd_bdense']:.4f} "
           f"({len(attempts)} attempt(s))")


# -- criterion 10 ------------------------------------------------------------


def test_c10_weight_search_sanity(edm_teacher, edm_schedule, ring_data, ring_holdout):
    """Across 5 repetitions of 20-trial searches, the median best slope a is
    positive: winning schedules weight later branches more heavily."""
    best_as = []
    for rep_i in range(5):
        objective = sfd_weight_objective(edm_teacher, edm_schedule, ring_data,
                                         ring_holdout, nfe=2, branches=4,
                                         updates=240, batch_size=64, lr=1e-3,
                                         eval_samples=512, seed=rep_i)
        trials = bd.weight_search(objective, (-2.0, 2.5), (-7.0, -2.0), 20,
                                  seed=rep_i)
        best_as.append(trials[0].a)
    median_a = float(np.median(best_as))
    report("criterion 10 (weight-search sanity)", median_a > 0,
           f"best-slope values {np.round(best_as, 3).tolist()}, median "
           f"{median_a:.3f} (need > 0)")
