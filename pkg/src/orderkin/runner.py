"""Scenario orchestration and self-describing CSV output."""

from __future__ import annotations

import hashlib
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .collisions import RULE_DIMENSION, RULE_MANIFOLD
from .config import INVARIANT_OBSERVABLES, ScenarioConfig, to_flat
from .dsmc import (
    Ensemble,
    KernelSpec,
    collision_sweep,
    dsmc_step,
    h_estimate,
    safe_dt,
    moments,
    sample_maxwellian,
    substream,
    weak_form_test,
)
from .errors import ConfigurationError, OrderKinError
from .manifold import ManifoldSpec, random_point, tangent_frame
from .meanfield import (
    AlignmentEnsemble,
    MeanFieldSpec,
    classify_fixed_point,
    eigenvalues,
    integrate_ensemble,
    linear_decay_rate,
)
from .mechanics import ParticleState, energy_terms, spin_momentum

log = logging.getLogger(__name__)

SCHEMA_VERSION = "orderkin-csv/1"

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def build_id() -> str:
    """Content hash of the package sources: stable across runs of the same build."""
    h = hashlib.sha1()
    pkg = Path(__file__).resolve().parent
    for path in sorted(pkg.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return f"{__version__}+g{h.hexdigest()[:12]}"


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


@dataclass
class RunResult:
    status: int
    columns: list
    rows: list
    reason: str = ""
    messages: list = field(default_factory=list)
    path: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == EXIT_OK


def render_csv(cfg: ScenarioConfig, columns: list, rows: list) -> str:
    lines = [
        f"# schema: {SCHEMA_VERSION} scenario={cfg.scenario}",
        f"# build: {build_id()}",
        f"# seed: {cfg.seed}",
    ]
    lines += [f"# config: {k} = {v}" for k, v in to_flat(cfg)]
    lines.append(",".join(columns))
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# initial data


def initial_states(cfg: ScenarioConfig) -> ParticleState:
    """Initial ensemble for the collision scenarios (deterministic in the seed)."""
    spec = ManifoldSpec(RULE_MANIFOLD[cfg.rule])
    d = RULE_DIMENSION[cfg.rule]
    N = cfg.n_particles
    m, I = cfg.mass, cfg.inertia
    rng = substream(cfg.seed, 5, 0)
    init = cfg.init
    if init.kind == "maxwellian":
        ens = sample_maxwellian((0.0, (0.0,), 0.0, -1.0 / (2.0 * init.temperature)), spec, N, cfg.seed, m, I)
        return ens.states
    if init.kind == "bimodal":
        sign = np.where(rng.permutation(N) < N // 2, 1.0, -1.0)
        p = init.noise * rng.standard_normal((N, d))
        p[:, 0] += sign * init.speed
        p *= math.sqrt(m)
        spin_sd = init.spin * math.sqrt(I)
    else:  # anisotropic Gaussian: variance `anisotropy * T` along x, T otherwise
        sd = np.full(d, math.sqrt(init.temperature))
        sd[0] *= math.sqrt(init.anisotropy)
        p = rng.standard_normal((N, d)) * sd * math.sqrt(m)
        spin_sd = math.sqrt(init.temperature * I)
    nu = random_point(spec, rng, N)
    if spec.kind in ("s1", "rp1"):
        sigma = spin_sd * rng.standard_normal(N)
    elif spec.kind == "s2":
        sigma = np.einsum("nk,nki->ni", spin_sd * rng.standard_normal((N, 2)), tangent_frame(spec, nu))
    elif spec.kind == "interval":
        sigma = np.zeros(N)
    else:
        sigma, nu = np.zeros((N, 0)), np.zeros((N, 0))
    return ParticleState(spec, np.zeros((N, d)), nu, p, sigma, m, I)


def kernel_spec(cfg: ScenarioConfig) -> KernelSpec:
    return KernelSpec(
        cfg.rule,
        cfg.kernel.prefactor_kind,
        cfg.majorant_value(),
        cfg.table_values(),
        cfg.exchange_fraction_value(),
    )


def _invariant_columns(d: int) -> list:
    P = ["Px", "Py", "Pz"][:d]
    L = ["L"] if d == 2 else ["Lx", "Ly", "Lz"]
    return P + L + ["E"]


# ---------------------------------------------------------------------------
# scenarios


def run_alignment(cfg: ScenarioConfig) -> RunResult:
    pot = cfg.potential
    spec = MeanFieldSpec(pot.kind, pot.alpha, pot.beta, pot.theta_hat_mode, pot.theta_hat, pot.transport_factor)
    ens = AlignmentEnsemble.uniform(cfg.n_particles, cfg.seed)
    stats = integrate_ensemble(ens, spec, cfg.dt, cfg.steps, cfg.checkpoint_every)
    cols = ["t", "mean_theta", "std_theta", "mean_omega", "std_omega", "circ_mean_theta", "circ_R"]
    rows = [list(s) for s in stats]
    if not all(math.isfinite(v) for r in rows for v in r):
        return RunResult(EXIT_PROPERTY, cols, rows, "reason=non_finite_statistics")
    return RunResult(EXIT_OK, cols, rows)


def run_stability(cfg: ScenarioConfig) -> RunResult:
    a, b = cfg.potential.alpha, cfg.potential.beta
    kind = classify_fixed_point(a, b)
    l1, l2 = eigenvalues(a, b)
    try:
        rate = linear_decay_rate(a, b)
    except OrderKinError:
        rate = float("nan")
    cols = ["alpha", "beta", "classification", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "decay_rate"]
    rows = [[a, b, kind] + [v + 0.0 for v in (l1.real, l1.imag, l2.real, l2.imag, rate)]]
    return RunResult(EXIT_OK, cols, rows)


def advance(ens: Ensemble, spec: KernelSpec, dt: float) -> None:
    """Advance by ``dt``, splitting into sub-steps whenever majorant * dt would exceed the bound."""
    t_target = ens.time + dt
    remaining = dt
    while remaining > 1e-12 * dt:
        h = safe_dt(spec, ens, remaining)
        dsmc_step(ens, spec, h)
        remaining -= h
    ens.time = t_target


def run_relaxation(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    spec = kernel_spec(cfg)
    ens = Ensemble(initial_states(cfg), seed=cfg.seed, threads=threads)
    d = ens.dim
    cols = ["t", "H", "H_sigma"] + _invariant_columns(d) + ["m2_px", "m2_py", "kurt_px", "n_collisions"]
    rows = []
    tol = cfg.h.tolerance_sigma

    def record():
        h = h_estimate(ens, cfg.h.estimator, k=cfg.h.k)
        mom = moments(ens)
        inv = ens.invariants()
        rows.append([ens.time, h.value, h.sigma, *inv.as_row(),
                     mom["m2_px"], mom["m2_py"], mom["kurt_px"], ens.n_collisions])

    record()
    for n in range(1, cfg.steps + 1):
        advance(ens, spec, cfg.dt)
        ens.time = n * cfg.dt
        if n % cfg.checkpoint_every == 0 or n == cfg.steps:
            record()
    result = RunResult(EXIT_OK, cols, rows)
    for k in range(1, len(rows)):
        h0, s0, h1, s1 = rows[k - 1][1], rows[k - 1][2], rows[k][1], rows[k][2]
        if h1 > h0 + tol * max(s0, s1):
            result.status = EXIT_PROPERTY
            result.reason = (f"reason=h_increase checkpoint={k} t={fmt(rows[k][0])} "
                             f"delta={fmt(h1 - h0)} sigma={fmt(max(s0, s1))}")
            break
    if ens.majorant_violations:
        result.status = EXIT_PROPERTY
        result.reason = f"reason=majorant_violation count={ens.majorant_violations}"
    result.messages.append(
        "max per-event drift: " + " ".join(f"{k}={fmt(v)}" for k, v in ens.max_event_drift.items())
    )
    return result


def _scales(ens: Ensemble) -> dict:
    s = ens.states
    spin = np.abs(spin_momentum(s)).reshape(ens.n, -1).sum()
    psum = float(np.sqrt(np.sum(s.p ** 2, axis=-1)).sum())
    return {"P": psum, "L": psum + float(spin), "E": float(energy_terms(s).sum())}


def run_invariant_fuzz(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    """Apply ``fuzz.events`` random events (all accepted) and track invariant drift."""
    spec = kernel_spec(cfg)
    ens = Ensemble(initial_states(cfg), seed=cfg.seed, threads=threads)
    inv0 = ens.invariants()
    scale = _scales(ens)
    per_sweep = ens.n // 2
    sweeps = -(-cfg.fuzz.events // per_sweep)
    cols = ["events", "max_event_drift_P", "max_event_drift_L", "max_event_drift_E",
            "cumulative_drift_P", "cumulative_drift_L", "cumulative_drift_E"]
    rows = []

    def cumulative():
        inv = ens.invariants()
        return {
            "P": float(np.max(np.abs(inv.P - inv0.P))) / scale["P"],
            "L": float(np.max(np.abs(np.ravel(inv.L) - np.ravel(inv0.L)))) / scale["L"],
            "E": abs(inv.E - inv0.E) / scale["E"],
        }

    every = max(1, sweeps // 20)
    for n in range(1, sweeps + 1):
        collision_sweep(ens, spec)
        if n % every == 0 or n == sweeps:
            c = cumulative()
            md = ens.max_event_drift
            rows.append([ens.n_collisions, md["P"], md["L"], md["E"], c["P"], c["L"], c["E"]])
    last = rows[-1]
    result = RunResult(EXIT_OK, cols, rows)
    worst_event = max(last[1:4])
    worst_cum = max(max(r[4:7]) for r in rows)
    result.messages.append(
        f"events={ens.n_collisions} max_event_drift={fmt(worst_event)} max_cumulative_drift={fmt(worst_cum)}"
    )
    if worst_event >= cfg.fuzz.per_event_tol:
        result.status = EXIT_PROPERTY
        result.reason = f"reason=per_event_drift value={fmt(worst_event)}"
    elif worst_cum >= cfg.fuzz.cumulative_tol:
        result.status = EXIT_PROPERTY
        result.reason = f"reason=cumulative_drift value={fmt(worst_cum)}"
    return result


def run_weakform(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    spec = kernel_spec(cfg)
    ens = Ensemble(initial_states(cfg), seed=cfg.seed, threads=threads)
    cols = ["psi", "estimate", "std_error", "expect_zero", "pass"]
    rows = []
    failures = []
    for psi in cfg.psi_list():
        res = weak_form_test(ens, spec, psi, cfg.weakform.samples, seed=cfg.seed)
        expect_zero = psi in INVARIANT_OBSERVABLES
        ok = res.passed_zero if expect_zero else abs(res.estimate) > 3.0 * res.std_error
        rows.append([psi, res.estimate, res.std_error, expect_zero, ok])
        if not ok:
            failures.append(psi)
    result = RunResult(EXIT_OK, cols, rows)
    if failures:
        result.status = EXIT_PROPERTY
        result.reason = "reason=weak_form psi=" + ",".join(failures)
    return result


def run_scenario(cfg: ScenarioConfig, threads: int = 1, write: bool = True) -> RunResult:
    """Run the configured scenario and (optionally) write its CSV atomically."""
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    runners = {
        "alignment": lambda: run_alignment(cfg),
        "stability": lambda: run_stability(cfg),
        "relaxation": lambda: run_relaxation(cfg, threads),
        "invariant_fuzz": lambda: run_invariant_fuzz(cfg, threads),
        "weakform": lambda: run_weakform(cfg, threads),
    }
    log.info("running %s (seed %d)", cfg.scenario, cfg.seed)
    result = runners[cfg.scenario]()
    if write and cfg.output_path:
        write_atomic(cfg.output_path, render_csv(cfg, result.columns, result.rows))
        result.path = cfg.output_path
    return result
