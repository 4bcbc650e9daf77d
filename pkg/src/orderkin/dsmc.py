"""Direct simulation Monte Carlo for the spatially homogeneous collision dynamics.

Collision pairs are drawn by majorant acceptance-rejection.  The rate of
a pair (i, j) with sampled geometry is ``kernel_rate / N``; per step
``(N - 1) / 2 * majorant * dt`` candidates are drawn (the fractional part is
carried to the next step), as disjoint pairs taken from a random
permutation, and each is accepted with probability ``kernel_rate / majorant``.

Randomness: every step draws from counter-based Philox substreams keyed by
(seed, step, chunk), with chunks of a fixed number of candidate pairs, so the
result does not depend on how many worker threads process the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .collisions import (
    RULE_DIMENSION,
    RULE_MANIFOLD,
    CollisionGeometry,
    get_rule,
    sample_geometry,
)
from .entropy import estimate_h
from .errors import ConfigurationError
from .manifold import ManifoldSpec, director, random_point, tangent_frame
from .mechanics import (
    InvariantSet,
    ParticleState,
    energy_terms,
    orbital_momentum,
    require_homogeneous,
    spin_momentum,
)

PREFACTOR_KINDS = ("unit", "bubble_mean", "custom-table")
CHUNK_PAIRS = 4096
MAX_COLLISIONS_PER_PARTICLE_STEP = 0.5


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class KernelSpec:
    """Collision kernel W = max(g.n, 0) S(nu1, nu2).

    ``majorant`` of ``None`` means a bound computed from the current ensemble
    each step.  ``table`` holds nonnegative S values on a uniform grid of
    |nu1.nu2| in [0, 1] (rods) or (nu1 + nu2)/2 in [0, 1] (bubbles),
    linearly interpolated.  ``exchange_fraction`` of ``None`` draws the
    bubble exchange fraction uniformly per event.
    """

    rule: str
    prefactor_kind: str = "unit"
    majorant: float | None = None
    table: tuple = ()
    exchange_fraction: float | None = None
    half_length: float = 0.5

    def __post_init__(self):
        get_rule(self.rule)
        if self.prefactor_kind not in PREFACTOR_KINDS:
            raise ConfigurationError(f"prefactor_kind must be one of {PREFACTOR_KINDS}")
        if self.prefactor_kind == "bubble_mean" and self.rule != "bubbles":
            raise ConfigurationError("bubble_mean prefactor applies to the bubbles rule only")
        if self.prefactor_kind == "custom-table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 1 or t.size < 2:
                raise ConfigurationError("custom-table prefactor needs at least two table values")
            if np.any(t < 0) or not np.all(np.isfinite(t)):
                raise ConfigurationError("prefactor table must be finite and nonnegative")
        if self.majorant is not None and not self.majorant > 0:
            raise ConfigurationError("majorant must be positive")
        if self.exchange_fraction is not None and not 0.0 <= self.exchange_fraction <= 1.0:
            raise ConfigurationError("exchange_fraction must lie in [0, 1]")

    @property
    def prefactor_max(self) -> float:
        if self.prefactor_kind == "custom-table":
            return float(np.max(self.table))
        return 1.0


@dataclass
class Ensemble:
    """Homogeneous particle ensemble plus the bookkeeping of a DSMC run.

    ``orbital_L`` accumulates the orbital angular momentum exchanged in
    events, each booked in its own contact-consistent frame.  ``parity_L``
    books the head-tail parity term: a parity-1 event conserves the momentum
    read with omega_1 flipped, so the plain spin sum shifts by
    2 (sigma_1' - sigma_1).  Spin plus both ledgers is the conserved total.
    """

    states: ParticleState
    seed: int
    time: float = 0.0
    step_index: int = 0
    orbital_L: np.ndarray = field(default=None)
    parity_L: float = 0.0
    n_collisions: int = 0
    n_candidates: int = 0
    majorant_violations: int = 0
    carry: float = 0.0
    max_event_drift: dict = field(default_factory=lambda: {"P": 0.0, "L": 0.0, "E": 0.0})
    threads: int = 1

    def __post_init__(self):
        require_homogeneous(self.states)
        if self.orbital_L is None:
            self.orbital_L = np.zeros(3) if self.dim == 3 else np.zeros(())

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states.dim

    @property
    def manifold(self) -> ManifoldSpec:
        return self.states.manifold

    def invariants(self) -> InvariantSet:
        s = self.states
        P = s.p.sum(axis=0)
        spin = spin_momentum(s)
        L = spin.sum(axis=0) + self.orbital_L + self.parity_L
        return InvariantSet(P, np.asarray(L), float(energy_terms(s).sum()))

    def copy(self) -> "Ensemble":
        return replace(self, orbital_L=np.array(self.orbital_L), max_event_drift=dict(self.max_event_drift))


# ---------------------------------------------------------------------------
# kernel


def contact_velocity(s1: ParticleState, s2: ParticleState, r1, r2=None) -> np.ndarray:
    """Effective contact velocity g in its printed form.

    2D: g = (p1 - p2)/m + (w1 r1^y - w2 r2^y, w2 r2^x - w1 r1^x)
    3D: g = (p1 - p2)/m + [(s1.r1) nu1 - (nu1.r1) s1 - (s2.r2) nu2 + (nu2.r2) s2] / I_s

    ``r`` is measured from the contact point to the centre (the negative of
    the collision-rule offsets); with ``r2`` omitted the same ``r`` is used
    for both particles.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = r1 if r2 is None else np.asarray(r2, dtype=float)
    g = (s1.p - s2.p) / s1.mass
    k = s1.manifold.kind
    if k in ("s1", "rp1"):
        w1, w2 = s1.sigma / s1.inertia, s2.sigma / s2.inertia
        rot = np.stack([w1 * r1[..., 1] - w2 * r2[..., 1], w2 * r2[..., 0] - w1 * r1[..., 0]], axis=-1)
        return g + rot
    if k == "s2":
        dot = lambda a, b: np.sum(a * b, axis=-1, keepdims=True)
        t1 = dot(s1.sigma, r1) * s1.nu - dot(s1.nu, r1) * s1.sigma
        t2 = dot(s2.sigma, r2) * s2.nu - dot(s2.nu, r2) * s2.sigma
        return g + t1 / s1.inertia - t2 / s2.inertia
    return g


def prefactor(spec: KernelSpec, s1: ParticleState, s2: ParticleState) -> np.ndarray:
    if spec.prefactor_kind == "unit":
        return np.ones(s1.batch_shape)
    if spec.prefactor_kind == "bubble_mean":
        return 0.5 * (s1.nu + s2.nu)
    if spec.rule == "bubbles":
        x = 0.5 * (s1.nu + s2.nu)
    elif spec.rule == "hard_sphere":
        x = np.zeros(s1.batch_shape)
    else:
        x = np.abs(np.sum(director(s1.manifold, s1.nu) * director(s2.manifold, s2.nu), axis=-1))
    t = np.asarray(spec.table, dtype=float)
    return np.interp(np.clip(x, 0.0, 1.0), np.linspace(0.0, 1.0, t.size), t)


def kernel_rate(spec: KernelSpec, s1: ParticleState, s2: ParticleState, geom: CollisionGeometry) -> np.ndarray:
    """max(g.n, 0) S(nu1, nu2) for the sampled contact geometry."""
    if spec.rule in ("hard_sphere", "bubbles"):
        g = s1.velocity - s2.velocity
    else:
        g = contact_velocity(s1, s2, -geom.r1, -geom.r2)
    gn = np.sum(g * geom.n, axis=-1)
    S = prefactor(spec, s1, s2)
    if np.any(S < 0):
        raise ConfigurationError("negative kernel prefactor")
    return np.maximum(gn, 0.0) * S


def auto_majorant(spec: KernelSpec, states: ParticleState) -> float:
    """Upper bound on kernel_rate over all pairs and admissible geometries."""
    vmax = float(np.sqrt(np.max(np.sum(states.p * states.p, axis=-1)))) / states.mass
    bound = 2.0 * vmax
    k = states.manifold.kind
    if k in ("s1", "rp1", "s2"):
        if k == "s2":
            wmax = float(np.sqrt(np.max(np.sum(states.sigma ** 2, axis=-1)))) / states.inertia
        else:
            wmax = float(np.max(np.abs(states.sigma))) / states.inertia
        bound += 2.0 * spec.half_length * wmax
    return max(bound * spec.prefactor_max, 1e-300)


# ---------------------------------------------------------------------------
# stepping


def _event_frame(states: ParticleState, geom: CollisionGeometry) -> ParticleState:
    """Place the pair's second member at x2 = r1 - r2 relative to the first."""
    return replace(states, x=geom.separation)


def _process_chunk(spec: KernelSpec, states: ParticleState, i, j, maj, seed, step, chunk,
                   accept_all: bool = False):
    rng = substream(seed, step, chunk)
    a, b = states[i], states[j]
    geom = sample_geometry(spec.rule, a, b, rng, spec.exchange_fraction, spec.half_length)
    if accept_all:
        violations = 0
        accept = np.ones(len(i), dtype=bool)
    else:
        rate = kernel_rate(spec, a, b, geom)
        violations = int(np.sum(rate > maj))
        accept = rng.random(len(i)) * maj < rate
    if not np.any(accept):
        return None, violations
    a, b, geom = a[accept], b[accept], geom[accept]
    out = get_rule(spec.rule)(a, b, geom)
    post1, post2 = out.s1, out.s2
    # diagnostics: per-event drift of P, L and E in the event frame
    b0 = _event_frame(b, geom)
    b1 = _event_frame(post2, geom)
    if spec.rule == "headtail2d":
        from .collisions import parity_adjusted

        a_l, p1_l = parity_adjusted(a, geom.parity), parity_adjusted(post1, geom.parity)
    else:
        a_l, p1_l = a, post1
    L = lambda s: orbital_momentum(s) + spin_momentum(s)
    dL = L(p1_l) + L(b1) - L(a_l) - L(b0)
    dP = post1.p + post2.p - a.p - b.p
    e0 = energy_terms(a) + energy_terms(b)
    dE = energy_terms(post1) + energy_terms(post2) - e0
    pscale = np.sqrt(np.sum(a.p ** 2, -1)) + np.sqrt(np.sum(b.p ** 2, -1))
    lscale = np.abs(L(a_l)).reshape(len(e0), -1).sum(-1) + np.abs(L(b0)).reshape(len(e0), -1).sum(-1) + pscale
    drift = {
        "P": float(np.max(np.abs(dP).reshape(len(e0), -1).max(-1) / np.maximum(pscale, 1e-300))),
        "L": float(np.max(np.abs(dL).reshape(len(e0), -1).max(-1) / np.maximum(lscale, 1e-300))),
        "E": float(np.max(np.abs(dE) / np.maximum(e0, 1e-300))),
    }
    orbital = orbital_momentum(b1).sum(axis=0) - orbital_momentum(b0).sum(axis=0)
    parity = 0.0
    if spec.rule == "headtail2d":
        flipped = np.asarray(geom.parity) == 1
        parity = -2.0 * float(np.sum(np.where(flipped, post1.sigma - a.sigma, 0.0)))
    return (accept, post1, post2, orbital, parity, drift), violations


def _check_rule(ens: Ensemble, spec: KernelSpec) -> None:
    if spec.rule not in RULE_MANIFOLD or RULE_MANIFOLD[spec.rule] != ens.manifold.kind:
        raise ConfigurationError(f"rule {spec.rule!r} does not act on {ens.manifold.kind!r} particles")


def _apply_pairs(ens: Ensemble, spec: KernelSpec, first, second, maj, step, accept_all=False) -> None:
    k = len(first)
    bounds = list(range(0, k, CHUNK_PAIRS)) + [k]
    jobs = [(first[lo:hi], second[lo:hi], c + 1) for c, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:]))]
    states = ens.states
    run = lambda job: _process_chunk(spec, states, job[0], job[1], maj, ens.seed, step, job[2], accept_all)
    if ens.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=ens.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    p, sigma, nu = states.p.copy(), states.sigma.copy(), states.nu.copy()
    for (i, j, _), (res, viol) in zip(jobs, results):
        ens.majorant_violations += viol
        ens.n_candidates += len(i)
        if res is None:
            continue
        accept, post1, post2, orbital, parity, drift = res
        ia, ja = i[accept], j[accept]
        p[ia], p[ja] = post1.p, post2.p
        sigma[ia], sigma[ja] = post1.sigma, post2.sigma
        nu[ia], nu[ja] = post1.nu, post2.nu
        ens.orbital_L = ens.orbital_L + orbital
        ens.parity_L += parity
        ens.n_collisions += int(len(ia))
        for key, val in drift.items():
            ens.max_event_drift[key] = max(ens.max_event_drift[key], val)
    ens.states = states.with_momenta(p=p, sigma=sigma, nu=nu)


def collision_sweep(ens: Ensemble, spec: KernelSpec) -> Ensemble:
    """Apply the rule to N // 2 disjoint random pairs, every event accepted.

    Used to fuzz the conservation laws; time does not advance.
    """
    _check_rule(ens, spec)
    N = ens.n
    step = ens.step_index
    ens.step_index += 1
    perm = substream(ens.seed, step, 0).permutation(N)
    k = N // 2
    _apply_pairs(ens, spec, perm[0:2 * k:2], perm[1:2 * k:2], np.inf, step, accept_all=True)
    return ens


def dsmc_step(ens: Ensemble, spec: KernelSpec, dt: float) -> Ensemble:
    """Advance the ensemble by one collision step of length ``dt`` (in place)."""
    _check_rule(ens, spec)
    if not math.isfinite(dt) or dt < 0:
        raise ConfigurationError("dt must be finite and nonnegative")
    if dt == 0:
        return ens
    N = ens.n
    if N < 2:
        raise ConfigurationError("collision steps need at least two particles")
    maj = spec.majorant if spec.majorant is not None else auto_majorant(spec, ens.states)
    if maj * dt > MAX_COLLISIONS_PER_PARTICLE_STEP:
        raise ConfigurationError(
            f"majorant*dt = {maj * dt:.3g} exceeds {MAX_COLLISIONS_PER_PARTICLE_STEP}; reduce dt"
        )
    expected = 0.5 * (N - 1) * maj * dt + ens.carry
    k = int(math.floor(expected))
    ens.carry = expected - k
    k = min(k, N // 2)
    step = ens.step_index
    ens.step_index += 1
    ens.time += dt
    if k == 0:
        return ens
    perm = substream(ens.seed, step, 0).permutation(N)
    _apply_pairs(ens, spec, perm[0:2 * k:2], perm[1:2 * k:2], maj, step)
    return ens


def safe_dt(spec: KernelSpec, ens: Ensemble, dt: float, margin: float = 1.0) -> float:
    maj = spec.majorant if spec.majorant is not None else auto_majorant(spec, ens.states)
    return min(dt, margin * MAX_COLLISIONS_PER_PARTICLE_STEP / maj)


# ---------------------------------------------------------------------------
# observables


def reduced_variables(ens_or_states) -> np.ndarray:
    """Phase variables entering H: p, the spin coordinates, and nu for bubbles."""
    s = ens_or_states.states if isinstance(ens_or_states, Ensemble) else ens_or_states
    cols = [s.p]
    k = s.manifold.kind
    if k in ("s1", "rp1"):
        cols.append(s.sigma[:, None])
    elif k == "s2":
        frame = tangent_frame(s.manifold, s.nu)
        cols.append(np.einsum("nki,ni->nk", frame, s.sigma))
    elif k == "interval":
        cols.append(s.nu[:, None])
        if np.any(s.sigma != 0):
            cols.append(s.sigma[:, None])
    return np.concatenate(cols, axis=1)


class HEstimate(NamedTuple):
    value: float
    sigma: float


def h_estimate(ens: Ensemble, estimator: str = "auto", bins=None, k: int = 4) -> HEstimate:
    if ens.n < 1000:
        raise ConfigurationError("H estimation needs at least 1000 particles")
    return HEstimate(*estimate_h(reduced_variables(ens), estimator, bins, k))


def h_functional(ens: Ensemble, estimator: str = "auto", bins=None, k: int = 4) -> float:
    """Estimate of the integral of f log f over the reduced phase variables."""
    return h_estimate(ens, estimator, bins, k).value


def moments(ens: Ensemble) -> dict:
    p = ens.states.p / np.sqrt(ens.states.mass)
    out = {}
    for c, name in enumerate("xyz"[: ens.dim]):
        x = p[:, c]
        m2 = float(np.mean(x * x))
        xc = x - x.mean()
        out[f"m2_p{name}"] = m2
        out[f"kurt_p{name}"] = float(np.mean(xc ** 4) / np.mean(xc ** 2) ** 2)
    return out


# ---------------------------------------------------------------------------
# weak form, reciprocity, Maxwellian


def _observable(psi, ens: Ensemble) -> Callable:
    if callable(psi):
        return psi
    name = str(psi)
    dim = ens.dim
    comps = {"x": 0, "y": 1, "z": 2}

    def L(s):
        val = orbital_momentum(s) + spin_momentum(s)
        return val

    if name == "one":
        return lambda s: np.ones(s.batch_shape)
    if name in ("px", "py", "pz"):
        c = comps[name[1]]
        if c >= dim:
            raise ConfigurationError(f"{name} undefined in {dim}D")
        return lambda s: s.p[..., c]
    if name in ("px2", "py2", "pz2"):
        c = comps[name[1]]
        return lambda s: s.p[..., c] ** 2
    if name in ("E", "energy"):
        return energy_terms
    if name == "volume":
        return lambda s: np.asarray(s.nu, dtype=float)
    if name == "L" and dim == 2:
        return L
    if name in ("L", "Lx", "Ly", "Lz"):
        c = 2 if name == "L" else comps[name[1]]
        if dim == 2:
            if c != 2:
                raise ConfigurationError(f"{name} undefined in 2D")
            return L
        return lambda s: L(s)[..., c]
    raise ConfigurationError(f"unknown observable {psi!r}")


class WeakFormResult(NamedTuple):
    estimate: float
    std_error: float
    floor: float

    @property
    def passed_zero(self) -> bool:
        """Consistent with zero: within 3 standard errors or at rounding level."""
        return abs(self.estimate) <= max(3.0 * self.std_error, self.floor)


def weak_form_test(ens: Ensemble, spec: KernelSpec, psi, samples: int = 10 ** 6, seed: int = 0,
                   batch: int = 200_000) -> WeakFormResult:
    """Monte Carlo estimate of the integral of psi C[f, f].

    Pairs (i != j) and geometries are drawn uniformly; each contributes
    W * [psi(1') + psi(2') - psi(1) - psi(2)] / 2.  Positions are taken in
    the contact-consistent event frame so that psi = L includes the orbital
    exchange.  ``floor`` is a rounding-level bound below which a nonzero
    estimate cannot be distinguished from exact cancellation.
    """
    f = _observable(psi, ens)
    N = ens.n
    total = 0.0
    total_sq = 0.0
    total_scale = 0.0
    done = 0
    chunk = 0
    rule = get_rule(spec.rule)
    while done < samples:
        m = min(batch, samples - done)
        rng = substream(seed, 1_000_003, chunk)
        chunk += 1
        i = rng.integers(0, N, m)
        j = (i + rng.integers(1, N, m)) % N
        a, b = ens.states[i], ens.states[j]
        geom = sample_geometry(spec.rule, a, b, rng, spec.exchange_fraction, spec.half_length)
        w = kernel_rate(spec, a, b, geom)
        out = rule(a, b, geom)
        b0, b1 = _event_frame(b, geom), _event_frame(out.s2, geom)
        pre = np.asarray(f(a)) + np.asarray(f(b0))
        post = np.asarray(f(out.s1)) + np.asarray(f(b1))
        val = 0.5 * w * (post - pre)
        total += float(np.sum(val))
        total_sq += float(np.sum(val * val))
        total_scale += float(np.sum(0.5 * w * (np.abs(pre) + np.abs(post))))
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    floor = 64.0 * np.finfo(float).eps * total_scale / samples
    return WeakFormResult(mean, math.sqrt(var / samples), floor)


def momentum_coordinates(s: ParticleState) -> np.ndarray:
    """Flat (p, spin coordinates) vector of one particle."""
    k = s.manifold.kind
    if k == "s2":
        frame = tangent_frame(s.manifold, s.nu)
        return np.concatenate([s.p, frame @ s.sigma])
    if k in ("s1", "rp1") or (k == "interval"):
        return np.concatenate([s.p, [float(s.sigma)]])
    return np.asarray(s.p, dtype=float).copy()


def _from_coordinates(s: ParticleState, z: np.ndarray) -> ParticleState:
    d = s.dim
    k = s.manifold.kind
    if k == "s2":
        frame = tangent_frame(s.manifold, s.nu)
        return s.with_momenta(p=z[:d], sigma=z[d:] @ frame)
    if k in ("s1", "rp1", "interval"):
        return s.with_momenta(p=z[:d], sigma=np.asarray(z[d]))
    return s.with_momenta(p=z[:d])


class ReciprocityResult(NamedTuple):
    det_deviation: float
    involution_error: float


def reciprocity_check(rule: str, trials: int = 1000, seed: int = 0, eps: float = 1e-6) -> ReciprocityResult:
    """Worst |det J| - 1 of the pre -> post momentum map and worst involution error.

    The map acts on (p1, p2, spin coordinates) at fixed geometry and fixed
    orientations; J is taken by central differences.
    """
    from .collisions import random_states

    collide = get_rule(rule)
    rng = np.random.default_rng(seed)
    worst_det = 0.0
    worst_inv = 0.0
    for _ in range(trials):
        a = random_states(rule, 1, rng)[0]
        b = random_states(rule, 1, rng)[0]
        geom = sample_geometry(rule, a[None], b[None], rng)[0]
        za, zb = momentum_coordinates(a), momentum_coordinates(b)
        na = za.size

        def F(z):
            out = collide(_from_coordinates(a, z[:na]), _from_coordinates(b, z[na:]), geom)
            return np.concatenate([momentum_coordinates(out.s1), momentum_coordinates(out.s2)])

        z0 = np.concatenate([za, zb])
        jac = np.empty((z0.size, z0.size))
        for c in range(z0.size):
            h = np.zeros_like(z0)
            h[c] = eps
            jac[:, c] = (F(z0 + h) - F(z0 - h)) / (2.0 * eps)
        worst_det = max(worst_det, abs(abs(np.linalg.det(jac)) - 1.0))
        back = F(F(z0))
        worst_inv = max(worst_inv, float(np.max(np.abs(back - z0)) / max(1.0, np.max(np.abs(z0)))))
    return ReciprocityResult(worst_det, worst_inv)


@dataclass(frozen=True)
class MaxwellianParams:
    """Exponent a + b.p + c L_z + d (p.p/m + sigma.B^-1 sigma) of the equilibrium density."""

    a: float = 0.0
    b: tuple = (0.0,)
    c: float = 0.0
    d: float = -0.5


def sample_maxwellian(params, spec: ManifoldSpec | str, n: int, seed: int, mass: float = 1.0,
                      inertia: float = 1.0, threads: int = 1) -> Ensemble:
    """Draw an ensemble from the Maxwellian exponential family.

    Completing the square: p ~ N(-m b / 2d, -m / 2d); the spin coordinates are
    Gaussian with variance -I / 2d and mean -c I / 2d along the generator of
    rotations about e_z (for S^2 the tangent vector e_z x nu).  Orientations
    are uniform.  ``a`` only normalizes and is ignored.  Homogeneous
    ensembles have x = 0, so the orbital part of L drops out of the exponent.
    """
    if isinstance(params, dict):
        params = MaxwellianParams(**params)
    elif not isinstance(params, MaxwellianParams):
        params = MaxwellianParams(*params)
    spec = spec if isinstance(spec, ManifoldSpec) else ManifoldSpec(spec)
    d = float(params.d)
    if not d < 0:
        raise ConfigurationError("Maxwellian requires d < 0 for integrability")
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    dim = spec.dimension
    b = np.broadcast_to(np.asarray(params.b, dtype=float), (dim,))
    rng = substream(seed, 7, 0)
    var_p = -mass / (2.0 * d)
    p = rng.standard_normal((n, dim)) * math.sqrt(var_p) + (-mass * b / (2.0 * d))
    var_s = -inertia / (2.0 * d)
    mean_s = -params.c * inertia / (2.0 * d)
    nu = random_point(spec, rng, n)
    if spec.kind in ("s1", "rp1"):
        sigma = rng.standard_normal(n) * math.sqrt(var_s) + mean_s
    elif spec.kind == "interval":
        if params.c != 0:
            raise ConfigurationError("the trivial action carries no spin; c must be 0")
        sigma = rng.standard_normal(n) * math.sqrt(var_s)
    elif spec.kind == "s2":
        frame = tangent_frame(spec, nu)
        coords = rng.standard_normal((n, 2)) * math.sqrt(var_s)
        ez_cross = np.cross(np.array([0.0, 0.0, 1.0]), nu)
        sigma = np.einsum("nk,nki->ni", coords, frame) + mean_s * ez_cross
    else:
        if params.c != 0:
            raise ConfigurationError("particles without orientation carry no spin; c must be 0")
        sigma = np.zeros((n, 0))
        nu = np.zeros((n, 0))
    states = ParticleState(spec, np.zeros((n, dim)), nu, p, sigma, mass, inertia)
    return Ensemble(states, seed=seed, threads=threads)


def make_ensemble(states: ParticleState, seed: int, threads: int = 1) -> Ensemble:
    return Ensemble(states, seed=seed, threads=threads)
