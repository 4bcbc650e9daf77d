"""Mean-field alignment dynamics of planar rods.

Each particle follows theta' = k omega, omega' = V(theta, omega) with the
force V derived from the mean-field potential W:

* quadratic: W = alpha/2 (theta - theta_hat)^2 + beta omega theta,
  V = -alpha (theta - theta_hat) - beta omega
* cosine:    W = -alpha cos(theta - theta_hat), V = -alpha sin(theta - theta_hat) - beta omega
* custom-table: W tabulated on a periodic grid of theta - theta_hat

``k`` is the transport factor (1 for rigid-body kinematics, 2 for the
alternative reading).  Angles are kept unwrapped during integration.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DegenerateEnsembleError, NotApplicableError

POTENTIALS = ("quadratic", "cosine", "custom-table")


@dataclass(frozen=True)
class MeanFieldSpec:
    potential_kind: str = "quadratic"
    alpha: float = 1.0
    beta: float = 1.0
    theta_hat_mode: str = "fixed"
    theta_hat: float = 0.4
    transport_factor: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.potential_kind not in POTENTIALS:
            raise ConfigurationError(f"potential kind must be one of {POTENTIALS}")
        if self.theta_hat_mode not in ("fixed", "ensemble"):
            raise ConfigurationError("theta_hat_mode must be 'fixed' or 'ensemble'")
        for name in ("alpha", "beta", "theta_hat", "transport_factor"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.potential_kind == "custom-table" and len(self.table) < 4:
            raise ConfigurationError("custom-table potential needs at least 4 samples")

    def spline(self):
        from scipy.interpolate import CubicSpline

        w = np.asarray(self.table, dtype=float)
        grid = np.linspace(-np.pi, np.pi, w.size + 1)
        return CubicSpline(grid, np.append(w, w[0]), bc_type="periodic")


@dataclass
class AlignmentEnsemble:
    theta: np.ndarray
    omega: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        if self.theta.shape != self.omega.shape or self.theta.size == 0:
            raise ConfigurationError("theta and omega must be nonempty arrays of equal shape")

    @classmethod
    def uniform(cls, n: int, seed: int, theta_range=(-np.pi, np.pi), omega_range=(-1.0, 1.0)):
        from .dsmc import substream

        rng = substream(seed, 11, 0)
        theta = rng.uniform(*theta_range, n)
        omega = rng.uniform(*omega_range, n)
        return cls(theta, omega)


class EnsembleStats(NamedTuple):
    t: float
    mean_theta: float
    std_theta: float
    mean_omega: float
    std_omega: float
    circ_mean_theta: float
    circ_R: float


def mean_direction(theta) -> float:
    """theta_hat = atan2 of the mean embedded director (fixed-order sums)."""
    th = np.asarray(theta, dtype=float)
    c, s = float(np.cos(th).sum()), float(np.sin(th).sum())
    if math.hypot(c, s) <= 1e-12 * th.size:
        raise DegenerateEnsembleError("mean director vanishes; theta_hat undefined")
    return math.atan2(s, c)


def resolve_theta_hat(spec: MeanFieldSpec, theta) -> float:
    if spec.theta_hat_mode == "fixed":
        return spec.theta_hat
    return mean_direction(theta)


def potential(spec: MeanFieldSpec, theta, omega, theta_hat: float):
    d = np.asarray(theta, dtype=float) - theta_hat
    if spec.potential_kind == "quadratic":
        return 0.5 * spec.alpha * d * d + spec.beta * np.asarray(omega) * np.asarray(theta)
    if spec.potential_kind == "cosine":
        return -spec.alpha * np.cos(d) + spec.beta * np.asarray(omega) * np.asarray(theta)
    wrapped = np.mod(d + np.pi, 2 * np.pi) - np.pi
    return spec.spline()(wrapped) + spec.beta * np.asarray(omega) * np.asarray(theta)


def force(spec: MeanFieldSpec, theta, omega, theta_hat: float):
    """V = -dW/dtheta at fixed omega."""
    d = np.asarray(theta, dtype=float) - theta_hat
    damping = -spec.beta * np.asarray(omega, dtype=float)
    if spec.potential_kind == "quadratic":
        return -spec.alpha * d + damping
    if spec.potential_kind == "cosine":
        return -spec.alpha * np.sin(d) + damping
    wrapped = np.mod(d + np.pi, 2 * np.pi) - np.pi
    return -spec.spline()(wrapped, 1) + damping


def vlasov_force(spec: MeanFieldSpec, ensemble: AlignmentEnsemble, theta, omega=0.0):
    """Mean-field force on particles at (theta, omega) given the ensemble."""
    return force(spec, theta, omega, resolve_theta_hat(spec, ensemble.theta))


def nearest_representative(theta, target: float) -> np.ndarray:
    """Shift the whole (unwrapped) sample by 2 pi k so its mean lies nearest ``target``."""
    th = np.asarray(theta, dtype=float)
    k = np.round((th.mean() - target) / (2 * np.pi))
    return th - 2 * np.pi * k


def ensemble_stats(ens: AlignmentEnsemble, theta_ref: float) -> EnsembleStats:
    th = nearest_representative(ens.theta, theta_ref)
    z = np.exp(1j * ens.theta).mean()
    return EnsembleStats(
        float(ens.time),
        float(th.mean()),
        float(th.std()),
        float(ens.omega.mean()),
        float(ens.omega.std()),
        float(cmath.phase(z)),
        float(abs(z)),
    )


def integrate_ensemble(ensemble: AlignmentEnsemble, spec: MeanFieldSpec, dt: float, steps: int,
                       checkpoint_every: int = 1) -> list[EnsembleStats]:
    """Semi-implicit Euler (kick, then drift); stats at step 0 and every ``checkpoint_every``."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if checkpoint_every < 1:
        raise ConfigurationError("checkpoint_every must be >= 1")
    theta, omega = ensemble.theta.copy(), ensemble.omega.copy()
    t0 = ensemble.time
    ref = lambda th: resolve_theta_hat(spec, th)
    out = [ensemble_stats(AlignmentEnsemble(theta, omega, t0), ref(theta))]
    k = spec.transport_factor
    for n in range(1, steps + 1):
        th_hat = ref(theta)
        omega = omega + dt * force(spec, theta, omega, th_hat)
        theta = theta + dt * k * omega
        if n % checkpoint_every == 0 or n == steps:
            out.append(ensemble_stats(AlignmentEnsemble(theta, omega, t0 + n * dt), ref(theta)))
    ensemble.theta, ensemble.omega, ensemble.time = theta, omega, t0 + steps * dt
    return out


# ---------------------------------------------------------------------------
# linear stability


def eigenvalues(alpha: float, beta: float) -> tuple[complex, complex]:
    """Roots of lambda^2 + beta lambda + alpha = 0 (larger real part first).

    Real roots use the cancellation-free form lambda_2 = alpha / lambda_1.
    """
    disc = beta * beta - 4.0 * alpha
    if disc < 0:
        r = cmath.sqrt(complex(disc))
        return ((-beta + r) / 2.0, (-beta - r) / 2.0)
    big = -(beta + math.copysign(math.sqrt(disc), beta)) / 2.0
    if big == 0.0:
        return (0j, 0j)
    small = alpha / big
    return (complex(max(big, small)), complex(min(big, small)))


def classify_fixed_point(alpha: float, beta: float) -> str:
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ConfigurationError("alpha and beta must be finite")
    if alpha < 0:
        return "saddle"
    if alpha == 0:
        return "degenerate"
    if beta == 0:
        return "center"
    disc = beta * beta - 4.0 * alpha
    stable = beta > 0
    if disc < 0:
        return "stable_spiral" if stable else "unstable_spiral"
    return "stable_node" if stable else "unstable_node"


def linear_decay_rate(alpha: float, beta: float) -> float:
    """-max Re(lambda) for stable (or neutrally stable) configurations."""
    kind = classify_fixed_point(alpha, beta)
    if kind not in ("stable_spiral", "stable_node", "center"):
        raise NotApplicableError(f"no decay rate for a {kind} fixed point")
    rate = -max(l.real for l in eigenvalues(alpha, beta))
    return rate + 0.0
