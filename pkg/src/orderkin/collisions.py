"""Binary elastic collision rules and the post-collision manifold dimension.

All rules are vectorized: ``s1``/``s2`` may be batches of particles sharing
a leading axis with the geometry arrays.  Offsets ``r1``/``r2`` point from
each centre of mass to the contact point, so a contact-consistent event
has ``x2 = x1 + r1 - r2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DegenerateGeometryError
from .manifold import ManifoldSpec, director, tangent_frame
from .mechanics import ParticleState

RULE_MANIFOLD = {
    "hard_sphere": "none",
    "bubbles": "interval",
    "calamitic3d": "s2",
    "calamitic2d": "s1",
    "headtail2d": "rp1",
}

RULE_DIMENSION = {"hard_sphere": 3, "bubbles": 3, "calamitic3d": 3, "calamitic2d": 2, "headtail2d": 2}

# the d + iota - 1 row of the dimension table, as claimed
TABLE_DIMENSION = {"hard_sphere": 2, "bubbles": 3, "calamitic3d": 4, "calamitic2d": 2, "headtail2d": 3}


@dataclass(frozen=True)
class CollisionGeometry:
    n: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    parity: np.ndarray | int = 0
    exchange_fraction: np.ndarray | float = 0.5
    e_v: float = 1.0
    e_w: float = 1.0

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "r1", np.broadcast_to(np.asarray(self.r1, dtype=float), n.shape))
        object.__setattr__(self, "r2", np.broadcast_to(np.asarray(self.r2, dtype=float), n.shape))
        if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-12):
            raise ConfigurationError("contact normal must be a unit vector (to 1e-12)")
        q = np.asarray(self.exchange_fraction, dtype=float)
        if np.any((q < 0) | (q > 1)) or not np.all(np.isfinite(q)):
            raise ConfigurationError("exchange_fraction must lie in [0, 1]")
        par = np.asarray(self.parity)
        if np.any((par != 0) & (par != 1)):
            raise ConfigurationError("parity must be 0 or 1")
        if self.e_v != 1.0 or self.e_w != 1.0:
            raise ConfigurationError("only elastic collisions (e_v = e_w = 1) are supported")

    def __getitem__(self, idx) -> "CollisionGeometry":
        pick = lambda a: np.asarray(a)[idx] if np.ndim(a) else a
        return CollisionGeometry(self.n[idx], self.r1[idx], self.r2[idx],
                                 pick(self.parity), pick(self.exchange_fraction))

    @property
    def separation(self) -> np.ndarray:
        """x2 - x1 for a contact-consistent placement."""
        return self.r1 - self.r2


@dataclass(frozen=True)
class CollisionOutcome:
    s1: ParticleState
    s2: ParticleState
    J: np.ndarray


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _perp(r):
    """e_z x r for planar r."""
    return np.stack([-r[..., 1], r[..., 0]], axis=-1)


# ---------------------------------------------------------------------------
# rules


def hard_sphere_collide(v1, v2, n):
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    n = np.asarray(n, dtype=float)
    k = _dot(n, v1 - v2)[..., None] * n
    return v1 - k, v2 + k


def _hard_sphere_states(s1, s2, geom):
    v1, v2 = hard_sphere_collide(s1.velocity, s2.velocity, geom.n)
    m = s1.mass
    J = 0.5 * m * _dot(s1.velocity - s2.velocity, geom.n)
    return v1 * m, v2 * m, J


def hard_sphere_rule(s1: ParticleState, s2: ParticleState, geom: CollisionGeometry) -> CollisionOutcome:
    p1, p2, J = _hard_sphere_states(s1, s2, geom)
    return CollisionOutcome(s1.with_momenta(p=p1), s2.with_momenta(p=p2), J)


def bubble_collide(s1: ParticleState, s2: ParticleState, geom: CollisionGeometry) -> CollisionOutcome:
    if s1.manifold.kind != "interval":
        raise ConfigurationError("bubble rule requires the interval manifold")
    p1, p2, J = _hard_sphere_states(s1, s2, geom)
    q = np.asarray(geom.exchange_fraction, dtype=float)
    nu1 = (1.0 - q) * s1.nu + q * s2.nu
    nu2 = (1.0 - q) * s2.nu + q * s1.nu
    return CollisionOutcome(s1.with_momenta(p=p1, nu=nu1), s2.with_momenta(p=p2, nu=nu2), J)


def rod_pseudo_inverse(nu, inertia) -> np.ndarray:
    """Minimum-norm inverse of I_s (Id - nu nu^T)."""
    nu = np.asarray(nu, dtype=float)
    return (np.eye(3) - nu[..., :, None] * nu[..., None, :]) / np.asarray(inertia)[..., None, None]


def rigid_impulse(V, n, r1, r2, inv_inertia1, inv_inertia2, m) -> np.ndarray:
    """J = -(V.n) / (2/m + [K1 (r1 x n) x r1 + K2 (r2 x n) x r2] . n).

    ``K1``/``K2`` are (pseudo-)inverse inertia tensors and ``V`` the relative
    velocity of the contact points.  The elastic update applies 2J.
    """
    V, n, r1, r2 = (np.asarray(a, dtype=float) for a in (V, n, r1, r2))
    a1 = np.einsum("...ij,...j->...i", inv_inertia1, np.cross(r1, n))
    a2 = np.einsum("...ij,...j->...i", inv_inertia2, np.cross(r2, n))
    denom = 2.0 / m + _dot(np.cross(a1, r1) + np.cross(a2, r2), n)
    if np.any(~(denom > 0)):
        raise DegenerateGeometryError("non-positive impulse denominator")
    return -_dot(V, n) / denom


def calamitic_collide_3d(s1: ParticleState, s2: ParticleState, geom: CollisionGeometry) -> CollisionOutcome:
    if s1.manifold.kind != "s2":
        raise ConfigurationError("3D calamitic rule requires the s2 manifold")
    m, I = s1.mass, s1.inertia
    n, r1, r2 = geom.n, geom.r1, geom.r2
    w1, w2 = s1.angular_velocity(), s2.angular_velocity()
    u = (s2.velocity + np.cross(w2, r2)) - (s1.velocity + np.cross(w1, r1))
    K1, K2 = rod_pseudo_inverse(s1.nu, I), rod_pseudo_inverse(s2.nu, s2.inertia)
    J = rigid_impulse(u, n, r1, r2, K1, K2, m)
    imp = (2.0 * J)[..., None]
    dw1 = -imp * np.einsum("...ij,...j->...i", K1, np.cross(r1, n))
    dw2 = imp * np.einsum("...ij,...j->...i", K2, np.cross(r2, n))
    # sigma = I_s omega x nu for omega orthogonal to nu
    sig1 = s1.sigma + I * np.cross(dw1, s1.nu)
    sig2 = s2.sigma + s2.inertia * np.cross(dw2, s2.nu)
    p1 = s1.p - imp * n
    p2 = s2.p + imp * n
    return CollisionOutcome(s1.with_momenta(p=p1, sigma=sig1), s2.with_momenta(p=p2, sigma=sig2), J)


def _planar_impulse(p1, p2, sig1, sig2, m, I1, I2, n, r1, r2):
    w1, w2 = sig1 / I1, sig2 / I2
    u = (p2 / m + w2[..., None] * _perp(r2)) - (p1 / m + w1[..., None] * _perp(r1))
    c1, c2 = _cross2(r1, n), _cross2(r2, n)
    denom = 2.0 / m + c1 * c1 / I1 + c2 * c2 / I2
    if np.any(~(denom > 0)):
        raise DegenerateGeometryError("non-positive impulse denominator")
    J = -_dot(u, n) / denom
    imp = 2.0 * J
    return (p1 - imp[..., None] * n, p2 + imp[..., None] * n,
            sig1 - imp * c1, sig2 + imp * c2, J)


def calamitic_collide_2d(s1: ParticleState, s2: ParticleState, geom: CollisionGeometry) -> CollisionOutcome:
    if s1.manifold.kind not in ("s1", "rp1"):
        raise ConfigurationError("2D calamitic rule requires the s1 (or rp1) manifold")
    p1, p2, g1, g2, J = _planar_impulse(s1.p, s2.p, s1.sigma, s2.sigma, s1.mass,
                                        s1.inertia, s2.inertia, geom.n, geom.r1, geom.r2)
    return CollisionOutcome(s1.with_momenta(p=p1, sigma=g1), s2.with_momenta(p=p2, sigma=g2), J)


def headtail_collide_2d(s1: ParticleState, s2: ParticleState, geom: CollisionGeometry) -> CollisionOutcome:
    """Planar rule with the first spin read as (-1)^q omega_1.

    The sign flip is applied before and undone after the planar rule, so the
    map stays an involution and the orientation is untouched (theta and
    theta + pi are the same head-tail state).
    """
    if s1.manifold.kind != "rp1":
        raise ConfigurationError("head-tail rule requires the rp1 manifold")
    sign = np.where(np.asarray(geom.parity) == 1, -1.0, 1.0)
    p1, p2, g1, g2, J = _planar_impulse(s1.p, s2.p, sign * s1.sigma, s2.sigma, s1.mass,
                                        s1.inertia, s2.inertia, geom.n, geom.r1, geom.r2)
    return CollisionOutcome(s1.with_momenta(p=p1, sigma=sign * g1), s2.with_momenta(p=p2, sigma=g2), J)


RULES: dict[str, Callable] = {
    "hard_sphere": hard_sphere_rule,
    "bubbles": bubble_collide,
    "calamitic3d": calamitic_collide_3d,
    "calamitic2d": calamitic_collide_2d,
    "headtail2d": headtail_collide_2d,
}


def get_rule(name: str) -> Callable:
    try:
        return RULES[name]
    except KeyError:
        raise ConfigurationError(f"unknown collision rule {name!r}; expected one of {sorted(RULES)}") from None


def collide(rule: str, s1, s2, geom) -> CollisionOutcome:
    return get_rule(rule)(s1, s2, geom)


def parity_adjusted(states: ParticleState, parity) -> ParticleState:
    """Flip the spin of head-tail particles with parity 1 (the conserved reading)."""
    sign = np.where(np.asarray(parity) == 1, -1.0, 1.0)
    return states.with_momenta(sigma=sign * states.sigma)


# ---------------------------------------------------------------------------
# geometry and state sampling (shared with the DSMC engine and tests)


def sample_unit(rng: np.random.Generator, dim: int, size: int) -> np.ndarray:
    if dim == 2:
        a = rng.uniform(0.0, 2.0 * np.pi, size)
        return np.stack([np.cos(a), np.sin(a)], axis=-1)
    v = rng.standard_normal((size, dim))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return v


def sample_geometry(rule: str, s1: ParticleState, s2: ParticleState, rng: np.random.Generator,
                    exchange_fraction: float | None = None, half_length: float = 0.5) -> CollisionGeometry:
    """Random contact geometry for a batch of pairs.

    Normals are uniform on the unit sphere/circle; rod offsets are uniform
    along each rod axis within ``half_length``; parity is a fair coin.
    Spheres and bubbles touch at the midpoint of a unit separation.
    """
    size = len(s1)
    d = RULE_DIMENSION[rule]
    n = sample_unit(rng, d, size)
    if rule in ("hard_sphere", "bubbles"):
        r1, r2 = 0.5 * n, -0.5 * n
    else:
        a1 = rng.uniform(-half_length, half_length, size)[:, None]
        a2 = rng.uniform(-half_length, half_length, size)[:, None]
        r1 = a1 * director(s1.manifold, s1.nu).reshape(size, d)
        r2 = a2 * director(s2.manifold, s2.nu).reshape(size, d)
    parity = rng.integers(0, 2, size) if rule == "headtail2d" else 0
    if rule == "bubbles":
        q = rng.uniform(0.0, 1.0, size) if exchange_fraction is None else exchange_fraction
    else:
        q = 0.5
    return CollisionGeometry(n, r1, r2, parity, q)


def random_states(rule: str, size: int, rng: np.random.Generator, mass: float = 1.0,
                  inertia: float = 1.0, spin_scale: float = 1.0) -> ParticleState:
    """Random particles for ``rule``: Gaussian momenta, uniform orientations."""
    from .manifold import random_point

    spec = ManifoldSpec(RULE_MANIFOLD[rule])
    d = RULE_DIMENSION[rule]
    p = rng.standard_normal((size, d)) * np.sqrt(mass)
    nu = random_point(spec, rng, size)
    if spec.kind == "s2":
        frame = tangent_frame(spec, nu)
        c = rng.standard_normal((size, 2)) * spin_scale * np.sqrt(inertia)
        sigma = np.einsum("nk,nki->ni", c, frame)
    elif spec.kind == "none":
        sigma = np.zeros((size, 0))
        nu = np.zeros((size, 0))
    elif spec.kind == "interval":
        sigma = np.zeros(size)
    else:
        sigma = rng.standard_normal(size) * spin_scale * np.sqrt(inertia)
    return ParticleState(spec, np.zeros((size, d)), nu, p, sigma, mass, inertia)


# ---------------------------------------------------------------------------
# post-collision manifold


def _coordinates(rule: str, s: ParticleState):
    """Post-state coordinates that collisions may change, per particle."""
    k = s.manifold.kind
    if k == "none":
        return s.p
    if k == "interval":
        return np.concatenate([s.p, np.reshape(s.nu, s.p.shape[:-1] + (1,))], axis=-1)
    if k == "s2":
        frame = tangent_frame(s.manifold, s.nu)
        return np.concatenate([s.p, np.einsum("...ki,...i->...k", frame, s.sigma)], axis=-1)
    return np.concatenate([s.p, s.sigma[..., None]], axis=-1)


def constraint_jacobian(rule: str, s1: ParticleState, s2: ParticleState) -> np.ndarray:
    """Jacobian of (P, spin L, E[, volume]) w.r.t. the post-state coordinates.

    The conserved quantities are those that involve the exchanged variables
    alone: total linear momentum, the spin part of the angular momentum
    (the orbital part depends on the unconstrained contact position) and
    kinetic energy; bubbles additionally conserve total volume.
    """
    d = RULE_DIMENSION[rule]
    kind = s1.manifold.kind
    blocks = []
    for s in (s1, s2):
        m, I = s.mass, s.inertia
        Pm = np.eye(d)
        E_p = s.p / m
        if kind == "s2":
            frame = tangent_frame(s.manifold, s.nu)
            spin_cols = np.stack([np.cross(s.nu, frame[k]) for k in range(2)], axis=-1)  # 3x2
            c = frame @ s.sigma
            J = np.zeros((d + 3 + 1, d + 2))
            J[:d, :d] = Pm
            J[d:d + 3, d:] = spin_cols
            J[-1, :d] = E_p
            J[-1, d:] = c / I
        elif kind in ("s1", "rp1"):
            J = np.zeros((d + 1 + 1, d + 1))
            J[:d, :d] = Pm
            J[d, d] = 1.0
            J[-1, :d] = E_p
            J[-1, d] = s.sigma / I
        elif kind == "interval":
            J = np.zeros((d + 1 + 1, d + 1))
            J[:d, :d] = Pm
            J[d, :d] = E_p
            J[-1, d] = 1.0
        else:
            J = np.zeros((d + 1, d))
            J[:d, :d] = Pm
            J[-1, :] = E_p
        blocks.append(J)
    return np.hstack(blocks)


def post_collision_manifold_dim(rule: str, base: tuple | None = None, probes: int = 100,
                                seed: int = 0, tol: float = 1e-8) -> int:
    """Dimension of the set of outcomes compatible with the conservation laws.

    Each probe takes a pre-collision pair (``base`` or a random one), applies
    the rule with a random geometry to land on a feasible post state, and
    computes ambient dimension minus the numerical rank of the constraint
    Jacobian there (singular values above ``tol`` times the largest).
    """
    get_rule(rule)
    rng = np.random.default_rng(seed)
    dims = []
    for _ in range(probes):
        if base is None:
            a = random_states(rule, 1, rng)
            b = random_states(rule, 1, rng)
        else:
            a, b = (s if s.p.ndim == 2 else s[None] for s in base)
        if np.allclose(a.velocity, b.velocity, atol=0, rtol=0) and np.all(a.sigma == 0) and np.all(b.sigma == 0):
            raise DegenerateGeometryError("base point has zero relative velocity")
        geom = sample_geometry(rule, a, b, rng)
        out = RULES[rule](a, b, geom)
        J = constraint_jacobian(rule, out.s1[0], out.s2[0])
        sv = np.linalg.svd(J, compute_uv=False)
        rank = int(np.sum(sv > tol * sv[0]))
        dims.append(J.shape[1] - rank)
    values, counts = np.unique(dims, return_counts=True)
    return int(values[np.argmax(counts)])
