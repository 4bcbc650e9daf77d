"""Order-parameter manifolds: interval, circle, projective line and sphere.

Points are stored in their *native* representation:

* ``interval`` -- scalar volume fraction in [0, 1]
* ``s1``       -- angle theta (mod 2 pi)
* ``rp1``      -- angle theta in [0, pi) (head and tail identified)
* ``s2``       -- unit 3-vector
* ``none``     -- no orientational degree of freedom (hard spheres)

``embed`` maps a native point to its Euclidean embedding (scalar, 2-vector,
2x2 projector nu nu^T, 3-vector) and ``chart`` maps back.  All functions
broadcast over leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi

# ---------------------------------------------------------------------------
# rotations


def skew(w: np.ndarray) -> np.ndarray:
    """Matrix of the map ``x -> w x x``."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def rodrigues(q: np.ndarray) -> np.ndarray:
    """Rotation matrix exp(W(q)) in closed form.

    Uses Q = I + sin|q| W(k) + (1 - cos|q|) W(k)^2 with unit axis k = q/|q|.
    """
    q = np.asarray(q, dtype=float)
    theta = np.linalg.norm(q, axis=-1)
    small = theta < 1e-12
    safe = np.where(small, 1.0, theta)
    k = q / safe[..., None]
    K = skew(k)
    s = np.where(small, 0.0, np.sin(theta))[..., None, None]
    c = np.where(small, 0.0, 1.0 - np.cos(theta))[..., None, None]
    return np.eye(3) + s * K + c * (K @ K)


def rotation_vector_from_matrix(Q: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rodrigues` for a single rotation matrix.

    Goes through the unit quaternion (largest-component extraction), which
    stays accurate near half turns.
    """
    Q = np.asarray(Q, dtype=float)
    tr = np.trace(Q)
    cand = np.array([tr, Q[0, 0], Q[1, 1], Q[2, 2]])
    k = int(np.argmax(cand))
    if k == 0:
        w = 0.5 * np.sqrt(1.0 + tr)
        xyz = np.array([Q[2, 1] - Q[1, 2], Q[0, 2] - Q[2, 0], Q[1, 0] - Q[0, 1]]) / (4.0 * w)
    else:
        i, j, l = k - 1, k % 3, (k + 1) % 3
        xyz = np.zeros(3)
        xyz[i] = 0.5 * np.sqrt(max(1.0 + Q[i, i] - Q[j, j] - Q[l, l], 0.0))
        xyz[j] = (Q[j, i] + Q[i, j]) / (4.0 * xyz[i])
        xyz[l] = (Q[l, i] + Q[i, l]) / (4.0 * xyz[i])
        w = (Q[l, j] - Q[j, l]) / (4.0 * xyz[i])
    if w < 0:
        w, xyz = -w, -xyz
    s = np.linalg.norm(xyz)
    if s < 1e-300:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(s, w)
    return angle * xyz / s


@dataclass(frozen=True)
class RotationElement:
    """Element of SO(2) (``angle``) or SO(3) (``rotation_vector``).

    Also used as a Lie-algebra element: the angle is then an angular rate and
    the rotation vector an angular-velocity vector.
    """

    dimension: int
    angle: float = 0.0
    rotation_vector: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ConfigurationError(f"rotation dimension must be 2 or 3, got {self.dimension}")
        rv = np.asarray(self.rotation_vector, dtype=float).reshape(3)
        object.__setattr__(self, "rotation_vector", rv)
        object.__setattr__(self, "angle", float(self.angle))

    @classmethod
    def planar(cls, angle: float) -> "RotationElement":
        return cls(2, angle=angle)

    @classmethod
    def spatial(cls, rotation_vector) -> "RotationElement":
        return cls(3, rotation_vector=np.asarray(rotation_vector, dtype=float))

    @classmethod
    def identity(cls, dimension: int) -> "RotationElement":
        return cls(dimension)

    @classmethod
    def random(cls, dimension: int, rng: np.random.Generator) -> "RotationElement":
        if dimension == 2:
            return cls.planar(rng.uniform(-np.pi, np.pi))
        # Haar measure via a uniform unit quaternion
        quat = rng.standard_normal(4)
        quat /= np.linalg.norm(quat)
        if quat[0] < 0:
            quat = -quat
        ang = 2.0 * np.arccos(np.clip(quat[0], -1.0, 1.0))
        s = np.linalg.norm(quat[1:])
        axis = quat[1:] / s if s > 0 else np.array([0.0, 0.0, 1.0])
        return cls.spatial(ang * axis)

    def matrix(self) -> np.ndarray:
        if self.dimension == 2:
            c, s = np.cos(self.angle), np.sin(self.angle)
            return np.array([[c, -s], [s, c]])
        return rodrigues(self.rotation_vector)

    def algebra(self) -> np.ndarray:
        """The element read as an angular-velocity 3-vector."""
        if self.dimension == 2:
            return np.array([0.0, 0.0, self.angle])
        return self.rotation_vector.copy()

    def inverse(self) -> "RotationElement":
        if self.dimension == 2:
            return RotationElement.planar(-self.angle)
        return RotationElement.spatial(-self.rotation_vector)

    def compose(self, other: "RotationElement") -> "RotationElement":
        """``self . other`` (apply ``other`` first)."""
        if self.dimension != other.dimension:
            raise ConfigurationError("cannot compose rotations of different dimension")
        if self.dimension == 2:
            return RotationElement.planar(self.angle + other.angle)
        return RotationElement.spatial(
            rotation_vector_from_matrix(self.matrix() @ other.matrix())
        )

    def scaled(self, eps: float) -> "RotationElement":
        return RotationElement(self.dimension, self.angle * eps, self.rotation_vector * eps)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v @ self.matrix().T


# ---------------------------------------------------------------------------
# manifolds

_KINDS = {
    # kind: (chart_dim, embed_shape, action_kind, group_dim, transitive)
    "none": (0, (0,), "trivial", 3, False),
    "interval": (1, (), "trivial", 3, False),
    "s1": (1, (2,), "vector_rotation", 2, True),
    "rp1": (1, (2, 2), "conjugation", 2, True),
    "s2": (2, (3,), "vector_rotation", 3, True),
}

ALIASES = {
    "interval01": "interval",
    "circles1": "s1",
    "projectiverp1": "rp1",
    "spheres2": "s2",
}


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str

    def __post_init__(self):
        k = ALIASES.get(self.kind.lower(), self.kind.lower())
        if k not in _KINDS:
            raise ConfigurationError(
                f"unknown manifold {self.kind!r}; expected one of {sorted(_KINDS)}"
            )
        object.__setattr__(self, "kind", k)

    @property
    def chart_dim(self) -> int:
        return _KINDS[self.kind][0]

    @property
    def embed_shape(self) -> tuple:
        return _KINDS[self.kind][1]

    @property
    def embed_dim(self) -> int:
        return int(np.prod(self.embed_shape)) if self.embed_shape else 1

    @property
    def action_kind(self) -> str:
        return _KINDS[self.kind][2]

    @property
    def dimension(self) -> int:
        """Spatial dimension d of the acting rotation group."""
        return _KINDS[self.kind][3]

    @property
    def transitive(self) -> bool:
        return _KINDS[self.kind][4]

    @property
    def point_shape(self) -> tuple:
        """Shape of one native point (``()`` for angles and fractions)."""
        return {"s2": (3,), "none": (0,)}.get(self.kind, ())

    @property
    def tangent_shape(self) -> tuple:
        """Shape of one stored conjugate momentum."""
        return {"s2": (3,), "none": (0,)}.get(self.kind, ())


def manifold(name: str) -> ManifoldSpec:
    return ManifoldSpec(name)


def _check_rotation(spec: ManifoldSpec, Q: RotationElement) -> None:
    # the trivial action ignores Q, so either planar or spatial rotations are accepted
    if spec.action_kind != "trivial" and Q.dimension != spec.dimension:
        raise ConfigurationError(
            f"{spec.kind} is acted on by SO({spec.dimension}), got a {Q.dimension}D rotation"
        )


def wrap(spec: ManifoldSpec, point):
    """Reduce a native point into its fundamental domain."""
    if spec.kind == "s1":
        return np.mod(point, TWO_PI)
    if spec.kind == "rp1":
        return np.mod(point, np.pi)
    if spec.kind == "s2":
        p = np.asarray(point, dtype=float)
        return p / np.linalg.norm(p, axis=-1, keepdims=True)
    if spec.kind == "interval":
        return np.clip(point, 0.0, 1.0)
    return point


def embed(spec: ManifoldSpec, point):
    """Native point -> Euclidean embedding."""
    if spec.kind in ("s1", "rp1"):
        th = np.asarray(point, dtype=float)
        u = np.stack([np.cos(th), np.sin(th)], axis=-1)
        if spec.kind == "s1":
            return u
        return u[..., :, None] * u[..., None, :]
    return np.asarray(point, dtype=float)


def chart(spec: ManifoldSpec, embedded):
    """Euclidean embedding -> native point in the fundamental domain."""
    e = np.asarray(embedded, dtype=float)
    if spec.kind == "s1":
        return np.mod(np.arctan2(e[..., 1], e[..., 0]), TWO_PI)
    if spec.kind == "rp1":
        # nu nu^T = (I + [[cos2t, sin2t],[sin2t, -cos2t]])/2
        two_t = np.arctan2(2.0 * e[..., 0, 1], e[..., 0, 0] - e[..., 1, 1])
        return np.mod(two_t / 2.0, np.pi)
    return wrap(spec, e)


def director(spec: ManifoldSpec, point) -> np.ndarray:
    """A unit vector representing the orientation (2D for s1/rp1, 3D for s2)."""
    if spec.kind in ("s1", "rp1"):
        th = np.asarray(point, dtype=float)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    if spec.kind == "s2":
        return np.asarray(point, dtype=float)
    raise ConfigurationError(f"{spec.kind} has no director")


def act(spec: ManifoldSpec, Q: RotationElement, point):
    """Group action A(Q, nu) on a native point."""
    _check_rotation(spec, Q)
    if spec.action_kind == "trivial":
        return np.array(point, dtype=float, copy=True)
    if spec.kind == "s1":
        return np.mod(np.asarray(point, dtype=float) + Q.angle, TWO_PI)
    if spec.kind == "rp1":
        return np.mod(np.asarray(point, dtype=float) + Q.angle, np.pi)
    return Q.apply(point)


def act_embedded(spec: ManifoldSpec, Q: RotationElement, embedded):
    """Group action written on the embedding: Q nu, or (Q nu)(Q nu)^T = Q P Q^T."""
    _check_rotation(spec, Q)
    e = np.asarray(embedded, dtype=float)
    if spec.action_kind == "trivial":
        return e.copy()
    R = Q.matrix()
    if spec.kind == "rp1":
        return R @ e @ R.T
    return e @ R.T


# ---------------------------------------------------------------------------
# tangent vectors


def tangent_frame(spec: ManifoldSpec, point) -> np.ndarray:
    """Orthonormal basis of the embedded tangent space, shape (..., chart_dim, *embed_shape).

    For s2 the basis is (e_polar, e_azimuth) away from the poles; at the
    poles a fixed completion is used.
    """
    if spec.kind == "s1":
        th = np.asarray(point, dtype=float)
        return np.stack([-np.sin(th), np.cos(th)], axis=-1)[..., None, :]
    if spec.kind == "rp1":
        th = np.asarray(point, dtype=float)
        u = np.stack([np.cos(th), np.sin(th)], axis=-1)
        t = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        # d/dtheta (u u^T) = t u^T + u t^T, which has Frobenius norm sqrt(2)
        m = t[..., :, None] * u[..., None, :] + u[..., :, None] * t[..., None, :]
        return (m / np.sqrt(2.0))[..., None, :, :]
    if spec.kind == "interval":
        return np.ones(np.shape(point) + (1,))
    if spec.kind == "s2":
        nu = np.asarray(point, dtype=float)
        ez = np.array([0.0, 0.0, 1.0])
        ex = np.array([1.0, 0.0, 0.0])
        az = np.cross(ez, nu)
        n_az = np.linalg.norm(az, axis=-1, keepdims=True)
        alt = np.cross(ex, nu)
        az = np.where(n_az > 1e-8, az, alt)
        az = az / np.linalg.norm(az, axis=-1, keepdims=True)
        pol = np.cross(az, nu)
        return np.stack([pol, az], axis=-2)
    return np.zeros(np.shape(point)[:-1] + (0, 0))


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector stored through its embedding.

    ``components`` gives the coefficients in the chart-aligned orthonormal
    frame of :func:`tangent_frame`; for s1 and rp1 that is the angular rate.
    """

    spec: ManifoldSpec
    base_point: np.ndarray
    embedded: np.ndarray

    @property
    def components(self) -> np.ndarray:
        k = self.spec.kind
        if k == "interval":
            return np.asarray(self.embedded, dtype=float)[..., None]
        frame = tangent_frame(self.spec, self.base_point)
        if k == "rp1":
            c = np.einsum("...kij,...ij->...k", frame, self.embedded) / np.sqrt(2.0)
            return c
        return np.einsum("...ki,...i->...k", frame, self.embedded)

    @classmethod
    def from_components(cls, spec: ManifoldSpec, point, comps) -> "TangentVector":
        comps = np.asarray(comps, dtype=float)
        if spec.kind == "interval":
            return cls(spec, np.asarray(point, dtype=float), comps[..., 0])
        frame = tangent_frame(spec, point)
        if spec.kind == "rp1":
            emb = np.sqrt(2.0) * np.einsum("...k,...kij->...ij", comps, frame)
        else:
            emb = np.einsum("...k,...ki->...i", comps, frame)
        return cls(spec, np.asarray(point, dtype=float), emb)


def infinitesimal_generator(spec: ManifoldSpec, point, q) -> TangentVector:
    """A_nu q, the velocity of the orbit t -> A(exp(t q), nu) at t = 0."""
    if isinstance(q, RotationElement):
        _check_rotation(spec, q)
        w = q.algebra()
    else:
        w = np.asarray(q, dtype=float)
        if w.ndim == 0 or w.shape[-1] != 3:
            w = np.stack([np.zeros_like(w), np.zeros_like(w), w], axis=-1)
    pt = np.asarray(point, dtype=float)
    if spec.kind in ("interval", "none"):
        return TangentVector(spec, pt, np.zeros(np.shape(embed(spec, pt))))
    if spec.kind == "s2":
        return TangentVector(spec, pt, np.cross(w, pt))
    u = embed(spec, pt) if spec.kind == "s1" else director(spec, pt)
    u3 = np.concatenate([u, np.zeros(u.shape[:-1] + (1,))], axis=-1)
    t = np.cross(w, u3)[..., :2]
    if spec.kind == "s1":
        return TangentVector(spec, pt, t)
    return TangentVector(spec, pt, t[..., :, None] * u[..., None, :] + u[..., :, None] * t[..., None, :])


def chart_step(spec: ManifoldSpec, point, velocity, dt: float):
    """Advance ``point`` by ``velocity * dt`` and map back to the fundamental domain.

    ``velocity`` is a :class:`TangentVector` or, for one-dimensional charts,
    the chart rate itself.  Interval points are clamped to [0, 1]; see
    :func:`interval_step` for the accompanying momentum reset.
    """
    if isinstance(velocity, TangentVector):
        if spec.kind in ("s1", "rp1", "interval"):
            rate = velocity.components[..., 0]
        else:
            rate = velocity.embedded
    else:
        rate = np.asarray(velocity, dtype=float)
    if spec.kind == "none":
        return np.asarray(point, dtype=float)
    return wrap(spec, np.asarray(point, dtype=float) + rate * dt)


def interval_step(point, momentum, rate, dt: float):
    """Interval update that also zeroes the conjugate momentum on boundary contact."""
    raw = np.asarray(point, dtype=float) + np.asarray(rate, dtype=float) * dt
    hit = (raw <= 0.0) | (raw >= 1.0)
    return np.clip(raw, 0.0, 1.0), np.where(hit, 0.0, momentum)


def random_point(spec: ManifoldSpec, rng: np.random.Generator, size=None):
    """Uniform point (Haar-induced for transitive manifolds)."""
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    if spec.kind == "interval":
        return rng.uniform(0.0, 1.0, shape)
    if spec.kind == "s1":
        return rng.uniform(0.0, TWO_PI, shape)
    if spec.kind == "rp1":
        return rng.uniform(0.0, np.pi, shape)
    if spec.kind == "s2":
        v = rng.standard_normal(shape + (3,))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)
    return np.zeros(shape + (0,))


def random_tangent(spec: ManifoldSpec, point, rng: np.random.Generator, scale=1.0) -> TangentVector:
    pt = np.asarray(point, dtype=float)
    shape = np.shape(pt)[:-1] if spec.kind == "s2" else np.shape(pt)
    comps = scale * rng.standard_normal(shape + (spec.chart_dim,))
    return TangentVector.from_components(spec, pt, comps)
