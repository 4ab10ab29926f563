"""Forward kinematics and gradient-descent IK for a 6-joint serial arm.

The chain is described by standard DH rows (a, d, alpha per joint, theta is
the joint variable). IK minimizes squared position error with forward
finite-difference gradients and a backtracking step size; orientation is not
solved. Hot loops are numba-compiled; the first call in a process pays the
JIT cost (cached on disk afterwards).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .scene import BasePose, Vec3


class ChainFormatError(ValueError):
    """Chain file text is malformed or violates joint invariants."""


class NonFiniteError(ArithmeticError):
    """IK numerics diverged to NaN/Inf."""


@dataclass(frozen=True)
class JointConfig:
    """Six joint angles in radians, base to wrist-3."""

    q: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        if len(self.q) != 6:
            raise ValueError(f"expected 6 joint angles, got {len(self.q)}")
        if not all(math.isfinite(v) for v in self.q):
            raise ValueError(f"non-finite joint angle in {self.q!r}")

    def __iter__(self):
        return iter(self.q)

    def __getitem__(self, i: int) -> float:
        return self.q[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.q, dtype=np.float64)

    @staticmethod
    def of(seq) -> "JointConfig":
        return JointConfig(tuple(float(v) for v in seq))

    @staticmethod
    def zeros() -> "JointConfig":
        return JointConfig((0.0,) * 6)


@dataclass(frozen=True)
class JointDescriptor:
    name: str
    dh_a: float
    dh_d: float
    dh_alpha: float
    limit_lo: float
    limit_hi: float

    def __post_init__(self):
        if not self.limit_lo < self.limit_hi:
            raise ChainFormatError(
                f"joint {self.name!r}: limit_lo must be < limit_hi"
            )


@dataclass(frozen=True)
class KinematicChain:
    """Six joints plus the base pose carried over from the scene.

    All positions produced by fk/ik are expressed in the base frame; the
    base pose is metadata for consumers that need a world anchor.
    """

    joints: tuple[JointDescriptor, ...]
    base_pose: BasePose = BasePose(Vec3(0.0, 0.0, 0.0), 0.0)
    # constant part of each joint transform, Tz(d)·Tx(a)·Rx(alpha)
    _cmats: np.ndarray = field(init=False, repr=False, compare=False)
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.joints) != 6:
            raise ChainFormatError(f"chain needs 6 joints, got {len(self.joints)}")
        cmats = np.zeros((6, 4, 4))
        for i, j in enumerate(self.joints):
            ca, sa = math.cos(j.dh_alpha), math.sin(j.dh_alpha)
            cmats[i] = [
                [1.0, 0.0, 0.0, j.dh_a],
                [0.0, ca, -sa, 0.0],
                [0.0, sa, ca, j.dh_d],
                [0.0, 0.0, 0.0, 1.0],
            ]
        object.__setattr__(self, "_cmats", cmats)
        object.__setattr__(self, "_lo", np.array([j.limit_lo for j in self.joints]))
        object.__setattr__(self, "_hi", np.array([j.limit_hi for j in self.joints]))

    def max_extension(self) -> float:
        """Loose upper bound on |fk| over all configurations."""
        return sum(abs(j.dh_a) + abs(j.dh_d) for j in self.joints)

    def home(self) -> JointConfig:
        return clamp_to_limits(self, JointConfig.zeros())


@dataclass(frozen=True)
class IkConfig:
    tol_m: float = 1e-3
    max_iters: int = 2000
    fd_step: float = 1e-5
    learning_rate: float = 0.5


@dataclass(frozen=True)
class IkSolution:
    q: JointConfig
    residual: float
    iterations: int
    converged: bool
    target_unreachable: bool = False


@njit(cache=True)
def _fk_point(cmats, q):
    # accumulate right-to-left: v = Rz(q_i) @ C_i @ v
    v0, v1, v2 = 0.0, 0.0, 0.0
    for i in range(5, -1, -1):
        c = cmats[i]
        w0 = c[0, 0] * v0 + c[0, 1] * v1 + c[0, 2] * v2 + c[0, 3]
        w1 = c[1, 0] * v0 + c[1, 1] * v1 + c[1, 2] * v2 + c[1, 3]
        w2 = c[2, 0] * v0 + c[2, 1] * v1 + c[2, 2] * v2 + c[2, 3]
        cq = math.cos(q[i])
        sq = math.sin(q[i])
        v0 = cq * w0 - sq * w1
        v1 = sq * w0 + cq * w1
        v2 = w2
    return v0, v1, v2


@njit(cache=True)
def _sq_error(cmats, q, tx, ty, tz):
    x, y, z = _fk_point(cmats, q)
    return (x - tx) ** 2 + (y - ty) ** 2 + (z - tz) ** 2


@njit(cache=True)
def _fd_gradient(cmats, q, tx, ty, tz, h, e0, out):
    # forward differences on the squared error
    for j in range(6):
        qj = q[j]
        q[j] = qj + h
        out[j] = (_sq_error(cmats, q, tx, ty, tz) - e0) / h
        q[j] = qj


@njit(cache=True)
def _descend(cmats, q0, tx, ty, tz, lo, hi, tol, max_iters, h, lr0):
    q = np.empty(6)
    for j in range(6):
        q[j] = min(max(q0[j], lo[j]), hi[j])
    grad = np.empty(6)
    trial = np.empty(6)
    lr = lr0
    e = _sq_error(cmats, q, tx, ty, tz)
    tol2 = tol * tol
    iters = 0
    while iters < max_iters and e > tol2:
        iters += 1
        _fd_gradient(cmats, q, tx, ty, tz, h, e, grad)
        improved = False
        for _ in range(40):
            for j in range(6):
                t = q[j] - lr * grad[j]
                trial[j] = min(max(t, lo[j]), hi[j])
            et = _sq_error(cmats, trial, tx, ty, tz)
            if et < e:
                for j in range(6):
                    q[j] = trial[j]
                e = et
                lr *= 1.5
                improved = True
                break
            lr *= 0.5
        if not improved:
            break  # step underflow: no descent direction left
    ok = 1
    if not (math.isfinite(e) and np.all(np.isfinite(q))):
        ok = 0
    return q, math.sqrt(e), iters, ok


def fk(chain: KinematicChain, q: JointConfig) -> Vec3:
    """End-effector position in the base frame for joint angles q."""
    x, y, z = _fk_point(chain._cmats, q.as_array())
    return Vec3(x, y, z)


def error_gradient(
    chain: KinematicChain, target: Vec3, q: JointConfig, step: float = 1e-5
) -> np.ndarray:
    """The forward finite-difference gradient of |fk(q) - target|^2 that the
    IK loop descends; exposed so tests can cross-check it."""
    qa = q.as_array()
    e0 = _sq_error(chain._cmats, qa, target.x, target.y, target.z)
    out = np.empty(6)
    _fd_gradient(chain._cmats, qa, target.x, target.y, target.z, step, e0, out)
    return out


def clamp_to_limits(chain: KinematicChain, q: JointConfig) -> JointConfig:
    return JointConfig.of(
        min(max(v, j.limit_lo), j.limit_hi) for v, j in zip(q, chain.joints)
    )


def ik(
    chain: KinematicChain,
    target: Vec3,
    seed: JointConfig | None = None,
    cfg: IkConfig = IkConfig(),
) -> IkSolution:
    """Solve for joint angles whose fk lands on target (position only).

    Descends the squared position error from the seed (defaults to home),
    clamping into joint limits every step. Targets beyond the chain's
    maximum extension still get a best-effort answer, flagged unreachable.
    """
    if not all(math.isfinite(v) for v in target.as_tuple()):
        raise ValueError(f"non-finite target {target!r}")
    if seed is None:
        seed = chain.home()
    q, residual, iters, ok = _descend(
        chain._cmats,
        seed.as_array(),
        target.x,
        target.y,
        target.z,
        chain._lo,
        chain._hi,
        cfg.tol_m,
        cfg.max_iters,
        cfg.fd_step,
        cfg.learning_rate,
    )
    if not ok:
        raise NonFiniteError(f"IK diverged for target {target!r}")
    return IkSolution(
        q=JointConfig.of(q),
        residual=residual,
        iterations=iters,
        converged=residual <= cfg.tol_m,
        target_unreachable=target.norm() > chain.max_extension(),
    )


def reachable(
    chain: KinematicChain,
    target: Vec3,
    seed: JointConfig | None = None,
    cfg: IkConfig = IkConfig(),
) -> bool:
    return ik(chain, target, seed, cfg).converged


_CHAIN_KEYS = {"name", "dh_a", "dh_d", "dh_alpha", "limit_lo", "limit_hi"}


def load_chain(source: str, base_pose: BasePose | None = None) -> KinematicChain:
    """Parse a chain document: a JSON array of six joint descriptor objects."""
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ChainFormatError(f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise ChainFormatError("top level must be an array of joints")
    joints = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ChainFormatError(f"joints[{i}]: expected an object")
        missing = _CHAIN_KEYS - entry.keys()
        if missing:
            raise ChainFormatError(f"joints[{i}]: missing {sorted(missing)}")
        joints.append(
            JointDescriptor(
                name=str(entry["name"]),
                dh_a=float(entry["dh_a"]),
                dh_d=float(entry["dh_d"]),
                dh_alpha=float(entry["dh_alpha"]),
                limit_lo=float(entry["limit_lo"]),
                limit_hi=float(entry["limit_hi"]),
            )
        )
    if base_pose is None:
        return KinematicChain(joints=tuple(joints))
    return KinematicChain(joints=tuple(joints), base_pose=base_pose)


def serialize_chain(chain: KinematicChain) -> str:
    doc = [
        {
            "name": j.name,
            "dh_a": j.dh_a,
            "dh_d": j.dh_d,
            "dh_alpha": j.dh_alpha,
            "limit_lo": j.limit_lo,
            "limit_hi": j.limit_hi,
        }
        for j in chain.joints
    ]
    return json.dumps(doc, indent=2) + "\n"
