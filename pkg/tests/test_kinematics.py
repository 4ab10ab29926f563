from __future__ import annotations

import math

import numpy as np
import pytest

from armloop.bundled import default_chain
from armloop.kinematics import (
    ChainFormatError,
    IkConfig,
    JointConfig,
    JointDescriptor,
    KinematicChain,
    clamp_to_limits,
    error_gradient,
    fk,
    ik,
    load_chain,
    reachable,
    serialize_chain,
)
from armloop.scene import Vec3

# ---------------------------------------------------------------------------
# independent oracle: textbook DH matrices multiplied with numpy, written
# before the suffix-accumulation implementation and kept separate from it
# ---------------------------------------------------------------------------


def dh_matrix(a, d, alpha, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def fk_oracle(chain: KinematicChain, q) -> np.ndarray:
    T = np.eye(4)
    for joint, theta in zip(chain.joints, q):
        T = T @ dh_matrix(joint.dh_a, joint.dh_d, joint.dh_alpha, theta)
    return T[:3, 3]


@pytest.fixture(scope="module")
def chain() -> KinematicChain:
    return default_chain()


def test_fk_home_matches_oracle(chain):
    home = chain.home()
    expected = fk_oracle(chain, home.q)
    got = fk(chain, home)
    assert np.allclose(got.as_tuple(), expected, atol=1e-12)
    # frozen from the oracle so a silent fixture change is caught
    assert got.distance_to(Vec3(1.0, -0.15, 0.3)) < 1e-12


def test_fk_matches_oracle_on_random_configs(chain):
    rng = np.random.default_rng(2024)
    for _ in range(100):
        q = JointConfig.of(rng.uniform(-2 * np.pi, 2 * np.pi, 6))
        expected = fk_oracle(chain, q.q)
        got = fk(chain, q)
        assert np.linalg.norm(np.array(got.as_tuple()) - expected) < 1e-9


def test_base_rotation_preserves_radius(chain):
    rng = np.random.default_rng(7)
    for _ in range(20):
        q = rng.uniform(-np.pi, np.pi, 6)
        p0 = fk(chain, JointConfig.of(q))
        q[0] += np.pi
        p1 = fk(chain, JointConfig.of(q))
        assert abs(math.hypot(p0.x, p0.y) - math.hypot(p1.x, p1.y)) < 1e-9
        assert abs(p0.z - p1.z) < 1e-9


def test_fk_is_locally_lipschitz(chain):
    # |fk(q+d) - fk(q)| <= L |d| with L bounded by the total link length
    L = chain.max_extension()
    rng = np.random.default_rng(99)
    for _ in range(200):
        q = rng.uniform(-2 * np.pi, 2 * np.pi, 6)
        d = rng.normal(size=6)
        d *= 1e-4 / np.linalg.norm(d)
        p0 = np.array(fk(chain, JointConfig.of(q)).as_tuple())
        p1 = np.array(fk(chain, JointConfig.of(q + d)).as_tuple())
        assert np.linalg.norm(p1 - p0) <= L * np.linalg.norm(d) * (1 + 1e-6)


def test_ik_already_at_target_converges_immediately(chain):
    q0 = JointConfig.of([0.3, -0.8, 1.1, 0.2, -0.5, 0.9])
    target = fk(chain, q0)
    sol = ik(chain, target, seed=q0)
    assert sol.converged
    assert sol.iterations <= 1
    assert sol.residual <= 1e-9


def test_ik_round_trip_from_home(chain):
    rng = np.random.default_rng(11)
    cfg = IkConfig()
    hits = 0
    for _ in range(100):
        q_rand = rng.uniform(-2 * np.pi, 2 * np.pi, 6)
        target = fk(chain, JointConfig.of(q_rand))
        sol = ik(chain, target, cfg=cfg)
        if sol.converged:
            assert fk(chain, sol.q).distance_to(target) <= cfg.tol_m
            hits += 1
    assert hits >= 95


def test_ik_far_target_reports_unreachable(chain):
    target = Vec3(10.0, 0.0, 0.0)
    sol = ik(chain, target)
    assert not sol.converged
    assert sol.target_unreachable
    # best effort: strictly better than the seed, no better than geometry allows
    assert 10.0 - chain.max_extension() <= sol.residual
    assert sol.residual < fk(chain, chain.home()).distance_to(target)


def test_ik_respects_limits():
    tight = KinematicChain(
        joints=tuple(
            JointDescriptor(j.name, j.dh_a, j.dh_d, j.dh_alpha, -1.0, 1.0)
            for j in default_chain().joints
        )
    )
    rng = np.random.default_rng(5)
    for _ in range(20):
        target = Vec3.of(rng.uniform(-1.2, 1.2, 3))
        sol = ik(tight, target)
        assert all(-1.0 <= v <= 1.0 for v in sol.q)


def test_gradient_matches_central_difference_oracle(chain):
    rng = np.random.default_rng(31)
    for _ in range(100):
        q = JointConfig.of(rng.uniform(-2 * np.pi, 2 * np.pi, 6))
        target = Vec3.of(fk_oracle(chain, rng.uniform(-2 * np.pi, 2 * np.pi, 6)))
        fwd = error_gradient(chain, target, q, step=1e-5)

        h = 1e-6
        central = np.empty(6)
        for j in range(6):
            qp = np.array(q.q)
            qm = np.array(q.q)
            qp[j] += h
            qm[j] -= h
            ep = np.sum((fk_oracle(chain, qp) - np.array(target.as_tuple())) ** 2)
            em = np.sum((fk_oracle(chain, qm) - np.array(target.as_tuple())) ** 2)
            central[j] = (ep - em) / (2 * h)

        denom = max(np.linalg.norm(central), 1e-9)
        assert np.linalg.norm(fwd - central) / denom < 1e-3


def test_reachable(chain):
    assert reachable(chain, fk(chain, chain.home()))
    assert not reachable(chain, Vec3(10.0, 0.0, 0.0))


def test_clamp_to_limits(chain):
    inside = JointConfig.of([0.1] * 6)
    assert clamp_to_limits(chain, inside) == inside
    hi = chain.joints[2].limit_hi
    poked = JointConfig.of([0.1, 0.1, hi + 1.0, 0.1, 0.1, 0.1])
    assert clamp_to_limits(chain, poked)[2] == hi
    low = JointConfig.of([-100.0] * 6)
    assert clamp_to_limits(chain, low) == JointConfig.of(
        [j.limit_lo for j in chain.joints]
    )


def test_chain_file_round_trip(chain):
    again = load_chain(serialize_chain(chain))
    assert again.joints == chain.joints


def test_chain_file_errors():
    with pytest.raises(ChainFormatError):
        load_chain("[]")
    with pytest.raises(ChainFormatError):
        load_chain("not json")
    with pytest.raises(ChainFormatError):
        JointDescriptor("j", 0, 0, 0, limit_lo=1.0, limit_hi=1.0)


def test_joint_config_validation():
    with pytest.raises(ValueError):
        JointConfig((0.0,) * 5)
    with pytest.raises(ValueError):
        JointConfig.of([math.inf] + [0.0] * 5)
