"""Invariant almost-Kahler frame data for T^2-bundles over the 2-torus.

A frame is a 4x4 real matrix G with entries G^i_j = g(e^i, f^j): the change
of basis from an orthonormal adapted coframe (f^j) to the group coframe
(e^i), together with its inverse H = G^{-1}.  Two cases are supported, each
with its own algebraic constraint set:

* ``nil_yt``  - total space modelled on Nil^3 x R, fibration over the (y,t)
  torus, non-Lagrangian structure (G^3_4 != 0);
* ``sol_r``   - total space modelled on Sol^3 x R (always non-Lagrangian).

Equality constraints are checked to absolute tolerance 1e-10 on a copy of G
normalized to unit max-entry magnitude, which makes the checks scale-free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ExhaustedRetries, InvalidFrame, SingularMatrix

CONSTRAINT_TOL = 1e-10
_DEGENERATE_E2_WARN = 1e-12


class GroupCase(enum.Enum):
    NIL_YT = "nil_yt"
    SOL_R = "sol_r"


def invert_frame(G: np.ndarray) -> np.ndarray:
    """Invert a 4x4 frame matrix, guarding against near-singular input.

    Raises SingularMatrix when |det G| < 1e-14 * max|G|^4 or when the
    computed inverse fails ||G H - I||_max <= 1e-12 * ||G||_max * ||H||_max.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {G.shape}")
    scale = float(np.abs(G).max())
    if scale == 0.0 or abs(np.linalg.det(G)) < 1e-14 * scale**4:
        raise SingularMatrix("frame matrix is singular within tolerance")
    H = np.linalg.inv(G)
    defect = float(np.abs(G @ H - np.eye(4)).max())
    if defect > 1e-12 * scale * float(np.abs(H).max()):
        raise SingularMatrix(
            f"inverse failed the consistency check (defect {defect:.3e})")
    return H


@dataclass(frozen=True)
class FrameSpec:
    """A validated-shape frame: case tag, matrix G, and inverse H = G^{-1}.

    H is always recomputed from G; it is never taken from the caller and is
    never serialized.
    """

    case: GroupCase
    G: np.ndarray
    H: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.case, GroupCase):
            raise ValueError(f"case must be a GroupCase, got {self.case!r}")
        G = np.array(self.G, dtype=np.float64, copy=True)
        H = invert_frame(G)
        G.setflags(write=False)
        H.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)

    def e2_coupling(self) -> float:
        """(G^2_3)^2 + (G^2_4)^2, the fibre coupling the sol reduction divides by."""
        return float(self.G[1, 2] ** 2 + self.G[1, 3] ** 2)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a constraint check: violations as (name, value, tolerance)."""

    valid: bool
    violations: tuple[tuple[str, float, float], ...]
    warnings: tuple[str, ...]


def _normalized(spec: FrameSpec) -> tuple[np.ndarray, np.ndarray]:
    s = float(np.abs(spec.G).max())
    return spec.G / s, spec.H * s


def _nil_constraints(Gn: np.ndarray, Hn: np.ndarray):
    eq = [
        ("G^1_2 = 0", Gn[0, 1]),
        ("G^1_3 = 0", Gn[0, 2]),
        ("G^1_4 = 0", Gn[0, 3]),
        ("G^3_2 = 0", Gn[2, 1]),
        ("G^2_4 = 0", Gn[1, 3]),
        ("G^3_3*H^3_4 + G^3_4*H^4_4 = 0", Gn[2, 2] * Hn[2, 3] + Gn[2, 3] * Hn[3, 3]),
        ("H^2_4*G^2_2 + H^3_4*G^2_3 = 0", Hn[1, 3] * Gn[1, 1] + Hn[2, 3] * Gn[1, 2]),
        ("H^2_4*G^2_4 = 0", Hn[1, 3] * Gn[1, 3]),
        ("H^3_4*G^2_4 = 0", Hn[2, 3] * Gn[1, 3]),
    ]
    nonzero = [
        ("G^1_1 != 0", Gn[0, 0]),
        ("non-Lagrangian G^3_4 != 0", Gn[2, 3]),
    ]
    nonneg = [("G^3_3*G^3_4 >= 0", Gn[2, 2] * Gn[2, 3])]
    return eq, nonzero, nonneg


def _sol_constraints(Gn: np.ndarray, Hn: np.ndarray):
    eq = [
        ("H^1_2 = 0", Hn[0, 1]),
        ("H^1_3 = 0", Hn[0, 2]),
        ("H^1_4 = 0", Hn[0, 3]),
        ("H^2_1 = 0", Hn[1, 0]),
        ("H^3_1 = 0", Hn[2, 0]),
        ("H^3_2 = 0", Hn[2, 1]),
        ("H^3_4 = 0", Hn[2, 3]),
        ("H^4_1 = 0", Hn[3, 0]),
        ("H^4_2 = 0", Hn[3, 1]),
        ("G^3_4 = 0", Gn[2, 3]),
        ("H^2_4*G^2_2 + H^4_4*G^2_4 = 0", Hn[1, 3] * Gn[1, 1] + Hn[3, 3] * Gn[1, 3]),
        ("H^3_3*G^4_3 + H^4_3*G^4_4 = 0", Hn[2, 2] * Gn[3, 2] + Hn[3, 2] * Gn[3, 3]),
    ]
    positive = [("G^1_1 > 0", Gn[0, 0])]
    return eq, positive


def validate(spec: FrameSpec) -> ValidationReport:
    """Check every algebraic constraint of the frame's case.

    All problems are reported, never raised.  For the sol case a warning is
    emitted when the fibre coupling (G^2_3)^2 + (G^2_4)^2 is degenerate,
    because coefficient extraction divides by it.
    """
    Gn, Hn = _normalized(spec)
    violations = []
    warnings = []
    tol = CONSTRAINT_TOL

    if spec.case is GroupCase.NIL_YT:
        eq, nonzero, nonneg = _nil_constraints(Gn, Hn)
        for name, value in eq:
            if abs(value) > tol:
                violations.append((name, float(value), tol))
        for name, value in nonzero:
            if abs(value) <= tol:
                violations.append((name, float(value), tol))
        for name, value in nonneg:
            if value < -tol:
                violations.append((name, float(value), tol))
    else:
        eq, positive = _sol_constraints(Gn, Hn)
        for name, value in eq:
            if abs(value) > tol:
                violations.append((name, float(value), tol))
        for name, value in positive:
            if value <= tol:
                violations.append((name, float(value), tol))
        if spec.e2_coupling() <= _DEGENERATE_E2_WARN:
            warnings.append(
                "degenerate fibre coupling: (G^2_3)^2 + (G^2_4)^2 <= 1e-12; "
                "coefficient extraction will reject this frame")

    return ValidationReport(valid=not violations,
                            violations=tuple(violations),
                            warnings=tuple(warnings))


def require_valid(spec: FrameSpec) -> None:
    rep = validate(spec)
    if not rep.valid:
        names = ", ".join(name for name, _, _ in rep.violations)
        raise InvalidFrame(f"frame violates: {names}")


def _sample_nil(rng: np.random.Generator) -> np.ndarray:
    g11 = rng.uniform(0.5, 2.0)
    # rows 3-4 live on columns (3,4); the 2x2 block inverse then satisfies
    # G^3_3*H^3_4 + G^3_4*H^4_4 = 0 identically
    sign = -1.0 if rng.random() < 0.5 else 1.0
    g33 = sign * rng.uniform(0.5, 2.0)
    g34 = sign * rng.uniform(0.5, 2.0)
    while True:
        g43 = rng.uniform(-2.0, 2.0)
        g44 = rng.uniform(-2.0, 2.0)
        if abs(g33 * g44 - g34 * g43) >= 0.1:
            break
    g21 = rng.uniform(-1.0, 1.0)
    sign2 = -1.0 if rng.random() < 0.5 else 1.0
    g22 = sign2 * rng.uniform(0.5, 2.0)
    g23 = rng.uniform(-1.0, 1.0)
    return np.array([
        [g11, 0.0, 0.0, 0.0],
        [g21, g22, g23, 0.0],
        [0.0, 0.0, g33, g34],
        [0.0, 0.0, g43, g44],
    ])


def _sample_sol(rng: np.random.Generator) -> np.ndarray:
    h11 = rng.uniform(0.5, 2.0)
    s22 = -1.0 if rng.random() < 0.5 else 1.0
    h22 = s22 * rng.uniform(0.5, 2.0)
    h23 = rng.uniform(-1.0, 1.0)
    h24 = rng.uniform(-1.0, 1.0)
    s33 = -1.0 if rng.random() < 0.5 else 1.0
    h33 = s33 * rng.uniform(0.5, 2.0)
    h43 = rng.uniform(-1.0, 1.0)
    s44 = -1.0 if rng.random() < 0.5 else 1.0
    h44 = s44 * rng.uniform(0.5, 2.0)
    H = np.array([
        [h11, 0.0, 0.0, 0.0],
        [0.0, h22, h23, h24],
        [0.0, 0.0, h33, 0.0],
        [0.0, 0.0, h43, h44],
    ])
    return invert_frame(H)


def sample_admissible(case: GroupCase, seed: int) -> FrameSpec:
    """Deterministically draw a frame that passes validation.

    For the sol case, draws with fibre coupling below 0.1 are rejected so the
    downstream reduction stays well away from its degenerate configuration.
    """
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        try:
            G = _sample_nil(rng) if case is GroupCase.NIL_YT else _sample_sol(rng)
            spec = FrameSpec(case, G)
        except SingularMatrix:
            continue
        if case is GroupCase.SOL_R and spec.e2_coupling() < 0.1:
            continue
        if validate(spec).valid:
            return spec
    raise ExhaustedRetries(f"no admissible {case.value} frame after 1000 draws")


def frame_to_dict(spec: FrameSpec) -> dict:
    return {"case": spec.case.value, "G": [[float(x) for x in row] for row in spec.G]}


def frame_from_dict(d: dict) -> FrameSpec:
    try:
        case = GroupCase(d["case"])
        G = np.array(d["G"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed frame record: {exc}") from exc
    if G.shape != (4, 4):
        raise ValueError(f"frame matrix must be 4x4, got shape {G.shape}")
    return FrameSpec(case, G)
