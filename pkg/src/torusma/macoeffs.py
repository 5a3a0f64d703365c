"""Closed-form Monge-Ampere coefficients of the reduced scalar equation.

Each admissible frame determines nine real numbers (B11, B12, B22, C11, C12,
C22, D, E1, E2) such that the original first-order system on the 4-manifold
collapses to

    (u_11 + B11*u_2 + C11 + D*u)(u_22 + B22*u_2 + C22)
        - (u_12 + B12*u_2 + C12)^2 = E1 + E2*exp(F)

on the base torus (subscripts are the grid axes).  The formulas below were
cross-checked symbolically against the frame reduction; they satisfy

    B11*B22 - B12^2 = D        and        C11*C22 - C12^2 = E1 + E2

identically on constraint-satisfying frames, and those identities are
asserted at runtime: a violation on a validated frame is an internal error.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateE2, ExplicitCaseG33Zero, InvalidFrame
from .frames import FrameSpec, GroupCase, ValidationReport, require_valid, validate

IDENTITY_TOL = 1e-10
G33_ZERO_TOL = 1e-10
E2_DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class MACoefficients:
    case: GroupCase
    B11: float
    B12: float
    B22: float
    C11: float
    C12: float
    C22: float
    D: float
    E1: float
    E2: float

    def as_tuple(self):
        return (self.B11, self.B12, self.B22, self.C11, self.C12, self.C22,
                self.D, self.E1, self.E2)


def _assert_identities(c: MACoefficients) -> None:
    b_defect = c.B11 * c.B22 - c.B12**2 - c.D
    c_defect = c.C11 * c.C22 - c.C12**2 - c.E1 - c.E2
    if abs(b_defect) > IDENTITY_TOL or abs(c_defect) > IDENTITY_TOL:
        raise RuntimeError(
            "internal error: coefficient identities violated on a validated "
            f"frame (B defect {b_defect:.3e}, C defect {c_defect:.3e})")


def nil_coefficients(spec: FrameSpec) -> MACoefficients:
    """Coefficients for the nil case with G^3_3 != 0.

    Raises ExplicitCaseG33Zero when |G^3_3| <= 1e-10: that frame belongs to
    the explicit-solution branch, not to this reduction.
    """
    if spec.case is not GroupCase.NIL_YT:
        raise InvalidFrame(f"nil_coefficients needs a nil_yt frame, got {spec.case.value}")
    require_valid(spec)
    G, H = spec.G, spec.H
    g11, g22, g23 = G[0, 0], G[1, 1], G[1, 2]
    g31, g33, g34 = G[2, 0], G[2, 2], G[2, 3]
    h24, h44 = H[1, 3], H[3, 3]
    if abs(g33) <= G33_ZERO_TOL:
        raise ExplicitCaseG33Zero(
            "G^3_3 vanishes; use the explicit-solution branch instead")

    B11 = (g22 * g31**2 * h44 / (g11 * g33)
           - 2.0 * g23 * g31 * g34 * h44 / (g11 * g33)
           + g23 * g34 * h24 / g11)
    B12 = -g22 * g31 * h44 / g33 + g23 * g34 * h44 / g33
    B22 = g11 * g22 * h44 / g33
    C11 = 1.0 / g11**2 + g31**2 / (g11**2 * g33**2) + g34 / (g11**2 * g33)
    C12 = -g31 / (g11 * g33**2)
    C22 = 1.0 / g33**2
    E1 = g33 * g34 / (g11**2 * g33**4)
    # 1/(G^1_1*G^3_3)^2: forced by the identity C11*C22 - C12^2 = E1 + E2
    E2 = 1.0 / (g11 * g33) ** 2
    c = MACoefficients(case=spec.case, B11=float(B11), B12=float(B12),
                       B22=float(B22), C11=float(C11), C12=float(C12),
                       C22=float(C22), D=0.0, E1=float(E1), E2=float(E2))
    _assert_identities(c)
    return c


def sol_coefficients(spec: FrameSpec) -> MACoefficients:
    """Coefficients for the sol case.

    Raises DegenerateE2 when (G^2_3)^2 + (G^2_4)^2 <= 1e-10: the reduction
    divides by that quantity and requires E2 > 0.
    """
    if spec.case is not GroupCase.SOL_R:
        raise InvalidFrame(f"sol_coefficients needs a sol_r frame, got {spec.case.value}")
    require_valid(spec)
    G, H = spec.G, spec.H
    g11, g22, g23, g24 = G[0, 0], G[1, 1], G[1, 2], G[1, 3]
    g43 = G[3, 2]
    h11, h22, h44 = H[0, 0], H[1, 1], H[3, 3]
    E2 = g23**2 + g24**2
    if E2 <= E2_DEGENERATE_TOL:
        raise DegenerateE2(
            "(G^2_3)^2 + (G^2_4)^2 vanishes; the sol reduction does not apply")

    B11 = 2.0 * h11 * g22 * g23 * (g24 + g23 * h44 * g43) / E2
    B12 = (g24**2 - g23**2 + 2.0 * g23 * g24 * h44 * g43) / E2
    B22 = -2.0 * g11 * h22 * g24 * (g23 - g24 * h44 * g43) / E2
    C11 = h11 * (g22**2 + g23**2 + g24**2)
    C22 = g11
    E1 = g22**2
    # the mixed operator of the sol reduction carries no constant term
    c = MACoefficients(case=spec.case, B11=float(B11), B12=float(B12),
                       B22=float(B22), C11=float(C11), C12=0.0,
                       C22=float(C22), D=-1.0, E1=float(E1), E2=float(E2))
    _assert_identities(c)
    return c


def coefficients(spec: FrameSpec) -> MACoefficients:
    """Case dispatcher."""
    if spec.case is GroupCase.NIL_YT:
        return nil_coefficients(spec)
    return sol_coefficients(spec)


def check_hypotheses(c: MACoefficients) -> ValidationReport:
    """Structural hypotheses the solver requires of a coefficient record."""
    violations = []
    warnings = []
    checks = [
        ("C11 + C22 > 0", c.C11 + c.C22, lambda v: v > 0.0),
        ("D <= 0", c.D, lambda v: v <= 0.0),
        ("E1 > 0", c.E1, lambda v: v > 0.0),
        ("E2 > 0", c.E2, lambda v: v > 0.0),
    ]
    for name, value, ok in checks:
        if not ok(value):
            violations.append((name, float(value), 0.0))
    identities = [
        ("B11*B22 - B12^2 = D", c.B11 * c.B22 - c.B12**2 - c.D),
        ("C11*C22 - C12^2 = E1 + E2", c.C11 * c.C22 - c.C12**2 - c.E1 - c.E2),
    ]
    for name, defect in identities:
        if abs(defect) > IDENTITY_TOL:
            violations.append((name, float(defect), IDENTITY_TOL))
    for name in ("E1", "E2"):
        value = getattr(c, name)
        if 0.0 < value <= IDENTITY_TOL:
            warnings.append(f"{name} = {value:.3e} is within tolerance of degeneracy")
    return ValidationReport(valid=not violations,
                            violations=tuple(violations),
                            warnings=tuple(warnings))


def coefficients_to_dict(c: MACoefficients) -> dict:
    d = {k: float(getattr(c, k)) for k in
         ("B11", "B12", "B22", "C11", "C12", "C22", "D", "E1", "E2")}
    d["case"] = c.case.value
    return d


def coefficients_from_dict(d: dict) -> MACoefficients:
    try:
        case = GroupCase(d["case"])
        vals = {k: float(d[k]) for k in
                ("B11", "B12", "B22", "C11", "C12", "C22", "D", "E1", "E2")}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed coefficient record: {exc}") from exc
    return MACoefficients(case=case, **vals)
