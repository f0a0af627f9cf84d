"""Variable exponents p(·), q(·), r(·) and the exponents derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContinuityViolation, ExponentOutOfRange, NonAdmissibleExponent

DEFAULT_DIM = 7
H1_MARGIN = 1e-9
LARGE_EXPONENT = 1e4


@dataclass(frozen=True)
class ExponentField:
    values: np.ndarray = field(repr=False)
    p_minus: float
    p_plus: float
    analysis_dim: int = DEFAULT_DIM

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def is_constant(self):
        return self.p_minus == self.p_plus


def _from_values(values, analysis_dim):
    values = np.asarray(values, dtype=float)
    return ExponentField(values, float(values.min()), float(values.max()), analysis_dim)


def build_exponent_field(
    node_values, grid=None, analysis_dim=DEFAULT_DIM, lipschitz_bound=np.inf, principal=True
):
    """Validate nodal exponent values.

    ``principal`` marks the exponent of the differential operator, which must
    also satisfy p₊ < N/3.  Lower-order exponents (q, r) only need to exceed 1.
    The continuity proxy compares adjacent nodes along every grid axis.
    """
    values = np.asarray(node_values, dtype=float)
    if analysis_dim <= 3:
        raise NonAdmissibleExponent(f"analysis dimension must exceed 3, got {analysis_dim}")
    if grid is not None:
        if values.ndim == 0:
            values = np.full(grid.shape, float(values))
        elif values.shape != grid.shape:
            if values.size != grid.size:
                raise NonAdmissibleExponent(
                    f"{values.size} node values for a grid of {grid.size} nodes"
                )
            values = values.reshape(grid.shape)
    if not np.all(np.isfinite(values)):
        raise NonAdmissibleExponent("exponent values must be finite")
    if np.any(values <= 1.0):
        idx = np.unravel_index(np.argmin(values), values.shape)
        raise NonAdmissibleExponent(f"exponent {values[idx]} <= 1 at node {idx}")
    if principal and values.max() >= analysis_dim / 3.0:
        raise NonAdmissibleExponent(
            f"p_plus = {values.max()} is not below N/3 = {analysis_dim / 3.0}"
        )
    if grid is not None and np.isfinite(lipschitz_bound):
        for ax, h in enumerate(grid.spacing):
            jump = np.abs(np.diff(values, axis=ax)).max(initial=0.0)
            if jump > lipschitz_bound * h * (1 + 1e-12):
                raise ContinuityViolation(
                    f"adjacent-node jump {jump:.3g} exceeds {lipschitz_bound}*h={lipschitz_bound * h:.3g}"
                )
    return _from_values(values, analysis_dim)


def critical_exponent(p):
    """Nodewise p*(x) = N p(x) / (N - 3 p(x))."""
    n = p.analysis_dim
    v = np.asarray(p.values)
    return _from_values(n * v / (n - 3.0 * v), n)


@dataclass(frozen=True)
class DerivedExponents:
    p_star: ExponentField
    q0: ExponentField
    r0: ExponentField
    p_star_conjugate: ExponentField
    large: bool = False


def derived_exponents(p, q, r):
    ps = critical_exponent(p)
    pv, qv, rv = np.asarray(ps.values), np.asarray(q.values), np.asarray(r.values)
    for name, v in (("q", qv), ("r", rv)):
        if np.any(pv - v <= 0):
            raise ExponentOutOfRange(f"{name}(x) must stay below p*(x)")
    q0 = pv / (pv - qv)
    r0 = pv / (pv - rv)
    conj = pv / (pv - 1.0)
    n = p.analysis_dim
    large = bool(max(q0.max(), r0.max()) > LARGE_EXPONENT)
    return DerivedExponents(
        _from_values(pv, n), _from_values(q0, n), _from_values(r0, n), _from_values(conj, n), large
    )


@dataclass
class Violation:
    condition: str
    location: tuple
    values: tuple


@dataclass
class HypothesisReport:
    passed: bool
    violations: list = field(default_factory=list)

    @classmethod
    def from_violations(cls, violations):
        return cls(not violations, list(violations))

    def first(self):
        return self.violations[0] if self.violations else None


def check_H1(p, q, r, gamma, margin=H1_MARGIN):
    """Nodewise chain 1 < q < p₋ ≤ p₊ < (γ+1)p₋ ≤ (γ+1)p₊ < r < p*."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    pv, qv, rv = (np.asarray(e.values, dtype=float) for e in (p, q, r))
    if not (pv.shape == qv.shape == rv.shape):
        raise ExponentOutOfRange("exponents live on different grids")
    pstar = np.asarray(critical_exponent(p).values)
    pm, pp = pv.min(), pv.max()
    g1 = gamma + 1.0
    links = [
        ("1 < q(x)", qv - 1.0),
        ("q(x) < p_minus", pm - qv),
        ("p_plus < (gamma+1) p_minus", np.full(pv.shape, g1 * pm - pp)),
        ("(gamma+1) p_plus < r(x)", rv - g1 * pp),
        ("r(x) < p*(x)", pstar - rv),
    ]
    violations = []
    for name, gap in links:
        bad = np.argwhere(gap <= margin)
        if bad.size:
            loc = tuple(int(i) for i in bad[0])
            violations.append(Violation(name, loc, (float(gap[loc]),)))
    return HypothesisReport.from_violations(violations)
