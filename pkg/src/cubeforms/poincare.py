"""Closed approximation and bounded primitives with certified inequalities.

Two constructions share one recursion along the last coordinate of the box:

* ``closed_approx(w)``  returns an exactly closed w' whose distance to w is
  controlled by the derivative of w:   |w - w'|  <=  C(n, k) |dw|.
* ``standard_primitive(w)`` / ``bounded_primitive(w)`` return, for exactly
  closed w, a primitive theta with d(theta) = w term-for-term; the bounded
  variant subtracts the closed approximation of the raw primitive so that
  |theta| <= C(n, k-1) |w|.

All constants come from the explicit ledger ``constant(n, k)``:

    C(n, k) = 0              for k >= n,
    C(1, 0) = 1,
    C(n, k) = 2 max(1, C(n-1, k))   otherwise.

Every emitted :class:`NormCertificate` states its inequality with exact
rational bounds and is re-checkable from its stored fields alone.  The
comparison convention is conservative upper-vs-upper: the left side is a
rigorous upper bound for the quantity being controlled, the right side is
the constant times a rigorous upper bound of the controlling seminorm.  A
verified certificate is therefore always mathematically valid; a failed one
may merely reflect bound looseness, and the recursion retries the left side
with Bernstein subdivision before giving up.

The anchor value tau on each level is the midpoint of the relevant edge
(deterministic; for polynomial coefficients every tau is admissible).  On
boxes with edges longer than 1 the ledger constant is enlarged to
2 max(1, h_n, C(n-1, k)) with h_n the half-width of the integration edge;
on unit-or-smaller boxes this reduces to the ledger value exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .forms import Cube, FormsError, Polynomial, PolyForm
from .supnorm import NormBound, polynomial_sup_bound, sup_norm


class NotClosedError(FormsError):
    """Raised when an operation requires dw = 0 and a nonzero term remains."""

    def __init__(self, dw: PolyForm):
        idx = min(dw.terms)
        self.offending_index = idx
        self.offending_coefficient = dw.terms[idx]
        super().__init__(
            f"form is not closed: dw contains {dw.terms[idx]} dx^{idx}")


# ---------------------------------------------------------------------------
# Constant ledger
# ---------------------------------------------------------------------------


def constant(n: int, k: int) -> Fraction:
    """Inequality constant C(n, k) for degree-k forms on the unit n-box.

    C(n, k) = 0 for k >= n, C(1, 0) = 1, else C(n, k) = 2 max(1, C(n-1, k)).
    """
    if n < 1:
        raise FormsError(f"ambient dimension must be >= 1, got {n}")
    if k < 0:
        raise FormsError(f"degree must be >= 0, got {k}")
    if k >= n:
        return Fraction(0)
    if n == 1:
        return Fraction(1)
    return 2 * max(Fraction(1), constant(n - 1, k))


def constant_for_cube(n: int, k: int, cube: Cube) -> Fraction:
    """Ledger constant adjusted for edges longer than 1 (midpoint anchors)."""
    if k >= n:
        return Fraction(0)
    h = cube.width(n) / 2
    if n == 1:
        return max(Fraction(1), h)
    return 2 * max(Fraction(1), h, constant_for_cube(n - 1, k, cube.drop_axis(n)))


def choose_tau(cube: Cube, coord: int) -> Fraction:
    """Anchor value for fiber integration along the given axis: the midpoint.

    For continuous coefficients every value of the coordinate satisfies the
    slice inequality (each fiber sup is at most the full sup), so the
    midpoint is always admissible and keeps the construction deterministic.
    """
    if not 1 <= coord <= cube.n:
        raise FormsError(f"coordinate {coord} out of range 1..{cube.n}")
    return cube.midpoint(coord)


# ---------------------------------------------------------------------------
# Certificates and traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormCertificate:
    """Exact-rational record of one certified inequality.

    inequality = "closed_defect":   defect_norm.upper <= constant * norm_input.upper
                                    (norm_input bounds |dw|, defect |w - w'|)
    inequality = "primitive_bound": norm_output.upper <= constant * norm_input.upper
                                    (norm_input bounds |w|, norm_output |theta|)
    """

    inequality: str
    ambient_dim: int
    degree: int
    constant_used: Fraction
    norm_input: NormBound
    norm_output: NormBound
    defect_norm: NormBound | None
    verified: bool

    def lhs_upper(self) -> Fraction:
        bound = self.defect_norm if self.inequality == "closed_defect" else self.norm_output
        return bound.upper

    def rhs(self) -> Fraction:
        return self.constant_used * self.norm_input.upper


def verify_certificate(cert: NormCertificate) -> tuple[bool, str]:
    """Re-check a certificate's inequality from its stored exact bounds.

    Never trusts the cached ``verified`` flag; recomputes the comparison and
    reports the inequality either way.
    """
    lhs = cert.lhs_upper()
    rhs = cert.rhs()
    ok = lhs <= rhs
    what = "|w - w'| <= C |dw|" if cert.inequality == "closed_defect" \
        else "|theta| <= C |w|"
    lines = [
        f"certificate: {cert.inequality} (n={cert.ambient_dim}, k={cert.degree})",
        f"  inequality     {what}",
        f"  constant C     {cert.constant_used}",
        f"  left (upper)   {lhs}",
        f"  right C*input  {rhs}",
        f"  check          {lhs} <= {rhs} : {'OK' if ok else 'VIOLATED'}",
    ]
    if ok != cert.verified:
        lines.append(f"  note           stored verdict {cert.verified} disagrees; recomputation wins")
    return ok, "\n".join(lines)


@dataclass(frozen=True)
class TraceLevel:
    """One recursion level of the defect-bound bookkeeping.

    ``fiber_term_upper`` bounds the fiber-integral part of the level defect
    (half-width times the derivative part carrying the last differential);
    ``sub_defect_upper`` is the composed bound returned by the next level.
    Their sum bounds the true level defect.
    """

    n: int
    k: int
    tau: Fraction | None
    d_input_upper: Fraction
    fiber_term_upper: Fraction
    sub_defect_upper: Fraction
    defect_upper: Fraction
    constant: Fraction


@dataclass(frozen=True)
class RecursionTrace:
    levels: tuple[TraceLevel, ...]

    def __post_init__(self):
        if self.levels and len(self.levels) > self.levels[0].n:
            raise FormsError("trace deeper than ambient dimension")

    def composed_defect_upper(self) -> Fraction:
        return self.levels[0].defect_upper if self.levels else Fraction(0)


# ---------------------------------------------------------------------------
# The shared recursion
# ---------------------------------------------------------------------------


def _upper(form: PolyForm, cube: Cube, subdivisions: int = 0) -> Fraction:
    """Upper bound only (no witness sampling); zero form short-circuits."""
    best = Fraction(0)
    for p in form.terms.values():
        b = polynomial_sup_bound(p, cube, subdivisions)
        if b > best:
            best = b
    return best


def _closed_approx_rec(w: PolyForm, cube: Cube,
                       levels: list[TraceLevel],
                       tau_override: Fraction | None) -> PolyForm:
    """Recursive closed approximation; appends one TraceLevel per call."""
    n, k = w.n, w.k
    if k >= n:
        # top-degree band: dw = 0 automatically, the form is its own approximation
        levels.append(TraceLevel(n, k, None, Fraction(0), Fraction(0),
                                 Fraction(0), Fraction(0), Fraction(0)))
        return w
    dw = w.d()
    h = cube.width(n) / 2
    if n == 1:
        tau = tau_override if tau_override is not None else choose_tau(cube, 1)
        f = w.coefficient(())
        value = f.evaluate((tau,))
        d_upper = _upper(dw, cube)
        anchor_gap = max(cube.hi[0] - tau, tau - cube.lo[0])
        fiber = anchor_gap * d_upper
        levels.append(TraceLevel(1, 0, tau, d_upper, fiber, Fraction(0),
                                 fiber, constant_for_cube(1, 0, cube)))
        return PolyForm(1, 0, {(): Polynomial.constant(1, value)})
    tau = tau_override if tau_override is not None else choose_tau(cube, n)
    w1, w2 = w.split_last()
    dw1, _dw2 = dw.split_last()
    sub_cube = cube.drop_axis(n)
    wtilde = _closed_approx_rec(w2.restrict(n, tau), sub_cube, levels, None)
    sub_defect = levels[-1].defect_upper
    if k == 0:
        wprime = wtilde.include_from_face()
    else:
        wbar = w1.fiber_integrate(n, tau)
        sign = 1 if (k - 1) % 2 == 0 else -1
        wprime = wbar.d() * sign + wtilde.include_from_face()
    d_upper = _upper(dw, cube)
    anchor_gap = max(cube.hi[n - 1] - tau, tau - cube.lo[n - 1])
    fiber = anchor_gap * _upper(dw1, cube)
    levels.append(TraceLevel(n, k, tau, d_upper, fiber, sub_defect,
                             fiber + sub_defect, constant_for_cube(n, k, cube)))
    return wprime


def closed_approx(w: PolyForm, cube: Cube, grid_per_axis: int = 2,
                  tau_candidates: Sequence[Fraction] | None = None,
                  ) -> tuple[PolyForm, NormCertificate, RecursionTrace]:
    """Exactly closed approximation of w with a certified defect bound.

    Returns (w', certificate, trace) where dw' = 0 term-for-term, the
    certificate checks |w - w'|.upper <= C(n, k) * |dw|.upper in exact
    arithmetic, and the trace records the per-level bound bookkeeping.
    Closed inputs are fixed points: w' = w exactly and the defect is zero.

    ``tau_candidates`` scans anchor values at the top level only and keeps
    the candidate with the smallest certified defect bound; the midpoint is
    always included, so the scan never does worse than the default.
    """
    if w.n != cube.n:
        raise FormsError(f"form on R^{w.n} vs cube in R^{cube.n}")
    candidates: list[Fraction | None] = [None]
    if tau_candidates:
        candidates += [Fraction(t) for t in tau_candidates]
    best = None
    for tau0 in candidates:
        levels: list[TraceLevel] = []
        wprime = _closed_approx_rec(w, cube, levels, tau0)
        levels.reverse()  # outermost level first
        trace = RecursionTrace(tuple(levels))
        defect = w - wprime
        cert = _defect_certificate(w, wprime, defect, cube, trace, grid_per_axis)
        if best is None or cert.defect_norm.upper < best[1].defect_norm.upper:
            best = (wprime, cert, trace)
    return best


def _defect_certificate(w: PolyForm, wprime: PolyForm, defect: PolyForm,
                        cube: Cube, trace: RecursionTrace,
                        grid_per_axis: int) -> NormCertificate:
    c = constant_for_cube(w.n, w.k, cube)
    input_norm = sup_norm(w.d(), cube, grid_per_axis)
    rhs = c * input_norm.upper
    composed = trace.composed_defect_upper()
    defect_norm = sup_norm(defect, cube, grid_per_axis)
    upper = min(defect_norm.upper, composed)
    # retry with Bernstein bisection when looseness alone blocks the check
    for level in (1, 2):
        if upper <= rhs:
            break
        tighter = _upper(defect, cube, subdivisions=level)
        upper = min(upper, tighter)
    defect_norm = NormBound(defect_norm.lower, upper, defect_norm.witness)
    output_norm = sup_norm(wprime, cube, grid_per_axis)
    return NormCertificate(
        inequality="closed_defect",
        ambient_dim=w.n,
        degree=w.k,
        constant_used=c,
        norm_input=input_norm,
        norm_output=output_norm,
        defect_norm=defect_norm,
        verified=upper <= rhs,
    )


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def _standard_primitive_rec(w: PolyForm, cube: Cube) -> PolyForm:
    n, k = w.n, w.k
    if w.is_zero:
        return PolyForm.zero(n, k - 1)
    w1, w2 = w.split_last()
    tau = choose_tau(cube, n)
    wbar = w1.fiber_integrate(n, tau)
    theta = wbar if (k + 1) % 2 == 0 else -wbar
    if not w2.is_zero:
        sub = _standard_primitive_rec(w2.restrict(n, tau), cube.drop_axis(n))
        theta = theta + sub.include_from_face()
    return theta


def standard_primitive(w: PolyForm, cube: Cube) -> PolyForm:
    """Primitive theta1 with d(theta1) = w, by fiber integration from midpoints.

    Classical construction without norm control; requires dw = 0 exactly and
    degree k >= 1.  Deterministic: anchors are always edge midpoints.
    """
    if w.n != cube.n:
        raise FormsError(f"form on R^{w.n} vs cube in R^{cube.n}")
    if w.k < 1:
        raise FormsError("primitives are defined for degree k >= 1")
    dw = w.d()
    if not dw.is_zero:
        raise NotClosedError(dw)
    theta = _standard_primitive_rec(w, cube)
    if theta.d() != w:
        raise RuntimeError("internal error: primitive does not differentiate back")
    return theta


def bounded_primitive(w: PolyForm, cube: Cube, grid_per_axis: int = 2,
                      ) -> tuple[PolyForm, NormCertificate]:
    """Primitive with sup-norm control: d(theta) = w and |theta| <= C(n, k-1) |w|.

    theta = theta1 - theta2 where theta1 is the raw fiber-integrated
    primitive and theta2 its closed approximation; subtracting a closed form
    keeps d(theta) = w while the defect bound of the approximation becomes
    the norm bound on theta.  The certificate is checked in exact arithmetic.
    """
    theta1 = standard_primitive(w, cube)  # validates closedness and degree
    theta2, inner, _trace = closed_approx(theta1, cube, grid_per_axis)
    theta = theta1 - theta2
    if theta.d() != w:
        raise RuntimeError("internal error: bounded primitive lost exactness")
    # d(theta1) = w exactly, so the inner certificate's input norm is |w|
    # and its defect norm is |theta1 - theta2| = |theta|
    cert = NormCertificate(
        inequality="primitive_bound",
        ambient_dim=w.n,
        degree=w.k,
        constant_used=inner.constant_used,
        norm_input=inner.norm_input,
        norm_output=inner.defect_norm,
        defect_norm=None,
        verified=inner.verified,
    )
    return theta, cert
