"""Exact exterior algebra of polynomial differential forms on rational boxes.

Everything in this module is exact: coefficients are multivariate polynomials
over the rationals, stored sparsely as

    Polynomial.coeffs : dict[exponent-tuple, Fraction]

with no zero coefficients ever kept (canonical form), so equality of
polynomials and of forms is plain structural comparison.  A degree-k form is a
map from strictly increasing multi-indices (1-based, e.g. ``(1, 3)`` for
dx1^dx3) to coefficient polynomials.  Degree 0 is fully supported through the
single empty multi-index ``()``.

Variables are 1-based throughout (``x^1 .. x^n``), matching the multi-index
convention; exponent tuples are positional (entry ``i-1`` is the exponent of
``x^i``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]
MultiIndex = tuple[int, ...]

_VAR_NAMES = ("x", "y", "z", "w")


class FormsError(ValueError):
    """Precondition violation in the exterior algebra layer."""


class DimensionMismatch(FormsError):
    pass


def _as_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError("refusing to coerce float to Fraction; pass Fraction or int")
    return Fraction(value)


def var_name(i: int, n: int) -> str:
    """Display name of variable x^i (1-based) in ambient dimension n."""
    if n <= len(_VAR_NAMES):
        return _VAR_NAMES[i - 1]
    return f"x{i}"


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class Polynomial:
    """Sparse multivariate polynomial with exact rational coefficients.

    Immutable by convention: no method mutates ``self``; all operations
    return new instances already in canonical form.
    """

    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs: Mapping[Exponent, Fraction] | None = None):
        if nvars < 0:
            raise FormsError(f"nvars must be >= 0, got {nvars}")
        self.nvars = nvars
        clean: dict[Exponent, Fraction] = {}
        if coeffs:
            for exp, c in coeffs.items():
                exp = tuple(exp)
                if len(exp) != nvars:
                    raise FormsError(f"exponent tuple {exp} has wrong arity for nvars={nvars}")
                if any(e < 0 for e in exp):
                    raise FormsError(f"negative exponent in {exp}")
                c = _as_fraction(c)
                if c != 0:
                    clean[exp] = clean.get(exp, Fraction(0)) + c
                    if clean[exp] == 0:
                        del clean[exp]
        self.coeffs = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: _as_fraction(value)})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        """The polynomial x^i (1-based)."""
        if not 1 <= i <= nvars:
            raise FormsError(f"variable index {i} out of range 1..{nvars}")
        exp = [0] * nvars
        exp[i - 1] = 1
        return cls(nvars, {tuple(exp): Fraction(1)})

    # -- ring structure -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.nvars, frozenset(self.coeffs.items())))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if self.nvars != other.nvars:
            raise DimensionMismatch("polynomial arity mismatch")
        out = dict(self.coeffs)
        for exp, c in other.coeffs.items():
            out[exp] = out.get(exp, Fraction(0)) + c
        return Polynomial(self.nvars, out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if self.nvars != other.nvars:
                raise DimensionMismatch("polynomial arity mismatch")
            out: dict[Exponent, Fraction] = {}
            for e1, c1 in self.coeffs.items():
                for e2, c2 in other.coeffs.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, Fraction(0)) + c1 * c2
            return Polynomial(self.nvars, out)
        c = _as_fraction(other)
        return Polynomial(self.nvars, {e: v * c for e, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise FormsError("negative power")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- calculus -----------------------------------------------------------

    def partial(self, var: int) -> "Polynomial":
        """Exact partial derivative with respect to x^var (1-based)."""
        j = var - 1
        out: dict[Exponent, Fraction] = {}
        for exp, c in self.coeffs.items():
            e = exp[j]
            if e == 0:
                continue
            new = list(exp)
            new[j] = e - 1
            out[tuple(new)] = out.get(tuple(new), Fraction(0)) + c * e
        return Polynomial(self.nvars, out)

    def antiderivative(self, var: int) -> "Polynomial":
        """Exact antiderivative in x^var with zero constant term."""
        j = var - 1
        out: dict[Exponent, Fraction] = {}
        for exp, c in self.coeffs.items():
            new = list(exp)
            new[j] = exp[j] + 1
            out[tuple(new)] = c / (exp[j] + 1)
        return Polynomial(self.nvars, out)

    def subs_value(self, var: int, value) -> "Polynomial":
        """Substitute x^var = value; the variable slot is kept (exponent 0)."""
        value = _as_fraction(value)
        j = var - 1
        out: dict[Exponent, Fraction] = {}
        for exp, c in self.coeffs.items():
            new = list(exp)
            new[j] = 0
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + c * value ** exp[j]
        return Polynomial(self.nvars, out)

    def drop_var(self, var: int) -> "Polynomial":
        """Remove a variable slot the polynomial does not use."""
        j = var - 1
        out: dict[Exponent, Fraction] = {}
        for exp, c in self.coeffs.items():
            if exp[j] != 0:
                raise FormsError(f"polynomial depends on x^{var}; substitute first")
            out[exp[:j] + exp[j + 1:]] = c
        return Polynomial(self.nvars - 1, out)

    def append_var(self) -> "Polynomial":
        """Reinterpret in one more variable (constant in the new last one)."""
        return Polynomial(self.nvars + 1, {exp + (0,): c for exp, c in self.coeffs.items()})

    def compose(self, components: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute components[i-1] for x^i; exact polynomial composition."""
        if len(components) != self.nvars:
            raise DimensionMismatch(
                f"need {self.nvars} components, got {len(components)}")
        target_nvars = components[0].nvars if components else 0
        for comp in components:
            if comp.nvars != target_nvars:
                raise DimensionMismatch("components disagree on arity")
        result = Polynomial.zero(target_nvars)
        power_cache: list[dict[int, Polynomial]] = [
            {0: Polynomial.constant(target_nvars, 1)} for _ in components
        ]
        for exp, c in self.coeffs.items():
            term = Polynomial.constant(target_nvars, c)
            for i, e in enumerate(exp):
                if e == 0:
                    continue
                cache = power_cache[i]
                if e not in cache:
                    cache[e] = components[i] ** e
                term = term * cache[e]
            result = result + term
        return result

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, point: Sequence[Fraction]) -> Fraction:
        """Exact evaluation at a rational point."""
        if len(point) != self.nvars:
            raise DimensionMismatch("point arity mismatch")
        total = Fraction(0)
        for exp, c in self.coeffs.items():
            v = c
            for x, e in zip(point, exp):
                if e:
                    v *= _as_fraction(x) ** e
            total += v
        return total

    def evaluate_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Float evaluation on the tensor grid spanned by 1-D axis arrays."""
        if len(axes) != self.nvars:
            raise DimensionMismatch("axis count mismatch")
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape)
        max_deg = self.degrees()
        pows = [
            np.vander(np.asarray(a, dtype=float), d + 1, increasing=True)
            for a, d in zip(axes, max_deg)
        ]
        for exp, c in self.coeffs.items():
            term = np.array(float(c))
            for i, e in enumerate(exp):
                col = pows[i][:, e]
                idx = [None] * self.nvars
                idx[i] = slice(None)
                term = term * col[tuple(idx)]
            out = out + term
        return out

    def degrees(self) -> Exponent:
        """Per-variable maximum exponent (all zeros for the zero polynomial)."""
        out = [0] * self.nvars
        for exp in self.coeffs:
            for i, e in enumerate(exp):
                if e > out[i]:
                    out[i] = e
        return tuple(out)

    # -- display ------------------------------------------------------------

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self})"

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for exp in sorted(self.coeffs):
            c = self.coeffs[exp]
            factors = [
                var_name(i + 1, self.nvars) + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exp) if e
            ]
            body = "*".join(factors)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append(f"-{body}")
            else:
                parts.append(f"{c}*{body}")
        s = " + ".join(parts)
        return s.replace("+ -", "- ")


# ---------------------------------------------------------------------------
# Cubes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cube:
    """Axis-aligned product of rational intervals; every edge has length > 0."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self):
        lo = tuple(_as_fraction(v) for v in self.lo)
        hi = tuple(_as_fraction(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) == 0:
            raise FormsError("cube needs matching nonempty lo/hi")
        for a, b in zip(lo, hi):
            if not a < b:
                raise FormsError(f"degenerate cube edge [{a}, {b}]")

    @classmethod
    def unit(cls, n: int) -> "Cube":
        return cls((Fraction(0),) * n, (Fraction(1),) * n)

    @property
    def n(self) -> int:
        return len(self.lo)

    def width(self, coord: int) -> Fraction:
        return self.hi[coord - 1] - self.lo[coord - 1]

    def widths(self) -> tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def midpoint(self, coord: int) -> Fraction:
        return (self.lo[coord - 1] + self.hi[coord - 1]) / 2

    def center(self) -> tuple[Fraction, ...]:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def drop_axis(self, coord: int) -> "Cube":
        j = coord - 1
        return Cube(self.lo[:j] + self.lo[j + 1:], self.hi[:j] + self.hi[j + 1:])

    def contains(self, point: Sequence) -> bool:
        return all(a <= Fraction(p) <= b for a, b, p in zip(self.lo, self.hi, point))

    def __str__(self) -> str:
        return "x".join(f"[{a},{b}]" for a, b in zip(self.lo, self.hi))


# ---------------------------------------------------------------------------
# Multi-index helpers
# ---------------------------------------------------------------------------


def sort_index(indices: Iterable[int]) -> tuple[int, MultiIndex] | None:
    """Sort a multi-index, returning (sign, sorted) or None if an index repeats.

    The sign is the parity of the permutation that sorts the sequence.
    """
    seq = list(indices)
    sign = 1
    # insertion sort; counts inversions exactly (sequences are short)
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(seq, seq[1:]):
        if a == b:
            return None
    return sign, tuple(seq)


def _validate_index(idx: MultiIndex, k: int, n: int) -> MultiIndex:
    idx = tuple(idx)
    if len(idx) != k:
        raise FormsError(f"multi-index {idx} has length {len(idx)}, expected {k}")
    if any(not 1 <= i <= n for i in idx):
        raise FormsError(f"multi-index {idx} out of range 1..{n}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise FormsError(f"multi-index {idx} not strictly increasing")
    return idx


# ---------------------------------------------------------------------------
# Polynomial differential forms
# ---------------------------------------------------------------------------


class PolyForm:
    """Degree-k differential form with polynomial coefficients on R^n.

    ``terms`` maps each strictly increasing multi-index of length k to its
    coefficient polynomial; zero coefficients are never stored, so two forms
    are equal iff their ``terms`` dicts are equal.
    """

    __slots__ = ("n", "k", "terms")

    def __init__(self, n: int, k: int, terms: Mapping[MultiIndex, Polynomial] | None = None):
        if n < 1:
            raise FormsError(f"ambient dimension must be >= 1, got {n}")
        if k < 0:
            raise FormsError(f"degree must be >= 0, got {k}")
        self.n = n
        self.k = k
        clean: dict[MultiIndex, Polynomial] = {}
        if terms:
            for idx, p in terms.items():
                idx = _validate_index(idx, k, n)
                if p.nvars != n:
                    raise FormsError(f"coefficient arity {p.nvars} != ambient {n}")
                if not p.is_zero:
                    if idx in clean:
                        p = clean[idx] + p
                    if not p.is_zero:
                        clean[idx] = p
                    elif idx in clean:
                        del clean[idx]
        if k > n and clean:
            raise FormsError(f"degree {k} > ambient {n} admits only the zero form")
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n: int, k: int) -> "PolyForm":
        return cls(n, k, {})

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> "PolyForm":
        """Wrap a polynomial as a 0-form."""
        return cls(p.nvars, 0, {(): p})

    @classmethod
    def dx(cls, n: int, i: int) -> "PolyForm":
        """The constant basis 1-form dx^i on R^n."""
        return cls(n, 1, {(i,): Polynomial.constant(n, 1)})

    # -- vector space structure ----------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyForm):
            return NotImplemented
        return (self.n, self.k) == (other.n, other.k) and self.terms == other.terms

    def __add__(self, other: "PolyForm") -> "PolyForm":
        if not isinstance(other, PolyForm):
            return NotImplemented
        if self.n != other.n:
            raise DimensionMismatch(f"ambient mismatch: {self.n} vs {other.n}")
        if self.k != other.k:
            raise DimensionMismatch(f"degree mismatch: {self.k} vs {other.k}")
        out = dict(self.terms)
        for idx, p in other.terms.items():
            out[idx] = out[idx] + p if idx in out else p
        return PolyForm(self.n, self.k, out)

    def __neg__(self) -> "PolyForm":
        return PolyForm(self.n, self.k, {i: -p for i, p in self.terms.items()})

    def __sub__(self, other: "PolyForm") -> "PolyForm":
        return self + (-other)

    def __mul__(self, scalar) -> "PolyForm":
        if isinstance(scalar, Polynomial):
            return PolyForm(self.n, self.k,
                            {i: p * scalar for i, p in self.terms.items()})
        c = _as_fraction(scalar)
        return PolyForm(self.n, self.k, {i: p * c for i, p in self.terms.items()})

    __rmul__ = __mul__

    # -- exterior algebra -----------------------------------------------------

    def wedge(self, other: "PolyForm") -> "PolyForm":
        if self.n != other.n:
            raise DimensionMismatch(f"ambient mismatch: {self.n} vs {other.n}")
        k = self.k + other.k
        if k > self.n:
            return PolyForm(self.n, k, {})
        out: dict[MultiIndex, Polynomial] = {}
        for i1, p1 in self.terms.items():
            for i2, p2 in other.terms.items():
                sorted_ = sort_index(i1 + i2)
                if sorted_ is None:
                    continue
                sign, idx = sorted_
                contrib = p1 * p2 if sign == 1 else -(p1 * p2)
                out[idx] = out[idx] + contrib if idx in out else contrib
        return PolyForm(self.n, k, out)

    def d(self) -> "PolyForm":
        """Exterior derivative: d(a dx^I) = sum_i (da/dx^i) dx^i ^ dx^I."""
        out: dict[MultiIndex, Polynomial] = {}
        for idx, p in self.terms.items():
            for v in range(1, self.n + 1):
                if v in idx:
                    continue
                dp = p.partial(v)
                if dp.is_zero:
                    continue
                pos = sum(1 for i in idx if i < v)
                sign = 1 if pos % 2 == 0 else -1
                new_idx = tuple(sorted(idx + (v,)))
                contrib = dp if sign == 1 else -dp
                out[new_idx] = out[new_idx] + contrib if new_idx in out else contrib
        return PolyForm(self.n, self.k + 1, out)

    def split_last(self) -> tuple["PolyForm", "PolyForm"]:
        """Write w = w1 ^ dx^n + w2 with neither part containing dx^n.

        The sign convention is absorbed here: since n is always the largest
        index, each term a dx^(I,n) contributes a dx^I to w1 with sign +1.
        """
        n = self.n
        w1_terms: dict[MultiIndex, Polynomial] = {}
        w2_terms: dict[MultiIndex, Polynomial] = {}
        for idx, p in self.terms.items():
            if idx and idx[-1] == n:
                w1_terms[idx[:-1]] = p
            else:
                w2_terms[idx] = p
        return (PolyForm(n, self.k - 1 if self.k else 0, w1_terms if self.k else {}),
                PolyForm(n, self.k, w2_terms))

    def restrict(self, coord: int, value) -> "PolyForm":
        """Substitute x^coord = value and descend to the (n-1)-dimensional box.

        Requires that no multi-index contains coord.  Surviving indices above
        coord shift down by one.
        """
        value = _as_fraction(value)
        if self.n == 1:
            raise FormsError("cannot restrict a form on a 1-dimensional box")
        out: dict[MultiIndex, Polynomial] = {}
        for idx, p in self.terms.items():
            if coord in idx:
                raise FormsError(
                    f"term dx^{idx} contains dx^{coord}; restrict is undefined")
            new_idx = tuple(i if i < coord else i - 1 for i in idx)
            q = p.subs_value(coord, value).drop_var(coord)
            if not q.is_zero:
                out[new_idx] = q
        return PolyForm(self.n - 1, self.k, out)

    def fiber_integrate(self, coord: int, tau) -> "PolyForm":
        """Coefficient-wise integral from tau to x^coord along one axis.

        The result vanishes on the slice x^coord = tau and its x^coord
        partial derivative recovers the input exactly.
        """
        tau = _as_fraction(tau)
        out: dict[MultiIndex, Polynomial] = {}
        for idx, p in self.terms.items():
            if coord in idx:
                raise FormsError(
                    f"term dx^{idx} contains dx^{coord}; fiber integral undefined")
            anti = p.antiderivative(coord)
            q = anti - anti.subs_value(coord, tau)
            if not q.is_zero:
                out[idx] = q
        return PolyForm(self.n, self.k, out)

    def include_from_face(self) -> "PolyForm":
        """View a form on the (n-1)-box as a form on the n-box, constant in x^n."""
        return PolyForm(self.n + 1, self.k,
                        {idx: p.append_var() for idx, p in self.terms.items()})

    # -- queries --------------------------------------------------------------

    def coefficient(self, idx: MultiIndex) -> Polynomial:
        return self.terms.get(tuple(idx), Polynomial.zero(self.n))

    def max_degrees(self) -> Exponent:
        """Componentwise max of coefficient degrees across all terms."""
        out = [0] * self.n
        for p in self.terms.values():
            for i, e in enumerate(p.degrees()):
                if e > out[i]:
                    out[i] = e
        return tuple(out)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for idx in sorted(self.terms):
            p = self.terms[idx]
            basis = "^".join(f"d{var_name(i, self.n)}" for i in idx)
            coeff = str(p)
            if not basis:
                parts.append(coeff)
                continue
            if " " in coeff:
                coeff = f"({coeff})"
            if coeff == "1":
                parts.append(basis)
            elif coeff == "-1":
                parts.append(f"-{basis}")
            else:
                parts.append(f"{coeff}*{basis}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PolyForm(n={self.n}, k={self.k}, {self})"


# ---------------------------------------------------------------------------
# Pullback
# ---------------------------------------------------------------------------


def pullback(phi: Sequence[Polynomial], w: PolyForm) -> PolyForm:
    """Pull w back along the polynomial map phi: R^n -> R^m.

    phi lists the m component polynomials, each in the n source variables.
    Coefficients are composed with phi and each dx^i becomes the exact
    differential of component i, so d commutes with the pullback.
    """
    m = len(phi)
    if w.n != m:
        raise DimensionMismatch(f"map has {m} components but form lives on R^{w.n}")
    if m == 0:
        raise FormsError("empty map")
    n = phi[0].nvars
    for comp in phi:
        if comp.nvars != n:
            raise DimensionMismatch("map components disagree on source arity")
    # differentials of the components, as 1-forms on the source
    dphi = []
    for comp in phi:
        terms = {}
        for v in range(1, n + 1):
            dp = comp.partial(v)
            if not dp.is_zero:
                terms[(v,)] = dp
        dphi.append(PolyForm(n, 1, terms))
    result = PolyForm.zero(n, w.k)
    for idx, a in w.terms.items():
        pulled = PolyForm.from_polynomial(a.compose(phi))
        for i in idx:
            pulled = pulled.wedge(dphi[i - 1])
        result = result + pulled
    return result
