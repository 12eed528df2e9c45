"""JSON wire formats: bit-exact for rational data, reproducible for reports.

Integers inside rationals are serialized as decimal strings so arbitrary
precision survives any JSON parser; floats use Python's repr round-trip.
Emission order is canonical (terms sorted by multi-index, monomials by
exponent tuple), so equal values produce identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from typing import Any

import numpy as np

from .forms import Cube, Polynomial, PolyForm
from .gridforms import GridForm, ResidualHistory, StageRecord
from .poincare import NormCertificate, RecursionTrace, TraceLevel
from .simplices import FlatnessReport, SimplexSample
from .supnorm import NormBound


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Rationals
# ---------------------------------------------------------------------------


def fraction_to_pair(q: Fraction) -> dict:
    return {"num": str(q.numerator), "den": str(q.denominator)}


def pair_to_fraction(obj: dict) -> Fraction:
    try:
        return Fraction(int(obj["num"]), int(obj["den"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad rational object {obj!r}: {exc}") from None


def fraction_to_string(q: Fraction) -> str:
    return str(q)


def string_to_fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational string {s!r}: {exc}") from None


# ---------------------------------------------------------------------------
# Forms
# ---------------------------------------------------------------------------


def polyform_to_json(w: PolyForm) -> dict:
    terms = []
    for idx in sorted(w.terms):
        p = w.terms[idx]
        coeff = [
            {"exponents": list(exp), **fraction_to_pair(p.coeffs[exp])}
            for exp in sorted(p.coeffs)
        ]
        terms.append({"index": list(idx), "coefficient": coeff})
    return {"ambient_dim": w.n, "degree": w.k, "terms": terms}


def polyform_from_json(obj: dict) -> PolyForm:
    try:
        n = int(obj["ambient_dim"])
        k = int(obj["degree"])
        terms = {}
        for t in obj["terms"]:
            idx = tuple(int(i) for i in t["index"])
            coeffs = {}
            for mono in t["coefficient"]:
                exp = tuple(int(e) for e in mono["exponents"])
                coeffs[exp] = Fraction(int(mono["num"]), int(mono["den"]))
            terms[idx] = Polynomial(n, coeffs)
        return PolyForm(n, k, terms)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad polynomial form: {exc}") from None


def cube_to_json(cube: Cube) -> dict:
    return {"lo": [fraction_to_string(v) for v in cube.lo],
            "hi": [fraction_to_string(v) for v in cube.hi]}


def cube_from_json(obj: dict) -> Cube:
    try:
        return Cube(tuple(string_to_fraction(v) for v in obj["lo"]),
                    tuple(string_to_fraction(v) for v in obj["hi"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad cube: {exc}") from None


def gridform_to_json(w: GridForm) -> dict:
    coeffs = {}
    for idx in sorted(w.coefficients):
        key = "-".join(str(i) for i in idx) if idx else "0"
        coeffs[key] = [float(v) for v in w.coefficients[idx].ravel(order="C")]
    return {
        "ambient_dim": w.ambient_dim,
        "degree": w.degree,
        "resolution": w.resolution,
        "cube": cube_to_json(w.cube),
        "coefficients": coeffs,
    }


def gridform_from_json(obj: dict) -> GridForm:
    try:
        n = int(obj["ambient_dim"])
        cube = cube_from_json(obj["cube"])
        if cube.n != n:
            raise ParseError(f"cube dimension {cube.n} != ambient_dim {n}")
        res = int(obj["resolution"])
        degree = int(obj["degree"])
        coeffs = {}
        for key, values in obj["coefficients"].items():
            idx = () if key == "0" else tuple(int(i) for i in key.split("-"))
            arr = np.asarray(values, dtype=float).reshape((res,) * n, order="C")
            coeffs[idx] = arr
        return GridForm(cube, degree, res, coeffs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad grid form: {exc}") from None


# ---------------------------------------------------------------------------
# Bounds, certificates, traces
# ---------------------------------------------------------------------------


def normbound_to_json(b: NormBound) -> dict:
    return {
        "lower": fraction_to_pair(b.lower),
        "upper": fraction_to_pair(b.upper),
        "witness": None if b.witness is None
        else [fraction_to_string(v) for v in b.witness],
    }


def normbound_from_json(obj: dict) -> NormBound:
    witness = obj.get("witness")
    return NormBound(
        pair_to_fraction(obj["lower"]),
        pair_to_fraction(obj["upper"]),
        None if witness is None else tuple(string_to_fraction(v) for v in witness),
    )


def certificate_to_json(cert: NormCertificate) -> dict:
    return {
        "kind": "certificate",
        "inequality": cert.inequality,
        "ambient_dim": cert.ambient_dim,
        "degree": cert.degree,
        "constant_used": fraction_to_string(cert.constant_used),
        "norm_input": normbound_to_json(cert.norm_input),
        "norm_output": normbound_to_json(cert.norm_output),
        "defect_norm": None if cert.defect_norm is None
        else normbound_to_json(cert.defect_norm),
        "verified": cert.verified,
    }


def certificate_from_json(obj: dict) -> NormCertificate:
    try:
        return NormCertificate(
            inequality=str(obj["inequality"]),
            ambient_dim=int(obj["ambient_dim"]),
            degree=int(obj["degree"]),
            constant_used=string_to_fraction(obj["constant_used"]),
            norm_input=normbound_from_json(obj["norm_input"]),
            norm_output=normbound_from_json(obj["norm_output"]),
            defect_norm=None if obj.get("defect_norm") is None
            else normbound_from_json(obj["defect_norm"]),
            verified=bool(obj["verified"]),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad certificate: {exc}") from None


def trace_to_json(trace: RecursionTrace) -> dict:
    return {
        "kind": "recursion_trace",
        "levels": [
            {
                "n": lv.n, "k": lv.k,
                "tau": None if lv.tau is None else fraction_to_string(lv.tau),
                "d_input_upper": fraction_to_string(lv.d_input_upper),
                "fiber_term_upper": fraction_to_string(lv.fiber_term_upper),
                "sub_defect_upper": fraction_to_string(lv.sub_defect_upper),
                "defect_upper": fraction_to_string(lv.defect_upper),
                "constant": fraction_to_string(lv.constant),
            }
            for lv in trace.levels
        ],
    }


def trace_from_json(obj: dict) -> RecursionTrace:
    try:
        levels = tuple(
            TraceLevel(
                n=int(lv["n"]), k=int(lv["k"]),
                tau=None if lv["tau"] is None else string_to_fraction(lv["tau"]),
                d_input_upper=string_to_fraction(lv["d_input_upper"]),
                fiber_term_upper=string_to_fraction(lv["fiber_term_upper"]),
                sub_defect_upper=string_to_fraction(lv["sub_defect_upper"]),
                defect_upper=string_to_fraction(lv["defect_upper"]),
                constant=string_to_fraction(lv["constant"]),
            )
            for lv in obj["levels"]
        )
        return RecursionTrace(levels)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad trace: {exc}") from None


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def flatness_report_to_json(rep: FlatnessReport) -> dict:
    return {
        "kind": "flatness_report",
        "params": rep.params,
        "max_ratio": rep.max_ratio,
        "coefficient_bound": rep.coefficient_bound,
        "nprime": rep.nprime,
        "verdict": rep.verdict,
        "scale_deciles": rep.scale_deciles,
        "samples": [
            {"scale": s.scale, "boundary_integral": s.boundary_integral,
             "volume": s.volume, "ratio": s.ratio}
            for s in rep.samples
        ],
    }


def flatness_report_from_json(obj: dict) -> FlatnessReport:
    try:
        samples = [SimplexSample(s["scale"], s["boundary_integral"],
                                 s["volume"], s["ratio"]) for s in obj["samples"]]
        return FlatnessReport(
            samples=samples,
            max_ratio=float(obj["max_ratio"]),
            coefficient_bound=float(obj["coefficient_bound"]),
            scale_deciles=list(obj["scale_deciles"]),
            params=dict(obj["params"]),
            nprime=obj.get("nprime"),
            verdict=obj.get("verdict"),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad flatness report: {exc}") from None


def history_to_json(hist: ResidualHistory) -> dict:
    return {
        "kind": "residual_history",
        "params": hist.params,
        "singular_fraction": hist.singular_fraction,
        "stages": [
            {"stage": s.stage, "radius": s.radius, "fit_degree": s.fit_degree,
             "fit_residual": s.fit_residual, "residual": s.residual,
             "residual_full": s.residual_full}
            for s in hist.stages
        ],
    }


def history_from_json(obj: dict) -> ResidualHistory:
    try:
        stages = [StageRecord(int(s["stage"]), float(s["radius"]),
                              int(s["fit_degree"]), float(s["fit_residual"]),
                              float(s["residual"]), float(s["residual_full"]))
                  for s in obj["stages"]]
        return ResidualHistory(stages, float(obj.get("singular_fraction", 0.0)),
                               dict(obj.get("params", {})))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad residual history: {exc}") from None


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------


def write_json(path: str, obj: Any) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str) -> Any:
    with open(path) as fh:
        return json.load(fh)
