"""Strict JSON run configuration.

Top-level keys::

    dimension        int >= 1 (required)
    cross_section    {"extents": [[lo, hi], ...], "cells_per_axis": [n, ...]}  (d-1 axes)
    cells_per_unit   axial cells per unit length (or "h", its reciprocal)
    k_sequence       increasing half lengths, default [4, 6, 8, 12, 16]
    window           reporting half width, default 2
    coefficients     {"a": zones, "b": zones}
    f, g             scalar fields (g absent or null: no lateral source)
    ellipticity      declared lower bound for a (optional)
    limits           {"K_minus": .., "K_plus": ..}
    regime           optional override: TwoParameter | OneParameterLeft | OneParameterRight | Compatibility
    solver           {"scheme", "method", "tol", "compat_tol", "linear_tol", "max_iter", "eps_drift"}
    semi             {"phi", "K", "k"}
    output           {"dir"}

``zones`` is either a list of d fields (same in every zone) or
``{"left": [...], "middle": [...], "right": [...]}``. A field is a number, an
object with a ``kind`` of constant / fourier / sign / indicator / tabulated, or
a list of fields that are summed. Unknown keys are errors.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

from .cell import RegimeTag
from .coefficients import (
    CoefficientModel,
    Constant,
    FieldSum,
    FourierAxial,
    FourierBox,
    IndicatorAxial,
    SignAxial,
    Tabulated,
    ZoneFields,
)
from .cylinder import InfiniteOptions
from .discretize import Scheme
from .errors import GridError, SchemaError
from .geometry import CrossSection
from .linalg import Method, SolveOptions

TOP_KEYS = {
    "dimension", "cross_section", "cells_per_unit", "h", "k_sequence", "window", "coefficients",
    "f", "g", "ellipticity", "limits", "regime", "solver", "semi", "output",
}
SOLVER_KEYS = {"scheme", "method", "tol", "compat_tol", "linear_tol", "max_iter", "eps_drift"}
DEFAULT_K_SEQUENCE = [4, 6, 8, 12, 16]


class AliasingWarning(UserWarning):
    pass


def _strict(d, allowed, path):
    if not isinstance(d, dict):
        raise SchemaError(path or "<root>", f"expected an object, got {type(d).__name__}")
    for key in d:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise SchemaError(where, f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _num(v, path, *, integer=False, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise SchemaError(path, f"expected an integer, got {v!r}")
    if not math.isfinite(float(v)):
        raise SchemaError(path, "must be finite")
    if positive and not v > 0:
        raise ValueError(f"{path}: must be positive, got {v!r}")
    return int(v) if integer else float(v)


# ---------------------------------------------------------------- fields


def parse_field(spec, path: str):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return Constant(_num(spec, path))
    if isinstance(spec, list):
        if not spec:
            raise SchemaError(path, "empty field sum")
        return FieldSum(tuple(parse_field(s, f"{path}[{i}]") for i, s in enumerate(spec)))
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError(path, "field must be a number, a list, or an object with 'kind'")
    kind = spec["kind"]
    if kind == "constant":
        _strict(spec, {"kind", "value"}, path)
        return Constant(_num(spec.get("value", 0.0), f"{path}.value"))
    if kind == "fourier":
        _strict(spec, {"kind", "modes", "cross"}, path)
        modes = []
        for i, m in enumerate(spec.get("modes", [])):
            if not isinstance(m, list) or len(m) != 3:
                raise SchemaError(f"{path}.modes[{i}]", "expected [mode, cos_amp, sin_amp]")
            modes.append((_num(m[0], f"{path}.modes[{i}][0]", integer=True),
                          _num(m[1], f"{path}.modes[{i}][1]"), _num(m[2], f"{path}.modes[{i}][2]")))
        cross = spec.get("cross", 1.0)
        if isinstance(cross, (int, float)) and not isinstance(cross, bool):
            profile = Constant(float(cross))
        else:
            _strict(cross, {"offset", "terms"}, f"{path}.cross")
            terms = []
            for i, t in enumerate(cross.get("terms", [])):
                if not isinstance(t, list) or len(t) != 4:
                    raise SchemaError(f"{path}.cross.terms[{i}]", "expected [axis, wavenumber, cos_amp, sin_amp]")
                terms.append((_num(t[0], f"{path}.cross.terms[{i}][0]", integer=True),
                              *(_num(t[j], f"{path}.cross.terms[{i}][{j}]") for j in (1, 2, 3))))
            profile = FourierBox(_num(cross.get("offset", 1.0), f"{path}.cross.offset"), tuple(terms))
        return FourierAxial(tuple(modes), profile)
    if kind == "sign":
        _strict(spec, {"kind", "scale"}, path)
        return SignAxial(_num(spec.get("scale", 1.0), f"{path}.scale"))
    if kind == "indicator":
        _strict(spec, {"kind", "lo", "hi", "value"}, path)
        lo, hi = _num(spec.get("lo"), f"{path}.lo"), _num(spec.get("hi"), f"{path}.hi")
        if not hi > lo:
            raise ValueError(f"{path}: indicator needs hi > lo")
        return IndicatorAxial(lo, hi, _num(spec.get("value", 1.0), f"{path}.value"))
    if kind == "tabulated":
        _strict(spec, {"kind", "x1", "values"}, path)
        try:
            return Tabulated(tuple(spec.get("x1", ())), tuple(spec.get("values", ())))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: {exc}") from None
    raise SchemaError(f"{path}.kind", f"unknown field kind {kind!r}")


def field_to_spec(fld):
    if isinstance(fld, Constant):
        return {"kind": "constant", "value": fld.value}
    if isinstance(fld, FieldSum):
        return [field_to_spec(t) for t in fld.terms]
    if isinstance(fld, FourierAxial):
        prof = fld.cross_profile
        cross = prof.value if isinstance(prof, Constant) else {
            "offset": prof.offset, "terms": [list(t) for t in prof.terms]}
        return {"kind": "fourier", "modes": [list(m) for m in fld.modes], "cross": cross}
    if isinstance(fld, SignAxial):
        return {"kind": "sign", "scale": fld.scale}
    if isinstance(fld, IndicatorAxial):
        return {"kind": "indicator", "lo": fld.lo, "hi": fld.hi, "value": fld.value}
    if isinstance(fld, Tabulated):
        return {"kind": "tabulated", "x1": list(fld.x1), "values": list(fld.values)}
    raise TypeError(f"cannot serialize field {fld!r}")


def parse_zones(spec, dim: int, path: str) -> ZoneFields:
    def comps(lst, p):
        if not isinstance(lst, list) or len(lst) != dim:
            raise SchemaError(p, f"expected a list of {dim} fields (one per axis)")
        return tuple(parse_field(s, f"{p}[{i}]") for i, s in enumerate(lst))

    if isinstance(spec, list):
        return ZoneFields.uniform(comps(spec, path))
    _strict(spec, {"left", "middle", "right"}, path)
    missing = {"left", "middle", "right"} - set(spec)
    if missing:
        raise SchemaError(f"{path}.{sorted(missing)[0]}", "missing zone")
    return ZoneFields(*(comps(spec[z], f"{path}.{z}") for z in ("left", "middle", "right")))


def zones_to_spec(zf: ZoneFields):
    return {z: [field_to_spec(f) for f in zf.zone(i)] for i, z in enumerate(("left", "middle", "right"))}


# ---------------------------------------------------------------- run config


@dataclass
class SemiSpec:
    phi: float = 1.0
    K: float = 0.0
    k: float = 12.0


@dataclass
class RunConfig:
    dimension: int
    cross_section: CrossSection
    cells_per_unit: int
    k_sequence: tuple
    window: float
    model: CoefficientModel
    K_minus: float = 0.0
    K_plus: float = 0.0
    regime: RegimeTag | None = None
    scheme: Scheme = Scheme.UPWIND
    method: Method | None = None
    tol: float = 1e-6
    compat_tol: float | None = None
    linear_tol: float = 1e-10
    max_iter: int = 10000
    eps_drift: float = 1e-6
    semi: SemiSpec = field(default_factory=SemiSpec)
    output_dir: str | None = None
    warnings: list = field(default_factory=list)

    @property
    def solve_options(self) -> SolveOptions:
        return SolveOptions(self.method, self.linear_tol, self.max_iter)

    def infinite_options(self) -> InfiniteOptions:
        return InfiniteOptions(
            k_sequence=self.k_sequence, window=self.window, tol=self.tol, compat_tol=self.compat_tol,
            cells_per_unit=self.cells_per_unit, cross_section=self.cross_section, scheme=self.scheme,
            K_minus=self.K_minus, K_plus=self.K_plus, eps_drift=self.eps_drift, solve=self.solve_options,
        )

    def to_dict(self) -> dict:
        m = self.model
        out = {
            "dimension": self.dimension,
            "cross_section": {
                "extents": [list(e) for e in self.cross_section.extents],
                "cells_per_axis": list(self.cross_section.cells_per_axis),
            },
            "cells_per_unit": self.cells_per_unit,
            "k_sequence": list(self.k_sequence),
            "window": self.window,
            "coefficients": {"a": zones_to_spec(m.a), "b": zones_to_spec(m.b)},
            "f": field_to_spec(m.f),
            "g": None if m.g is None else field_to_spec(m.g),
            "ellipticity": m.ellipticity,
            "limits": {"K_minus": self.K_minus, "K_plus": self.K_plus},
            "regime": None if self.regime is None else self.regime.value,
            "solver": {
                "scheme": self.scheme.value,
                "method": None if self.method is None else self.method.value,
                "tol": self.tol, "compat_tol": self.compat_tol, "linear_tol": self.linear_tol,
                "max_iter": self.max_iter, "eps_drift": self.eps_drift,
            },
            "semi": {"phi": self.semi.phi, "K": self.semi.K, "k": self.semi.k},
            "output": {"dir": self.output_dir},
        }
        return out

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _opt(d, key, default):
    v = d.get(key, default)
    return default if v is None else v


def config_from_dict(raw: dict) -> RunConfig:
    _strict(raw, TOP_KEYS, "")
    if "dimension" not in raw:
        raise SchemaError("dimension", "required")
    dim = _num(raw["dimension"], "dimension", integer=True)
    if dim < 1:
        raise ValueError(f"dimension: must be >= 1, got {dim}")

    cs_raw = _opt(raw, "cross_section", {"extents": [], "cells_per_axis": []})
    _strict(cs_raw, {"extents", "cells_per_axis"}, "cross_section")
    ext = cs_raw.get("extents", [])
    cpa = cs_raw.get("cells_per_axis", [1] * len(ext))
    if len(ext) != dim - 1:
        raise SchemaError("cross_section.extents", f"expected {dim - 1} axes for dimension {dim}")
    if len(cpa) != len(ext):
        raise SchemaError("cross_section.cells_per_axis", "length must match extents")
    for i, e in enumerate(ext):
        if not isinstance(e, list) or len(e) != 2:
            raise SchemaError(f"cross_section.extents[{i}]", "expected [lo, hi]")
        lo, hi = _num(e[0], f"cross_section.extents[{i}][0]"), _num(e[1], f"cross_section.extents[{i}][1]")
        if not hi > lo:
            raise ValueError(f"cross_section.extents[{i}]: need hi > lo, got [{lo}, {hi}]")
    for i, c in enumerate(cpa):
        if _num(c, f"cross_section.cells_per_axis[{i}]", integer=True) < 1:
            raise ValueError(f"cross_section.cells_per_axis[{i}]: must be >= 1")
    try:
        cs = CrossSection(tuple(tuple(e) for e in ext), tuple(int(c) for c in cpa))
    except GridError as exc:
        raise ValueError(str(exc)) from None

    if ("cells_per_unit" in raw) == ("h" in raw):
        raise SchemaError("cells_per_unit", "give exactly one of cells_per_unit or h")
    if "h" in raw:
        h = _num(raw["h"], "h", positive=True)
        n = 1.0 / h
        if abs(n - round(n)) > 1e-9 * n:
            raise ValueError(f"h: axial spacing {h} must divide the unit period")
        cpu = int(round(n))
    else:
        cpu = _num(raw["cells_per_unit"], "cells_per_unit", integer=True, positive=True)

    ks = raw.get("k_sequence", DEFAULT_K_SEQUENCE)
    if not isinstance(ks, list) or not ks:
        raise SchemaError("k_sequence", "expected a nonempty list")
    ks = tuple(_num(k, f"k_sequence[{i}]", positive=True) for i, k in enumerate(ks))
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_sequence: must be strictly increasing")
    for i, k in enumerate(ks):
        if abs(k * cpu - round(k * cpu)) > 1e-9:
            raise ValueError(f"k_sequence[{i}]: k={k} is not a multiple of the axial spacing")
    window = _num(_opt(raw, "window", 2.0), "window", positive=True)

    coeffs = raw.get("coefficients")
    if coeffs is None:
        raise SchemaError("coefficients", "required")
    _strict(coeffs, {"a", "b"}, "coefficients")
    for key in ("a", "b"):
        if key not in coeffs:
            raise SchemaError(f"coefficients.{key}", "required")
    a = parse_zones(coeffs["a"], dim, "coefficients.a")
    b = parse_zones(coeffs["b"], dim, "coefficients.b")
    f = parse_field(_opt(raw, "f", 0.0), "f")
    g = raw.get("g")
    g = None if g is None else parse_field(g, "g")
    ell = raw.get("ellipticity")
    ell = None if ell is None else _num(ell, "ellipticity", positive=True)
    try:
        model = CoefficientModel(dim, a, b, f, g, ell)
    except ValueError as exc:
        raise ValueError(f"coefficients: {exc}") from None

    limits = _opt(raw, "limits", {})
    _strict(limits, {"K_minus", "K_plus"}, "limits")
    km = _num(_opt(limits, "K_minus", 0.0), "limits.K_minus")
    kp = _num(_opt(limits, "K_plus", 0.0), "limits.K_plus")

    regime = raw.get("regime")
    if regime is not None:
        try:
            regime = RegimeTag(regime)
        except ValueError:
            raise SchemaError("regime", f"unknown regime {regime!r}") from None

    sv = _opt(raw, "solver", {})
    _strict(sv, SOLVER_KEYS, "solver")
    try:
        scheme = Scheme(_opt(sv, "scheme", "upwind"))
    except ValueError:
        raise SchemaError("solver.scheme", "expected 'upwind' or 'central'") from None
    method = sv.get("method")
    if method is not None:
        try:
            method = Method(method)
        except ValueError:
            raise SchemaError("solver.method", "expected 'direct' or 'iterative'") from None
    ct = sv.get("compat_tol")

    semi_raw = _opt(raw, "semi", {})
    _strict(semi_raw, {"phi", "K", "k"}, "semi")
    semi = SemiSpec(
        _num(_opt(semi_raw, "phi", 1.0), "semi.phi"),
        _num(_opt(semi_raw, "K", 0.0), "semi.K"),
        _num(_opt(semi_raw, "k", 12.0), "semi.k", positive=True),
    )
    out = _opt(raw, "output", {})
    _strict(out, {"dir"}, "output")

    cfg = RunConfig(
        dimension=dim, cross_section=cs, cells_per_unit=cpu, k_sequence=ks, window=window,
        model=model, K_minus=km, K_plus=kp, regime=regime, scheme=scheme, method=method,
        tol=_num(_opt(sv, "tol", 1e-6), "solver.tol", positive=True),
        compat_tol=None if ct is None else _num(ct, "solver.compat_tol", positive=True),
        linear_tol=_num(_opt(sv, "linear_tol", 1e-10), "solver.linear_tol", positive=True),
        max_iter=_num(_opt(sv, "max_iter", 10000), "solver.max_iter", integer=True, positive=True),
        eps_drift=_num(_opt(sv, "eps_drift", 1e-6), "solver.eps_drift", positive=True),
        semi=semi, output_dir=out.get("dir"),
    )
    mode = model.max_fourier_mode()
    if mode and cpu <= 2 * mode:
        msg = (f"cells_per_unit={cpu} under-resolves Fourier mode {mode} "
               f"(need more than {2 * mode}); coefficients will alias")
        cfg.warnings.append(msg)
        warnings.warn(msg, AliasingWarning, stacklevel=2)
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from None
    return config_from_dict(raw)


def set_path(d: dict, dotted: str, value) -> dict:
    """Copy of ``d`` with ``dotted`` (``a.b.0.c``; integers index lists) set to ``value``."""
    out = copy.deepcopy(d)
    keys = dotted.split(".")
    cur = out
    for key in keys[:-1]:
        cur = cur[int(key)] if isinstance(cur, list) else cur.setdefault(key, {})
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        cur[last] = value
    return out
