"""Model files: JSON documents describing a regime-switching diffusion.

Schema overview (all 1-based regime/state indices in files)::

    {
      "regimes": <int> | "infinite",
      "q": {"kind": "matrix", "entries": [[...], ...]}
         | {"kind": "rates", "entries": [{"i":1,"j":2,"expr":"...",
                                          "inf": ..?, "sup": ..?}, ...],
            "scan": {"lo":..,"hi":..,"points":..?,"spacing":..?}?}
         | {"kind": "birth-death", "a": <down>, "b": <up>, "K0": 1,
            "up"?: [...], "down"?: [...]},
      "drift"?:  {"kind": "power", "b": [...], "delta": <float>}
               | {"kind": "ou", "b": [...]}
               | {"kind": "radial", "delta": <float>,
                  "radial_component": [[...per regime...], ...]},
      "sigma"?: <float> | [<float>, ...],
      "lyapunov"?: {"beta": [...], "tag": "to-infinity"|"to-zero"}
                 | {"preset": "abs"}                       # V = |x|
                 | {"preset": "inverse-abs", "r0": <float>} # V = 1/|x|
                 | {"beta_values": [...], "beta_tail_limit": <float>,
                    "tag": ...}                             # infinite chains
      "two_function"?: {"beta": [...], "h_limit": "to-infinity"|"to-zero"},
      "partition"?: {"cutpoints": [...]},
      "boundary"?: "none" | "reflect",
      "dimension"?: <int>
    }

Unknown keys are rejected anywhere in the document and all numbers must be
finite.  Rate expressions are arithmetic in the single variable ``x`` with
exp/log/sqrt/sin/cos/tanh/abs and the constants pi and e.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .criteria import Limit, LyapunovBehavior, TwoFunctionData
from .errors import ParseError, SchemaError
from .markov import BetaSequence, QMatrix, ScanGrid, StateDependentRates, \
    TailHomogeneousChain, validate_qmatrix

_ALLOWED_FUNCS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt,
                  "sin": np.sin, "cos": np.cos, "tanh": np.tanh, "abs": np.abs}
_ALLOWED_NAMES = {"pi": math.pi, "e": math.e}
_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def compile_rate_expr(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile an arithmetic expression in x into a vectorised callable."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"bad rate expression {expr!r}: {exc}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name) and (node.id == "x" or node.id in _ALLOWED_NAMES):
            pass
        elif (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
              and node.func.id in _ALLOWED_FUNCS and len(node.args) == 1
              and not node.keywords):
            check(node.args[0])
        else:
            raise ParseError(f"disallowed construct in rate expression {expr!r}")

    check(tree)
    code = compile(tree, "<rate-expr>", "eval")
    namespace = {"__builtins__": {}}
    namespace.update(_ALLOWED_FUNCS)
    namespace.update(_ALLOWED_NAMES)

    def fn(x: np.ndarray) -> np.ndarray:
        local = dict(namespace)
        local["x"] = x
        return np.asarray(eval(code, local), dtype=float)  # noqa: S307 (whitelisted AST)

    return fn


# ---------------------------------------------------------------------------
# schema validation helpers
# ---------------------------------------------------------------------------

def _require_keys(doc: dict, where: str, required: tuple, optional: tuple = ()):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where} must be an object")
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise SchemaError(f"{where}: missing keys {missing}")


def _finite_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} must be a number")
    v = float(value)
    if not math.isfinite(v):
        raise SchemaError(f"{where} must be finite")
    return v


def _finite_vector(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{where} must be a nonempty array of numbers")
    return np.array([_finite_number(v, f"{where}[{k}]") for k, v in enumerate(value)])


def _finite_matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{where} must be a nonempty array of rows")
    rows = [_finite_vector(r, f"{where}[{k}]") for k, r in enumerate(value)]
    if len({r.size for r in rows}) != 1:
        raise SchemaError(f"{where} rows have uneven lengths")
    return np.vstack(rows)


def _limit_tag(value, where: str) -> Limit:
    try:
        return Limit(value)
    except ValueError:
        raise SchemaError(f"{where} must be 'to-infinity' or 'to-zero'") from None


# ---------------------------------------------------------------------------
# the parsed model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegimeModel:
    """A fully parsed model document plus the derived library objects."""

    doc: dict
    infinite: bool
    n_regimes: Optional[int]
    q_kind: str
    qmatrix: Optional[QMatrix]
    rates: Optional[StateDependentRates]
    scan: Optional[ScanGrid]
    chain: Optional[TailHomogeneousChain]
    drift_kind: Optional[str]
    drift_b: Optional[np.ndarray]
    delta: Optional[float]
    radial_component: Optional[np.ndarray]
    sigma: Optional[np.ndarray]
    dim: int
    boundary: str
    lyapunov: Optional[LyapunovBehavior]
    beta_seq: Optional[BetaSequence]
    cutpoints: Optional[tuple]
    two_function: Optional[TwoFunctionData]


def _parse_q(doc, n_regimes, infinite):
    _require_keys(doc, "q", ("kind",),
                  ("entries", "scan", "a", "b", "K0", "up", "down"))
    kind = doc.get("kind")
    if kind == "matrix":
        _require_keys(doc, "q(matrix)", ("kind", "entries"))
        if infinite:
            raise SchemaError("q.kind 'matrix' needs a finite regime count")
        m = _finite_matrix(doc["entries"], "q.entries")
        if m.shape != (n_regimes, n_regimes):
            raise SchemaError("q.entries must be n x n for the declared regime count")
        return "matrix", validate_qmatrix(m), None, None, None
    if kind == "rates":
        _require_keys(doc, "q(rates)", ("kind", "entries"), ("scan",))
        if infinite:
            raise SchemaError("q.kind 'rates' needs a finite regime count")
        table = doc["entries"]
        if not isinstance(table, list) or not table:
            raise SchemaError("q.entries must be a nonempty array of rate entries")
        fns = {}
        hints = {}
        for k, ent in enumerate(table):
            _require_keys(ent, f"q.entries[{k}]", ("i", "j", "expr"), ("inf", "sup"))
            i, j = ent["i"], ent["j"]
            if not (isinstance(i, int) and isinstance(j, int)
                    and 1 <= i <= n_regimes and 1 <= j <= n_regimes and i != j):
                raise SchemaError(f"q.entries[{k}]: bad index pair ({i},{j})")
            fns[(i - 1, j - 1)] = compile_rate_expr(str(ent["expr"]))
            if "inf" in ent and "sup" in ent:
                hints[(i - 1, j - 1)] = (_finite_number(ent["inf"], f"q.entries[{k}].inf"),
                                         _finite_number(ent["sup"], f"q.entries[{k}].sup"))
            elif "inf" in ent or "sup" in ent:
                raise SchemaError(f"q.entries[{k}]: give both inf and sup hints or neither")

        def rate_fn(x, i, j, _fns=fns):
            f = _fns.get((i, j))
            return f(np.asarray(x, dtype=float)) if f is not None else np.zeros_like(
                np.asarray(x, dtype=float))

        scan = None
        if "scan" in doc:
            sc = doc["scan"]
            _require_keys(sc, "q.scan", ("lo", "hi"), ("points", "spacing"))
            scan = ScanGrid(lo=_finite_number(sc["lo"], "q.scan.lo"),
                            hi=_finite_number(sc["hi"], "q.scan.hi"),
                            points=int(sc.get("points", 129)),
                            spacing=str(sc.get("spacing", "geometric")))
        rates = StateDependentRates(n=n_regimes, rate_fn=rate_fn, hints=hints or None)
        return "rates", None, rates, scan, None
    if kind == "birth-death":
        _require_keys(doc, "q(birth-death)", ("kind", "a", "b"), ("K0", "up", "down"))
        k0 = doc.get("K0", 1)
        if not isinstance(k0, int) or k0 < 1:
            raise SchemaError("q.K0 must be a positive integer")
        if "up" in doc or "down" in doc:
            up = tuple(_finite_vector(doc.get("up"), "q.up"))
            down = tuple(_finite_vector(doc.get("down"), "q.down"))
        else:
            up = tuple([_finite_number(doc["b"], "q.b")] * k0)
            down = tuple([_finite_number(doc["a"], "q.a")] * k0)
        chain = TailHomogeneousChain(up_rates=up, down_rates=down, K0=k0)
        return "birth-death", None, None, None, chain
    raise SchemaError(f"q.kind must be matrix | rates | birth-death, got {kind!r}")


def _parse_drift(doc, n_regimes):
    if doc is None:
        return None, None, None, None
    _require_keys(doc, "drift", ("kind",), ("b", "delta", "radial_component"))
    kind = doc.get("kind")
    if kind == "power":
        _require_keys(doc, "drift(power)", ("kind", "b", "delta"))
        b = _finite_vector(doc["b"], "drift.b")
        delta = _finite_number(doc["delta"], "drift.delta")
        if n_regimes is not None and b.size != n_regimes:
            raise SchemaError("drift.b must have one entry per regime")
        if not -1.0 <= delta <= 1.0:
            raise SchemaError("drift.delta must lie in [-1, 1]")
        return "power", b, delta, None
    if kind == "ou":
        _require_keys(doc, "drift(ou)", ("kind", "b"))
        b = _finite_vector(doc["b"], "drift.b")
        if n_regimes is not None and b.size != n_regimes:
            raise SchemaError("drift.b must have one entry per regime")
        return "ou", b, 1.0, None
    if kind == "radial":
        _require_keys(doc, "drift(radial)", ("kind", "delta", "radial_component"))
        comp = _finite_matrix(doc["radial_component"], "drift.radial_component")
        delta = _finite_number(doc["delta"], "drift.delta")
        if n_regimes is not None and comp.shape[1] != n_regimes:
            raise SchemaError("drift.radial_component columns must match the regime count")
        if not -1.0 <= delta < 1.0:
            raise SchemaError("drift.delta must lie in [-1, 1) for radial profiles")
        return "radial", None, delta, comp
    raise SchemaError(f"drift.kind must be power | ou | radial, got {kind!r}")


def _parse_lyapunov(doc, n_regimes, infinite, drift_b, sigma):
    if doc is None:
        return None, None
    _require_keys(doc, "lyapunov", (),
                  ("beta", "tag", "preset", "r0", "beta_values", "beta_tail_limit"))
    if "preset" in doc:
        preset = doc["preset"]
        if drift_b is None:
            raise SchemaError("lyapunov presets need a power/ou drift section")
        if preset == "abs":
            # V = |x| with linear drift: L_i V = b_i V for large |x|
            return LyapunovBehavior(tag=Limit.TO_INFINITY, beta=drift_b), None
        if preset == "inverse-abs":
            r0 = _finite_number(doc.get("r0", 10.0), "lyapunov.r0")
            if r0 <= 0:
                raise SchemaError("lyapunov.r0 must be positive")
            sig = np.broadcast_to(sigma if sigma is not None else np.array([1.0]),
                                  drift_b.shape)
            beta = -drift_b + (sig ** 2) / r0 ** 2
            return LyapunovBehavior(tag=Limit.TO_ZERO, beta=beta, r0=r0), None
        raise SchemaError(f"unknown lyapunov preset {preset!r}")
    if infinite:
        _require_keys(doc, "lyapunov(sequence)", ("beta_values", "beta_tail_limit", "tag"))
        head = tuple(_finite_vector(doc["beta_values"], "lyapunov.beta_values"))
        limit = _finite_number(doc["beta_tail_limit"], "lyapunov.beta_tail_limit")
        tag = _limit_tag(doc["tag"], "lyapunov.tag")
        seq = BetaSequence(head=head, tail_limit=limit)
        return LyapunovBehavior(tag=tag, beta=np.array(head)), seq
    _require_keys(doc, "lyapunov", ("beta", "tag"), ("r0",))
    beta = _finite_vector(doc["beta"], "lyapunov.beta")
    if n_regimes is not None and beta.size != n_regimes:
        raise SchemaError("lyapunov.beta must have one entry per regime")
    r0 = _finite_number(doc["r0"], "lyapunov.r0") if "r0" in doc else None
    return LyapunovBehavior(tag=_limit_tag(doc["tag"], "lyapunov.tag"),
                            beta=beta, r0=r0), None


def parse_model(doc: dict, source: str = "<dict>") -> RegimeModel:
    """Validate a model document and build the derived library objects."""
    _require_keys(doc, f"model {source}", ("regimes", "q"),
                  ("drift", "sigma", "lyapunov", "two_function", "partition",
                   "boundary", "dimension"))
    regimes = doc["regimes"]
    if regimes == "infinite":
        infinite, n_regimes = True, None
    elif isinstance(regimes, int) and not isinstance(regimes, bool) and regimes >= 1:
        infinite, n_regimes = False, regimes
    else:
        raise SchemaError("regimes must be a positive integer or 'infinite'")

    q_kind, qmatrix, rates, scan, chain = _parse_q(doc["q"], n_regimes, infinite)
    drift_kind, drift_b, delta, radial = _parse_drift(doc.get("drift"), n_regimes)

    sigma = None
    if "sigma" in doc:
        raw = doc["sigma"]
        sigma = (_finite_vector(raw, "sigma") if isinstance(raw, list)
                 else np.array([_finite_number(raw, "sigma")]))
        if n_regimes is not None and sigma.size not in (1, n_regimes):
            raise SchemaError("sigma must be a scalar or one value per regime")
        if np.abs(sigma).min() == 0:
            raise SchemaError("sigma entries must be nonzero")

    lyap, beta_seq = _parse_lyapunov(doc.get("lyapunov"), n_regimes, infinite,
                                     drift_b, sigma)

    two = None
    if "two_function" in doc:
        td = doc["two_function"]
        _require_keys(td, "two_function", ("beta", "h_limit"))
        beta = _finite_vector(td["beta"], "two_function.beta")
        if n_regimes is not None and beta.size != n_regimes:
            raise SchemaError("two_function.beta must have one entry per regime")
        two = TwoFunctionData(beta=beta, h_limit=_limit_tag(td["h_limit"],
                                                            "two_function.h_limit"))

    cutpoints = None
    if "partition" in doc:
        pd = doc["partition"]
        _require_keys(pd, "partition", ("cutpoints",))
        cutpoints = tuple(_finite_vector(pd["cutpoints"], "partition.cutpoints"))

    boundary = doc.get("boundary", "none")
    if boundary not in ("none", "reflect"):
        raise SchemaError("boundary must be 'none' or 'reflect'")
    dim = doc.get("dimension", 1)
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError("dimension must be a positive integer")
    if boundary == "reflect" and dim != 1:
        raise SchemaError("boundary 'reflect' needs dimension 1")

    return RegimeModel(doc=doc, infinite=infinite, n_regimes=n_regimes, q_kind=q_kind,
                       qmatrix=qmatrix, rates=rates, scan=scan, chain=chain,
                       drift_kind=drift_kind, drift_b=drift_b, delta=delta,
                       radial_component=radial, sigma=sigma, dim=dim,
                       boundary=boundary, lyapunov=lyap, beta_seq=beta_seq,
                       cutpoints=cutpoints, two_function=two)


def load_model(path) -> RegimeModel:
    """Parse a model file; ParseError for bad JSON, SchemaError for bad shape."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh, parse_constant=_reject_constant)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from None
    return parse_model(doc, source=str(path))


def _reject_constant(name: str):
    raise ParseError(f"non-finite JSON literal {name!r} is not allowed")
