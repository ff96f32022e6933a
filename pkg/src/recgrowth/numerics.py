"""Scalar root finding, cubic roots and uniform-grid functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidBracket, NoConvergence

__all__ = [
    "Bracket",
    "RootResult",
    "CubicRoots",
    "GridFunction",
    "bisect",
    "scan_brackets",
    "solve_cubic",
    "companion_roots",
]

ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class Bracket:
    """Interval ``[lo, hi]`` over which ``f`` changes sign.

    ``exact`` marks an endpoint where ``f`` vanished; :attr:`exact_root`
    then returns it.
    """

    lo: float
    hi: float
    f_lo: float
    f_hi: float
    exact: bool = False

    @property
    def exact_root(self) -> float:
        return self.lo if self.f_lo == 0.0 else self.hi

    @classmethod
    def from_function(cls, f: ScalarFn, lo: float, hi: float) -> "Bracket":
        flo, fhi = float(f(lo)), float(f(hi))
        if not lo < hi:
            raise InvalidBracket(f"need lo < hi, got [{lo}, {hi}]")
        if flo == 0.0 or fhi == 0.0:
            return cls(lo, hi, flo, fhi, exact=True)
        if not (flo * fhi < 0.0):
            raise InvalidBracket(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
        return cls(lo, hi, flo, fhi)


@dataclass(frozen=True)
class RootResult:
    root: float
    f_root: float
    iterations: int
    width: float


@dataclass(frozen=True)
class CubicRoots:
    """Real roots of the monic cubic ``x**3 + c2 x**2 + c1 x + c0``."""

    coefficients: tuple[float, float, float, float]
    roots: tuple[float, ...]
    all_real: bool

    def residuals(self) -> np.ndarray:
        _, c2, c1, c0 = self.coefficients
        r = np.asarray(self.roots, dtype=float)
        return np.abs(((r + c2) * r + c1) * r + c0)


def bisect(f: ScalarFn, bracket: Bracket, tol: float = 1e-12, max_iter: int = 200) -> RootResult:
    """Midpoint bisection on a sign-change bracket.

    Parameters
    ----------
    f : callable
        Scalar function.
    bracket : Bracket
        Interval with ``f_lo * f_hi < 0`` (or an exact node hit).
    tol : float
        Terminal bracket width.
    max_iter : int
        Iteration budget.

    Returns
    -------
    RootResult
        Midpoint of the final bracket and its residual.

    Raises
    ------
    NoConvergence
        If ``max_iter`` halvings do not reach ``tol``.
    """
    if bracket.exact:
        return RootResult(bracket.exact_root, 0.0, 0, 0.0)
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    lo, hi, flo = float(bracket.lo), float(bracket.hi), float(bracket.f_lo)
    if not (bracket.f_lo * bracket.f_hi < 0.0):
        raise InvalidBracket("bracket has no sign change")
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        fm = float(f(mid))
        if fm == 0.0:
            return RootResult(mid, 0.0, it, 0.0)
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol:
            mid = 0.5 * (lo + hi)
            return RootResult(mid, float(f(mid)), it, hi - lo)
    raise NoConvergence(f"bisection did not reach width {tol} in {max_iter} steps")


def scan_brackets(f: ScalarFn, interval: tuple[float, float], n_grid: int = 1000) -> list[Bracket]:
    """Every adjacent node pair of a uniform grid where ``f`` changes sign.

    Nodes where ``f`` is not finite are treated as gaps, so no bracket
    straddles them. A node where ``f`` is exactly zero is returned as an
    exact bracket spanning that node and one neighbour (one grid cell).
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    xs = np.linspace(float(interval[0]), float(interval[1]), n_grid)
    fs = np.array([float(f(x)) for x in xs])
    out: list[Bracket] = []
    n = len(xs)
    for m in range(n):
        if fs[m] == 0.0:
            if m + 1 < n:
                out.append(Bracket(xs[m], xs[m + 1], 0.0, fs[m + 1], exact=True))
            else:
                out.append(Bracket(xs[m - 1], xs[m], fs[m - 1], 0.0, exact=True))
            continue
        if m + 1 < n and np.isfinite(fs[m]) and np.isfinite(fs[m + 1]) \
                and fs[m + 1] != 0.0 and fs[m] * fs[m + 1] < 0.0:
            out.append(Bracket(xs[m], xs[m + 1], fs[m], fs[m + 1]))
    return out


def _polish(r: float, c2: float, c1: float, c0: float) -> float:
    for _ in range(3):
        p = ((r + c2) * r + c1) * r + c0
        dp = (3.0 * r + 2.0 * c2) * r + c1
        if dp == 0.0 or p == 0.0:
            break
        step = p / dp
        if not math.isfinite(step):
            break
        r_new = r - step
        p_new = ((r_new + c2) * r_new + c1) * r_new + c0
        if abs(p_new) >= abs(p):
            break
        r = r_new
    return r


def solve_cubic(c2: float, c1: float, c0: float) -> CubicRoots:
    """Real roots of ``x**3 + c2 x**2 + c1 x + c0`` in closed form.

    The depressed cubic is solved trigonometrically when it has three real
    roots and by Cardano's formula otherwise; each root then receives a
    few guarded Newton corrections.
    """
    c2, c1, c0 = float(c2), float(c1), float(c0)
    if not all(math.isfinite(v) for v in (c2, c1, c0)):
        raise ValueError("coefficients must be finite")
    shift = c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    scale = max(1.0, abs(p) ** 1.5 / 5.196152422706632, abs(q) / 2.0) ** 2
    if p == 0.0 and q == 0.0:
        ts = [0.0, 0.0, 0.0]
        all_real = True
    elif disc <= 1e-14 * scale:
        if p >= 0.0:
            # repeated root with p == 0 exactly handled above; guard roundoff
            t = -math.copysign(abs(q) ** (1.0 / 3.0), q)
            ts = [t, t, t]
        else:
            m = 2.0 * math.sqrt(-p / 3.0)
            # 3q / (p m) without forming p * m, which underflows for tiny p
            arg = (1.5 * q / p) * math.sqrt(-3.0 / p)
            arg = max(-1.0, min(1.0, arg))
            theta = math.acos(arg) / 3.0
            ts = [m * math.cos(theta - 2.0 * math.pi * j / 3.0) for j in range(3)]
        all_real = True
    else:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
        v = math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
        ts = [u + v]
        all_real = False
    roots = sorted(_polish(t - shift, c2, c1, c0) for t in ts)
    return CubicRoots((1.0, c2, c1, c0), tuple(roots), all_real)


def companion_roots(c2: float, c1: float, c0: float) -> np.ndarray:
    """Eigenvalues of the companion matrix of a monic cubic (oracle)."""
    comp = np.array([[-c2, -c1, -c0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return np.linalg.eigvals(comp)


class GridFunction:
    """Piecewise-linear function sampled on a uniform grid.

    Arguments outside ``[lo, hi]`` are clamped to the interval, never
    extrapolated.

    Parameters
    ----------
    lo, hi : float
        Interval endpoints, ``lo < hi``.
    values : array_like
        Samples at ``n >= 3`` uniform nodes.
    """

    def __init__(self, lo: float, hi: float, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or values.size < 3:
            raise ValueError("need at least 3 samples")
        if not lo < hi:
            raise ValueError("need lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)
        self.values = values
        self.values.setflags(write=False)
        self.nodes = np.linspace(self.lo, self.hi, values.size)
        self.step = (self.hi - self.lo) / (values.size - 1)

    @classmethod
    def from_callable(cls, fn, lo: float, hi: float, n: int) -> "GridFunction":
        nodes = np.linspace(lo, hi, n)
        return cls(lo, hi, np.array([fn(x) for x in nodes], dtype=float))

    @property
    def n(self) -> int:
        return self.values.size

    def clamp(self, x):
        return np.clip(x, self.lo, self.hi)

    def evaluate(self, x):
        out = np.interp(self.clamp(np.asarray(x, dtype=float)), self.nodes, self.values)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    def compose_self(self, x):
        """``h(h(x))`` with the inner value clamped to the interval."""
        return self.evaluate(self.evaluate(x))

    def slope_at(self, x: float) -> float:
        """Central difference with a step of one grid cell."""
        return (self.evaluate(x + self.step) - self.evaluate(x - self.step)) / (2.0 * self.step)

    def sup_distance(self, other: "GridFunction") -> float:
        return float(np.max(np.abs(self.values - other.values)))

    def lipschitz_constant(self) -> float:
        return float(np.max(np.abs(np.diff(self.values)) / self.step))
