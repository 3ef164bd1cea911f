"""Lebesgue measure-preserving maps on the m-torus.

A :class:`TorusMap` is either an ordered composition of three primitive
building blocks (signed coordinate permutations, translations and shears),
each of which has an exact lattice counterpart, or a black-box point map
with a declared Lipschitz constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import wrap_unit

TWO_PI = 2.0 * np.pi


def round_half_down(z, tol: float = 1e-9) -> np.ndarray:
    """Nearest integer, ties (within relative ``tol``) resolved toward -inf."""
    z = np.asarray(z, dtype=float)
    f = np.floor(z)
    frac = z - f
    slack = tol * np.maximum(1.0, np.abs(z))
    return (f + (frac > 0.5 + slack)).astype(np.int64)


def _as_points(x, m: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != m:
        raise ValueError(f"expected points of dimension {m}, got shape {x.shape}")
    return x, single


# -- primitives -------------------------------------------------------------


@dataclass(frozen=True)
class SignedPermutation:
    """``y_i = sign_i * x_{sigma_i}``."""

    sigma: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        m = len(self.sigma)
        if sorted(self.sigma) != list(range(m)):
            raise ValueError(f"sigma is not a permutation of 0..{m - 1}: {self.sigma}")
        if len(self.signs) != m or any(s not in (-1, 1) for s in self.signs):
            raise ValueError(f"signs must be {m} entries of +-1, got {self.signs}")

    @property
    def m(self) -> int:
        return len(self.sigma)

    @property
    def lipschitz(self) -> float:
        return 1.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x[:, list(self.sigma)] * np.asarray(self.signs, dtype=float)

    def inverse(self) -> SignedPermutation:
        sigma = [0] * self.m
        signs = [1] * self.m
        for i, (s, e) in enumerate(zip(self.sigma, self.signs)):
            sigma[s] = i
            signs[s] = e
        return SignedPermutation(tuple(sigma), tuple(signs))

    def lattice(self, j: np.ndarray, n: int) -> np.ndarray:
        out = j[:, list(self.sigma)].copy()
        for i, s in enumerate(self.signs):
            if s < 0:
                # x -> -x sends the midpoint of cell j to the midpoint of cell n-1-j
                out[:, i] = (-out[:, i] - 1) % n
        return out

    def describe(self) -> dict:
        return {"type": "signed_permutation", "sigma": list(self.sigma), "signs": list(self.signs)}


@dataclass(frozen=True)
class Translation:
    """``y = x + omega (mod 1)``."""

    omega: tuple[float, ...]

    def __post_init__(self):
        if not all(math.isfinite(w) for w in self.omega):
            raise ValueError(f"translation vector must be finite, got {self.omega}")

    @property
    def m(self) -> int:
        return len(self.omega)

    @property
    def lipschitz(self) -> float:
        return 1.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x + np.asarray(self.omega)

    def inverse(self) -> Translation:
        return Translation(tuple(-w for w in self.omega))

    def shifts(self, n: int) -> np.ndarray:
        return round_half_down(n * np.asarray(self.omega))

    def lattice(self, j: np.ndarray, n: int) -> np.ndarray:
        return (j + self.shifts(n)) % n

    def describe(self) -> dict:
        return {"type": "translation", "omega": list(self.omega)}


@dataclass(frozen=True)
class Shear:
    """``y_axis = x_axis + f(x)``, all other coordinates unchanged.

    ``func`` receives the full ``(N, m)`` point array and must not read
    column ``axis``.  ``lipschitz_f`` bounds ``f`` in the max metric.  When
    ``int_coeffs`` is given, ``f(x) = sum_k c_k x_k`` with integer ``c_k`` and
    the lattice step is computed in exact integer arithmetic.
    """

    m: int
    axis: int
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    lipschitz_f: float
    label: str = ""
    int_coeffs: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0 <= self.axis < self.m:
            raise ValueError(f"shear axis {self.axis} out of range for dimension {self.m}")
        if self.int_coeffs is not None:
            if len(self.int_coeffs) != self.m or self.int_coeffs[self.axis] != 0:
                raise ValueError("integer shear coefficients must have length m and vanish on the shear axis")

    @classmethod
    def linear(cls, m: int, axis: int, coeffs: Sequence[int]) -> Shear:
        c = tuple(int(v) for v in coeffs)
        cf = np.asarray(c, dtype=float)
        terms = " + ".join(f"{v}*x{k}" for k, v in enumerate(c) if v)
        return cls(m, axis, lambda x: x @ cf, float(sum(abs(v) for v in c)),
                   label=terms or "0", int_coeffs=c)

    @property
    def lipschitz(self) -> float:
        return 1.0 + self.lipschitz_f

    def _f(self, x: np.ndarray) -> np.ndarray:
        v = np.asarray(self.func(x), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"shear function {self.label!r} returned non-finite values")
        return v

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = x.copy()
        y[:, self.axis] = x[:, self.axis] + self._f(x)
        return y

    def inverse(self) -> Shear:
        f = self.func
        coeffs = None if self.int_coeffs is None else tuple(-c for c in self.int_coeffs)
        return Shear(self.m, self.axis, lambda x: -np.asarray(f(x)), self.lipschitz_f,
                     label=f"-({self.label})", int_coeffs=coeffs)

    def lattice(self, j: np.ndarray, n: int) -> np.ndarray:
        out = j.copy()
        if self.int_coeffs is not None:
            c = np.asarray(self.int_coeffs, dtype=np.int64)
            # n * f(midpoint) = (2 c.j + sum c) / 2, rounded half-down exactly
            shift = (2 * (j @ c) + int(c.sum())) // 2
        else:
            shift = round_half_down(n * self._f((j + 0.5) / n))
        out[:, self.axis] = (j[:, self.axis] + shift) % n
        return out

    def describe(self) -> dict:
        return {"type": "shear", "axis": self.axis, "f": self.label}


MapPrimitive = SignedPermutation | Translation | Shear


# -- maps -------------------------------------------------------------------


@dataclass(frozen=True)
class TorusMap:
    """A measure-preserving map of the m-torus.

    Exactly one of ``primitives`` (applied first to last) or ``blackbox`` is
    set.  Black-box maps must carry a Lipschitz constant.
    """

    m: int
    primitives: tuple[MapPrimitive, ...] | None = None
    blackbox: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    lipschitz_bound: float | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)
    blackbox_inverse: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if (self.primitives is None) == (self.blackbox is None):
            raise ValueError("a TorusMap needs either a primitive list or a black-box function")
        if self.primitives is not None:
            for p in self.primitives:
                if p.m != self.m:
                    raise ValueError(f"primitive {p.describe()} has dimension {p.m}, map has {self.m}")
        elif self.lipschitz_bound is None:
            raise ValueError("black-box maps must declare a Lipschitz constant")
        if self.lipschitz_bound is not None and not (self.lipschitz_bound >= 0 and math.isfinite(self.lipschitz_bound)):
            raise ValueError(f"invalid Lipschitz constant {self.lipschitz_bound!r}")

    @classmethod
    def from_function(cls, m, func, lipschitz, name="blackbox", params=None, inverse=None) -> TorusMap:
        return cls(m, blackbox=func, lipschitz_bound=float(lipschitz), name=name,
                   params=dict(params or {}), blackbox_inverse=inverse)

    @property
    def is_analytic(self) -> bool:
        return self.primitives is not None

    @property
    def lipschitz(self) -> float:
        """Max-metric Lipschitz constant: declared, else the product over primitives."""
        if self.lipschitz_bound is not None:
            return self.lipschitz_bound
        return float(np.prod([p.lipschitz for p in self.primitives])) if self.primitives else 1.0

    def apply(self, x) -> np.ndarray:
        pts, single = _as_points(x, self.m)
        if self.blackbox is not None:
            y = np.asarray(self.blackbox(pts.copy()), dtype=float).reshape(pts.shape)
        else:
            y = pts
            for p in self.primitives:
                y = p.apply(y)
        y = wrap_unit(y)
        return y[0] if single else y

    __call__ = apply

    def inverse(self) -> TorusMap:
        if self.primitives is not None:
            inv = tuple(p.inverse() for p in reversed(self.primitives))
            return TorusMap(self.m, inv, lipschitz_bound=None, name=f"{self.name}^-1", params=self.params)
        if self.blackbox_inverse is None:
            raise NotImplementedError(f"black-box map {self.name!r} has no inverse")
        return TorusMap.from_function(self.m, self.blackbox_inverse, self.lipschitz,
                                      name=f"{self.name}^-1", params=self.params, inverse=self.blackbox)

    def as_blackbox(self) -> TorusMap:
        """Same point map, hidden behind the black-box interface."""
        inner = self
        inv = None
        if self.primitives is not None:
            inv_map = self.inverse()
            inv = inv_map.apply
        return TorusMap.from_function(self.m, inner.apply, self.lipschitz, name=self.name,
                                      params=self.params, inverse=inv)

    def describe(self) -> dict:
        out = {"name": self.name, "m": self.m, "params": self.params, "lipschitz": self.lipschitz}
        if self.primitives is not None:
            out["primitives"] = [p.describe() for p in self.primitives]
        return out


def _finite(name, *values):
    for v in values:
        if not math.isfinite(float(v)):
            raise ValueError(f"parameter {name} must be finite, got {v!r}")


def identity(m: int = 2) -> TorusMap:
    return TorusMap(m, (), name="identity", params={"m": m})


def translation(omega: Sequence[float]) -> TorusMap:
    omega = tuple(float(w) for w in np.atleast_1d(omega))
    _finite("omega", *omega)
    return TorusMap(len(omega), (Translation(omega),), lipschitz_bound=1.0,
                    name="translation", params={"omega": list(omega)})


def cat_map() -> TorusMap:
    """Arnold's cat map ``x -> [[2, 1], [1, 1]] x (mod 1)``.

    Built as ``S o W o S o W`` with ``W: x2 += x1`` and ``S`` the coordinate swap.
    """
    shear = Shear.linear(2, 1, (1, 0))
    swap = SignedPermutation((1, 0), (1, 1))
    return TorusMap(2, (shear, swap, shear, swap), lipschitz_bound=3.0, name="cat_map", params={})


def anzai(gamma: float) -> TorusMap:
    """Skew product ``(x1, x2) -> (x1 + gamma, x1 + x2)``."""
    _finite("gamma", gamma)
    gamma = float(gamma)
    return TorusMap(2, (Shear.linear(2, 1, (1, 0)), Translation((gamma, 0.0))), lipschitz_bound=2.0,
                    name="anzai", params={"gamma": gamma})


def chirikov(K: float) -> TorusMap:
    """Standard map ``(x1 + x2 + K sin 2 pi x1, x2 + K sin 2 pi x1)``.

    A kick ``x2 += K sin(2 pi x1)`` followed by the integer shear ``x1 += x2``.
    """
    _finite("K", K)
    K = float(K)
    kick = Shear(2, 1, lambda x: K * np.sin(TWO_PI * x[:, 0]), TWO_PI * abs(K), label=f"{K}*sin(2pi x0)")
    drift = Shear.linear(2, 0, (0, 1))
    return TorusMap(2, (kick, drift), lipschitz_bound=2.0 + TWO_PI * abs(K), name="chirikov", params={"K": K})


def abc(A: float, B: float, C: float) -> TorusMap:
    """Feingold's volume-preserving ABC map on the 3-torus (three shears)."""
    _finite("A/B/C", A, B, C)
    A, B, C = float(A), float(B), float(C)
    t1 = Shear(3, 0, lambda x: A * np.sin(TWO_PI * x[:, 2]) + C * np.cos(TWO_PI * x[:, 1]),
               TWO_PI * (abs(A) + abs(C)), label=f"{A}*sin(2pi x2) + {C}*cos(2pi x1)")
    t2 = Shear(3, 1, lambda x: B * np.sin(TWO_PI * x[:, 0]) + A * np.cos(TWO_PI * x[:, 2]),
               TWO_PI * (abs(B) + abs(A)), label=f"{B}*sin(2pi x0) + {A}*cos(2pi x2)")
    t3 = Shear(3, 2, lambda x: C * np.sin(TWO_PI * x[:, 1]) + B * np.cos(TWO_PI * x[:, 0]),
               TWO_PI * (abs(C) + abs(B)), label=f"{C}*sin(2pi x1) + {B}*cos(2pi x0)")
    return TorusMap(3, (t1, t2, t3), name="abc", params={"A": A, "B": B, "C": C})


BUILTIN_MAPS = {
    "identity": identity,
    "translation": translation,
    "cat_map": cat_map,
    "anzai": anzai,
    "chirikov": chirikov,
    "abc": abc,
}


def builtin(name: str, **params) -> TorusMap:
    try:
        factory = BUILTIN_MAPS[name]
    except KeyError:
        raise ValueError(f"unknown map {name!r}; choose from {sorted(BUILTIN_MAPS)}") from None
    return factory(**params)


# -- observables ------------------------------------------------------------


@dataclass(frozen=True)
class ObservableFunction:
    """A complex-valued function on the m-torus, evaluated on ``(N, m)`` arrays."""

    name: str
    m: int
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    modes: tuple[tuple[tuple[int, ...], complex], ...] | None = None

    def __call__(self, x) -> np.ndarray:
        pts, single = _as_points(x, self.m)
        v = np.asarray(self.func(pts), dtype=complex)
        return v[0] if single else v

    def norm2(self) -> float:
        """Exact ``||g||^2`` for finite Fourier sums (distinct modes)."""
        if self.modes is None:
            raise ValueError(f"observable {self.name!r} is not a finite Fourier sum")
        return float(sum(abs(a) ** 2 for _, a in self.modes))


def fourier_modes(modes, name: str = "fourier_modes") -> ObservableFunction:
    """``g(x) = sum_k a_k exp(2 pi i k.x)`` for a list of ``(k, a_k)`` pairs."""
    merged: dict[tuple[int, ...], complex] = {}
    for k, a in modes:
        k = tuple(int(v) for v in np.atleast_1d(k))
        merged[k] = merged.get(k, 0) + complex(a)
    if not merged:
        raise ValueError("at least one Fourier mode is required")
    dims = {len(k) for k in merged}
    if len(dims) != 1:
        raise ValueError(f"inconsistent wave-vector lengths {sorted(dims)}")
    m = dims.pop()
    ks = np.array(list(merged), dtype=float)
    amps = np.array(list(merged.values()), dtype=complex)

    def func(x):
        return np.exp(2j * np.pi * (x @ ks.T)) @ amps

    return ObservableFunction(name, m, func, tuple(merged.items()))


def _g_1d(x):
    s = x[:, 0]
    return np.sin(4 * np.pi * s) / (1.0 + np.cos(TWO_PI * s) ** 2 + np.sin(7 * np.pi * s))


def _g_2d_translation(x):
    x1, x2 = x[:, 0], x[:, 1]
    return (np.sin(TWO_PI * x1) * np.cos(TWO_PI * x2) + np.sin(np.pi * x2)
            + 1.0 / (np.sin(np.pi * x1) ** 2 + 1.0) - 1.0)


def _g_chirikov(x):
    x1, x2 = x[:, 0], x[:, 1]
    return np.exp(4j * np.pi * x1) + np.exp(3j * np.pi * x1) + 0.01 * np.exp(2j * np.pi * x2)


_CAT_MODES = [((2, 1), 1.0), ((5, 3), 0.5), ((13, 8), 0.25)]

_ANZAI_MODES = [((1, 0), 1 / 20), ((2, 0), 1 / 20), ((3, 0), 1 / 5), ((0, 1), 1.0), ((1, 1), 0.5)]


def builtin_observable(name: str) -> ObservableFunction:
    if name == "g_1d":
        return ObservableFunction(name, 1, _g_1d)
    if name == "g_2d_translation":
        return ObservableFunction(name, 2, _g_2d_translation)
    if name in ("g1", "g2", "g3"):
        return fourier_modes(_CAT_MODES[: int(name[1])], name=name)
    if name == "g_anzai":
        return fourier_modes(_ANZAI_MODES, name=name)
    if name == "g_chirikov":
        return ObservableFunction(name, 2, _g_chirikov)
    raise ValueError(f"unknown observable {name!r}; choose from {BUILTIN_OBSERVABLES}")


def constant(m: int, value: complex = 1.0) -> ObservableFunction:
    return fourier_modes([((0,) * m, value)], name="constant")


BUILTIN_OBSERVABLES = ("g_1d", "g_2d_translation", "g1", "g2", "g3", "g_anzai", "g_chirikov")


def sample(observable: Callable, partition) -> np.ndarray:
    """Observable values at the cell midpoints, in linear cell order."""
    return np.asarray(observable(partition.representative_points()), dtype=complex)
