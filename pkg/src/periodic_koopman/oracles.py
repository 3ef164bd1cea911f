"""Ground truths that do not share code paths with :mod:`spectral`.

Closed-form spectra use Koopman eigenangles (``g o T = e^{i theta} g``).  The
atoms produced by :func:`spectral.atoms` carry the opposite sign, so compare
against :meth:`ClosedFormSpectrum.mirrored` whenever the spectrum is not
symmetric.

The dense oracle builds the full permutation matrix and its DFT eigenbasis
explicitly, and uses scipy quadrature for every kernel integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .spectral import Interval, SpectralAtomSet, wrap_angle

TWO_PI = 2.0 * np.pi
DENSE_LIMIT = 2048
L1_GRID_POINTS = 2048


def _bump(s: float) -> float:
    return float(np.exp(-1.0 / (1.0 - s * s))) if abs(s) < 1.0 else 0.0


@lru_cache(maxsize=None)
def kernel_constant() -> float:
    val, _ = integrate.quad(_bump, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 / val


def kernel(theta, xi, alpha: float):
    """Bump kernel at circle distance ``|theta - xi|``, evaluated elementwise."""
    d = np.abs(np.angle(np.exp(1j * (np.asarray(theta, dtype=float) - np.asarray(xi, dtype=float)))))
    s = d / alpha
    out = np.zeros(np.broadcast(s).shape)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return kernel_constant() / alpha * out


@lru_cache(maxsize=None)
def cosine_transform(k: int, alpha: float) -> float:
    """``int phi_alpha(u) cos(k u) du``, the Fourier multiplier of the kernel."""
    val, _ = integrate.quad(lambda s: _bump(s) * np.cos(k * alpha * s), -1.0, 1.0,
                            epsabs=1e-15, epsrel=1e-13, limit=400)
    return kernel_constant() * val


def l1_distance(f, g, R: int = L1_GRID_POINTS) -> float:
    """L1 distance of two curves sampled on the uniform ``R``-point grid of ``[-pi, pi)``."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (R,) or g.shape != (R,):
        raise ValueError(f"curves must have {R} samples")
    return float(np.sum(np.abs(f - g)) * TWO_PI / R)


# -- closed forms -------------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormSpectrum:
    """Point masses plus a continuous density ``sum_k c_k cos(k theta)``."""

    atoms: tuple[tuple[float, float], ...] = ()
    cosine_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if any(m < 0 for _, m in self.atoms):
            raise ValueError("atom masses must be non-negative")

    def continuous_part(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.zeros_like(th)
        for k, c in enumerate(self.cosine_coeffs):
            out = out + c * np.cos(k * th)
        return out

    @property
    def total_mass(self) -> float:
        c0 = self.cosine_coeffs[0] if self.cosine_coeffs else 0.0
        return sum(m for _, m in self.atoms) + TWO_PI * c0

    def mirrored(self) -> ClosedFormSpectrum:
        return ClosedFormSpectrum(tuple((float(wrap_angle(-a)), m) for a, m in self.atoms),
                                  self.cosine_coeffs)

    def mollified(self, alpha: float, thetas) -> np.ndarray:
        th = np.asarray(thetas, dtype=float)
        out = np.zeros_like(th)
        for k, c in enumerate(self.cosine_coeffs):
            out = out + c * cosine_transform(k, alpha) * np.cos(k * th)
        for a, m in self.atoms:
            out = out + m * kernel(th, a, alpha)
        return out

    def window_mass(self, center: float, half_width: float) -> float:
        """Spectral mass of the arc ``[center - h, center + h)``."""
        arc = Interval.arc(center - half_width, center + half_width)
        mass = sum(m for a, m in self.atoms if arc.contains(a))
        lo, hi = center - half_width, center + half_width
        for k, c in enumerate(self.cosine_coeffs):
            mass += c * (hi - lo) if k == 0 else c * (np.sin(k * hi) - np.sin(k * lo)) / k
        return float(mass)


def translation_spectrum(omega, modes) -> ClosedFormSpectrum:
    """Atoms ``(2 pi k.omega mod 2 pi, |a_k|^2)`` of a Fourier sum under rotation by ``omega``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    merged: dict[float, float] = {}
    for k, a in modes:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if k.shape != omega.shape:
            raise ValueError("wave vector and rotation vector differ in length")
        ang = float(wrap_angle(TWO_PI * np.mod(k @ omega, 1.0)))
        key = next((x for x in merged if abs(np.angle(np.exp(1j * (x - ang)))) < 1e-12), ang)
        merged[key] = merged.get(key, 0.0) + abs(complex(a)) ** 2
    return ClosedFormSpectrum(tuple(sorted(merged.items())))


def catmap_spectrum(which: str) -> ClosedFormSpectrum:
    """Lebesgue densities of the three cat-map test observables."""
    table = {
        "g1": (1.0,),
        "g2": (5 / 4, 1.0),
        "g3": (21 / 16, 10 / 8, 1 / 2),
    }
    if which not in table:
        raise ValueError(f"no closed form for cat-map observable {which!r}")
    return ClosedFormSpectrum((), tuple(c / TWO_PI for c in table[which]))


def anzai_spectrum(gamma: float, observable: str = "g_anzai") -> ClosedFormSpectrum:
    """Mixed spectrum of the builtin Anzai observable at ``gamma = 1/3``.

    The modes ``e^{2 pi i k x1}`` (k = 1, 2, 3; amplitudes 1/20, 1/20, 1/5) are
    eigenfunctions with angles ``2 pi k / 3``; the remaining two modes form a
    chain under the skew shift and contribute ``(5/4 + cos theta) / 2 pi``.
    """
    if observable != "g_anzai" or abs(gamma - 1 / 3) > 1e-12:
        raise ValueError("closed form available only for gamma = 1/3 with g_anzai")
    atoms = ((float(wrap_angle(-TWO_PI / 3)), 1 / 400), (0.0, 1 / 25), (TWO_PI / 3, 1 / 400))
    return ClosedFormSpectrum(atoms, (5 / 4 / TWO_PI, 1 / TWO_PI))


def anzai_printed_spectrum() -> ClosedFormSpectrum:
    """The atom placement as usually quoted for this example (0 and 2 pi/3 light, 4 pi/3 heavy)."""
    atoms = ((float(wrap_angle(4 * np.pi / 3)), 1 / 25), (0.0, 1 / 400), (TWO_PI / 3, 1 / 400))
    return ClosedFormSpectrum(atoms, (5 / 4 / TWO_PI, 1 / TWO_PI))


# -- dense eigendecomposition -------------------------------------------------


@dataclass(frozen=True, eq=False)
class DenseOracle:
    """Explicit eigenbasis of a small permutation matrix and the resulting atoms."""

    matrix: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    atoms: SpectralAtomSet
    coefficients: np.ndarray

    @property
    def q(self) -> int:
        return len(self.eigvals)

    def project(self, g, interval: Interval, mode: str = "hard", alpha: float | None = None) -> np.ndarray:
        if mode == "hard":
            w = interval.contains(self.atoms.angle).astype(float)
        elif mode == "mollified":
            w = np.array([mollified_indicator(interval, th, alpha) for th in self.atoms.angle])
        else:
            raise ValueError(f"unknown projection mode {mode!r}")
        V = self.eigvecs
        return V @ (w * (V.conj().T @ np.asarray(g, dtype=complex)))

    def density(self, alpha: float, thetas) -> np.ndarray:
        out = []
        for th in np.asarray(thetas, dtype=float):
            out.append(sum(m * kernel(th, a, alpha) for a, m in zip(self.atoms.angle, self.atoms.mass)))
        return np.asarray(out, dtype=float)


def mollified_indicator(interval: Interval, theta: float, alpha: float) -> float:
    """``int_D phi_alpha(theta, xi) d xi`` by adaptive quadrature."""
    total = 0.0
    for lo, hi in interval.pieces():
        breaks = [float(wrap_angle(theta + s)) for s in (-alpha, 0.0, alpha) if alpha < np.pi]
        pts = sorted(p for p in breaks if lo < p < hi)
        val, _ = integrate.quad(lambda xi: float(kernel(theta, xi, alpha)), lo, hi,
                                points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=400)
        total += val
    return total


def _orbits(target: np.ndarray) -> list[list[int]]:
    seen = set()
    out = []
    for start in range(len(target)):
        if start in seen:
            continue
        orbit = [start]
        seen.add(start)
        nxt = int(target[start])
        while nxt != start:
            orbit.append(nxt)
            seen.add(nxt)
            nxt = int(target[nxt])
        out.append(orbit)
    return out


def dense_eig_oracle(perm, g=None) -> DenseOracle:
    """Dense DFT eigendecomposition of ``U e_j = e_{T_n(j)}`` with atoms of ``g``.

    Eigenvectors on an orbit ``j(0), ..., j(L-1)`` are ``e^{-2 pi i t r / L} / sqrt(L)``
    at ``j(r)``, with eigenvalue ``e^{2 pi i t / L}``.  The eigen-equation and
    unitarity of the assembled basis are asserted before returning.
    """
    q = perm.q
    if q > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to q <= {DENSE_LIMIT}, got {q}")
    target = np.asarray(perm.target)
    P = np.zeros((q, q))
    P[target, np.arange(q)] = 1.0

    V = np.zeros((q, q), dtype=complex)
    lam = np.zeros(q, dtype=complex)
    lengths = np.zeros(q, dtype=np.int64)
    cycle = np.zeros(q, dtype=np.int64)
    col = 0
    for cid, orbit in enumerate(_orbits(target)):
        L = len(orbit)
        for t in range(L):
            for r, j in enumerate(orbit):
                V[j, col] = np.exp(-2j * np.pi * t * r / L) / np.sqrt(L)
            lam[col] = np.exp(2j * np.pi * t / L)
            lengths[col] = L
            cycle[col] = cid
            col += 1
    if not np.allclose(P @ V, V * lam, atol=1e-12, rtol=0):
        raise AssertionError("assembled vectors are not eigenvectors")
    if not np.allclose(V.conj().T @ V, np.eye(q), atol=1e-12, rtol=0):
        raise AssertionError("assembled eigenbasis is not orthonormal")

    angles = wrap_angle(np.angle(lam))
    # eigenvalue -1 may come out as angle +pi or -pi depending on rounding
    angles = np.where(np.abs(np.abs(angles) - np.pi) < 1e-12, -np.pi, angles)
    if g is None:
        g = np.zeros(q, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if g.shape != (q,):
        raise ValueError(f"observable has shape {g.shape}, expected ({q},)")
    coef = V.conj().T @ g
    mass = np.abs(coef) ** 2 / q
    return DenseOracle(P, V, lam, SpectralAtomSet(angles, mass, lengths, cycle), coef)
