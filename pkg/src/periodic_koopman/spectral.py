"""Spectra of lattice permutations via cycle decomposition and FFTs.

On a cycle ``j(0), j(1) = T_n(j(0)), ...`` of length ``L`` the permutation
matrix ``U e_j = e_{T_n(j)}`` is a cyclic shift, diagonalized by the DFT.  The
coefficient of bin ``t`` is ``c_t = sum_r exp(+2 pi i t r / L) g_{j(r)}`` and
belongs to the eigenangle ``2 pi t / L`` (wrapped to ``[-pi, pi)``).  These are
the eigenangles of the permutation matrix; the Koopman operator
``g -> g o T_n`` is its inverse and has the negated angles.  With this
convention ``<g, g o T_n^l> = sum_k exp(-i l theta_k) mass_k``.

Atom masses are ``|c_t|^2 / (L q)`` so that they sum to ``||g||^2`` under the
cell-measure inner product ``<f, g> = (1/q) sum_j conj(f_j) g_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi
_ARC_SNAP = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)
_LOCKSTEP_MIN = 64
_SEED_BATCH = 32768


def wrap_angle(theta) -> np.ndarray:
    """Reduce angles into ``[-pi, pi)``."""
    th = np.mod(np.asarray(theta, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(th >= np.pi, -np.pi, th)


def circle_distance(x, y) -> np.ndarray:
    d = np.abs(wrap_angle(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return np.minimum(d, TWO_PI - d)


def norm2(g) -> float:
    """``||g||^2`` with every cell weighted by ``1/q``."""
    g = np.asarray(g)
    return float(np.mean(np.abs(g) ** 2)) if g.size else 0.0


def inner(f, g) -> complex:
    return complex(np.vdot(f, g) / len(f))


# -- intervals and kernels ----------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Half-open arc ``[a, b)`` of ``[-pi, pi)``.

    With ``wrap`` set the arc crosses the cut at ``+-pi`` and stands for
    ``[a, pi) U [-pi, b)``.
    """

    a: float
    b: float
    wrap: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("interval endpoints must be finite")
        if not (-np.pi <= self.a <= np.pi and -np.pi <= self.b <= np.pi):
            raise ValueError(f"interval endpoints must lie in [-pi, pi], got [{self.a}, {self.b})")
        if self.wrap:
            if not self.b < self.a:
                raise ValueError("a wrapping interval needs b < a")
        elif not self.a < self.b:
            raise ValueError(f"empty interval [{self.a}, {self.b})")

    @classmethod
    def full(cls) -> Interval:
        return cls(-np.pi, np.pi)

    @classmethod
    def arc(cls, lo: float, hi: float) -> Interval:
        """Arc from ``lo`` to ``hi`` (any reals, ``lo < hi``), reduced onto the circle."""
        if not hi > lo:
            raise ValueError(f"need lo < hi, got [{lo}, {hi})")
        if hi - lo >= TWO_PI:
            return cls.full()
        a = float(wrap_angle(lo))
        b = a + (hi - lo)
        if b <= np.pi + _ARC_SNAP:
            # an arc ending at pi up to rounding must not pick up the bin at -pi
            return cls(a, min(b, np.pi))
        return cls(a, b - TWO_PI, wrap=True)

    def pieces(self) -> list[tuple[float, float]]:
        if self.wrap:
            return [(self.a, np.pi), (-np.pi, self.b)]
        return [(self.a, self.b)]

    @property
    def length(self) -> float:
        return sum(hi - lo for lo, hi in self.pieces())

    def contains(self, theta) -> np.ndarray:
        th = wrap_angle(theta)
        if self.wrap:
            return (th >= self.a) | (th < self.b)
        return (th >= self.a) & (th < self.b)


def _bump(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.zeros_like(s)
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_cumulative(v) -> np.ndarray:
    """``int_{-1}^{v} exp(-1/(1-s^2)) ds`` for ``v`` clipped to ``[-1, 1]``."""
    v = np.clip(np.asarray(v, dtype=float), -1.0, 1.0)
    half = 0.5 * (v + 1.0)
    s = -1.0 + half[..., None] * (_GL_NODES + 1.0)
    return half * (_bump(s) @ _GL_WEIGHTS)


BUMP_NORMALIZER = float(1.0 / _bump_cumulative(1.0))


@dataclass(frozen=True)
class Mollifier:
    """Compactly supported smooth kernel of half-width ``alpha`` on the circle."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < TWO_PI):
            raise ValueError(f"mollifier width must satisfy 0 < alpha < 2 pi, got {self.alpha}")

    @property
    def K(self) -> float:
        return BUMP_NORMALIZER

    def __call__(self, x, y) -> np.ndarray:
        return self.K / self.alpha * _bump(circle_distance(x, y) / self.alpha)

    def profile(self, d) -> np.ndarray:
        """Kernel value at circle distance ``d >= 0``."""
        return self.K / self.alpha * _bump(np.asarray(d, dtype=float) / self.alpha)

    def indicator(self, interval: Interval, theta) -> np.ndarray:
        """Smoothed indicator ``int phi_alpha(theta, xi) 1_D(xi) d xi``."""
        th = wrap_angle(theta)
        reach = min(self.alpha, np.pi)
        out = np.zeros_like(th)
        for lo, hi in interval.pieces():
            for k in (-1, 0, 1):
                u_lo = np.clip(lo + k * TWO_PI - th, -reach, reach)
                u_hi = np.clip(hi + k * TWO_PI - th, -reach, reach)
                out += _bump_cumulative(u_hi / self.alpha) - _bump_cumulative(u_lo / self.alpha)
        return self.K * out


# -- cycle structure ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CycleDecomposition:
    """Disjoint cycles stored back to back in ``order``.

    Cycle ``k`` is ``order[offsets[k]:offsets[k+1]]``, starts at its smallest
    element and lists the orbit in traversal order.  Cycles are sorted by that
    smallest element.
    """

    order: np.ndarray
    offsets: np.ndarray

    @property
    def q(self) -> int:
        return len(self.order)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def __len__(self):
        return len(self.offsets) - 1

    @property
    def cycles(self) -> list[np.ndarray]:
        return [self.order[self.offsets[k]:self.offsets[k + 1]] for k in range(len(self))]

    @cached_property
    def groups(self) -> list[tuple[int, np.ndarray]]:
        """``(L, ids)`` for every distinct cycle length, ascending in ``L``."""
        lengths = self.lengths
        uniq, inverse = np.unique(lengths, return_inverse=True)
        by_len = np.argsort(inverse, kind="stable")
        bounds = np.concatenate([[0], np.cumsum(np.bincount(inverse, minlength=len(uniq)))])
        return [(int(L), by_len[bounds[i]:bounds[i + 1]]) for i, L in enumerate(uniq)]

    def slots(self, ids: np.ndarray, L: int) -> np.ndarray:
        """Positions in ``order`` of the cycles ``ids`` (all of length ``L``), shape ``(len(ids), L)``."""
        return self.offsets[ids][:, None] + np.arange(L)


def _trace_cycles(target: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Cycle cover in canonical order, traced from batches of seed cells.

    Each round seeds the smallest unvisited cells and walks from all of them in
    lock step until every walk reaches a seed.  The walks cut the touched
    cycles into disjoint segments, and following segment ends from seed to
    seed reassembles each cycle.  Every cycle touched in a round has its
    minimum among that round's seeds, so cycles come out sorted by minimum.
    """
    q = len(target)
    order = np.empty(q, dtype=np.int64)
    lengths: list[int] = []
    seen = np.zeros(q, dtype=bool)
    seed_of = np.full(q, -1, dtype=np.int64)
    tl = None
    pos = 0
    scan = 0
    batch = 1024
    while pos < q:
        seeds = scan + np.flatnonzero(~seen[scan:])[:batch]
        scan = int(seeds[0])
        B = len(seeds)
        seed_of[seeds] = np.arange(B)
        seg_len = np.ones(B, dtype=np.int64)
        next_seed = np.empty(B, dtype=np.int64)
        step_w = [np.arange(B)]
        step_v = [seeds]
        active = step_w[0]
        cur = seeds
        while len(active) >= _LOCKSTEP_MIN:
            cur = target[cur]
            hit = seed_of[cur]
            stop = hit >= 0
            next_seed[active[stop]] = hit[stop]
            active = active[~stop]
            cur = cur[~stop]
            if len(active):
                step_w.append(active)
                step_v.append(cur)
                seg_len[active] += 1
        tails = {}
        if len(active):
            # few open walks left: finish them one by one
            if tl is None:
                tl = target.tolist()
            index = {v: i for i, v in enumerate(seeds.tolist())}
            for w, c in zip(active.tolist(), cur.tolist()):
                buf = []
                c = tl[c]
                while c not in index:
                    buf.append(c)
                    c = tl[c]
                next_seed[w] = index[c]
                tails[w] = buf
                seg_len[w] += len(buf)
        ns = next_seed.tolist()
        sl = seg_len.tolist()
        seg_off = [0] * B
        visited = bytearray(B)
        p = pos
        for s0 in range(B):
            if visited[s0]:
                continue
            L = 0
            k = s0
            while not visited[k]:
                visited[k] = 1
                seg_off[k] = p
                p += sl[k]
                L += sl[k]
                k = ns[k]
            lengths.append(L)
        seg_off = np.asarray(seg_off, dtype=np.int64)
        for step, (w, v) in enumerate(zip(step_w, step_v)):
            order[seg_off[w] + step] = v
        base = len(step_w)
        for w, buf in tails.items():
            lo = int(seg_off[w]) + base
            order[lo:lo + len(buf)] = buf
        seen[order[pos:p]] = True
        seed_of[seeds] = -1
        pos = p
        batch = min(2 * batch, _SEED_BATCH)
    return order, lengths


def cycle_decompose(perm) -> CycleDecomposition:
    cached = getattr(perm, "_cycle_cache", None)
    if cached is not None:
        return cached
    order, lengths = _trace_cycles(np.asarray(perm.target, dtype=np.int64))
    offsets = np.concatenate([[0], np.cumsum(lengths, dtype=np.int64)]).astype(np.int64)
    cd = CycleDecomposition(order, offsets)
    try:
        object.__setattr__(perm, "_cycle_cache", cd)
    except (AttributeError, TypeError):
        pass
    return cd


def _decomposition(obj) -> CycleDecomposition:
    return obj if isinstance(obj, CycleDecomposition) else cycle_decompose(obj)


def bin_angles(L: int) -> np.ndarray:
    """Eigenangles of the DFT bins ``t = 0..L-1`` of an ``L``-cycle, in ``[-pi, pi)``."""
    t = np.arange(L)
    s = np.where(2 * t < L, t, t - L)
    return TWO_PI * s / L


def _check_samples(g, q: int) -> np.ndarray:
    g = np.asarray(g, dtype=complex)
    if g.shape != (q,):
        raise ValueError(f"observable has shape {g.shape}, expected ({q},)")
    if not np.all(np.isfinite(g)):
        raise ValueError("observable samples must be finite")
    return g


def _cycle_coefficients(cd: CycleDecomposition, g: np.ndarray, L: int, ids: np.ndarray):
    slots = cd.slots(ids, L)
    vals = g[cd.order[slots]]
    return slots, np.fft.ifft(vals, axis=1) * L


# -- atoms --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralAtomSet:
    """Eigenangles and masses ``||S_n(theta_k) g||^2`` of one observable.

    Entries follow the cycle decomposition: cycle by cycle, bins ascending.
    """

    angle: np.ndarray
    mass: np.ndarray
    cycle_length: np.ndarray
    cycle: np.ndarray

    def __len__(self):
        return len(self.angle)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def moment(self, l: int) -> complex:
        """``sum_k exp(-i l theta_k) mass_k``."""
        return complex(np.sum(np.exp(-1j * l * self.angle) * self.mass))

    def mass_in(self, interval: Interval) -> float:
        return float(self.mass[interval.contains(self.angle)].sum())

    def pruned(self, rel_tol: float = 1e-15) -> SpectralAtomSet:
        """Drop atoms lighter than ``rel_tol * total_mass``."""
        keep = self.mass >= rel_tol * self.total_mass
        return SpectralAtomSet(self.angle[keep], self.mass[keep], self.cycle_length[keep], self.cycle[keep])


def atoms(perm, g) -> SpectralAtomSet:
    cd = _decomposition(perm)
    q = cd.q
    g = _check_samples(g, q)
    angle = np.empty(q)
    mass = np.empty(q)
    clen = np.empty(q, dtype=np.int64)
    cyc = np.empty(q, dtype=np.int64)
    for L, ids in cd.groups:
        slots, coef = _cycle_coefficients(cd, g, L, ids)
        angle[slots] = bin_angles(L)
        mass[slots] = np.abs(coef) ** 2 / (L * q)
        clen[slots] = L
        cyc[slots] = ids[:, None]
    return SpectralAtomSet(angle, mass, clen, cyc)


# -- projections --------------------------------------------------------------


def _bin_weights(L: int, interval: Interval, mollifier: Mollifier | None, cache: dict) -> np.ndarray:
    theta = bin_angles(L)
    if mollifier is None:
        return interval.contains(theta).astype(float)
    out = np.empty(L)
    todo = [i for i, th in enumerate(theta) if th not in cache]
    if todo:
        vals = mollifier.indicator(interval, theta[todo])
        for i, v in zip(todo, vals):
            cache[theta[i]] = float(v)
    for i, th in enumerate(theta):
        out[i] = cache[th]
    return out


def project(perm, g, interval: Interval, mode: str = "hard", alpha: float | None = None) -> np.ndarray:
    """Spectral projection of ``g`` onto the arc ``interval``.

    ``mode="hard"`` keeps the bins whose angle lies in the arc;
    ``mode="mollified"`` weights each bin by the indicator of the arc smoothed
    with a kernel of half-width ``alpha``.
    """
    cd = _decomposition(perm)
    g = _check_samples(g, cd.q)
    if mode == "hard":
        mollifier = None
    elif mode == "mollified":
        if alpha is None:
            raise ValueError("mollified projection needs alpha")
        mollifier = Mollifier(alpha)
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    out = np.empty(cd.q, dtype=complex)
    cache: dict = {}
    for L, ids in cd.groups:
        slots, coef = _cycle_coefficients(cd, g, L, ids)
        w = _bin_weights(L, interval, mollifier, cache)
        out[cd.order[slots]] = np.fft.fft(coef * w, axis=1) / L
    return out


# -- density ------------------------------------------------------------------


def kernel_sum(angles, weights, thetas, alpha: float, max_pairs: int = 4_000_000) -> np.ndarray:
    """``sum_k weights_k phi_alpha(theta_r, angles_k)`` for every evaluation angle."""
    mol = Mollifier(alpha)
    angles = wrap_angle(angles)
    weights = np.asarray(weights, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    out = np.zeros(len(thetas))
    if alpha >= np.pi:
        step = max(1, max_pairs // max(len(angles), 1))
        for r0 in range(0, len(thetas), step):
            th = thetas[r0:r0 + step]
            out[r0:r0 + step] = mol(th[:, None], angles[None, :]) @ weights
        return out

    # periodic images near the cut, then one sorted sweep per evaluation angle
    lo_tail = angles < -np.pi + alpha
    hi_tail = angles >= np.pi - alpha
    ext_a = np.concatenate([angles, angles[lo_tail] + TWO_PI, angles[hi_tail] - TWO_PI])
    ext_w = np.concatenate([weights, weights[lo_tail], weights[hi_tail]])
    order = np.argsort(ext_a, kind="stable")
    ext_a = ext_a[order]
    ext_w = ext_w[order]
    th = wrap_angle(thetas)
    start = np.searchsorted(ext_a, th - alpha, side="right")
    stop = np.searchsorted(ext_a, th + alpha, side="left")
    counts = stop - start
    r = 0
    while r < len(th):
        # batch evaluation angles so the flattened pair list stays bounded
        csum = np.cumsum(counts[r:])
        r_end = r + max(1, int(np.searchsorted(csum, max_pairs, side="right")))
        cnt = counts[r:r_end]
        owner = np.repeat(np.arange(r, r_end), cnt)
        if len(owner):
            first = np.repeat(start[r:r_end] - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
            idx = first + np.arange(len(owner))
            vals = ext_w[idx] * mol.profile(np.abs(ext_a[idx] - th[owner]))
            out[r:r_end] = np.bincount(owner - r, weights=vals, minlength=r_end - r)
        r = r_end
    return out


def density(perm, g, alpha: float, thetas) -> np.ndarray:
    """Mollified spectral density of ``g`` evaluated at ``thetas``."""
    Mollifier(alpha)
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas < -np.pi) or np.any(thetas >= np.pi):
        raise ValueError("evaluation angles must lie in [-pi, pi)")
    cd = _decomposition(perm)
    g = _check_samples(g, cd.q)
    # cycles of equal length share their bin angles, so pool their masses first
    angles, masses = [], []
    for L, ids in cd.groups:
        _, coef = _cycle_coefficients(cd, g, L, ids)
        angles.append(bin_angles(L))
        masses.append((np.abs(coef) ** 2).sum(axis=0) / (L * cd.q))
    if not angles:
        return np.zeros(len(thetas))
    return kernel_sum(np.concatenate(angles), np.concatenate(masses), thetas, alpha)


def theta_grid(R: int) -> np.ndarray:
    """``R`` uniformly spaced angles starting at ``-pi``."""
    return -np.pi + TWO_PI * np.arange(R) / R


# -- operator action ----------------------------------------------------------


def apply_operator(perm, g, power: int = 1) -> np.ndarray:
    """``U^power g`` for the permutation matrix ``U e_j = e_{T_n(j)}``."""
    g = _check_samples(g, perm.q)
    out = np.empty_like(g)
    out[perm.power(power)] = g
    return out


def koopman(perm, g, power: int = 1) -> np.ndarray:
    """``g o T_n^power``; the inverse of :func:`apply_operator`."""
    g = _check_samples(g, perm.q)
    return g[perm.power(power)]


def autocorrelation(perm, g, l: int) -> complex:
    """``(1/q) sum_j conj(g_j) g_{T_n^l(j)}``."""
    g = _check_samples(g, perm.q)
    if abs(l) > perm.q:
        raise ValueError(f"|l| must not exceed q = {perm.q}")
    return inner(g, g[perm.power(l)])
