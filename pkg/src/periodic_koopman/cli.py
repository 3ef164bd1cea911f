"""Command-line front end: ``approximate``, ``project``, ``density`` and ``verify``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import formats, maps, oracles, spectral
from .discretizer import PermutationMap, check_bijection, discretize, quality_report
from .lattice import LatticePartition

log = logging.getLogger("periodic_koopman")

DEFAULT_ALPHA = 2 * np.pi / 500
COMMANDS = ("approximate", "project", "density", "verify")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    map: str | None = None
    params: dict = field(default_factory=dict)
    grid: int | None = None
    mode: str = "analytic"
    observable: str | None = None
    modes_file: str | None = None
    interval: tuple[float, float] | None = None
    projection: str = "hard"
    alpha: float = DEFAULT_ALPHA
    theta_points: int = 2048
    out: str | None = None
    format: str = "csv"
    perm_file: str | None = None
    threads: int = 1
    seed: int = 0
    samples: int = 20
    catmap_check: bool = False
    report: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = list(self.interval) if self.interval else None
        return d

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.grid is not None and self.grid < 1:
            raise ConfigError("--grid must be a positive integer")
        if self.mode not in ("analytic", "matching"):
            raise ConfigError("--mode must be analytic or matching")
        if not (0 < self.alpha < 2 * np.pi):
            raise ConfigError("--alpha must satisfy 0 < alpha < 2 pi")
        if self.theta_points < 1:
            raise ConfigError("--theta-points must be positive")
        if self.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.command == "verify":
            if self.map is not None and self.grid is None:
                raise ConfigError("verify with --map needs --grid")
            return
        if self.perm_file is None:
            if self.map is None:
                raise ConfigError(f"{self.command} needs --map (or --perm-file)")
            if self.grid is None:
                raise ConfigError(f"{self.command} needs --grid")
        if self.command == "approximate":
            if self.out is None:
                raise ConfigError("approximate needs --out")
            if self.perm_file is not None:
                raise ConfigError("approximate builds a permutation; --perm-file does not apply")
            return
        if self.observable is None and self.modes_file is None:
            raise ConfigError(f"{self.command} needs --observable or --modes-file")
        if self.observable is not None and self.modes_file is not None:
            raise ConfigError("give either --observable or --modes-file, not both")
        if self.command == "project":
            if self.interval is None:
                raise ConfigError("project needs --interval A B")
            lo, hi = self.interval
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigError("--interval needs finite A < B")
            if self.projection not in ("hard", "mollified"):
                raise ConfigError("--projection must be hard or mollified")
        if self.out is None:
            raise ConfigError(f"{self.command} needs --out")


# -- parsing ------------------------------------------------------------------


def _float_list(text: str, n: int | None = None, flag: str = "") -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not vals or (n is not None and len(vals) != n):
        raise argparse.ArgumentTypeError(f"{flag} expects {n or 'one or more'} comma-separated numbers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="periodic-koopman",
                                     description="Periodic approximations of torus maps and their spectra.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--map", choices=sorted(maps.BUILTIN_MAPS))
        p.add_argument("--K", type=float, help="chirikov kick strength")
        p.add_argument("--omega", help="translation vector, e.g. 0.5,0.3333")
        p.add_argument("--gamma", type=float, help="anzai rotation")
        p.add_argument("--abc", help="ABC coefficients A,B,C")
        p.add_argument("--dim", type=int, default=2, help="dimension of the identity map")
        p.add_argument("--grid", type=int, help="cells per axis")
        p.add_argument("--mode", default="analytic", choices=("analytic", "matching"))
        p.add_argument("--perm-file", help="use a saved permutation instead of building one")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out")
        p.add_argument("--format", default="csv", choices=("csv", "json"))

    def observable(p):
        p.add_argument("--observable", choices=maps.BUILTIN_OBSERVABLES + ("constant",))
        p.add_argument("--modes-file", help="JSON list of [k-vector, re, im] Fourier modes")

    p = sub.add_parser("approximate", help="build a lattice permutation and write it to --out")
    common(p)
    p.add_argument("--report", help="report path (default: <out>.report.json)")

    p = sub.add_parser("project", help="spectral projection of an observable onto an arc")
    common(p)
    observable(p)
    p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"), required=False)
    p.add_argument("--projection", default="hard", choices=("hard", "mollified"))
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)

    p = sub.add_parser("density", help="mollified spectral density of an observable")
    common(p)
    observable(p)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--theta-points", type=int, default=2048)

    p = sub.add_parser("verify", help="run the invariant and oracle checks")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20, help="random small instances to check")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--catmap-check", action="store_true",
                   help="also check cat-map density convergence at grids 128, 256, 512")
    return parser


def _map_params(args) -> dict:
    name = args.map
    if name is None:
        return {}
    if name == "chirikov":
        if args.K is None:
            raise ConfigError("chirikov needs --K")
        return {"K": args.K}
    if name == "translation":
        if args.omega is None:
            raise ConfigError("translation needs --omega")
        return {"omega": _float_list(args.omega, flag="--omega")}
    if name == "anzai":
        if args.gamma is None:
            raise ConfigError("anzai needs --gamma")
        return {"gamma": args.gamma}
    if name == "abc":
        if args.abc is None:
            raise ConfigError("abc needs --abc A,B,C")
        A, B, C = _float_list(args.abc, 3, flag="--abc")
        return {"A": A, "B": B, "C": C}
    if name == "identity":
        return {"m": args.dim}
    return {}


def config_from_args(args, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    threads = args.threads
    if threads is None:
        env = environ.get("KOOPMAN_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"KOOPMAN_THREADS must be an integer, got {env!r}") from None
    cfg = RunConfig(
        command=args.command,
        map=args.map,
        params=_map_params(args),
        grid=args.grid,
        mode=args.mode,
        observable=getattr(args, "observable", None),
        modes_file=getattr(args, "modes_file", None),
        interval=tuple(args.interval) if getattr(args, "interval", None) else None,
        projection=getattr(args, "projection", "hard"),
        alpha=getattr(args, "alpha", DEFAULT_ALPHA),
        theta_points=getattr(args, "theta_points", 2048),
        out=args.out,
        format=args.format,
        perm_file=args.perm_file,
        threads=threads,
        seed=getattr(args, "seed", 0),
        samples=getattr(args, "samples", 20),
        catmap_check=getattr(args, "catmap_check", False),
        report=getattr(args, "report", None),
    )
    cfg.validate()
    return cfg


# -- shared pipeline ----------------------------------------------------------


def _build_map(cfg: RunConfig):
    try:
        return maps.builtin(cfg.map, **cfg.params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _permutation(cfg: RunConfig) -> tuple[PermutationMap, dict]:
    if cfg.perm_file is not None:
        perm = formats.load_permutation(cfg.perm_file)
        if cfg.grid is not None and cfg.grid != perm.partition.n_tilde:
            raise ConfigError(f"--grid {cfg.grid} disagrees with the permutation file ({perm.partition.n_tilde})")
        return perm, formats.permutation_header(perm)
    tmap = _build_map(cfg)
    perm, _ = discretize(tmap, LatticePartition(tmap.m, cfg.grid), cfg.mode)
    return perm, formats.permutation_header(perm)


def _observable(cfg: RunConfig, m: int):
    if cfg.modes_file is not None:
        try:
            raw = json.loads(Path(cfg.modes_file).read_text(encoding="utf-8"))
            modes = [(k, complex(re, im)) for k, re, im in raw]
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read modes file: {exc}") from None
        obs = maps.fourier_modes(modes, name=Path(cfg.modes_file).name)
    elif cfg.observable == "constant":
        obs = maps.constant(m)
    else:
        obs = maps.builtin_observable(cfg.observable)
    if obs.m != m:
        raise ConfigError(f"observable {obs.name!r} lives in dimension {obs.m}, the map in {m}")
    return obs


def cmd_approximate(cfg: RunConfig) -> int:
    tmap = _build_map(cfg)
    part = LatticePartition(tmap.m, cfg.grid)
    t0 = time.perf_counter()
    perm, t_used = discretize(tmap, part, cfg.mode)
    wall = time.perf_counter() - t0
    check_bijection(perm.target, perm.q)
    cd = spectral.cycle_decompose(perm)
    report = {
        "config": cfg.to_dict(),
        "bijective": True,
        "t_used": t_used,
        "quality": quality_report(perm, tmap),
        "n_cycles": len(cd),
        "max_cycle_length": int(cd.lengths.max()),
        "min_cycle_length": int(cd.lengths.min()),
        "wall_time_s": wall,
    }
    fmt = "json" if cfg.out.endswith(".json") else "binary"
    formats.save_permutation(perm, cfg.out, fmt)
    report_path = cfg.report or cfg.out + ".report.json"
    Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_project(cfg: RunConfig) -> int:
    perm, header = _permutation(cfg)
    obs = _observable(cfg, perm.partition.m)
    g = maps.sample(obs, perm.partition)
    interval = spectral.Interval.arc(*cfg.interval)
    alpha = cfg.alpha if cfg.projection == "mollified" else None
    out = spectral.project(perm, g, interval, cfg.projection, alpha)
    formats.write_projection(cfg.out, perm.partition, out, cfg.to_dict(), header, cfg.format)
    return 0


def cmd_density(cfg: RunConfig) -> int:
    perm, header = _permutation(cfg)
    obs = _observable(cfg, perm.partition.m)
    g = maps.sample(obs, perm.partition)
    thetas = spectral.theta_grid(cfg.theta_points)
    rho = spectral.density(perm, g, cfg.alpha, thetas)
    formats.write_density(cfg.out, thetas, rho, cfg.to_dict(), header, cfg.format)
    return 0


# -- verification suite -------------------------------------------------------


def _random_instance(rng, q_max: int = 64):
    q = int(rng.integers(1, q_max + 1))
    perm = PermutationMap(LatticePartition(1, q), rng.permutation(q))
    g = rng.standard_normal(q) + 1j * rng.standard_normal(q)
    return perm, g


def _random_arc(rng) -> spectral.Interval:
    lo = rng.uniform(-np.pi, np.pi)
    return spectral.Interval.arc(lo, lo + rng.uniform(0.05, 2 * np.pi - 0.05))


def _invariant_errors(perm, g) -> dict:
    """Worst deviation for each invariant on one instance (all should be ~0)."""
    n2 = spectral.norm2(g)
    scale = max(n2, 1e-300)
    at = spectral.atoms(perm, g)
    ug = spectral.apply_operator(perm, g)
    f = np.cos(np.arange(perm.q)) + 0.5j
    ones = np.ones(perm.q)
    d = spectral.Interval(-1.0, 0.7)
    pd = spectral.project(perm, g, d)
    halves = [spectral.Interval(-np.pi, 0.3), spectral.Interval(0.3, np.pi)]
    return {
        "parseval": abs(at.total_mass - n2) / scale,
        "unitarity": abs(spectral.norm2(ug) - n2) / scale,
        "multiplicativity": float(np.abs(spectral.apply_operator(perm, f * g)
                                         - spectral.apply_operator(perm, f) * ug).max()),
        "constant": float(np.abs(spectral.apply_operator(perm, ones) - 1).max()),
        "moments": max(abs(at.moment(l) - spectral.autocorrelation(perm, g, l)) for l in range(-min(8, perm.q), min(8, perm.q) + 1)),
        "idempotence": float(np.abs(spectral.project(perm, pd, d) - pd).max()),
        "partition": float(np.abs(sum(spectral.project(perm, g, h) for h in halves) - g).max()),
        "full_circle": float(np.abs(spectral.project(perm, g, spectral.Interval.full()) - g).max()),
        "nonnegative": float(max(0.0, -spectral.density(perm, g, 0.3, spectral.theta_grid(64)).min())),
    }


_INVARIANT_TOL = {"parseval": 1e-12, "unitarity": 1e-12, "multiplicativity": 0.0, "constant": 0.0,
                  "moments": 1e-10, "idempotence": 1e-12, "partition": 1e-12, "full_circle": 1e-12,
                  "nonnegative": 0.0}


def oracle_errors(perm, g, rng, alpha: float) -> dict:
    ref = oracles.dense_eig_oracle(perm, g)
    at = spectral.atoms(perm, g)
    arc = _random_arc(rng)
    thetas = rng.uniform(-np.pi, np.pi, 16)
    return {
        "atoms": max(float(np.abs(at.mass - ref.atoms.mass).max()),
                     float(spectral.circle_distance(at.angle, ref.atoms.angle).max())),
        "project_hard": float(np.abs(spectral.project(perm, g, arc) - ref.project(g, arc)).max()),
        "project_mollified": float(np.abs(spectral.project(perm, g, arc, "mollified", alpha)
                                          - ref.project(g, arc, "mollified", alpha)).max()),
        "density": float(np.abs(spectral.density(perm, g, alpha, thetas) - ref.density(alpha, thetas)).max()),
    }


def catmap_errors(which: str = "g2", grids=(128, 256, 512), alpha: float = DEFAULT_ALPHA) -> list[float]:
    thetas = spectral.theta_grid(oracles.L1_GRID_POINTS)
    target = oracles.catmap_spectrum(which).mollified(alpha, thetas)
    out = []
    for n in grids:
        part = LatticePartition(2, n)
        perm, _ = discretize(maps.cat_map(), part, "analytic")
        g = maps.sample(maps.builtin_observable(which), part)
        out.append(oracles.l1_distance(spectral.density(perm, g, alpha, thetas), target))
    return out


def cmd_verify(cfg: RunConfig) -> int:
    checks: list[tuple[str, bool, str]] = []

    def record(name, ok, detail):
        checks.append((name, bool(ok), detail))

    rng = np.random.default_rng(cfg.seed)
    worst_inv = dict.fromkeys(_INVARIANT_TOL, 0.0)
    worst_orc = {"atoms": 0.0, "project_hard": 0.0, "project_mollified": 0.0, "density": 0.0}
    for _ in range(cfg.samples):
        perm, g = _random_instance(rng)
        for k, v in _invariant_errors(perm, g).items():
            worst_inv[k] = max(worst_inv[k], v)
        for k, v in oracle_errors(perm, g, rng, max(cfg.alpha, 0.05)).items():
            worst_orc[k] = max(worst_orc[k], v)
    for k, v in worst_inv.items():
        record(f"invariant:{k}", v <= _INVARIANT_TOL[k], f"max {v:.3g} (tol {_INVARIANT_TOL[k]:g})")
    for k, v in worst_orc.items():
        record(f"oracle:{k}", v <= 1e-9, f"max {v:.3g} (tol 1e-09)")

    if cfg.perm_file is not None:
        try:
            header, target = formats.read_permutation_raw(cfg.perm_file)
            q = int(header["n_tilde"]) ** int(header["m"])
            check_bijection(target, q)
            record("perm-file:bijective", True, f"{q} cells")
            perm = PermutationMap(LatticePartition(int(header["m"]), int(header["n_tilde"])), target)
            g = rng.standard_normal(q) + 1j * rng.standard_normal(q)
            inv = _invariant_errors(perm, g)
            for k in ("parseval", "moments", "full_circle"):
                record(f"perm-file:{k}", inv[k] <= _INVARIANT_TOL[k], f"{inv[k]:.3g}")
        except (OSError, ValueError, KeyError) as exc:
            record("perm-file:bijective", False, str(exc))

    if cfg.map is not None:
        tmap = _build_map(cfg)
        perm, t_used = discretize(tmap, LatticePartition(tmap.m, cfg.grid), cfg.mode)
        record(f"map:{tmap.name}:bijective", True, f"t_used={t_used}")
        record(f"map:{tmap.name}:quality", True, f"{quality_report(perm, tmap):.3g}")

    if cfg.catmap_check:
        errs = catmap_errors("g2", alpha=cfg.alpha)
        ok = all(b <= 1.1 * a for a, b in zip(errs, errs[1:]))
        record("catmap:g2:l1-decreasing", ok, ", ".join(f"{e:.4g}" for e in errs))

    width = max(len(n) for n, _, _ in checks)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    failed = sum(not ok for _, ok, _ in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


HANDLERS = {"approximate": cmd_approximate, "project": cmd_project, "density": cmd_density, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, argparse.ArgumentTypeError) as exc:
        print(f"periodic-koopman: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"periodic-koopman: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
