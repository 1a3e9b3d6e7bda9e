"""Monte-Carlo harness: generate planted graphs, run the selector, tabulate Prob and Mean.

An experiment is a grid over (K0, N, rho rule, zeta, alpha, m) with T seeded
replicates per grid point. Replicate ``t`` of a grid point always sees the same
graph no matter how the work is scheduled, and the graph does not depend on
``zeta``, so rows that differ only in subsample size are paired comparisons.
"""

from __future__ import annotations

import configparser
import csv
import io
import itertools
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .rng import derive_seed
from .selection import SelectionConfig, select_k, select_k_from_subsample
from .subsampling import extract_subadjacency, sample_nodes
from .synth import (
    DcsbmParams,
    GeneratorRejection,
    OutlierParams,
    SbmParams,
    sample_dcsbm,
    sample_gsbm_with_outliers,
    sample_sbm,
)

GENERATORS = ("sbm", "dcsbm", "gsbm")
CSV_COLUMNS = ("generator", "K0", "N", "rho_rule", "zeta", "alpha", "m", "T", "prob", "mean_k", "cpu_seconds")


class SpecError(ValueError):
    pass


# density rules

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_RULE = re.compile(rf"^(?:(?P<scale>{_NUM})\s*\*\s*)?n\s*\^\s*\(?\s*(?P<power>{_NUM})\s*\)?$", re.IGNORECASE)


@dataclass(frozen=True)
class RhoRule:
    """``scale * N**power``, or the constant ``scale`` when ``power`` is None."""

    scale: float
    power: float | None = None
    text: str = ""

    @classmethod
    def parse(cls, text: str) -> "RhoRule":
        t = str(text).strip()
        m = _RULE.match(t.replace(" ", ""))
        if m:
            scale = float(m.group("scale")) if m.group("scale") else 1.0
            return cls(scale, float(m.group("power")), t)
        try:
            return cls(float(t), None, t)
        except ValueError:
            raise ValueError(f"cannot parse density rule {text!r}; expected 'c', 'n^p' or 'c*n^p'") from None

    def __call__(self, N: int) -> float:
        rho = self.scale if self.power is None else self.scale * float(N) ** self.power
        if not 0 < rho <= 1:
            raise ValueError(f"density rule {self} gives rho={rho} at N={N}")
        return rho

    def __str__(self) -> str:
        if self.text:
            return self.text
        if self.power is None:
            return repr(self.scale)
        return f"{self.scale}*n^{self.power}" if self.scale != 1 else f"n^{self.power}"


# experiment description

@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    generator: str = "sbm"
    K0: tuple[int, ...] = (2,)
    N: tuple[int, ...] = (500,)
    rho: tuple[RhoRule, ...] = (RhoRule(1.0, -0.5, "n^-0.5"),)
    beta: float = 0.15
    zeta: tuple[float, ...] = (1.5,)
    alpha: tuple[float, ...] = (0.0,)
    m: tuple[int, ...] = (0,)
    T: int = 100
    seed: int = 0
    model: str = "sbm"
    K_max: int = 10
    # density used by the subsample-size rule; None means the generating density
    size_rho: RhoRule | None = None
    # fixed subsample size overriding the rule
    n: int | None = None

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.generator != "dcsbm" and any(a != 0 for a in self.alpha):
            raise ValueError("alpha only applies to the dcsbm generator")
        if self.generator != "gsbm" and any(m != 0 for m in self.m):
            raise ValueError("m only applies to the gsbm generator")

    def grid(self) -> list["GridPoint"]:
        pts = []
        for K0, N, rho, zeta, alpha, m in itertools.product(self.K0, self.N, self.rho, self.zeta, self.alpha, self.m):
            pts.append(GridPoint(self.generator, K0, N, rho, zeta, alpha, m))
        return pts


@dataclass(frozen=True)
class GridPoint:
    generator: str
    K0: int
    N: int
    rho: RhoRule
    zeta: float
    alpha: float = 0.0
    m: int = 0

    def graph_key(self) -> tuple:
        return (self.generator, self.K0, self.N, str(self.rho), repr(float(self.alpha)), self.m)


@dataclass(frozen=True)
class BenchRow:
    generator: str
    K0: int
    N: int
    rho_rule: str
    zeta: float
    alpha: float
    m: int
    T: int
    prob: float
    mean_k: float
    cpu_seconds: float
    k_hats: tuple[int, ...] = ()
    # replicates whose instance the generator rejected; they are left out of prob and mean_k
    failed: int = 0

    def csv_record(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}

    def to_dict(self) -> dict:
        d = self.csv_record()
        d["k_hats"] = list(self.k_hats)
        d["failed"] = self.failed
        for key in ("prob", "mean_k", "cpu_seconds"):
            if not math.isfinite(d[key]):
                d[key] = None
        return d


def metrics(k_hats, K0: int) -> tuple[float, float]:
    k = np.asarray(k_hats)
    if k.size == 0:
        raise ValueError("metrics need at least one replicate")
    return float(np.mean(k == K0)), float(np.mean(k))


def _int_seed(seed, *keys) -> int:
    return int(derive_seed(seed, *keys).generate_state(1, dtype=np.uint32)[0])


def generate_instance(pt: GridPoint, beta: float, seed):
    rho = pt.rho(pt.N)
    base = SbmParams(pt.K0, pt.N, rho, beta)
    if pt.generator == "sbm":
        return sample_sbm(base, seed)
    if pt.generator == "dcsbm":
        return sample_dcsbm(DcsbmParams(base, pt.alpha), seed)
    return sample_gsbm_with_outliers(OutlierParams(base, pt.m), seed)


def subsample_size_for(spec: ExperimentSpec, pt: GridPoint) -> int:
    """``ceil(zeta ln N / rho)`` with ``N`` the number of community nodes, capped at the graph size."""
    if spec.n is not None:
        return spec.n
    rule = spec.size_rho if spec.size_rho is not None else pt.rho
    total = pt.N + pt.m
    return min(total, math.ceil(pt.zeta * math.log(pt.N) / rule(pt.N)))


def run_replicate(spec: ExperimentSpec, pt: GridPoint, t: int) -> tuple[int | None, float]:
    """K_hat and wall-clock seconds of the selection stage; K_hat is None if generation was rejected."""
    gseed = _int_seed(spec.seed, "graph", *pt.graph_key(), t)
    try:
        g, _ = generate_instance(pt, spec.beta, gseed)
    except GeneratorRejection:
        return None, math.nan
    cfg = SelectionConfig(
        K_max=spec.K_max,
        model=spec.model,
        seed=_int_seed(spec.seed, "select", *pt.graph_key(), repr(float(pt.zeta)), t),
        n=subsample_size_for(spec, pt),
    )
    t0 = time.perf_counter()
    report = select_k(g, cfg)
    return report.K_hat, time.perf_counter() - t0


def _run_task(args):
    spec, pt, t = args
    return run_replicate(spec, pt, t)


def _aggregate(spec: ExperimentSpec, pt: GridPoint, results) -> BenchRow:
    ks = [k for k, _ in results if k is not None]
    cpu = [c for k, c in results if k is not None]
    prob, mean_k = metrics(ks, pt.K0) if ks else (math.nan, math.nan)
    return BenchRow(pt.generator, pt.K0, pt.N, str(pt.rho), pt.zeta, pt.alpha, pt.m, spec.T,
                    prob, mean_k, float(np.mean(cpu)) if cpu else math.nan,
                    tuple(ks), len(results) - len(ks))


def run_experiment(spec: ExperimentSpec, threads: int | None = None, progress=None) -> list[BenchRow]:
    """Every grid point, ``spec.T`` replicates each; rows come back in grid order.

    ``threads`` worker processes share the replicates (default: all cores);
    results are identical for any value. ``progress(row)`` is called as each
    row completes.
    """
    pts = spec.grid()
    tasks = [(spec, pt, t) for pt in pts for t in range(spec.T)]
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers <= 1:
        out = []
        for pt in pts:
            row = _aggregate(spec, pt, [run_replicate(spec, pt, t) for t in range(spec.T)])
            if progress:
                progress(row)
            out.append(row)
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        flat = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    out = []
    for i, pt in enumerate(pts):
        row = _aggregate(spec, pt, flat[i * spec.T : (i + 1) * spec.T])
        if progress:
            progress(row)
        out.append(row)
    return out


def write_csv(rows: list[BenchRow], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.csv_record())


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def rows_to_json(rows: list[BenchRow]) -> str:
    return json.dumps([r.to_dict() for r in rows], indent=2)


# scaling

@dataclass(frozen=True)
class ScalingResult:
    axis: str
    sizes: tuple[int, ...]
    seconds: tuple[float, ...]
    slope: float | None

    def table(self) -> str:
        lines = [f"{self.axis},seconds"] + [f"{s},{t:.6f}" for s, t in zip(self.sizes, self.seconds)]
        if self.slope is not None:
            lines.append(f"# log-log slope {self.slope:.3f}")
        return "\n".join(lines)


def loglog_slope(x, y) -> float | None:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def scaling_probe(grid, fixed: int, reps: int = 3, axis: str = "N", K0: int = 3, rho: float = 0.01,
                  beta: float = 0.15, seed: int = 0, K_max: int = 10) -> ScalingResult:
    """Time :func:`select_k_from_subsample` across a grid of ``N`` (``n = fixed``) or of ``n`` (``N = fixed``).

    Graphs are SBMs with a constant density ``rho`` so the work per row of the
    sub-adjacency stays the same as ``N`` grows. Reported times are means over
    ``reps`` selections on distinct subsamples.
    """
    if axis not in ("N", "n"):
        raise ValueError("axis must be 'N' or 'n'")
    grid = [int(v) for v in grid]
    if axis == "N" and fixed > min(grid):
        raise ValueError("fixed n must not exceed the smallest N")
    if axis == "n" and max(grid) > fixed:
        raise ValueError("every n must be at most N")
    cached = {}
    secs = []
    for v in grid:
        N, n = (v, fixed) if axis == "N" else (fixed, v)
        if N not in cached:
            cached[N] = sample_sbm(SbmParams(K0, N, rho, beta), _int_seed(seed, "scaling", N))[0]
        g = cached[N]
        cfg = SelectionConfig(K_max=K_max, seed=seed, n=n)
        times = []
        for r in range(reps):
            a = extract_subadjacency(g, sample_nodes(N, n, _int_seed(seed, "scaling", N, n, r)))
            t0 = time.perf_counter()
            select_k_from_subsample(a, replace(cfg, seed=r))
            times.append(time.perf_counter() - t0)
        secs.append(float(np.mean(times)))
    return ScalingResult(axis, tuple(grid), tuple(secs), loglog_slope(grid, secs))


# spec files

_LIST_KEYS = {"k0": int, "n_nodes": int, "rho": RhoRule.parse, "zeta": float, "alpha": float, "m": int}
_SCALAR_KEYS = {"generator": str, "beta": float, "t": int, "seed": int, "model": str, "k_max": int,
                "size_rho": RhoRule.parse, "n": int}
_FIELD = {"k0": "K0", "n_nodes": "N", "t": "T", "k_max": "K_max"}


def _key_line(text: str, section: str, key: str | None = None) -> int:
    """Line of ``key`` inside ``[section]``, or of the section header when ``key`` is None."""
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return i
        elif key is not None and cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return 0


def parse_spec(text: str, source: str = "<spec>") -> list[ExperimentSpec]:
    """Parse ``[name]`` sections of ``key = value`` lines into experiment specs.

    List-valued keys (``K0``, ``N_nodes``, ``rho``, ``zeta``, ``alpha``, ``m``)
    take comma-separated values. Problems are reported as ``source:line: msg``.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None) or getattr(exc, "errors", [(0,)])[0][0]
        raise SpecError(f"{source}:{lineno}: {exc.message.splitlines()[0]}") from None
    if not cp.sections():
        raise SpecError(f"{source}:1: no [section] found")
    specs = []
    for sec in cp.sections():
        kw: dict = {"name": sec}
        for key, raw in cp.items(sec):
            line = _key_line(text, sec, key)
            try:
                if key in _LIST_KEYS:
                    kw[_FIELD.get(key, key)] = tuple(_LIST_KEYS[key](v.strip()) for v in raw.split(",") if v.strip())
                elif key in _SCALAR_KEYS:
                    kw[_FIELD.get(key, key)] = _SCALAR_KEYS[key](raw.strip())
                else:
                    raise SpecError(f"{source}:{line}: unknown key {key!r} in [{sec}]")
            except SpecError:
                raise
            except ValueError as exc:
                raise SpecError(f"{source}:{line}: bad value for {key!r}: {exc}") from None
        try:
            specs.append(ExperimentSpec(**kw))
        except ValueError as exc:
            raise SpecError(f"{source}:{_key_line(text, sec)}: [{sec}] {exc}") from None
    return specs


def load_spec(path: str | os.PathLike) -> list[ExperimentSpec]:
    with open(path) as fh:
        return parse_spec(fh.read(), str(path))


def bundled_spec_path(name: str) -> str:
    """Path of a spec shipped with the package, e.g. ``example1`` or ``example1.spec``."""
    base = name if name.endswith(".spec") else name + ".spec"
    path = os.path.join(os.path.dirname(__file__), "specs", base)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no bundled spec named {name!r}")
    return path
