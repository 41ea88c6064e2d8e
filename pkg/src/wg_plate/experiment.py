"""Refinement sweeps: configuration, the per-level pipeline and table output."""
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import apply_essential_bc, assemble_system, build_operators
from .errors import ConfigError, InvalidArgumentError
from .mesh import FAMILIES, generate_mesh, write_mesh
from .postproc import ERROR_FIELDS, compute_errors, convergence_orders
from .rm_model import PlateParams, get_problem
from .solver import METHODS, solve_spd
from .weakops import WeakSpaceConfig, preset_degrees

log = logging.getLogger(__name__)

DEGREE_KEYS = ("k", "p", "r1", "q", "m", "r2")
CSV_HEADER = ("t", "level", "h", "errL2_w", "ord", "errE_w", "ord", "errL2_th", "ord",
              "errE_th", "ord", "shear", "ord")


@dataclass
class ExperimentConfig:
    """One sweep. ``levels`` are refinement indices; level ``l`` uses ``n = 2**l``."""

    problem: int = 1
    mesh: str = "tri"
    levels: tuple = (2, 3, 4)
    preset: str | None = "P1"
    degrees: dict = field(default_factory=dict)  # explicit k, p, r1, q, m, r2
    t: tuple = (1.0, 0.01)
    solver: str = "direct"
    out: str | None = None
    dump_mesh: str | None = None
    dump_matrix: str | None = None
    seed: int = 0
    bc: str = "exact"
    l2_edges: bool = False

    def __post_init__(self):
        if self.problem not in (1, 2):
            raise ConfigError(f"problem: expected 1 or 2, got {self.problem!r}")
        if self.mesh not in FAMILIES:
            raise ConfigError(f"mesh: expected one of {FAMILIES}, got {self.mesh!r}")
        if not self.levels or any(int(l) != l or l < 0 for l in self.levels):
            raise ConfigError(f"levels: expected non-negative integers, got {self.levels!r}")
        if not self.t or any(not (v > 0) for v in self.t):
            raise ConfigError(f"t: thicknesses must be positive, got {self.t!r}")
        if self.solver not in METHODS:
            raise ConfigError(f"solver: expected one of {METHODS}, got {self.solver!r}")
        if self.bc not in ("exact", "zero"):
            raise ConfigError(f"bc: expected 'exact' or 'zero', got {self.bc!r}")
        unknown = set(self.degrees) - set(DEGREE_KEYS)
        if unknown:
            raise ConfigError(f"unknown degree key(s) {sorted(unknown)}")
        if self.preset is not None and self.degrees:
            raise ConfigError("give either a preset or explicit degrees, not both")
        if self.preset is None and "k" not in self.degrees:
            raise ConfigError("explicit degrees need at least k")
        self.space()  # validate early

    def space(self):
        """Expanded :class:`WeakSpaceConfig`; unset explicit degrees follow ``p = r1 = q = k``, ``m = q`` and the family offset for ``r2``."""
        try:
            if self.preset is not None:
                return preset_degrees(self.preset, self.mesh)
            d = {key: int(v) for key, v in self.degrees.items()}
            k = d["k"]
            q = d.get("q", k)
            offset = preset_degrees("P1", self.mesh).r2 - 1
            return WeakSpaceConfig(k, d.get("p", k), d.get("r1", k), q, d.get("m", q),
                                   d.get("r2", q + offset))
        except (InvalidArgumentError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class SweepResult:
    config: ExperimentConfig
    space: WeakSpaceConfig
    rows: dict  # t -> list[ErrorRow] with orders
    timings: list  # (t, level, seconds)
    csv_text: str
    markdown: str


def _dump_path(template, level, t=None, multi_t=False):
    p = str(template)
    if "{level}" in p or "{t}" in p:
        return Path(p.format(level=level, t=t))
    path = Path(p)
    suffix = f"_L{level}" + (f"_t{t:g}" if multi_t and t is not None else "")
    return path.with_name(path.stem + suffix + path.suffix)


def write_matrix(A, path):
    """Lower triangle of sparse ``A`` as ``i j value`` lines (0-based)."""
    C = A.tocoo()
    keep = C.row >= C.col
    order = np.lexsort((C.col[keep], C.row[keep]))
    r, c, v = C.row[keep][order], C.col[keep][order], C.data[keep][order]
    with open(path, "w") as fh:
        fh.writelines(f"{i} {j} {x:.17g}\n" for i, j, x in zip(r, c, v))


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.5e}"


def rows_to_csv(rows_by_t):
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for t, rows in rows_by_t.items():
        for r in rows:
            cells = [_fmt(float(t)), str(r.level), _fmt(r.h)]
            for f in ERROR_FIELDS:
                cells += [_fmt(getattr(r, f)), _fmt(r.orders.get(f))]
            buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def sci3(v):
    """``0.422E-03`` style: mantissa in [0.1, 1) with three digits."""
    if v is None or math.isnan(v):
        return "-"
    if v == 0:
        return "0.000E+00"
    e = math.floor(math.log10(abs(v))) + 1
    m = v / 10.0 ** e
    if round(abs(m), 3) >= 1.0:
        m, e = m / 10.0, e + 1
    return f"{m:.3f}E{e:+03d}"


def _ord(o):
    return "" if o is None else f"{o:.1f}"


def rows_to_markdown(rows_by_t, title=""):
    """Two-part blocks per thickness: ``w`` errors then ``theta`` errors, each with order columns."""
    out = [f"### {title}", ""] if title else []
    for t, rows in rows_by_t.items():
        out += [f"**t = {t:g}**", "",
                "| level | L2 error w | order | energy error w | order |",
                "|---:|---:|---:|---:|---:|"]
        out += [f"| {r.level} | {sci3(r.errL2_w)} | {_ord(r.orders.get('errL2_w'))} | "
                f"{sci3(r.errE_w)} | {_ord(r.orders.get('errE_w'))} |" for r in rows]
        out += ["", "| level | L2 error theta | order | energy error theta | order |",
                "|---:|---:|---:|---:|---:|"]
        out += [f"| {r.level} | {sci3(r.errL2_th)} | {_ord(r.orders.get('errL2_th'))} | "
                f"{sci3(r.errE_th)} | {_ord(r.orders.get('errE_th'))} |" for r in rows]
        out.append("")
    return "\n".join(out)


def run_experiment(config, threads=None):
    """Mesh, assemble, constrain, solve and measure each level for every thickness.

    Local operators do not depend on ``t``, so they are built once per level.
    Writes ``<out>.csv`` and ``<out>.md`` when ``config.out`` is set.
    """
    space = config.space()
    rows = {t: [] for t in config.t}
    timings = []
    for level in config.levels:
        n = 2 ** int(level)
        t0 = time.perf_counter()
        mesh = generate_mesh(config.mesh, n)
        if config.dump_mesh:
            write_mesh(mesh, _dump_path(config.dump_mesh, level))
        ops = build_operators(mesh, space, threads)
        t_ops = time.perf_counter() - t0
        for t in config.t:
            t1 = time.perf_counter()
            problem = get_problem(config.problem, PlateParams(t=t))
            system = assemble_system(mesh, space, problem, operators=ops)
            if config.dump_matrix:
                write_matrix(system.A, _dump_path(config.dump_matrix, level, t, len(config.t) > 1))
            red = apply_essential_bc(system, problem, homogeneous=config.bc == "zero", check_spd=False)
            x, report = solve_spd(red.A, red.F, config.solver)
            xh = red.expand(np.asarray(x, dtype=float))
            rows[t].append(compute_errors(level, xh, ops, problem, with_edges=config.l2_edges))
            dt = time.perf_counter() - t1 + t_ops
            timings.append((t, level, dt))
            log.info("level %d (n=%d) t=%g: %d unknowns, %s residual %.2e, %.2fs",
                     level, n, t, red.A.shape[0], report.method, report.residual, dt)
    rows = {t: convergence_orders(r) for t, r in rows.items()}
    csv_text = rows_to_csv(rows)
    title = f"Problem {config.problem}, {space.label} on {config.mesh} meshes"
    md = rows_to_markdown(rows, title)
    if config.out:
        base = Path(config.out)
        if base.suffix in (".csv", ".md"):
            base = base.with_suffix("")
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".csv").write_text(csv_text)
        base.with_suffix(".md").write_text(md)
    return SweepResult(config, space, rows, timings, csv_text, md)
