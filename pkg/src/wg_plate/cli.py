"""Command-line driver for convergence sweeps.

Settings come from an optional flat ``key=value`` file (``--config``) and
from flags; flags win.  Example::

    wg-plate --problem 1 --mesh tri --preset P2 --levels 2..5 --t 1,1e-2 --out results/p2_tri
"""
import argparse
import logging
import sys

from .errors import ConfigError
from .experiment import DEGREE_KEYS, ExperimentConfig, run_experiment
from .mesh import FAMILIES
from .solver import METHODS

log = logging.getLogger("wg_plate")

FILE_KEYS = {"problem", "mesh", "levels", "preset", "t", "solver", "out", "dump_mesh",
             "dump_matrix", "seed", "bc", "l2_edges", *DEGREE_KEYS}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_levels(text):
    """``"a..b"`` (inclusive) or a comma list such as ``"2,3,5"``."""
    s = str(text).strip()
    try:
        if ".." in s:
            a, b = s.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"levels: cannot parse {text!r}; use a..b or a comma list") from None


def parse_thickness(text):
    try:
        vals = tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"t: cannot parse {text!r}") from None
    if not vals:
        raise ConfigError("t: empty thickness list")
    return vals


def _bool(key, text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def read_config_file(path):
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in FILE_KEYS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = val
    return out


def build_parser():
    p = _Parser(prog="wg-plate", description="Weak Galerkin Reissner-Mindlin plate convergence sweeps.")
    p.add_argument("--config", help="key=value settings file (flags override it)")
    p.add_argument("--problem", type=int, choices=(1, 2))
    p.add_argument("--mesh", choices=FAMILIES)
    p.add_argument("--levels", help="refinement levels a..b or list; level l uses n = 2**l")
    p.add_argument("--preset", help="P1, P2 or P3 (expanded per mesh family)")
    for key in DEGREE_KEYS:
        p.add_argument(f"--{key}", type=int, help=f"explicit degree {key}")
    p.add_argument("--t", help="thickness or comma list, e.g. 1,1e-2")
    p.add_argument("--solver", choices=METHODS)
    p.add_argument("--out", help="output prefix; writes <out>.csv and <out>.md")
    p.add_argument("--dump-mesh", dest="dump_mesh", help="write each level's mesh (suffix _L<level>)")
    p.add_argument("--dump-matrix", dest="dump_matrix", help="write each assembled matrix, lower triangle")
    p.add_argument("--seed", type=int)
    p.add_argument("--bc", choices=("exact", "zero"),
                   help="boundary traces: projected exact traces (default) or homogeneous")
    p.add_argument("--l2-edges", dest="l2_edges", action="store_const", const=True, default=None,
                   help="include h-weighted edge parts in the L2 columns")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None):
    """Merge the optional config file with flags into an :class:`ExperimentConfig`."""
    args = build_parser().parse_args(argv)
    raw = read_config_file(args.config) if args.config else {}
    for key, val in vars(args).items():
        if key in ("config", "verbose") or val is None:
            continue
        raw[key] = val
    degrees = {k: raw.pop(k) for k in DEGREE_KEYS if k in raw}
    kw = {}
    try:
        if "problem" in raw:
            kw["problem"] = int(raw["problem"])
        for key in ("mesh", "solver", "out", "dump_mesh", "dump_matrix", "bc"):
            if key in raw:
                kw[key] = str(raw[key])
        if "seed" in raw:
            kw["seed"] = int(raw["seed"])
        degrees = {k: int(v) for k, v in degrees.items()}
    except ValueError as exc:
        raise ConfigError(f"bad value: {exc}") from None
    if "levels" in raw:
        kw["levels"] = parse_levels(raw["levels"])
    if "t" in raw:
        kw["t"] = parse_thickness(raw["t"])
    if "l2_edges" in raw:
        kw["l2_edges"] = raw["l2_edges"] if isinstance(raw["l2_edges"], bool) else _bool("l2_edges", raw["l2_edges"])
    if degrees:
        if "preset" in raw:
            raise ConfigError("give either --preset or explicit degrees, not both")
        kw["preset"] = None
        kw["degrees"] = degrees
    elif "preset" in raw:
        kw["preset"] = str(raw["preset"])
    return ExperimentConfig(**kw), args.verbose


def main(argv=None):
    try:
        config, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"wg-plate: usage error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run_experiment(config)
    except Exception as exc:  # report the failing module's diagnostic
        mod = type(exc).__module__
        print(f"wg-plate: {type(exc).__name__} ({mod}): {exc}", file=sys.stderr)
        return 1
    for t, level, dt in result.timings:
        print(f"level {level} t={t:g}: {dt:.2f}s", file=sys.stderr)
    if not config.out:
        sys.stdout.write(result.csv_text)
    else:
        print(result.markdown)
    return 0


if __name__ == "__main__":
    sys.exit(main())
