"""Command-line front end.

Every command writes one report (JSON by default, CSV tables on request)
to ``--out`` or stdout and exits 0 when its checks pass, 1 when a
mathematical check fails and 2 on invalid configuration.
"""
import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .paneitz import (
    EPS_MAX, green_kernel, paneitz_spectrum, resolvent_multipliers,
    spectral_resolvent_kernel,
)
from .quadrature import MAX_RES, MIN_RES, gauss_grid
from .rearrange import symmetrize_zonal
from .solver import (
    conjecture_probe, inequality_sweep, kazdan_warner_residual,
    minimize_perturbed, random_positive_zonal,
)
from .suites import SUITES
from .zonal import ZonalFunction, convolve, read_kernel_csv

SCHEMA_VERSION = 1
DEFAULTS = {"L": 64, "grid": 256, "res": 8, "eps": [0.1], "seed": 0}
EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    eps: list
    L: int
    grid: int
    res: int
    seed: int
    out: str | None
    format: str
    options: dict = field(default_factory=dict)

    def validate(self, eps_zero_ok=True):
        if self.L < 0:
            raise ConfigError(f"--L must be >= 0, got {self.L}")
        if self.grid < 2:
            raise ConfigError(f"--grid must be >= 2, got {self.grid}")
        if self.L >= self.grid:
            raise ConfigError(f"--L {self.L} needs --grid > {self.L}")
        if not MIN_RES <= self.res <= MAX_RES:
            raise ConfigError(f"--res must lie in [{MIN_RES}, {MAX_RES}]")
        for e in self.eps:
            lo_ok = e >= 0 if eps_zero_ok else e > 0
            if not (lo_ok and e < EPS_MAX):
                raise ConfigError(f"eps = {e} is outside the admissible range below 15/16")


def _eps_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _clean(obj):
    """Convert numpy scalars and arrays into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


# ---------------------------------------------------------------------------
# commands; each returns (passed, results, tables)
# tables map a name to (header, rows) with units in the header


def cmd_spectrum(cfg):
    cfg.validate()
    eps = cfg.eps if cfg.options["eps_given"] else []
    lam = paneitz_spectrum(cfg.L).eigenvalues
    rows = [[l, lam[l]] for l in range(cfg.L + 1)]
    for e in eps:
        mu = resolvent_multipliers(e, cfg.L)
        for l, row in enumerate(rows):
            row.append(mu[l])
    header = ["l [1]", "lambda_l [1]"] + [f"mu_l(eps={e}) [1]" for e in eps]
    results = {"eigenvalues": lam, "eps": eps}
    return True, results, {"spectrum": (header, rows)}


def cmd_verify(cfg):
    cfg.validate()
    names = list(SUITES) if cfg.options["suite"] == "all" else [cfg.options["suite"]]
    samples = cfg.options["samples"]
    eps = tuple(cfg.eps) if cfg.options["eps_given"] else (0.05, 0.1, 0.2)
    if any(e <= 0 for e in eps):
        raise ConfigError("verify suites need eps > 0")
    grid = gauss_grid(cfg.grid)
    runners = {
        "riesz": lambda: SUITES["riesz"](samples or 200, cfg.res, cfg.seed),
        "convolution": lambda: SUITES["convolution"](samples or 100, cfg.seed, grid, cfg.L),
        "kernel": lambda: SUITES["kernel"](eps, grid, cfg.L),
        "psi": lambda: SUITES["psi"](grid),
        "green": lambda: SUITES["green"](),
        "kw": lambda: SUITES["kw"](eps, cfg.seed, grid),
        "rearrange": lambda: SUITES["rearrange"](samples or 100, 20, cfg.seed, grid),
    }
    reports = [runners[n]() for n in names]
    rows = [[r.name, "pass" if r.passed else "fail", json.dumps(_clean(r.metrics))]
            for r in reports]
    passed = all(r.passed for r in reports)
    return passed, {"suites": [r.to_dict() for r in reports]}, {
        "verify": (["suite", "verdict", "metrics [json]"], rows)}


def cmd_minimize(cfg):
    cfg.validate(eps_zero_ok=False)
    grid = gauss_grid(cfg.grid)
    reports, rows = [], []
    for e in cfg.eps:
        if cfg.options["start"] == "constant":
            init = ZonalFunction(grid, np.ones(grid.size))
        else:
            init = random_positive_zonal(np.random.default_rng(cfg.seed), grid)
        r = minimize_perturbed(e, init, tol=cfg.options["tol"],
                               max_iter=cfg.options["max_iter"], L=cfg.L)
        reports.append(r.to_dict())
        rows += [[e, h.iteration, h.s_estimate, h.quotient, h.sup_dist_constant,
                  h.sup_change] for h in r.history]
    passed = all(r["converged"] for r in reports)
    header = ["eps [1]", "iteration [1]", "s_estimate [1]", "quotient [1]",
              "sup_dist_constant [1]", "sup_change [1]"]
    return passed, {"runs": reports}, {"trace": (header, rows)}


def cmd_sweep(cfg):
    cfg.validate()
    grid = gauss_grid(cfg.grid)
    reports, rows = [], []
    for e in cfg.eps:
        r = inequality_sweep(cfg.options["samples"] or 500, e, cfg.seed, grid,
                             cfg.options["generator"], L=cfg.L, delta=cfg.options["delta"])
        reports.append(r.to_dict())
        rows += [[e, lab, q, q - r.bound] for lab, q in zip(r.labels, r.quotients)]
    passed = all(r["violations"] == 0 for r in reports)
    header = ["eps [1]", "sample", "quotient [1]", "margin [1]"]
    return passed, {"sweeps": reports}, {"sweep": (header, rows)}


def cmd_probe(cfg):
    cfg.validate(eps_zero_ok=False)
    grid = gauss_grid(cfg.grid)
    reports, rows = [], []
    for e in cfg.eps:
        r = conjecture_probe(e, cfg.options["seeds"], cfg.seed, grid, cfg.L)
        reports.append(r.to_dict())
        rows += [[e, run.seed, run.status, run.iterations, run.s, run.sup_dist_mean,
                  run.residual] for run in r.runs]
    header = ["eps [1]", "seed", "status", "iterations [1]", "s [1]",
              "sup_dist_mean [1]", "residual [1]"]
    # the probe reports evidence; only a "nonconstant" converged run is flagged
    passed = all(rep["counts"]["nonconstant"] == 0 for rep in reports)
    return passed, {"probes": reports}, {"probe": (header, rows)}


def _named_profile(name, grid):
    t = grid.nodes
    if name == "constant":
        return ZonalFunction(grid, np.ones(grid.size))
    if name == "linear":
        return ZonalFunction(grid, 1.0 + t / 2.0)
    raise ConfigError(f"unknown profile {name!r} (choose constant or linear)")


def cmd_kw(cfg):
    cfg.validate()
    grid = gauss_grid(cfg.grid)
    r = kazdan_warner_residual(_named_profile(cfg.options["rho"], grid),
                               _named_profile(cfg.options["chi"], grid))
    rows = [[i + 1, v] for i, v in enumerate(r.residuals)]
    return True, r.to_dict(), {"kw": (["i [1]", "r_i [1]"], rows)}


def cmd_convolve(cfg):
    cfg.validate()
    grid = gauss_grid(cfg.grid)
    name = cfg.options["kernel"]
    if name == "green":
        k = green_kernel(grid)
    elif name == "resolvent":
        k = spectral_resolvent_kernel(cfg.eps[0], cfg.L, grid)
    else:
        try:
            k = read_kernel_csv(name, grid)
        except (OSError, ValueError, IndexError) as exc:
            raise ConfigError(f"cannot read kernel table {name!r}: {exc}")
    power = cfg.options["power"]
    if power < 1:
        raise ConfigError("--power must be >= 1")
    out = k
    for _ in range(power - 1):
        out = convolve(k, out, cfg.L, cfg.options["method"])
    results = {"kernel": name, "power": power, "value_at_1": float(out(1.0))}
    passed = True
    if name == "green" and power == 2:
        err = abs(out(1.0) - 1.0 / 16.0)
        results["green_square_error_at_1"] = float(err)
        passed = err <= 1e-8
    rows = [[t, v] for t, v in zip(grid.nodes, out.values)]
    return passed, results, {"profile": (["t [1]", "k(t) [1]"], rows)}


def cmd_rearrange(cfg):
    cfg.validate()
    grid = gauss_grid(cfg.grid)
    src = cfg.options["input"]
    if src:
        try:
            k = read_kernel_csv(src, grid)
        except (OSError, ValueError, IndexError) as exc:
            raise ConfigError(f"cannot read profile table {src!r}: {exc}")
        f = ZonalFunction(grid, k.values)
    else:
        rng = np.random.default_rng(cfg.seed)
        f = ZonalFunction(grid, np.log(random_positive_zonal(rng, grid).values))
    r = symmetrize_zonal(f)
    fs = r.symmetrized
    lp = {}
    for p in (1, 2, 6):
        direct = float(np.sum(grid.measure * np.abs(f.values) ** p) ** (1.0 / p))
        lp[str(p)] = abs(r.lp_norm(p) - direct) / max(direct, 1e-300)
    levels = np.unique(f.values)
    above = np.array([np.sum(grid.measure[f.values > s]) for s in levels])
    eq = float(np.max(np.abs(above - [r.measure_above(s) for s in levels])))
    idem = bool(np.array_equal(symmetrize_zonal(fs).symmetrized.values, fs.values))
    passed = eq <= 1e-12 and max(lp.values()) <= 1e-12 and idem
    results = {"equimeasurability_error": eq, "lp_relative_error": lp,
               "idempotent": idem, "monotone": bool(np.all(np.diff(fs.values) >= 0))}
    rows = [[t, a, b] for t, a, b in zip(grid.nodes, f.values, fs.values)]
    return passed, results, {"rearrangement": (["t [1]", "f [1]", "f_star [1]"], rows)}


COMMANDS = {
    "spectrum": cmd_spectrum, "verify": cmd_verify, "minimize": cmd_minimize,
    "sweep": cmd_sweep, "probe": cmd_probe, "kw": cmd_kw,
    "convolve": cmd_convolve, "rearrange": cmd_rearrange,
}


# ---------------------------------------------------------------------------
# parsing and output


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    common.add_argument("--eps", type=_eps_list, default=None,
                        help="comma-separated perturbation values")
    common.add_argument("--L", type=int, default=DEFAULTS["L"], help="degree cap")
    common.add_argument("--grid", type=int, default=DEFAULTS["grid"],
                        help="nodes of the 1D Gauss grid")
    common.add_argument("--res", type=int, default=DEFAULTS["res"],
                        help="sphere grid resolution")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp so reports are byte-reproducible")

    parser = argparse.ArgumentParser(prog="s3paneitz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="Paneitz eigenvalues and multipliers")
    p = sub.add_parser("verify", parents=[common], help="run the property suites")
    p.add_argument("--suite", choices=["all"] + list(SUITES), default="all")
    p.add_argument("--samples", type=int, default=None)
    p = sub.add_parser("minimize", parents=[common], help="perturbed extremal problem")
    p.add_argument("--start", choices=("random", "constant"), default="random")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    p = sub.add_parser("sweep", parents=[common], help="sharp inequality sweep")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--generator", choices=("random", "near-green"), default="random")
    p.add_argument("--delta", type=float, default=1e-4)
    p = sub.add_parser("probe", parents=[common], help="Newton probe from random starts")
    p.add_argument("--seeds", type=int, default=20)
    p = sub.add_parser("kw", parents=[common], help="Kazdan-Warner residuals")
    p.add_argument("--rho", default="constant", help="constant or linear (1 + t/2)")
    p.add_argument("--chi", default="constant", help="constant or linear (1 + t/2)")
    p = sub.add_parser("convolve", parents=[common], help="convolution powers of a kernel")
    p.add_argument("--kernel", default="green", help="green, resolvent or a CSV path")
    p.add_argument("--power", type=int, default=2)
    p.add_argument("--method", choices=("spectral", "direct"), default="spectral")
    p = sub.add_parser("rearrange", parents=[common], help="rearrange a zonal profile")
    p.add_argument("--input", default=None, help="CSV table (t, f(t)); default random")
    return parser


def make_config(args):
    common = {"command", "out", "format", "seed", "eps", "L", "grid", "res", "no_timestamp"}
    options = {k: v for k, v in vars(args).items() if k not in common}
    options["eps_given"] = args.eps is not None
    return RunConfig(args.command, args.eps if args.eps is not None else list(DEFAULTS["eps"]),
                     args.L, args.grid, args.res, args.seed, args.out, args.format, options)


def render(cfg, passed, results, tables, timestamp=True):
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for i, (name, (header, rows)) in enumerate(tables.items()):
            if i:
                buf.write("\n")
            buf.write(f"# {name}\n")
            writer.writerow(header)
            writer.writerows(_clean(rows))
        return buf.getvalue()
    echo = asdict(cfg)
    echo.pop("options")
    echo.update({k: v for k, v in cfg.options.items() if k != "eps_given"})
    doc = {"schema_version": SCHEMA_VERSION, "version": __version__,
           "command": cfg.command, "config": echo, "defaults": DEFAULTS,
           "passed": passed, "results": results}
    if timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    cfg = make_config(args)
    try:
        passed, results, tables = COMMANDS[cfg.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    text = render(cfg, passed, results, tables, not args.no_timestamp)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        print(f"{cfg.command}: {'pass' if passed else 'FAIL'} -> {cfg.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
