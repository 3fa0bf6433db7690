"""Command-line experiments with CSV output.

Each subcommand builds a ``RunConfig`` from (in decreasing precedence) the
command-line flags, an optional TOML config file whose keys mirror the long
flag names, and the defaults in ``DEFAULTS``.  List-valued options accept
comma-separated values and expand into a grid whose order fixes the row order.

Exit status: 0 when every check passes, 1 on a usage error, 2 when a check
or certificate fails.
"""
import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from itertools import product

from . import __version__
from .anneal import AnnealSchedule
from .bounds import SIGMA_GATE, lower_bound_per_bond, stability_certificate, upper_bound_per_bond
from .csvreport import CsvReport
from .grouplib import GroupKind, haar_sample
from .latticegeom import LatticeSpec, retained_count
from .mc import DEFAULT_SEED, combined_sigma_distance, derive_seed, make_stream
from .weylquad import (QuadratureGrid, default_grid, gue_integral, gue_integral_inf,
                       single_plaquette_z, weyl_haar_crosscheck)
from .wilson import (MC_GUARD_LIMIT, ActionParams, GaugeConfig, McGuardError, check_mc_guard,
                     gauge_fixed_mc_estimate, gauge_transform, mc_partition_estimate,
                     total_action)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "RunConfig", "UsageError", "DEFAULTS", "build_config", "cmd_weyl_check", "cmd_d2_exact",
    "cmd_stability_sweep", "cmd_gue_table", "cmd_gauge_invariance", "cmd_z_table", "main",
]

GAUGE_CHECK_DRAWS = 64


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    group: str = "u"
    n: tuple = (1,)
    dim: tuple = (2,)
    sites: tuple = (2,)
    spacing: tuple = (1.0,)
    gsq: tuple = (1.0,)
    g0sq: float = 1.0
    c: tuple = (1.0,)
    u: tuple = (0.0, 1.0, 2.0, 4.0, 12.0, math.inf)
    samples: int = 1_000_000
    chains: int = 1024
    seed: int = DEFAULT_SEED
    grid: int = 0
    workers: int = 1
    no_mc: bool = False
    out: str = "-"
    no_meta: bool = False

    def kinds(self):
        return [GroupKind(self.group.upper(), n) for n in self.n]

    def quad_grid(self, kind):
        return QuadratureGrid(self.grid) if self.grid else default_grid(kind)


DEFAULTS = {f.name: f.default for f in fields(RunConfig) if f.name != "command"}
_LIST_INT = {"n", "dim", "sites"}
_LIST_FLOAT = {"spacing", "gsq", "c", "u"}


def _as_list(value, conv):
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    try:
        out = tuple(conv(str(v).strip()) if isinstance(v, str) else conv(v) for v in items)
    except ValueError as exc:
        raise UsageError(f"bad list value {value!r}: {exc}") from None
    if not out:
        raise UsageError("empty list value")
    return out


def _coerce(key, value):
    if key in _LIST_INT:
        return _as_list(value, int)
    if key in _LIST_FLOAT:
        return _as_list(value, float)
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes")
        return bool(value)
    try:
        return type(default)(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key}: {value!r}") from None


def load_config_file(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid config file: {exc}") from None
    out = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in DEFAULTS:
            raise UsageError(f"unknown config key {key!r}")
        out[name] = value
    return out


def _validate(cfg):
    if cfg.group not in ("u", "su"):
        raise UsageError("group must be 'u' or 'su'")
    if cfg.samples < 1:
        raise UsageError("samples must be >= 1")
    if cfg.chains < 2:
        raise UsageError("chains must be >= 2")
    if cfg.workers < 1:
        raise UsageError("workers must be >= 1")
    if cfg.grid and cfg.grid < 8:
        raise UsageError("grid must be 0 (default) or >= 8")
    if cfg.seed < 0:
        raise UsageError("seed must be nonnegative")
    if any(u < 0 or math.isnan(u) for u in cfg.u):
        raise UsageError("u values must be nonnegative")
    if any(c < 0 or not math.isfinite(c) for c in cfg.c):
        raise UsageError("c values must be finite and nonnegative")
    try:
        cfg.kinds()
        for d, L, a in product(cfg.dim, cfg.sites, cfg.spacing):
            LatticeSpec(d, L, a)
        for g in cfg.gsq:
            if not 0 < g <= cfg.g0sq:
                raise ValueError(f"gsq must lie in (0, g0sq={cfg.g0sq}]")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def build_config(command, flags=None, config_file=None):
    """Merge defaults, config-file values and explicit flags (highest wins)."""
    merged = dict(DEFAULTS)
    if config_file:
        merged.update(load_config_file(config_file))
    merged.update({k: v for k, v in (flags or {}).items() if v is not None})
    values = {k: _coerce(k, v) for k, v in merged.items()}
    return _validate(RunConfig(command=command, **values))


def _metadata(cfg, extra=None):
    meta = {
        "command": cfg.command,
        "group": cfg.group.upper(),
        "N": ",".join(map(str, cfg.n)),
        "d": ",".join(map(str, cfg.dim)),
        "L": ",".join(map(str, cfg.sites)),
        "a": ",".join(f"{v:g}" for v in cfg.spacing),
        "gsq": ",".join(f"{v:g}" for v in cfg.gsq),
        "g0sq": f"{cfg.g0sq:g}",
        "seed": cfg.seed,
        "samples": cfg.samples,
        "chains": cfg.chains,
        "grid": cfg.grid or "default",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra or {})
    return meta


def _pool_map(cfg, func, items):
    items = list(items)
    if cfg.workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def _guard(params):
    try:
        check_mc_guard(params)
    except McGuardError as exc:
        raise UsageError(str(exc)) from None


def cmd_weyl_check(cfg):
    """Haar sampling against eigenphase quadrature for ``E[exp(-c ||1 - U||^2)]``."""
    points = list(product(cfg.kinds(), cfg.c))
    for kind, c in points:
        if c * 4 * kind.n > MC_GUARD_LIMIT:
            raise UsageError(f"c={c:g} with N={kind.n} exceeds the Monte Carlo guard")

    def run(item):
        i, (kind, c) = item
        return weyl_haar_crosscheck(kind, c, cfg.samples, derive_seed(cfg.seed, i),
                                    grid=cfg.quad_grid(kind))

    rep = CsvReport(["N", "kind", "c", "mc_mean", "mc_stderr", "quadrature", "sigma_distance"],
                    metadata=_metadata(cfg, {"c": ",".join(f"{v:g}" for v in cfg.c)}))
    results = _pool_map(cfg, run, enumerate(points))
    ok = True
    for (kind, c), res in zip(points, results):
        rep.add(kind.n, str(kind), c, res.mc.mean, res.mc.std_error, res.quad, res.sigma_distance)
        ok &= res.sigma_distance < SIGMA_GATE
    return rep, ok


def cmd_d2_exact(cfg):
    """Plain MC of ``Z`` against the exact d=2 value ``z(c)^Lambda_r``."""
    if cfg.dim != (2,):
        raise UsageError("d2-exact requires --dim 2")
    points = list(product(cfg.kinds(), cfg.sites, cfg.spacing, cfg.gsq))
    params = [ActionParams(LatticeSpec(2, L, a), kind, g, cfg.g0sq) for kind, L, a, g in points]
    for p in params:
        _guard(p)

    def run(item):
        i, p = item
        est = mc_partition_estimate(p, cfg.samples, derive_seed(cfg.seed, i))
        z = single_plaquette_z(p.prefactor, p.kind, cfg.quad_grid(p.kind))
        return est, z ** retained_count(p.spec)

    rep = CsvReport(["N", "kind", "L", "a", "gsq", "n_retained", "mc_Z", "mc_stderr",
                     "z_pow_retained", "sigma_distance"], metadata=_metadata(cfg))
    ok = True
    for p, (est, exact) in zip(params, _pool_map(cfg, run, enumerate(params))):
        sd = est.sigma_distance(exact)
        rep.add(p.kind.n, str(p.kind), p.spec.L, p.a, p.gsq, retained_count(p.spec),
                est.mean, est.std_error, exact, sd)
        ok &= sd < SIGMA_GATE
    return rep, ok


def _sweep_points(cfg):
    return [ActionParams(LatticeSpec(d, L, a), kind, g, cfg.g0sq)
            for d, L, kind, a, g in product(cfg.dim, cfg.sites, cfg.kinds(), cfg.spacing, cfg.gsq)]


def cmd_stability_sweep(cfg):
    """Stability certificates over the grid ``dim x sites x n x spacing x gsq``.

    Rows within the MC guard use plain gauge-fixed Haar sampling; rows beyond
    it are estimated by annealed importance sampling over ``chains`` chains
    and flagged in the ``guard_exceeded`` column.  With ``no_mc`` (d = 2 only) the free energy
    comes from the exact single-plaquette quadrature instead.
    """
    points = _sweep_points(cfg)
    if cfg.no_mc:
        return _sweep_quadrature(cfg, points)

    def run(item):
        i, p = item
        return stability_certificate(p, cfg.samples, derive_seed(cfg.seed, i), enforce_guard=False,
                                     schedule=AnnealSchedule(chains=cfg.chains))

    rep = CsvReport(["d", "L", "N", "kind", "a", "gsq", "c", "n_retained", "ln_zn_mc", "sigma",
                     "ln_lower", "ln_upper", "f_n", "lower_per_dof", "upper_per_dof",
                     "relaxed_upper_per_dof", "closed_form_lower_per_dof", "ess",
                     "guard_load", "guard_exceeded", "annealed", "pass"], metadata=_metadata(cfg))
    ok = True
    for p, cert in zip(points, _pool_map(cfg, run, enumerate(points))):
        rep.add(p.spec.d, p.spec.L, p.kind.n, str(p.kind), p.a, p.gsq, p.prefactor,
                cert.n_retained, cert.ln_zn_mc, cert.sigma, cert.ln_lower, cert.ln_upper,
                cert.free_energy, cert.lower_per_dof, cert.upper_per_dof,
                cert.relaxed_upper_per_dof, cert.closed_form_lower_per_dof, cert.estimate.ess,
                cert.guard_load, cert.guard_exceeded, cert.method == "anneal", cert.passed)
        ok &= cert.passed
    return rep, ok


def d2_free_energy(params, grid=None):
    """Exact d=2 ``f^n = ln(c^(d(N)/2) z(c)) / d(N)`` from single-plaquette quadrature."""
    c, kind = params.prefactor, params.kind
    z = single_plaquette_z(c, kind, grid)
    return (0.5 * kind.algebra_dim * math.log(c) + math.log(z)) / kind.algebra_dim


def _sweep_quadrature(cfg, points):
    if any(p.spec.d != 2 for p in points):
        raise UsageError("--no-mc rows need --dim 2 (exact single-plaquette factorisation)")
    rep = CsvReport(["d", "L", "N", "kind", "a", "gsq", "c", "n_retained", "f_n",
                     "lower_per_dof", "upper_per_dof", "pass"], metadata=_metadata(cfg))
    ok = True
    for p in points:
        dn = p.kind.algebra_dim
        f = d2_free_energy(p, cfg.quad_grid(p.kind))
        lo = lower_bound_per_bond(p.prefactor, 2, p.kind) / dn
        hi = upper_bound_per_bond(p.prefactor, p.kind) / dn
        passed = lo <= f <= hi
        rep.add(2, p.spec.L, p.kind.n, str(p.kind), p.a, p.gsq, p.prefactor,
                retained_count(p.spec), f, lo, hi, passed)
        ok &= passed
    return rep, ok


def cmd_gue_table(cfg):
    """``I(u)`` by quadrature next to the closed form ``I(inf)``."""
    if any(n not in (1, 2, 3) for n in cfg.n):
        raise UsageError("gue-table supports N in {1, 2, 3}")
    rep = CsvReport(["N", "u", "I_u", "I_inf", "ratio"],
                    metadata=_metadata(cfg, {"u": ",".join(f"{v:g}" for v in cfg.u)}))
    ok = True
    for n, u in product(cfg.n, cfg.u):
        val, inf = gue_integral(u, n), gue_integral_inf(n)
        rep.add(n, u, val, inf, val / inf)
        ok &= 0.0 <= val <= inf * (1 + 1e-9)
    return rep, ok


def _action_deviation(params, seed):
    rng = make_stream(seed)
    spec, kind = params.spec, params.kind
    worst = 0.0
    for _ in range(GAUGE_CHECK_DRAWS):
        cfg = GaugeConfig.random(spec, kind, rng)
        r = haar_sample(kind, rng, spec.L ** spec.d)
        worst = max(worst, abs(total_action(cfg) - total_action(gauge_transform(cfg, r))))
    return worst


def cmd_gauge_invariance(cfg):
    """Unfixed against tree-fixed MC of ``Z``, and exact invariance of the action."""
    points = _sweep_points(cfg)
    for p in points:
        _guard(p)

    def run(item):
        i, p = item
        full = mc_partition_estimate(p, cfg.samples, derive_seed(cfg.seed, i, 0))
        fixed = gauge_fixed_mc_estimate(p, cfg.samples, derive_seed(cfg.seed, i, 1))
        return full, fixed, _action_deviation(p, derive_seed(cfg.seed, i, 2))

    rep = CsvReport(["d", "L", "N", "kind", "a", "gsq", "c", "unfixed_mean", "unfixed_stderr",
                     "fixed_mean", "fixed_stderr", "sigma_distance", "action_max_dev"],
                    metadata=_metadata(cfg))
    ok = True
    for p, (full, fixed, dev) in zip(points, _pool_map(cfg, run, enumerate(points))):
        sd = combined_sigma_distance(full, fixed)
        rep.add(p.spec.d, p.spec.L, p.kind.n, str(p.kind), p.a, p.gsq, p.prefactor,
                full.mean, full.std_error, fixed.mean, fixed.std_error, sd, dev)
        ok &= sd < SIGMA_GATE and dev < 1e-9
    return rep, ok


def cmd_z_table(cfg):
    """Single-plaquette ``z(c)`` with its change under grid doubling."""
    rep = CsvReport(["N", "kind", "c", "z", "z_doubled", "refine_delta", "ln_cz"],
                    metadata=_metadata(cfg, {"c": ",".join(f"{v:g}" for v in cfg.c)}))
    for kind, c in product(cfg.kinds(), cfg.c):
        grid = cfg.quad_grid(kind)
        z = single_plaquette_z(c, kind, grid)
        z2 = single_plaquette_z(c, kind, grid.doubled())
        ln_cz = 0.5 * kind.algebra_dim * math.log(c) + math.log(z2) if c > 0 else 0.0
        rep.add(kind.n, str(kind), c, z, z2, abs(z2 - z), ln_cz)
    return rep, True


COMMANDS = {
    "weyl-check": cmd_weyl_check,
    "d2-exact": cmd_d2_exact,
    "stability-sweep": cmd_stability_sweep,
    "gue-table": cmd_gue_table,
    "gauge-invariance": cmd_gauge_invariance,
    "z-table": cmd_z_table,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with keys named like the long flags")
    common.add_argument("--group", choices=("u", "su"), type=str.lower)
    common.add_argument("--n", help="matrix size N (comma list)")
    common.add_argument("--dim", help="lattice dimension d (comma list)")
    common.add_argument("--sites", help="sites per side L (comma list)")
    common.add_argument("--spacing", help="lattice spacing a in (0, 1] (comma list)")
    common.add_argument("--gsq", help="bare coupling g^2 (comma list)")
    common.add_argument("--g0sq", type=float, help="coupling ceiling g0^2")
    common.add_argument("--c", help="single-plaquette prefactor c (comma list)")
    common.add_argument("--u", help="GUE box half-width u, 'inf' allowed (comma list)")
    common.add_argument("--samples", type=int, help="Monte Carlo samples per row")
    common.add_argument("--chains", type=int, help="annealing chains per row beyond the MC guard")
    common.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--grid", type=int, help="quadrature points per dimension (0 = default)")
    common.add_argument("--workers", type=int, help="rows evaluated in parallel")
    common.add_argument("--out", help="output CSV path ('-' for stdout)")
    common.add_argument("--no-meta", action="store_true", default=None,
                        help="omit the '#' metadata lines")
    common.add_argument("--no-mc", action="store_true", default=None,
                        help="stability-sweep: quadrature-only rows (d = 2)")

    parser = _Parser(prog="ymstab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, func in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=func.__doc__.split("\n")[0])
    return parser


def run(argv=None):
    """Parse `argv`, run the command and return ``(report, ok, config)``."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_file = args.pop("config")
    cfg = build_config(command, args, config_file)
    try:
        report, ok = COMMANDS[command](cfg)
    except (ValueError, NotImplementedError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(str(exc)) from None
    return report, ok, cfg


def main(argv=None):
    try:
        report, ok, cfg = run(argv)
        report.write(cfg.out, meta=not cfg.no_meta)
    except SystemExit as exc:  # argparse: --help, --version or a bad flag
        return exc.code if isinstance(exc.code, int) else 1
    except UsageError as exc:
        print(f"ymstab: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ymstab: error: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
