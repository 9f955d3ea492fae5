"""Benchmark grids over methods and bundle sizes, and bound-curve emission."""
import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .bound import BundleModel, eval_p, interpolability_check, read_records_csv, upper_parabolae
from .methods import ABORTED, METHODS, run_method
from .methods.estimator import MEMORY_METHODS
from .problems import make_lrsp, make_quad
from .simplex_qp import PROJECTED_ACCELERATED, SubsolverConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = ("problem", "method", "bundle", "L_scale", "eps_rel", "seed", "outer", "inner_avg", "time_s", "it_ms",
               "termination")
TIMING_COLUMNS = ("time_s", "it_ms")


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    problem: str = "quad"
    n: int | None = None
    m: int = 10000
    density: float = 1e-3
    methods: list = field(default_factory=lambda: ["fgm", "ogm"])
    bundles: list = field(default_factory=lambda: [1])
    L_scale: float = 1.0
    eps_rel: float = 1e-4
    seeds: list = field(default_factory=lambda: [0])
    newton_iters: int = 2
    inner_cap: object = "default"
    weight_rule: str = "eq89"
    tol_factor: float | None = None
    audit: tuple = ()
    max_outer: int = 10_000_000

    def validate(self):
        if self.problem not in ("quad", "lrsp"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if not self.methods:
            raise ConfigError("method list is empty")
        for method in self.methods:
            if method not in METHODS:
                raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
        if not self.bundles or any(b < 1 for b in self.bundles):
            raise ConfigError("bundle sizes must be >= 1")
        if not self.eps_rel > 0:
            raise ConfigError("eps_rel must be positive")
        if not self.L_scale > 0:
            raise ConfigError("L scale must be positive")
        if self.L_scale < 1:
            log.warning("L scale %.3g < 1 underestimates the Lipschitz constant; guarantees do not apply",
                        self.L_scale)
        if self.weight_rule not in ("listing", "eq89"):
            raise ConfigError(f"unknown weight rule {self.weight_rule!r}")
        if self.newton_iters < 0:
            raise ConfigError("Newton iteration cap must be >= 0")
        if self.inner_cap not in ("default", None) and self.inner_cap < 1:
            raise ConfigError("inner cap must be >= 1")
        unknown = set(self.audit) - {"esp", "potential", "rate", "step"}
        if unknown:
            raise ConfigError(f"unknown audit(s): {', '.join(sorted(unknown))}")


@dataclass
class TableReport:
    rows: list
    reports: list = field(repr=False, default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()

    def to_markdown(self):
        lines = ["| Method | m | Outer | Inner | Time (s) | IT (ms) |", "|---|---|---|---|---|---|"]
        for r in self.rows:
            lines.append(f"| {r['method']} | {r['bundle']} | {r['outer']} | {r['inner_avg']} | {r['time_s']} "
                         f"| {r['it_ms']} |")
        return "\n".join(lines) + "\n"

    @property
    def aborted(self):
        return any(r["termination"] == ABORTED for r in self.rows)


def build_problem(config, seed):
    if config.problem == "quad":
        return make_quad(config.n or 1000)
    return make_lrsp(config.m, config.n or 2000, config.density, seed)


def run_bench(config, out=None, fmt="csv"):
    """Run every (seed, method, bundle) cell and optionally write the table."""
    config.validate()
    if "gmm" in config.methods and config.inner_cap in ("default", None):
        log.warning("gmm runs its subsolver without an iteration cap; it may stall on hard instances")
    rows, reports = [], []
    seeds = config.seeds if config.problem == "lrsp" else config.seeds[:1]
    for seed in seeds:
        problem = build_problem(config, seed)
        for method in config.methods:
            for bundle in (config.bundles if method in MEMORY_METHODS else [1]):
                rep = run_method(problem, method, bundle, config.L_scale, config.eps_rel, config.newton_iters,
                                 config.inner_cap, config.weight_rule, config.tol_factor, audit=config.audit,
                                 max_outer=config.max_outer)
                reports.append(rep)
                rows.append({
                    "problem": config.problem, "method": method, "bundle": bundle, "L_scale": config.L_scale,
                    "eps_rel": config.eps_rel, "seed": seed, "outer": rep.outer,
                    "inner_avg": f"{rep.inner_avg:.4f}", "time_s": f"{rep.time_s:.4f}",
                    "it_ms": f"{rep.it_ms:.4f}", "termination": rep.termination,
                })
                log.info("%s m=%d: %d outer, %s", method, bundle, rep.outer, rep.termination)
    table = TableReport(rows, reports)
    if out is not None:
        with open(out, "w") as fh:
            fh.write(table.to_markdown() if fmt == "md" else table.to_csv())
    return table


def parse_grid(text):
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise ConfigError(f"grid must read a:b:step, got {text!r}") from None
    if not (step > 0 and hi >= lo):
        raise ConfigError("grid needs step > 0 and b >= a")
    return np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)


def emit_bound_curve(records_file, L, grid, out=None, tol=1e-12):
    """Tabulate ``y, l(y), p(y)`` and every ``Psi_i(y)`` over a 1-D grid.

    Raises ``ConfigError`` when the records are not interpolable at ``L``.
    Returns the CSV text.
    """
    records = read_records_csv(records_file)
    if not records:
        raise ConfigError("record file is empty")
    if records[0].z.shape[0] != 1:
        raise ConfigError("bound curves are one-dimensional")
    if not L > 0:
        raise ConfigError("L must be positive")
    check = interpolability_check(records, L)
    if not check.ok:
        i, j = check.worst_pair
        raise ConfigError(f"records are not interpolable at L={L}: worst pair ({i + 1}, {j + 1}) with slack "
                          f"{check.worst_slack:.3g}; minimal feasible L is {check.min_lipschitz:.6g}")
    ys = parse_grid(grid) if isinstance(grid, str) else np.asarray(grid, dtype=float)
    model = BundleModel.from_records(records, L)
    psis = upper_parabolae(model)
    cfg = SubsolverConfig(PROJECTED_ACCELERATED, tol, 100000)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "l", "p"] + [f"psi_{i + 1}" for i in range(len(psis))])
    for y in ys:
        yv = np.array([y])
        w.writerow([repr(float(y)), repr(model.lower_model(yv)), repr(eval_p(yv, model, cfg).value)]
                   + [repr(psi(yv)) for psi in psis])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w") as fh:
            fh.write(text)
    return text
