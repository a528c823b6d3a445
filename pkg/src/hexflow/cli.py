"""Command-line front end.

    hexflow run --mode discrete --gamma 1 --eps 1/64 --regular-L 1.6 -o out.csv
    hexflow run --preset partial-pinning
    hexflow plot-data out.csv -o plot.csv

``run`` is the default subcommand, so ``hexflow --mode ode ...`` also works.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from . import __version__
from .atwstep import ALPHA_HEX, DEFAULT_TIE_WINDOW
from .errors import ConfigError, HexflowError, InvalidHexagon, NonUniqueVelocity, SchemaError
from .export import emit_plot_data, write_manifest, write_table, write_trajectory
from .flowsim import convergence_study, run
from .hexgeom import WulffHexagon
from .lattice import SQRT3
from .limitode import gamma_limit_check, integrate_crystalline, integrate_quantized

MODES = ("discrete", "ode", "crystalline", "compare", "sweep", "gamma-limit")
EPS_MODES = ("discrete", "compare", "sweep")

PRESETS = {
    "pinning": {"mode": "discrete", "gamma": "1", "eps": "1/64", "regular_L": "3"},
    "wulff-shrink": {"mode": "discrete", "gamma": "1", "eps": "1/64", "regular_L": "8/5"},
    "partial-pinning": {"mode": "ode", "gamma": "1", "L_long": "8/3", "L_short": "16/15"},
    "gamma-limit": {"mode": "gamma-limit", "regular_L": "1", "gamma_list": "10,100,1000,10000"},
}


def parse_number(text: str, name: str = "value") -> Fraction:
    """Exact rational from ``"1/64"``, ``"0.25"`` or ``"3"``."""
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(name, f"cannot parse {text!r} as a number") from exc


def parse_list(text: str, name: str) -> list[Fraction]:
    items = [p for p in str(text).split(",") if p.strip()]
    if not items:
        raise ConfigError(name, "empty list")
    return [parse_number(p, name) for p in items]


@dataclass
class ScenarioConfig:
    mode: str
    gamma: str | None = None
    eps: str | None = None
    eps_list: str | None = None
    gamma_list: str | None = None
    regular_s: str | None = None
    regular_L: str | None = None
    symmetric_s: str | None = None
    symmetric_L: str | None = None
    L_long: str | None = None
    L_short: str | None = None
    tie_policy: str = "lower"
    tie_window: str = str(DEFAULT_TIE_WINDOW)
    t_max: str | None = None
    stepper: str = "closed_form"
    max_layers: int = 6
    output: str | None = None
    format: str = "csv"
    jobs: int | None = None
    preset: str | None = None
    extra: dict = field(default_factory=dict)

    # validation -------------------------------------------------------------
    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError("mode", f"expected one of {MODES}")
        if self.mode in ("discrete",) and self.eps is None:
            raise ConfigError("eps", f"required in mode {self.mode}")
        if self.mode in ("compare", "sweep") and self.eps is None and self.eps_list is None:
            raise ConfigError("eps_list", f"required in mode {self.mode}")
        if self.mode not in EPS_MODES and (self.eps is not None or self.eps_list is not None):
            raise ConfigError("eps", f"not used in mode {self.mode}")
        if self.mode == "gamma-limit":
            if self.gamma_list is None:
                raise ConfigError("gamma_list", "required in mode gamma-limit")
        elif self.gamma is None and self.mode != "crystalline":
            raise ConfigError("gamma", "required")
        if self.gamma is not None and not self.gamma_value > 0:
            raise ConfigError("gamma", "must be positive")
        for e in self.eps_values:
            if not e > 0:
                raise ConfigError("eps", "must be positive")
        if self.tie_policy not in ("lower", "upper", "alternate"):
            raise ConfigError("tie_policy", "expected lower, upper or alternate")
        if self.stepper not in ("closed_form", "brute_force"):
            raise ConfigError("stepper", "expected closed_form or brute_force")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", "expected csv or json")
        given = [n for n in ("regular_s", "regular_L", "symmetric_s", "symmetric_L") if getattr(self, n) is not None]
        partial = self.L_long is not None or self.L_short is not None
        if partial:
            given.append("partial_pinning")
            if self.L_long is None or self.L_short is None:
                raise ConfigError("partial_pinning", "needs both L_long and L_short")
        if len(given) != 1:
            raise ConfigError("initial", "give exactly one of regular_s, regular_L, symmetric_s, "
                                         "symmetric_L or the partial-pinning pair")
        self.initial_hexagon()

    # derived values ---------------------------------------------------------
    @property
    def gamma_value(self) -> float:
        return float(parse_number(self.gamma, "gamma"))

    @property
    def eps_values(self) -> list[Fraction]:
        if self.eps_list is not None:
            return parse_list(self.eps_list, "eps_list")
        if self.eps is not None:
            return [parse_number(self.eps, "eps")]
        return []

    def initial_hexagon(self) -> WulffHexagon:
        try:
            if self.regular_s is not None:
                return WulffHexagon.regular(float(parse_number(self.regular_s, "regular_s")))
            if self.regular_L is not None:
                return WulffHexagon.regular_from_side(float(parse_number(self.regular_L, "regular_L")))
            if self.symmetric_s is not None:
                v = parse_list(self.symmetric_s, "symmetric_s")
                if len(v) != 3:
                    raise ConfigError("symmetric_s", "expected three values s1,s2,s3")
                return WulffHexagon.symmetric(*map(float, v))
            if self.symmetric_L is not None:
                v = parse_list(self.symmetric_L, "symmetric_L")
                if len(v) != 3:
                    raise ConfigError("symmetric_L", "expected three values L1,L2,L3")
                return WulffHexagon.symmetric_from_sides(*map(float, v))
            Ll = float(parse_number(self.L_long, "L_long"))
            Ls = float(parse_number(self.L_short, "L_short"))
            return WulffHexagon.symmetric_from_sides(Ll, Ls, Ls)
        except InvalidHexagon as exc:
            raise ConfigError("initial", str(exc)) from exc

    def t_max_value(self):
        return None if self.t_max is None else float(parse_number(self.t_max, "t_max"))

    def output_path(self) -> Path:
        if self.output:
            return Path(self.output)
        return Path(f"hexflow-{self.mode}.{'csv' if self.mode in ('compare', 'gamma-limit') else self.format}")

    def manifest_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra", None)
        d.pop("jobs", None)  # parallelism never changes results
        d["output"] = str(self.output_path())
        return d


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _finish(cfg: ScenarioConfig, out: Path, terminal: str, outputs: list[str], **extra) -> None:
    write_manifest(manifest_path(out), {
        "library": "hexflow",
        "version": __version__,
        "config": cfg.manifest_dict(),
        "terminal": terminal,
        "outputs": outputs,
        **extra,
    })


def _eps_tag(e: Fraction) -> str:
    return f"{e.numerator}_{e.denominator}" if e.denominator != 1 else str(e.numerator)


def _run_discrete(cfg: ScenarioConfig, eps: Fraction, out: Path) -> str:
    traj = run(
        cfg.initial_hexagon(), float(eps), cfg.gamma_value, t_max=cfg.t_max_value(),
        stepper=cfg.stepper, tie_window=float(parse_number(cfg.tie_window, "tie_window")),
        tie_policy=cfg.tie_policy, max_layers=cfg.max_layers,
    )
    write_trajectory(out, "discrete", traj, cfg.format)
    return str(traj.terminal)


def _sweep_one(args):
    cfg, eps, out = args
    terminal = _run_discrete(cfg, eps, Path(out))
    sub = replace(cfg, mode="discrete", eps=str(eps), eps_list=None, output=out)
    _finish(sub, Path(out), terminal, [Path(out).name])
    return str(eps), out, terminal


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("HEXFLOW_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError as exc:
                raise ConfigError("jobs", f"HEXFLOW_JOBS={env!r} is not an integer") from exc
        else:
            jobs = 1
    if jobs < 1:
        raise ConfigError("jobs", "must be at least 1")
    return jobs


def run_scenario(cfg: ScenarioConfig) -> int:
    """Run one configured scenario and write its files; returns the process exit code."""
    cfg.validate()
    out = cfg.output_path()
    mode = cfg.mode
    h = cfg.initial_hexagon()
    if mode == "discrete":
        terminal = _run_discrete(cfg, cfg.eps_values[0], out)
        _finish(cfg, out, terminal, [out.name])
    elif mode == "ode":
        traj = integrate_quantized(h.s, cfg.gamma_value,
                                   t_max=cfg.t_max_value() if cfg.t_max is not None else math.inf)
        write_trajectory(out, "ode", traj, cfg.format)
        _finish(cfg, out, traj.terminal, [out.name],
                extinction_time=traj.extinction_time if math.isfinite(traj.extinction_time) else None)
    elif mode == "crystalline":
        sol = integrate_crystalline(h.L, t_max=cfg.t_max_value() if cfg.t_max is not None else math.inf)
        write_trajectory(out, "crystalline", sol, cfg.format)
        _finish(cfg, out, sol.terminal, [out.name],
                extinction_time=sol.extinction_time if math.isfinite(sol.extinction_time) else None)
    elif mode == "compare":
        g = cfg.gamma_value
        ref = integrate_quantized(h.s, g)
        rows = convergence_study(h, g, [float(e) for e in cfg.eps_values], ref,
                                 tie_window=float(parse_number(cfg.tie_window, "tie_window")),
                                 tie_policy=cfg.tie_policy, stepper=cfg.stepper, max_layers=cfg.max_layers)
        write_table(out, rows)
        ode_out = out.with_name(out.stem + ".ode." + cfg.format)
        cry_out = out.with_name(out.stem + ".crystalline." + cfg.format)
        write_trajectory(ode_out, "ode", ref, cfg.format)
        write_trajectory(cry_out, "crystalline", integrate_crystalline(h.L), cfg.format)
        _finish(cfg, out, ref.terminal, [out.name, ode_out.name, cry_out.name])
    elif mode == "sweep":
        jobs = resolve_jobs(cfg.jobs)
        tasks = []
        for e in cfg.eps_values:
            sub_out = out.with_name(f"{out.stem}_eps{_eps_tag(e)}{out.suffix or '.' + cfg.format}")
            tasks.append((cfg, e, str(sub_out)))
        if jobs == 1:
            results = [_sweep_one(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_sweep_one, tasks))
        summary = [{"eps": e, "file": Path(f).name, "terminal": term} for e, f, term in results]
        write_table(out.with_name(out.stem + ".summary.csv"), summary)
        _finish(cfg, out, "Completed", [Path(f).name for _, f, _ in results] + [out.stem + ".summary.csv"])
    elif mode == "gamma-limit":
        L0 = float(h.L[0])
        if max(h.L) - min(h.L) > 1e-12:
            raise ConfigError("initial", "gamma-limit mode needs a regular hexagon")
        rows = gamma_limit_check(L0, [float(g) for g in parse_list(cfg.gamma_list, "gamma_list")])
        write_table(out, rows)
        _finish(cfg, out, "Completed", [out.name])
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _add_run_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named scenario")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--gamma", help="time step ratio tau/eps (fractions like 9/8 accepted)")
    p.add_argument("--eps", help="lattice spacing, e.g. 1/64")
    p.add_argument("--eps-list", dest="eps_list", help="comma separated spacings")
    p.add_argument("--gamma-list", dest="gamma_list", help="comma separated gammas (gamma-limit mode)")
    init = p.add_argument_group("initial hexagon (origin-symmetric)")
    init.add_argument("--regular-s", dest="regular_s", help="regular hexagon with this apothem")
    init.add_argument("--regular-L", dest="regular_L", help="regular hexagon with this side length")
    init.add_argument("--symmetric-s", dest="symmetric_s", help="s1,s2,s3 (s4=s1, s5=s2, s6=s3)")
    init.add_argument("--symmetric-L", dest="symmetric_L", help="L1,L2,L3 (L4=L1, L5=L2, L6=L3)")
    init.add_argument("--partial-pinning", action="store_true",
                      help="two long opposite sides L-long and four short sides L-short")
    init.add_argument("--L-long", dest="L_long")
    init.add_argument("--L-short", dest="L_short")
    p.add_argument("--tie-policy", dest="tie_policy", choices=("lower", "upper", "alternate"))
    p.add_argument("--tie-window", dest="tie_window", help="tie window half-width in units of eps")
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--stepper", choices=("closed_form", "brute_force"))
    p.add_argument("--max-layers", dest="max_layers", type=int)
    p.add_argument("-o", "--output", help="trajectory or table file; a manifest is written next to it")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int, help="parallel scenarios in sweep mode (default $HEXFLOW_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hexflow", description="Discrete and limit crystalline flows of hexagons.")
    parser.add_argument("--version", action="version", version=f"hexflow {__version__}")
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="run a scenario")
    _add_run_arguments(p_run)
    p_plot = sub.add_parser("plot-data", help="reshape trajectory files into long-format CSV")
    p_plot.add_argument("files", nargs="+")
    p_plot.add_argument("-o", "--output", required=True)
    return parser


def config_from_args(ns: argparse.Namespace) -> ScenarioConfig:
    values = dict(PRESETS[ns.preset]) if ns.preset else {}
    for key in ("mode", "gamma", "eps", "eps_list", "gamma_list", "regular_s", "regular_L", "symmetric_s",
                "symmetric_L", "L_long", "L_short", "tie_policy", "tie_window", "t_max", "stepper",
                "max_layers", "output", "format", "jobs"):
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    if values.get("mode") is None:
        raise ConfigError("mode", "give --mode or --preset")
    explicit_initial = any(getattr(ns, k, None) is not None
                           for k in ("regular_s", "regular_L", "symmetric_s", "symmetric_L"))
    if explicit_initial and ns.preset:
        # explicit initial data replaces the preset's
        for k in ("regular_s", "regular_L", "symmetric_s", "symmetric_L", "L_long", "L_short"):
            if getattr(ns, k, None) is None:
                values.pop(k, None)
    if getattr(ns, "partial_pinning", False) and ("L_long" not in values or "L_short" not in values):
        raise ConfigError("partial_pinning", "needs --L-long and --L-short")
    values["preset"] = ns.preset
    return ScenarioConfig(**values)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("run", "plot-data", "-h", "--help", "--version"):
        argv = ["run"] + argv
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "plot-data":
            n = emit_plot_data(ns.files, ns.output)
            print(f"wrote {n} rows to {ns.output}")
            return 0
        cfg = config_from_args(ns)
        code = run_scenario(cfg)
        print(f"wrote {cfg.output_path()}")
        return code
    except ConfigError as exc:
        print(f"hexflow: configuration error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"hexflow: schema error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"hexflow: I/O error: {exc}", file=sys.stderr)
        return 3
    except NonUniqueVelocity as exc:
        print(f"hexflow: {exc}", file=sys.stderr)
        return 4
    except HexflowError as exc:
        print(f"hexflow: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
