"""Experiment runner: sweep precision limits over measurement times, run
single pulse optimizations, tabulate closed-form reference values and run the
self-check battery.

Subcommands
-----------
``sweep``     per grid time: uncontrolled precision limit, GRAPE-controlled
              limit, closed-form value when one exists; CSV or JSON output.
``optimize``  one GRAPE run; stores the pulse grid with enough metadata to
              re-evaluate it bit-for-bit (``--replay`` does exactly that).
``oracle``    closed-form tables for a catalog model over a time grid.
``validate``  fast invariant battery (propagation, information matrices,
              closed-form consistency); nonzero exit on failure.

Exit codes: 0 success, 2 configuration error, 3 output I/O error, 4 numerical
failure at every grid point (isolated failures are flagged in the output and
the run continues).  ``FISHERCTL_THREADS`` caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .dynamics import ControlGrid, measure_derivs, propagate
from .errors import FisherctlError, InvariantViolation, PropagationError, SingularContribution
from .fisher import cfim, objective_f0, objective_fcle, qfim, tr_inv
from .grape import GrapeConfig, GrapeResult, optimize
from .models import MODEL_NAMES, get_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


@dataclass(frozen=True)
class RunConfig:
    """Everything one sweep / optimize invocation needs."""

    model: str
    noise: bool = True
    rates: tuple | None = None
    t_grid: tuple = ()
    steps_per_unit: int = 100
    objective: str | None = None  # None = model default
    grape: GrapeConfig = field(default_factory=GrapeConfig)
    out: str = "-"
    format: str = "csv"
    reproducible: bool = False
    warm_start: bool = False

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise FisherctlError(
                f"unknown model {self.model!r}; expected one of {MODEL_NAMES}"
            )
        if not self.t_grid:
            raise FisherctlError("t_grid must be nonempty")
        grid = tuple(float(t) for t in self.t_grid)
        if any(t <= 0 for t in grid):
            raise FisherctlError("t_grid entries must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise FisherctlError("t_grid must be strictly increasing")
        if self.steps_per_unit < 10:
            raise FisherctlError("steps_per_unit must be at least 10")
        if self.objective not in (None, "f0", "fcle"):
            raise FisherctlError(f"unknown objective {self.objective!r}")
        if self.format not in ("csv", "json"):
            raise FisherctlError(f"unknown format {self.format!r}")
        object.__setattr__(self, "t_grid", grid)


@dataclass(frozen=True)
class SweepRecord:
    """One row of sweep output (one abscissa of the precision-vs-time curve)."""

    t: float
    tr_inv_uncontrolled: float
    tr_inv_controlled: float
    tr_inv_oracle: float | None
    objective: float
    iters: int
    converged: bool
    failed: bool = False


def _fmt(value) -> str:
    """12-significant-digit float serialization; inf/nan as literals."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    if math.isnan(v):
        return "nan"
    return format(v, ".12g")


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return _fmt(value)
    if isinstance(value, (np.floating, np.integer)):
        return _json_safe(value.item())
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise _OutputError(str(exc)) from exc


class _OutputError(Exception):
    pass


def _timestamp_line() -> str:
    import datetime

    return f"# generated {datetime.datetime.now().isoformat(timespec='seconds')}"


def _threads(n_jobs: int) -> int:
    env = os.environ.get("FISHERCTL_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise FisherctlError(f"FISHERCTL_THREADS={env!r} is not an integer")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _model_rates(config: RunConfig):
    return get_model(config.model, noise=config.noise, rates=config.rates)


def _steps_for(t: float, density: int) -> int:
    return max(1, round(density * t))


def _uncontrolled_tr_inv(model, t: float, density: int) -> float:
    grid = ControlGrid.zeros(len(model.control_hams), _steps_for(t, density), t)
    traj = propagate(model, model.true_values, grid, deriv_method="exact")
    p, dp = measure_derivs(traj, model.default_povm)
    return tr_inv(cfim(p, dp))


def _oracle_tr_inv(config: RunConfig, model, t: float) -> float | None:
    gam = [g for _, g in model.noise.channels]
    if config.model == "magfield":
        rate = gam[0] if gam else 0.0
        b, theta, phi = model.true_values
        try:
            return tr_inv(oracles.oracle_magfield_cfim(b, theta, phi, rate, t))
        except InvariantViolation:
            return None
    if config.model == "xxz":
        rates = gam if gam else [0.0, 0.0]
        if len(set(rates)) <= 1:
            rate = rates[0] if rates else 0.0
            x1, x2 = model.true_values
            try:
                return oracles.oracle_xxz_trinv(x1, x2, rate, t)
            except InvariantViolation:
                return None
    return None


def _sweep_point(config: RunConfig, model, t: float, index: int,
                 warm_controls) -> tuple:
    grape_cfg = dataclasses.replace(
        config.grape,
        steps_per_unit=config.steps_per_unit,
        init_seed=config.grape.init_seed + index,
    )
    if warm_controls is not None:
        m = _steps_for(t, config.steps_per_unit)
        grape_cfg = dataclasses.replace(
            grape_cfg, init_scheme="user",
            user_controls=_rescale_pulse(warm_controls, m),
        )
    try:
        unc = _uncontrolled_tr_inv(model, t, config.steps_per_unit)
    except (PropagationError, SingularContribution, InvariantViolation):
        unc = math.nan
    try:
        result = optimize(model, model.true_values, None, None, t, grape_cfg,
                          objective=config.objective)
        record = SweepRecord(
            t=t,
            tr_inv_uncontrolled=unc,
            tr_inv_controlled=result.final_tr_inv,
            tr_inv_oracle=_oracle_tr_inv(config, model, t),
            objective=result.final_objective,
            iters=result.iterations_used,
            converged=result.converged,
        )
        return record, result.final_controls.amplitudes
    except (PropagationError, SingularContribution, InvariantViolation):
        record = SweepRecord(
            t=t, tr_inv_uncontrolled=unc, tr_inv_controlled=math.nan,
            tr_inv_oracle=_oracle_tr_inv(config, model, t),
            objective=math.nan, iters=0, converged=False, failed=True,
        )
        return record, None


def _rescale_pulse(amplitudes: np.ndarray, new_steps: int) -> np.ndarray:
    """Linear time-rescaling of a pulse grid onto a new step count."""
    p, m = amplitudes.shape
    if m == new_steps:
        return amplitudes.copy()
    old = (np.arange(m) + 0.5) / m
    new = (np.arange(new_steps) + 0.5) / new_steps
    return np.stack([np.interp(new, old, amplitudes[k]) for k in range(p)])


SWEEP_COLUMNS = ("t", "tr_inv_uncontrolled", "tr_inv_controlled",
                 "tr_inv_oracle", "objective", "iters", "converged")


def _write_sweep(config: RunConfig, records: list) -> None:
    stream, owned = _open_out(config.out)
    try:
        if config.format == "csv":
            if not config.reproducible:
                stream.write(_timestamp_line() + "\n")
            writer = csv.writer(stream)
            writer.writerow(SWEEP_COLUMNS)
            for r in records:
                writer.writerow([
                    _fmt(r.t), _fmt(r.tr_inv_uncontrolled),
                    _fmt(r.tr_inv_controlled), _fmt(r.tr_inv_oracle),
                    _fmt(r.objective), _fmt(r.iters), _fmt(r.converged),
                ])
        else:
            config_echo = {
                "model": config.model,
                "noise": config.noise,
                "rates": list(config.rates) if config.rates else None,
                "t_grid": list(config.t_grid),
                "steps_per_unit": config.steps_per_unit,
                "objective": config.objective,
                "seed": config.grape.init_seed,
            }
            if not config.reproducible:
                config_echo["generated"] = _timestamp_line()[2:]
            payload = {
                "config": config_echo,
                "records": [
                    {
                        "t": _json_safe(r.t),
                        "tr_inv_uncontrolled": _json_safe(r.tr_inv_uncontrolled),
                        "tr_inv_controlled": _json_safe(r.tr_inv_controlled),
                        "tr_inv_oracle": _json_safe(r.tr_inv_oracle),
                        "objective": _json_safe(r.objective),
                        "iters": r.iters,
                        "converged": r.converged,
                    }
                    for r in records
                ],
            }
            json.dump(payload, stream, indent=2)
            stream.write("\n")
    finally:
        if owned:
            stream.close()


def cmd_sweep(config: RunConfig) -> int:
    model = _model_rates(config)
    points = list(enumerate(config.t_grid))
    records: list = [None] * len(points)
    if config.warm_start:
        warm = None
        for i, t in points:
            records[i], warm = _sweep_point(config, model, t, i, warm)
    else:
        workers = _threads(len(points))
        if workers == 1:
            for i, t in points:
                records[i], _ = _sweep_point(config, model, t, i, None)
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_sweep_point, config, model, t, i, None): i
                    for i, t in points
                }
                for fut in concurrent.futures.as_completed(futures):
                    records[futures[fut]] = fut.result()[0]
    _write_sweep(config, records)
    if all(r.failed for r in records):
        return EXIT_NUMERICAL
    return EXIT_OK


# -- optimize ---------------------------------------------------------------


def cmd_optimize(config: RunConfig) -> int:
    model = _model_rates(config)
    t = config.t_grid[0]
    grape_cfg = dataclasses.replace(config.grape, steps_per_unit=config.steps_per_unit)
    result = optimize(model, model.true_values, None, None, t, grape_cfg,
                      objective=config.objective)
    payload = {
        "model": config.model,
        "noise": config.noise,
        "rates": list(config.rates) if config.rates else None,
        "x_true": _json_safe(model.true_values),
        "t": t,
        "steps": result.final_controls.num_steps,
        "steps_per_unit": config.steps_per_unit,
        "seed": config.grape.init_seed,
        "objective_name": result.objective,
        "update_rule": config.grape.update_rule,
        "amplitudes": _json_safe(result.final_controls.amplitudes),
        "final_objective": _json_safe(result.final_objective),
        "final_tr_inv": _json_safe(result.final_tr_inv),
        "iterations": result.iterations_used,
        "converged": result.converged,
    }
    stream, owned = _open_out(config.out if config.out != "-" else "pulse.json")
    try:
        json.dump(payload, stream, indent=2)
        stream.write("\n")
    finally:
        if owned:
            stream.close()
    _print_summary(result)
    return EXIT_OK


def _print_summary(result: GrapeResult) -> None:
    print(f"objective ({result.objective}): {_fmt(result.final_objective)}")
    print(f"tr_inv: {_fmt(result.final_tr_inv)}")
    print(f"iterations: {result.iterations_used}  converged: {result.converged}")


def cmd_replay(pulsefile: str) -> int:
    try:
        with open(pulsefile) as fh:
            payload = json.load(fh)
    except OSError as exc:
        print(f"cannot read pulse file: {exc}", file=sys.stderr)
        return EXIT_IO
    model = get_model(payload["model"], noise=payload["noise"],
                      rates=payload["rates"])
    amplitudes = np.asarray(payload["amplitudes"], dtype=float)
    grid = ControlGrid(amplitudes.shape[0], amplitudes.shape[1],
                       float(payload["t"]), amplitudes)
    traj = propagate(model, np.asarray(payload["x_true"], dtype=float), grid,
                     deriv_method="exact")
    p, dp = measure_derivs(traj, model.default_povm)
    f = cfim(p, dp)
    objective = payload["objective_name"]
    value = objective_f0(f) if objective == "f0" else objective_fcle(f)
    stored = payload["final_objective"]
    stored_val = float("inf") if stored == "inf" else float(stored)
    print(f"stored objective:      {_fmt(stored_val)}")
    print(f"re-evaluated objective: {_fmt(value)}")
    print(f"tr_inv: {_fmt(tr_inv(f))}")
    if abs(value - stored_val) > 1e-9 * max(1.0, abs(stored_val)):
        print("MISMATCH: stored and re-evaluated objectives differ", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# -- oracle -----------------------------------------------------------------


def cmd_oracle(model_name: str, params, t_grid, out: str, rates=None,
               reproducible: bool = False) -> int:
    if model_name not in ("magfield", "zz", "xxz"):
        raise FisherctlError(
            f"oracle tables exist for 'magfield', 'zz' and 'xxz', not {model_name!r}"
        )
    model = get_model(model_name, noise=True, rates=rates) if rates is not None \
        else get_model(model_name)
    x = np.asarray(params, dtype=float) if params is not None else model.true_values
    gam = [g for _, g in model.noise.channels] or [0.0]

    rows = []
    if model_name == "magfield":
        columns = ["t", "p_phip", "p_phim", "p_psip", "p_psim",
                   "f_bb", "f_tt", "f_pp", "f_bt", "tr_inv",
                   "lam_minus", "lam_plus", "note"]
        for t in t_grid:
            row = {"t": t, "note": ""}
            pr = oracles.oracle_magfield_bell_probs(*x, gam[0], t)
            row.update(zip(("p_phip", "p_phim", "p_psip", "p_psim"), pr))
            lam_m, lam_p = oracles.oracle_magfield_eigenvalues(gam[0], t)
            row["lam_minus"], row["lam_plus"] = lam_m, lam_p
            try:
                f = oracles.oracle_magfield_cfim(*x, gam[0], t)
                row["f_bb"], row["f_tt"], row["f_pp"] = np.diag(f.matrix)
                row["f_bt"] = f.matrix[0, 1]
                row["tr_inv"] = tr_inv(f)
            except InvariantViolation:
                row["note"] = "singular"
            rows.append(row)
    elif model_name == "zz":
        columns = ["t", "p_pp", "p_pm", "p_mp", "p_mm",
                   "qfim_diag", "note"]
        for t in t_grid:
            pr = oracles.oracle_zz_probs(*x, gam[0], gam[-1], t)
            rows.append({
                "t": t, "p_pp": pr[0], "p_pm": pr[1], "p_mp": pr[2],
                "p_mm": pr[3],
                "qfim_diag": oracles.oracle_zz_qfim_pure(0.0, 0.0, 0.0, t).matrix[0, 0],
                "note": "",
            })
    else:
        columns = ["t", "p_pp", "p_pm", "p_mp", "p_mm",
                   "f_diag", "f_offdiag", "tr_inv", "note"]
        equal_rates = len(set(gam)) <= 1
        for t in t_grid:
            row = {"t": t, "note": ""}
            pr = oracles.oracle_xxz_probs(*x, gam[0], gam[-1], t)
            row.update(zip(("p_pp", "p_pm", "p_mp", "p_mm"), pr))
            if equal_rates:
                try:
                    f = oracles.oracle_xxz_cfim(*x, gam[0], t)
                    row["f_diag"] = f.matrix[0, 0]
                    row["f_offdiag"] = f.matrix[0, 1]
                    row["tr_inv"] = oracles.oracle_xxz_trinv(*x, gam[0], t)
                except InvariantViolation:
                    row["note"] = "singular"
            else:
                row["note"] = "cfim needs equal rates"
            rows.append(row)

    stream, owned = _open_out(out)
    try:
        if not reproducible:
            stream.write(_timestamp_line() + "\n")
        writer = csv.writer(stream)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, None)) if c != "note" else row["note"]
                             for c in columns])
    finally:
        if owned:
            stream.close()
    return EXIT_OK


# -- validate ---------------------------------------------------------------


def cmd_validate() -> int:
    """Fast invariant battery; prints one line per check."""
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as exc:  # report, never crash the battery
            checks.append((name, False, f"{type(exc).__name__}: {exc}"))

    def probabilities_match():
        for name in ("zz", "xxz"):
            model = get_model(name)
            for t in (0.5, 1.7):
                grid = ControlGrid.zeros(6, _steps_for(t, 100), t)
                traj = propagate(model, model.true_values, grid, deriv_method=None)
                from .dynamics import measure

                p = measure(traj.final_state, model.default_povm)
                if name == "zz":
                    po = oracles.oracle_zz_probs(*model.true_values, 0.1, 0.1, t)
                else:
                    po = oracles.oracle_xxz_probs(*model.true_values, 0.1, 0.1, t)
                assert np.max(np.abs(p - po)) < 1e-9, f"{name} at t={t}"

    def information_ordering():
        for name in MODEL_NAMES:
            model = get_model(name)
            t = 0.9
            grid = ControlGrid.zeros(6, _steps_for(t, 100), t)
            traj = propagate(model, model.true_values, grid, deriv_method="exact")
            p, dp = measure_derivs(traj, model.default_povm)
            fc = cfim(p, dp)
            fq = qfim(traj.final_state, list(traj.final_derivs))
            gap = np.linalg.eigvalsh(fq.matrix - fc.matrix)
            assert gap.min() >= -1e-7, f"{name}: quantum bound violated ({gap.min():.2e})"

    def xxz_closed_form():
        model = get_model("xxz")
        t = 1.3
        grid = ControlGrid.zeros(6, _steps_for(t, 100), t)
        traj = propagate(model, model.true_values, grid, deriv_method="exact")
        p, dp = measure_derivs(traj, model.default_povm)
        f = cfim(p, dp)
        fo = oracles.oracle_xxz_cfim(*model.true_values, 0.1, t)
        rel = np.max(np.abs(f.matrix - fo.matrix)) / np.max(np.abs(fo.matrix))
        assert rel < 1e-6, f"relative deviation {rel:.2e}"

    def trace_preserved():
        model = get_model("magfield")
        t = 2.0
        grid = ControlGrid.zeros(6, _steps_for(t, 50), t)
        traj = propagate(model, model.true_values, grid, deriv_method=None)
        for state in traj.states:
            assert abs(np.trace(state).real - 1.0) < 1e-9

    check("closed-form probabilities (coupling models)", probabilities_match)
    check("quantum vs classical information ordering", information_ordering)
    check("closed-form information matrix (exchange model)", xxz_closed_form)
    check("trace preservation along trajectories", trace_preserved)

    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" -- {detail}"
        print(line)
        if not ok:
            failed += 1
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


# -- argument plumbing --------------------------------------------------------


def _parse_t_grid(spec: str) -> tuple:
    """'start:stop:count' or a comma-separated list."""
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise FisherctlError(f"bad t-grid {spec!r}; expected start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise FisherctlError("t-grid count must be >= 1")
            return tuple(np.linspace(start, stop, count).tolist())
        return tuple(float(v) for v in spec.split(","))
    except ValueError as exc:
        raise FisherctlError(f"bad t-grid {spec!r}: {exc}")


def _parse_rates(spec: str) -> tuple:
    return tuple(float(v) for v in spec.split(","))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisherctl",
        description="Precision limits and pulse synthesis for multiparameter "
                    "estimation under controlled open-system dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--model", choices=MODEL_NAMES)
        p.add_argument("--noise", help="dephasing rate(s), comma separated; 0 disables")
        p.add_argument("--t-grid", help="start:stop:count or comma-separated times")
        p.add_argument("--steps-per-unit", type=int)
        p.add_argument("--objective", choices=("f0", "fcle"))
        p.add_argument("--seed", type=int)
        p.add_argument("--init", choices=("zeros", "random"))
        p.add_argument("--update", choices=("gradient", "bfgs"))
        p.add_argument("--max-iters", type=int)
        p.add_argument("--amplitude-bound", type=float)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--reproducible", action="store_true",
                       help="suppress timestamps for byte-identical output")

    p_sweep = sub.add_parser("sweep", help="precision limits over a time grid")
    common(p_sweep)
    p_sweep.add_argument("--warm-start", action="store_true",
                         help="seed each grid point with the previous pulse, "
                              "time-rescaled (forces sequential evaluation)")

    p_opt = sub.add_parser("optimize", help="single pulse optimization")
    common(p_opt)
    p_opt.add_argument("--t", type=float, help="measurement time (single value)")
    p_opt.add_argument("--replay", metavar="PULSEFILE",
                       help="re-evaluate a stored pulse instead of optimizing")

    p_oracle = sub.add_parser("oracle", help="closed-form reference tables")
    p_oracle.add_argument("--model", required=True, choices=("magfield", "zz", "xxz"))
    p_oracle.add_argument("--params", help="comma-separated parameter values "
                                           "(default: reference values)")
    p_oracle.add_argument("--noise", help="dephasing rate(s), comma separated")
    p_oracle.add_argument("--t-grid", required=True)
    p_oracle.add_argument("--out", default="-")
    p_oracle.add_argument("--reproducible", action="store_true")

    sub.add_parser("validate", help="run the fast invariant battery")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FisherctlError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise FisherctlError(f"config file is not valid JSON: {exc}")


def _run_config_from(args) -> RunConfig:
    file_cfg = _load_config_file(args.config) if args.config else {}

    def pick(flag, key, default=None):
        return flag if flag is not None else file_cfg.get(key, default)

    model = pick(args.model, "model")
    if model is None:
        raise FisherctlError("--model is required (flag or config file)")

    noise_spec = args.noise if args.noise is not None else file_cfg.get("noise")
    if noise_spec is None:
        noise, rates = True, None
    elif isinstance(noise_spec, str):
        rates = _parse_rates(noise_spec)
        noise, rates = any(r > 0 for r in rates), rates if any(r > 0 for r in rates) else None
    elif isinstance(noise_spec, (int, float)):
        noise, rates = noise_spec > 0, ((float(noise_spec),) if noise_spec > 0 else None)
    elif isinstance(noise_spec, (list, tuple)):
        rates = tuple(float(r) for r in noise_spec)
        noise, rates = any(r > 0 for r in rates), (rates if any(r > 0 for r in rates) else None)
    elif isinstance(noise_spec, bool):
        noise, rates = noise_spec, None
    else:
        raise FisherctlError(f"bad noise specification {noise_spec!r}")

    t_value = getattr(args, "t", None)
    if t_value is not None:
        t_grid = (float(t_value),)
    else:
        grid_spec = pick(args.t_grid, "t_grid")
        if grid_spec is None:
            raise FisherctlError("--t-grid is required (flag or config file)")
        t_grid = _parse_t_grid(grid_spec) if isinstance(grid_spec, str) \
            else tuple(float(t) for t in grid_spec)

    grape_file = file_cfg.get("grape", {})
    grape = GrapeConfig(
        step_size=grape_file.get("step_size", 0.01),
        max_iters=pick(args.max_iters, "max_iters",
                       grape_file.get("max_iters", 1000)),
        convergence_tol=grape_file.get("convergence_tol", 1e-6),
        init_scheme=pick(args.init, "init", grape_file.get("init_scheme", "random")),
        init_seed=pick(args.seed, "seed", grape_file.get("init_seed", 0)),
        init_amplitude=grape_file.get("init_amplitude", 0.1),
        update_rule=pick(args.update, "update",
                         grape_file.get("update_rule", "bfgs")),
        amplitude_bound=pick(args.amplitude_bound, "amplitude_bound",
                             grape_file.get("amplitude_bound")),
        fixed_step=grape_file.get("fixed_step", False),
    )

    return RunConfig(
        model=model,
        noise=noise,
        rates=rates,
        t_grid=t_grid,
        steps_per_unit=pick(args.steps_per_unit, "steps_per_unit", 100),
        objective=pick(args.objective, "objective"),
        grape=grape,
        out=pick(args.out, "out", "-"),
        format=pick(args.format, "format", "csv"),
        reproducible=bool(args.reproducible or file_cfg.get("reproducible", False)),
        warm_start=bool(getattr(args, "warm_start", False)
                        or file_cfg.get("warm_start", False)),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate()
        if args.command == "oracle":
            t_grid = _parse_t_grid(args.t_grid)
            params = _parse_rates(args.params) if args.params else None
            rates = _parse_rates(args.noise) if args.noise else None
            return cmd_oracle(args.model, params, t_grid, args.out,
                              rates=rates, reproducible=args.reproducible)
        if args.command == "optimize" and args.replay:
            return cmd_replay(args.replay)
        config = _run_config_from(args)
        if args.command == "sweep":
            return cmd_sweep(config)
        return cmd_optimize(config)
    except (FisherctlError, InvariantViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
