"""Run-configuration handling, solver dispatch and artifact emission.

A run is described by one JSON file (complex matrix entries are
``[re, im]`` pairs) and produces, in the output directory:

* ``series.csv``    the solved density-matrix series (fixed column order),
* ``weights.csv``   per-step class weights (hierarchy runs),
* ``noise-stats.csv``  empirical noise moments (stochastic runs with
  ``--validate-noise``),
* ``summary.json``  seed, resolved configuration, timings, health flags
  and, for hierarchy runs, the truncation verdict.

Identical configuration and seed reproduce every output byte of
``series.csv`` regardless of the worker count.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bath import BathSpectrum, build_kernels, discretize_spectral_density
from .exceptions import ConfigurationError
from .hierarchy import HierarchyConfig, solve as hierarchy_solve, tractability_report
from .liouville import SystemModel
from .noise import cross_factors, validate_statistics_seeded
from .reference import OracleConfig, exact_oracle, solve_convolved, solve_lindblad, solve_tcl2
from .series import DensityMatrixSeries
from .sln import ensemble_average

__all__ = ["RunConfig", "run", "compare", "main"]

SOLVERS = (
    "sln",
    "sln-pair",
    "hierarchy1",
    "hierarchy2",
    "convolved",
    "tcl2",
    "lindblad",
    "oracle",
)


def _fail(key: str, message: str) -> ConfigurationError:
    return ConfigurationError(f"config key '{key}': {message}")


def _get(cfg: dict, key: str, kind, required: bool = True, default=None):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.get(p, {}) if isinstance(node, dict) else {}
    if not isinstance(node, dict) or parts[-1] not in node:
        if required:
            raise _fail(key, "missing")
        return default
    val = node[parts[-1]]
    if kind is float:
        if isinstance(val, str) and val.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise _fail(key, f"expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise _fail(key, f"expected an integer, got {val!r}")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise _fail(key, f"expected a string, got {val!r}")
        return val
    if kind is bool:
        if not isinstance(val, bool):
            raise _fail(key, f"expected a boolean, got {val!r}")
        return val
    return val


def _parse_matrix(cfg: dict, key: str) -> np.ndarray:
    raw = _get(cfg, key, None)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise _fail(key, f"not a nested [re, im] array: {exc}") from None
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise _fail(key, f"expected shape (N, N, 2) of [re, im] pairs, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


class RunConfig:
    """Validated run configuration resolved from a JSON document."""

    def __init__(self, cfg: dict):
        if "resolved_config" in cfg:  # summary.json round-trip
            cfg = cfg["resolved_config"]
        self.raw = cfg
        self.solver = _get(cfg, "solver", str)
        if self.solver not in SOLVERS:
            raise _fail("solver", f"must be one of {SOLVERS}, got {self.solver!r}")
        try:
            self.model = SystemModel(
                h_sys=_parse_matrix(cfg, "model.h_sys"),
                coupling=_parse_matrix(cfg, "model.coupling"),
                rho0=_parse_matrix(cfg, "model.rho0"),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise _fail("model", str(exc)) from None
        self.dt = _get(cfg, "grid.dt", float)
        self.t_max = _get(cfg, "grid.t_max", float)
        if self.dt <= 0.0 or self.t_max <= 0.0:
            raise _fail("grid", "dt and t_max must be positive")
        self.n = int(round(self.t_max / self.dt))
        if abs(self.n * self.dt - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise _fail("grid", f"t_max = {self.t_max} is not a multiple of dt = {self.dt}")
        self.master_seed = _get(cfg, "master_seed", int, required=False, default=0)
        self.trajectories = _get(cfg, "trajectories", int, required=False, default=1000)
        self.stride = _get(cfg, "stride", int, required=False, default=1)
        self.threads = _get(cfg, "threads", int, required=False, default=1)
        self.validate_noise = _get(cfg, "validate_noise", bool, required=False, default=False)
        self.dump_noise = _get(cfg, "dump_noise", bool, required=False, default=False)
        self.dump_trajectories = _get(cfg, "dump_trajectories", int, required=False, default=0)
        self.valid_below = _get(cfg, "thresholds.valid_below", float, required=False, default=0.1)
        self.invalid_above = _get(cfg, "thresholds.invalid_above", float, required=False, default=0.5)

        self.spec = None
        if self.solver != "lindblad":
            self.spec = self._parse_bath(cfg)
        self.lindblad_gamma = None
        if self.solver == "lindblad":
            self.lindblad_gamma = _get(cfg, "lindblad.gamma", float)
            if self.lindblad_gamma < 0.0:
                raise _fail("lindblad.gamma", "must be non-negative")
        self.oracle_cfg = None
        if self.solver == "oracle":
            self.oracle_cfg = OracleConfig(
                fock_cutoff=_get(cfg, "oracle.fock_cutoff", int),
                dt=self.dt,
                n=self.n,
                bath_state=_get(cfg, "oracle.bath_state", str, required=False, default="vacuum"),
                check_convergence=_get(
                    cfg, "oracle.check_convergence", bool, required=False, default=True
                ),
            )

    def _parse_bath(self, cfg: dict) -> BathSpectrum:
        family = _get(cfg, "bath.family", str)
        beta = _get(cfg, "bath.beta", float)
        try:
            if family == "custom":
                table = _get(cfg, "bath.table", None)
                if not isinstance(table, list) or not table:
                    raise _fail("bath.table", "custom spectra need a list of [omega, g_hat] pairs")
                return discretize_spectral_density(
                    "custom", 0.0, 1.0, 1.0, len(table), 1.0, beta,
                    table=[(p[0], p[1]) for p in table], t_max=self.t_max,
                )
            return discretize_spectral_density(
                family,
                eta=_get(cfg, "bath.eta", float),
                s=_get(cfg, "bath.s", float, required=False, default=1.0),
                omega_c=_get(cfg, "bath.omega_c", float),
                n_modes=_get(cfg, "bath.n_modes", int),
                omega_max=_get(cfg, "bath.omega_max", float),
                beta=beta,
                t_max=self.t_max,
            )
        except ConfigurationError as exc:
            if str(exc).startswith("config key"):
                raise
            raise _fail("bath", str(exc)) from None

    def resolved(self) -> dict:
        """JSON-serializable configuration that reproduces this run."""

        def mat(m):
            return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]

        out = {
            "solver": self.solver,
            "model": {
                "h_sys": mat(self.model.h_sys),
                "coupling": mat(self.model.coupling),
                "rho0": mat(self.model.rho0),
            },
            "grid": {"dt": self.dt, "t_max": self.t_max},
            "master_seed": self.master_seed,
            "trajectories": self.trajectories,
            "stride": self.stride,
            "threads": self.threads,
            "validate_noise": self.validate_noise,
            "thresholds": {
                "valid_below": self.valid_below,
                "invalid_above": self.invalid_above,
            },
        }
        if self.spec is not None:
            out["bath"] = {
                "family": "custom",
                "beta": "inf" if math.isinf(self.spec.beta) else self.spec.beta,
                "table": [
                    [float(w), float(g)]
                    for w, g in zip(self.spec.omegas, self.spec.g_hats)
                ],
            }
        if self.lindblad_gamma is not None:
            out["lindblad"] = {"gamma": self.lindblad_gamma}
        if self.oracle_cfg is not None:
            out["oracle"] = {
                "fock_cutoff": self.oracle_cfg.fock_cutoff,
                "bath_state": self.oracle_cfg.bath_state,
                "check_convergence": self.oracle_cfg.check_convergence,
            }
        return out


def _load_config(source) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from None


def run(
    config_source,
    output=None,
    solver: str | None = None,
    trajectories: int | None = None,
    seed: int | None = None,
    validate_noise: bool | None = None,
    threads: int | None = None,
    stride: int | None = None,
) -> dict:
    """Execute one configured run and write its artifacts.

    Returns the summary dictionary (also written to ``summary.json``).
    Flagged failures are reported in ``summary["healthy"]``; exceptions
    signal configuration errors.
    """
    cfg = dict(_load_config(config_source))
    if "resolved_config" in cfg:
        cfg = dict(cfg["resolved_config"])
    for key, val in (
        ("solver", solver),
        ("trajectories", trajectories),
        ("master_seed", seed),
        ("threads", threads),
        ("stride", stride),
    ):
        if val is not None:
            cfg[key] = val
    if validate_noise:
        cfg["validate_noise"] = True
    rc = RunConfig(cfg)

    out_dir = Path(output if output is not None else cfg.get("output", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    t_start = time.perf_counter()
    summary: dict = {
        "solver": rc.solver,
        "master_seed": rc.master_seed,
        "version": __version__,
        "healthy": True,
        "flags": [],
    }

    weights = None
    noise_report = None
    if rc.solver in ("sln", "sln-pair"):
        stats = ensemble_average(
            rc.model,
            rc.spec,
            n_traj=rc.trajectories,
            master_seed=rc.master_seed,
            dt=rc.dt,
            n=rc.n,
            form="density" if rc.solver == "sln" else "pair",
            threads=rc.threads,
        )
        series = stats.mean
        summary["trajectories"] = rc.trajectories
        summary["divergent"] = stats.n_divergent
        finite_se = stats.stderr[np.isfinite(stats.stderr)]
        summary["max_stderr"] = float(finite_se.max()) if finite_se.size else math.inf
        if not stats.healthy:
            summary["healthy"] = False
            summary["flags"].append("divergent-fraction-above-1-percent")
        if rc.validate_noise:
            kernel = build_kernels(rc.spec, rc.dt, rc.n)
            factors = cross_factors(rc.spec, rc.dt, rc.n)
            seeds = np.random.SeedSequence(rc.master_seed).spawn(rc.trajectories)
            idx = np.unique(np.linspace(0, rc.n, min(32, rc.n + 1)).astype(int))
            noise_report = validate_statistics_seeded(
                rc.spec, kernel, factors, seeds, idx
            )
            summary["noise_max_z"] = noise_report.max_z
            summary["noise_flagged"] = len(noise_report.flagged)
            if noise_report.flagged:
                summary["flags"].append("noise-statistics-beyond-5-sigma")
        if rc.dump_noise or rc.dump_trajectories > 0:
            _dump_paths(rc, out_dir)
    elif rc.solver in ("hierarchy1", "hierarchy2"):
        kernel = build_kernels(rc.spec, rc.dt, rc.n)
        config = HierarchyConfig(
            n=rc.n,
            truncation="class1" if rc.solver == "hierarchy1" else "class1+class2",
            stride=rc.stride,
        )
        series, weights = hierarchy_solve(rc.model, kernel, config)
        report = tractability_report(weights, rc.valid_below, rc.invalid_above)
        summary["tractability"] = report.as_dict()
        summary["verdict"] = report.verdict
    elif rc.solver == "convolved":
        series = solve_convolved(rc.model, build_kernels(rc.spec, rc.dt, rc.n))
    elif rc.solver == "tcl2":
        series = solve_tcl2(rc.model, build_kernels(rc.spec, rc.dt, rc.n))
    elif rc.solver == "lindblad":
        series = solve_lindblad(rc.model, rc.lindblad_gamma, rc.dt, rc.n)
    elif rc.solver == "oracle":
        series = exact_oracle(rc.model, rc.spec, rc.oracle_cfg)
        summary["oracle"] = {
            k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
            for k, v in series.meta.items()
        }
        if not series.meta.get("cutoff_converged", True):
            summary["healthy"] = False
            summary["flags"].append("fock-cutoff-not-converged")
    else:  # pragma: no cover - guarded by RunConfig
        raise ConfigurationError(f"unhandled solver {rc.solver}")

    series.to_csv(out_dir / "series.csv")
    if weights is not None:
        weights.to_csv(out_dir / "weights.csv")
    if noise_report is not None:
        noise_report.to_csv(out_dir / "noise-stats.csv")

    summary["max_trace_deviation"] = float(series.trace_deviation().max())
    summary["max_hermiticity_deviation"] = float(series.hermiticity_deviation().max())
    summary["timings"] = {"total_seconds": time.perf_counter() - t_start}
    summary["resolved_config"] = rc.resolved()
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def _dump_paths(rc: RunConfig, out_dir: Path) -> None:
    """Audit dumps: first trajectories' noise values and projector paths."""
    from .noise import make_path
    from .series import DensityMatrixSeries
    from .sln import integrate_density

    factors = cross_factors(rc.spec, rc.dt, rc.n)
    seeds = np.random.SeedSequence(rc.master_seed).spawn(
        max(1, rc.dump_trajectories) if rc.dump_trajectories else 1
    )
    if rc.dump_noise:
        path = make_path(rc.spec, seeds[0], rc.dt, rc.n, factors)
        xi, nu = path.tabulate(2 * rc.n + 1)
        with open(out_dir / "noise-dump.csv", "w") as fh:
            fh.write("t,re_xi,im_xi,re_nu,im_nu\n")
            for k in range(0, 2 * rc.n + 1, 2):
                t = k * factors.dt_comb
                fh.write(
                    f"{t:.17e},{xi[k].real:.17e},{xi[k].imag:.17e},"
                    f"{nu[k].real:.17e},{nu[k].imag:.17e}\n"
                )
    for i in range(rc.dump_trajectories):
        path = make_path(rc.spec, seeds[i], rc.dt, rc.n, factors)
        traj = integrate_density(rc.model, path, rc.dt, rc.n)
        DensityMatrixSeries(times=traj.times, rhos=traj.projectors).to_csv(
            out_dir / f"trajectory_{i:03d}.csv"
        )


def compare(path_a, path_b) -> dict:
    """Entrywise and per-observable distances between two series files."""
    a = DensityMatrixSeries.from_csv(path_a)
    b = DensityMatrixSeries.from_csv(path_b)
    a.assert_same_grid(b)
    report = {
        "max_distance": a.max_distance(b),
        "l2_distance": a.l2_distance(b),
        "populations": {},
        "coherences": {},
    }
    for i in range(a.dim):
        report["populations"][f"rho_{i}{i}"] = float(
            np.max(np.abs(a.population(i) - b.population(i)))
        )
    for i in range(a.dim):
        for j in range(i + 1, a.dim):
            report["coherences"][f"rho_{i}{j}"] = float(
                np.max(np.abs(a.coherence(i, j) - b.coherence(i, j)))
            )
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slnsim",
        description="stochastic and deterministic open-system solvers with shared artifacts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured run")
    p_run.add_argument("--config", required=True, help="path to the JSON run configuration")
    p_run.add_argument("--solver", choices=SOLVERS, help="override the configured solver")
    p_run.add_argument("--trajectories", type=int, help="override the ensemble size")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--output", default=None, help="output directory (default: config or cwd)")
    p_run.add_argument("--validate-noise", action="store_true", help="emit noise-stats.csv")
    p_run.add_argument("--threads", type=int, help="worker cap for trajectory blocks")
    p_run.add_argument("--stride", type=int, help="triple-integral quadrature stride")

    p_cmp = sub.add_parser("compare", help="compare two series.csv files")
    p_cmp.add_argument("series_a")
    p_cmp.add_argument("series_b")

    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            summary = run(
                args.config,
                output=args.output,
                solver=args.solver,
                trajectories=args.trajectories,
                seed=args.seed,
                validate_noise=args.validate_noise,
                threads=args.threads,
                stride=args.stride,
            )
        except (ConfigurationError, ValueError, OSError) as exc:
            print(json.dumps({"error": str(exc)}), file=sys.stderr)
            return 2
        print(json.dumps({k: summary[k] for k in ("solver", "healthy", "flags")}))
        return 0 if summary["healthy"] else 1
    if args.command == "compare":
        try:
            report = compare(args.series_a, args.series_b)
        except (ValueError, OSError) as exc:
            print(json.dumps({"error": str(exc)}), file=sys.stderr)
            return 2
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    return 2  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
