"""Seeded Monte Carlo campaigns for the six desk-scale experiments, with CSV/SVG output.

Each trial draws a coupled sample, computes the robust estimate and the
Gaussian-core sample covariance from the same randomness, and reduces them to
the experiment's statistic. Per-trial streams derive from (seed, grid index,
trial index), so results are a pure function of the configuration regardless
of thread count or execution order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .asymptotics import (
    coeffs_closed_form_student,
    coeffs_numeric,
    eigenvalue_cov_trace,
    eigenvector_cov_xi_trace,
)
from .errors import (
    CampaignError,
    CesEvdError,
    ConfigError,
    ConvergenceError,
    DegeneracyError,
    DegenerateFilterError,
    NumericError,
)
from .estimators import SolverOptions, fixed_point_solve, gaussian_spec, scm, solve_sigma, student_spec
from .linalg import hermitian_evd, phase_align, toeplitz_scatter
from .lowrank import (
    build_factor_model,
    principal_projector,
    projector_cov_sigma_pi,
    snr_loss,
    snr_loss_theory,
    steering_vector,
)
from .riemannian import ab_crlb, alpha_beta, biased_crlb_scm, ces_crb, eta, nat_distance, whitened_spectrum
from .sampling import CesDistribution, RandomStream, sample_coupled

EXPERIMENTS = ("eigenvalues", "eigenvectors", "projector", "intrinsic_bias", "crlb", "snr_loss")
ESTIMATORS = ("student", "scm")

_FACTOR_EXPERIMENTS = ("projector", "snr_loss")

# Reserved stream indices, disjoint from per-trial indices (n_idx << 32 | trial).
_MODEL_STREAM = (1 << 62) + 1
_STEER_STREAM = (1 << 62) + 2
_COEFF_STREAM = (1 << 62) + 3

# Metadata keys never written to CSV so identical configs give identical bytes.
_VOLATILE_METADATA = ("wall_time_s",)

_DEFAULT_N_GRID = (40, 62, 95, 147, 228, 352, 543, 838, 1295, 2000)


@dataclass
class ExperimentConfig:
    experiment: str = "eigenvalues"
    p: int = 20
    d: float = 3.0
    rho_mod: float = 0.9
    rho_phase: float = math.pi / 4
    n_grid: tuple[int, ...] = _DEFAULT_N_GRID
    trials: int = 1000
    seed: int = 20080
    estimator: str = "student"
    r: int = 5
    gamma2: float = 1.0
    lambda_r: tuple[float, ...] = (100.0, 80.0, 60.0, 40.0, 20.0)
    eigvec_index: int = 1
    out: str | None = None
    svg: str | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if self.p < 2:
            raise ConfigError("p must be >= 2")
        if not self.d > 0:
            raise ConfigError("d must be > 0")
        if not 0 <= self.rho_mod < 1:
            raise ConfigError("rho_mod must be in [0, 1)")
        if any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid entries must be >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if not 1 <= self.trials < 2**31:
            raise ConfigError("trials must be in [1, 2^31)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 1 <= self.eigvec_index <= self.p:
            raise ConfigError(f"eigvec_index must be in 1..{self.p}")
        if self.experiment in _FACTOR_EXPERIMENTS:
            if not 1 <= self.r < self.p:
                raise ConfigError(f"rank r must satisfy 1 <= r < p, got r={self.r}, p={self.p}")
            if len(self.lambda_r) != self.r:
                raise ConfigError(f"lambda_r must have length r={self.r}, got {len(self.lambda_r)}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: list[tuple[float, ...]]
    metadata: dict


def _db(x: float) -> float:
    return 10.0 * math.log10(x)


def _robust_solve(spec, Z, opts: SolverOptions):
    """Default solve with one retry (core-style init, doubled budget) on failure."""
    try:
        return fixed_point_solve(spec, Z, opts)
    except (ConvergenceError, DegeneracyError):
        retry = SolverOptions(tol=opts.tol, max_iter=2 * opts.max_iter, init="scm")
        return fixed_point_solve(spec, Z, retry)


class _Campaign:
    """Per-experiment context: model, estimator spec, theory columns, trial statistic."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.dist = CesDistribution.student_t(config.d)
        self.opts = SolverOptions()
        p = config.p

        if config.estimator == "student":
            self.spec = student_spec(p, config.d)
            self.coeffs = coeffs_closed_form_student(p, config.d)
        else:
            sigma = solve_sigma(gaussian_spec(), self.dist, p)
            self.spec = gaussian_spec().with_sigma(sigma)
            self.coeffs = coeffs_numeric(
                self.spec, self.dist, p, stream=RandomStream(config.seed, _COEFF_STREAM)
            )
        self.sigma_scale = self.spec.sigma

        if config.experiment in _FACTOR_EXPERIMENTS:
            rng = RandomStream(config.seed, _MODEL_STREAM).generator()
            raw = rng.standard_normal((2, p, config.r))
            Ur, _ = np.linalg.qr(raw[0] + 1j * raw[1])
            self.model = build_factor_model(Ur, np.asarray(config.lambda_r, dtype=float), config.gamma2)
            self.Sigma = self.model.sigma
            self.steer = steering_vector(self.model, RandomStream(config.seed, _STEER_STREAM))
        else:
            self.Sigma = toeplitz_scatter(p, config.rho_mod * np.exp(1j * config.rho_phase))
            self.evd_true = hermitian_evd(self.Sigma)

        name = config.experiment
        if name == "eigenvalues":
            self.columns = ("n", "mse_emp_std_db", "mse_theory_std_db", "mse_emp_gcwe_db", "mse_theory_gcwe_db")
        elif name == "eigenvectors":
            self.columns = ("n", "mse_emp_std_db", "mse_theory_std_db", "mse_emp_gcwe_db", "mse_theory_gcwe_db")
        elif name == "projector":
            self.columns = ("n", "mse_emp_std_db", "mse_theory_std_db", "mse_emp_gcwe_db", "mse_theory_gcwe_db")
        elif name == "intrinsic_bias":
            self.columns = ("n", "eta_emp_est_db", "eta_emp_gcwe_db", "eta_theory_db")
        elif name == "crlb":
            self.columns = ("n", "dnat2_emp_db", "crlb_ces_db", "crlb_ab_db", "crlb_biased_gauss_db")
            self.alpha, self.beta = alpha_beta(self.dist, p)
        else:
            self.columns = ("n", "snr_emp_est_db", "snr_emp_gcwe_db", "snr_emp_scm_db", "snr_theory_db")
        self.n_stats = {"eigenvalues": 2, "eigenvectors": 2, "projector": 2,
                        "intrinsic_bias": 2, "crlb": 1, "snr_loss": 3}[name]

    # ---- per-trial statistics -------------------------------------------------

    def trial(self, n: int, stream: RandomStream) -> tuple[float, ...]:
        cfg = self.config
        cs = sample_coupled(self.dist, self.Sigma, n, stream)
        SM = _robust_solve(self.spec, cs.Z, self.opts)
        sig = self.sigma_scale
        name = cfg.experiment

        if name == "eigenvalues":
            lam = self.evd_true.eigenvalues
            lamM = hermitian_evd(SM).eigenvalues
            lamG = hermitian_evd(scm(cs.X)).eigenvalues
            return (
                float(np.sum((sig * lamM - lam) ** 2)),
                float(np.sum((sig * lamM - lamG) ** 2)),
            )
        if name == "eigenvectors":
            j = cfg.eigvec_index
            uj = self.evd_true.eigenvectors[:, j - 1]
            uM = hermitian_evd(SM).eigenvectors[:, j - 1]
            uG = hermitian_evd(scm(cs.X)).eigenvectors[:, j - 1]
            perp = lambda v: v - uj * np.vdot(uj, v)
            diff = phase_align(uM, uj) - phase_align(uG, uj)
            return (
                float(np.linalg.norm(perp(uM)) ** 2),
                float(np.linalg.norm(perp(diff)) ** 2),
            )
        if name == "projector":
            Pi = self.model.projector.entries
            PiM = principal_projector(SM, cfg.r).entries
            PiG = principal_projector(scm(cs.X), cfg.r).entries
            return (
                float(np.linalg.norm(PiM - Pi) ** 2),
                float(np.linalg.norm(PiM - PiG) ** 2),
            )
        if name == "intrinsic_bias":
            LM = nat_logdet_scalar(self.Sigma, sig * SM.entries)
            LG = nat_logdet_scalar(self.Sigma, scm(cs.X).entries)
            return (LM, LG)
        if name == "crlb":
            return (nat_distance(self.Sigma, sig * SM.entries) ** 2,)
        # snr_loss
        eye = np.eye(cfg.p)
        rhoM = snr_loss(eye - principal_projector(SM, cfg.r).entries, self.model, self.steer)
        rhoG = snr_loss(eye - principal_projector(scm(cs.X), cfg.r).entries, self.model, self.steer)
        rhoS = snr_loss(eye - principal_projector(scm(cs.Z), cfg.r).entries, self.model, self.steer)
        return (rhoM, rhoG, rhoS)

    # ---- per-n reduction ------------------------------------------------------

    def row(self, n: int, means: np.ndarray) -> tuple[float, ...]:
        cfg = self.config
        name = cfg.experiment
        co = self.coeffs
        if name == "eigenvalues":
            lam = self.evd_true.eigenvalues
            t_std = eigenvalue_cov_trace(lam, co.theta1, co.theta2) / n
            t_gcwe = eigenvalue_cov_trace(lam, co.sigma1, co.sigma2) / n
            return (n, _db(means[0]), _db(t_std), _db(means[1]), _db(t_gcwe))
        if name == "eigenvectors":
            j = cfg.eigvec_index
            t_std = eigenvector_cov_xi_trace(self.evd_true, j, co.theta1) / n
            t_gcwe = eigenvector_cov_xi_trace(self.evd_true, j, co.sigma1) / n
            return (n, _db(means[0]), _db(t_std), _db(means[1]), _db(t_gcwe))
        if name == "projector":
            tr = projector_cov_sigma_pi(self.model)
            return (n, _db(means[0]), _db(co.theta1 * tr / n), _db(means[1]), _db(co.sigma1 * tr / n))
        if name == "intrinsic_bias":
            if means[0] <= 0 or means[1] <= 0:
                raise CampaignError("empirical intrinsic bias came out non-positive; increase trials")
            return (n, _db(means[0]), _db(means[1]), _db(eta(cfg.p, n)))
        if name == "crlb":
            return (
                n,
                _db(means[0]),
                _db(ces_crb(cfg.p, n, self.alpha, self.beta).value),
                _db(ab_crlb(cfg.p, n, self.alpha, self.beta).value),
                _db(biased_crlb_scm(cfg.p, n).value),
            )
        return (n, _db(means[0]), _db(means[1]), _db(means[2]), _db(snr_loss_theory(cfg.r, n)))


def nat_logdet_scalar(Sigma, Sigma_hat) -> float:
    """Per-trial intrinsic-bias scalar: -trace(Sigma^{-1} logmap)/p via whitened eigenvalues."""
    lw = whitened_spectrum(Sigma, Sigma_hat)
    return float(-np.sum(np.log(lw)) / lw.shape[0])


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one campaign; deterministic given `config`, independent of thread count."""
    config.validate()
    start = time.perf_counter()
    camp = _Campaign(config)
    n_points = len(config.n_grid)
    stats = np.full((n_points, config.trials, camp.n_stats), np.nan)
    excluded: dict[int, int] = {}

    failure_kinds = (ConvergenceError, DegeneracyError, DegenerateFilterError, NumericError)

    for i, n in enumerate(config.n_grid):
        def worker(k: int, _n=n, _i=i):
            stream = RandomStream(config.seed, (_i << 32) | k)
            try:
                return camp.trial(_n, stream)
            except failure_kinds:
                return None

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as ex:
                results = list(ex.map(worker, range(config.trials)))
        else:
            results = [worker(k) for k in range(config.trials)]
        bad = 0
        for k, res in enumerate(results):
            if res is None:
                bad += 1
            else:
                stats[i, k, :] = res
        if bad:
            excluded[n] = bad
        if bad > 0.01 * config.trials:
            raise CampaignError(
                f"{bad}/{config.trials} trials failed at n={n} (more than 1%); aborting campaign"
            )

    rows = []
    for i, n in enumerate(config.n_grid):
        means = np.nanmean(stats[i], axis=0) if config.trials else np.array([])
        rows.append(camp.row(n, means))

    metadata = {f.name: getattr(config, f.name) for f in fields(config)}
    metadata.update(
        sigma_scale=camp.sigma_scale,
        theta1=camp.coeffs.theta1,
        theta2=camp.coeffs.theta2,
        sigma1=camp.coeffs.sigma1,
        sigma2=camp.coeffs.sigma2,
    )
    if config.experiment == "crlb":
        metadata.update(alpha=camp.alpha, beta=camp.beta)
    metadata["excluded"] = ",".join(f"{n}:{c}" for n, c in excluded.items()) or "none"
    metadata["wall_time_s"] = time.perf_counter() - start
    return ExperimentResult(config=config, columns=camp.columns, rows=rows, metadata=metadata)


# ---- output ----------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (tuple, list)):
        return ",".join(_format_value(x) for x in v)
    return str(v)


def write_csv(result: ExperimentResult, path) -> None:
    """Named columns, one row per n, 17 significant digits, '#' metadata lines.

    Volatile metadata (wall time) is omitted so identical configurations
    produce byte-identical files.
    """
    lines = [f"# {k} = {_format_value(v)}" for k, v in result.metadata.items() if k not in _VOLATILE_METADATA]
    lines.append(",".join(result.columns))
    for row in result.rows:
        lines.append(",".join(f"{float(v):.17g}" for v in row))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path!r}: {exc}") from exc


def read_csv(path) -> tuple[tuple[str, ...], np.ndarray, dict[str, str]]:
    """Inverse of `write_csv` for the numeric payload: (columns, rows, metadata)."""
    metadata: dict[str, str] = {}
    columns: tuple[str, ...] | None = None
    rows = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    metadata[key.strip()] = value.strip()
                elif columns is None:
                    columns = tuple(line.split(","))
                else:
                    rows.append(tuple(float(v) for v in line.split(",")))
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path!r}: {exc}") from exc
    if columns is None:
        raise CesEvdError(f"no header line in {path!r}")
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
    return columns, data, metadata


_PALETTE = ("#c0392b", "#2c3e50", "#2980b9", "#27ae60", "#8e44ad", "#d35400")


def render_svg(result: ExperimentResult, path) -> None:
    """Self-contained log-x line chart with one polyline per data column."""
    width, height = 880, 560
    ml, mr, mt, mb = 70, 30, 40, 50
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="15">'
        f"{result.config.experiment} (p={result.config.p}, d={result.config.d:g}, "
        f"trials={result.config.trials})</text>",
    ]
    data = np.array([[float(v) for v in row] for row in result.rows])
    if data.size:
        xs = np.log10(data[:, 0])
        x_lo, x_hi = (xs.min(), xs.max()) if xs.min() < xs.max() else (xs.min() - 0.5, xs.max() + 0.5)
        ys = data[:, 1:]
        y_lo, y_hi = float(ys.min()), float(ys.max())
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

        def px(x):
            return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr)

        def py(y):
            return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb)

        for yt in np.linspace(y_lo, y_hi, 6):
            parts.append(
                f'<line x1="{ml}" y1="{py(yt):.1f}" x2="{width - mr}" y2="{py(yt):.1f}" '
                f'stroke="#dddddd"/>'
                f'<text x="{ml - 6}" y="{py(yt) + 4:.1f}" text-anchor="end">{yt:.1f}</text>'
            )
        for n in data[:, 0]:
            x = px(math.log10(n))
            parts.append(
                f'<line x1="{x:.1f}" y1="{mt}" x2="{x:.1f}" y2="{height - mb}" stroke="#eeeeee"/>'
                f'<text x="{x:.1f}" y="{height - mb + 16}" text-anchor="middle">{int(n)}</text>'
            )
        for ci, name in enumerate(result.columns[1:]):
            color = _PALETTE[ci % len(_PALETTE)]
            pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, data[:, ci + 1]))
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
            ly = mt + 16 * ci + 10
            parts.append(
                f'<line x1="{width - mr - 170}" y1="{ly}" x2="{width - mr - 140}" y2="{ly}" '
                f'stroke="{color}" stroke-width="1.5"/>'
                f'<text x="{width - mr - 134}" y="{ly + 4}">{name}</text>'
            )
    parts.append(
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>'
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>'
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle">n (log scale)</text>'
        f'<text x="16" y="{height / 2:.1f}" transform="rotate(-90 16 {height / 2:.1f})" '
        f'text-anchor="middle">dB</text>'
    )
    parts.append("</svg>")
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path!r}: {exc}") from exc


# ---- configuration files ----------------------------------------------------


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` file; '#' comments and blank lines ignored."""
    mapping: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
                mapping[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return mapping


def _coerce(name: str, kind: str, value):
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "int_list":
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split()]
            return tuple(int(v) for v in value)
        if kind == "float_list":
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split()]
            return tuple(float(v) for v in value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {name!r}: cannot parse {value!r} as {kind}") from exc


_FIELD_KINDS = {
    "experiment": "str",
    "p": "int",
    "d": "float",
    "rho_mod": "float",
    "rho_phase": "float",
    "n_grid": "int_list",
    "trials": "int",
    "seed": "int",
    "estimator": "str",
    "r": "int",
    "gamma2": "float",
    "lambda_r": "float_list",
    "eigvec_index": "int",
    "out": "str",
    "svg": "str",
    "threads": "int",
}


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a validated config from string-ish key/value pairs."""
    unknown = set(mapping) - set(_FIELD_KINDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: _coerce(k, _FIELD_KINDS[k], v) for k, v in mapping.items() if v is not None}
    config = ExperimentConfig(**kwargs)
    config.validate()
    return config


__all__ = [
    "EXPERIMENTS",
    "ESTIMATORS",
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "write_csv",
    "read_csv",
    "render_svg",
    "parse_config_file",
    "config_from_mapping",
]
