"""Online forecasting pipeline: data loading, backtests, experiments, CSV output.

Time is 1-based: the forecast at time t is fitted on observations
x_1..x_{t-1} and scored against the realized x_t, so nothing at or after t
can leak into the forecast.  Adaptive methods feed the previously selected
window into the next step's candidate grid.  Runs are deterministic given
(input, config, seed); bootstrap streams are keyed by (seed, t, i), so a
run can be resumed from any recorded step and reproduce the remaining
records exactly.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import SAWSConfig, full_window_forecast, rolling_forecast
from .bootstrap import BootstrapConfig
from .metrics import (
    ExperimentTensor,
    GaussianTruth,
    SkewedTTruth,
    cumulative_loss,
    cumulative_risk_mean,
    cumulative_risk_var,
    mab,
    mean_variance,
    mse,
)
from .scenarios import ScenarioPath, generate
from .scoring import ForecastTarget, Mean, VaR, VaRES, param_dim, pointwise_score
from .selection import CandidateGridConfig, select_window

WORKERS_ENV = "BAWS_WORKERS"

METHODS = ("baws", "saws", "fixed", "full")


class ConfigError(ValueError):
    """Invalid configuration or usage (CLI exit code 1)."""


class DataError(ValueError):
    """Malformed or unusable input data (CLI exit code 2)."""


@dataclass(frozen=True)
class LossSeries:
    """Ordered loss observations with optional date labels."""

    values: np.ndarray
    dates: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.dates is not None and len(self.dates) != values.size:
            raise DataError("dates and losses have different lengths")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class BacktestConfig:
    """One forecasting method applied online over a loss series."""

    method: str
    target: ForecastTarget
    t0: int = 501
    grid: CandidateGridConfig = CandidateGridConfig()
    bootstrap: BootstrapConfig | None = None
    saws: SAWSConfig | None = None
    fixed_k: int | None = None
    seed: int = 0
    error_control: str = "pcer"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.t0 < 2:
            raise ConfigError("t0 must be >= 2")
        if self.method in ("baws", "saws") and self.t0 <= self.grid.k_min:
            raise ConfigError("t0 must exceed the minimum window k_min")
        if self.method == "fixed" and (self.fixed_k is None or self.fixed_k < 1):
            raise ConfigError("fixed method requires fixed_k >= 1")
        if self.method == "baws" and self.bootstrap is None:
            object.__setattr__(self, "bootstrap", BootstrapConfig())
        if self.method == "saws" and self.saws is None:
            object.__setattr__(self, "saws", default_saws_config(self.target))


@dataclass(frozen=True)
class ForecastRecord:
    """Output of one online forecasting step."""

    t: int
    k_hat: int
    theta: tuple[float, ...]
    realized: float
    score: float
    date: str | None = None


def default_saws_config(target: ForecastTarget) -> SAWSConfig:
    """Deterministic-threshold defaults: convex/smooth family for the mean,
    Lipschitz family for tail targets."""
    if isinstance(target, Mean):
        return SAWSConfig(alpha_tau=0.1, c_tau=0.3, family="convex_smooth")
    return SAWSConfig(alpha_tau=0.1, c_tau=0.5, family="lipschitz")


def run_backtest(series, cfg: BacktestConfig, *, dates=None,
                 start_t: int | None = None,
                 initial_prev_k: int | None = None) -> list[ForecastRecord]:
    """Apply one method online from t0 (or start_t when resuming).

    The forecast at t uses x_1..x_{t-1} only; ``initial_prev_k`` seeds the
    candidate grid when resuming an adaptive run from a checkpoint.
    """
    if isinstance(series, LossSeries):
        if dates is None:
            dates = series.dates
        series = series.values
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DataError("loss series must be 1-dimensional")
    if not np.all(np.isfinite(x)):
        raise DataError("loss series contains non-finite values")
    n = x.size
    if n < cfg.t0:
        raise ConfigError(f"series length {n} is shorter than t0={cfg.t0}")
    first = cfg.t0 if start_t is None else start_t
    if first < cfg.t0:
        raise ConfigError("start_t cannot precede t0")

    boot = cfg.bootstrap
    if cfg.method == "baws" and boot is not None and boot.rng_seed is None:
        boot = replace(boot, rng_seed=cfg.seed)

    cap = cfg.grid.max_window
    prev_k = initial_prev_k
    records: list[ForecastRecord] = []
    for t in range(first, n + 1):
        history = x[: t - 1]
        if cfg.method == "baws":
            trace = select_window(history, cfg.target, boot, cfg.grid, prev_k,
                                  time_index=t, error_control=cfg.error_control)
            k_hat, fit = trace.k_hat, trace.fit
            prev_k = k_hat
        elif cfg.method == "saws":
            trace = select_window(history, cfg.target, cfg.saws, cfg.grid, prev_k,
                                  time_index=t)
            k_hat, fit = trace.k_hat, trace.fit
            prev_k = k_hat
        elif cfg.method == "fixed":
            k_hat = min(cfg.fixed_k, t - 1) if cap is None else min(cfg.fixed_k, t - 1, cap)
            fit = rolling_forecast(history, k_hat, cfg.target)
        else:
            k_hat = t - 1 if cap is None else min(t - 1, cap)
            fit = rolling_forecast(history, k_hat, cfg.target)
        realized = float(x[t - 1])
        score = float(pointwise_score(realized, fit.theta, cfg.target))
        records.append(ForecastRecord(
            t=t,
            k_hat=int(k_hat),
            theta=tuple(float(v) for v in fit.theta),
            realized=realized,
            score=score,
            date=None if dates is None else dates[t - 1],
        ))
    return records


@dataclass(frozen=True)
class MetricsReport:
    """Long-format metric rows: (method, scenario, metric, value)."""

    rows: tuple[tuple[str, str, str, float], ...]

    def value(self, method: str, metric: str) -> float:
        for m, _, name, val in self.rows:
            if m == method and name == metric:
                return val
        raise KeyError(f"no metric {metric!r} for method {method!r}")


def parse_method(spec: str) -> tuple[str, int | None]:
    """Parse a method spec: "baws", "saws", "full", or "fixed:<k>"."""
    name = spec.strip().lower()
    if name in ("baws", "saws", "full"):
        return name, None
    if name.startswith("fixed"):
        tail = name[5:].lstrip(":")
        try:
            return "fixed", int(tail)
        except ValueError:
            raise ConfigError(f"bad fixed-window spec {spec!r}; use fixed:<k>") from None
    raise ConfigError(f"unknown method {spec!r}")


def _experiment_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        try:
            count = int(raw)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if count < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return count
    return os.cpu_count() or 1


def _derived_seed(*key: int) -> int:
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def _replication(args) -> dict:
    (scenario, T, alpha, seed, rep, method_specs, target, t0, grid,
     beta, replications, mode, block_c, error_control) = args
    path_seed = _derived_seed(seed, 1, rep)
    if callable(scenario):
        path = scenario(path_seed)
    else:
        path = generate(scenario, T=T, seed=path_seed, alpha=alpha)
    horizon = len(path.losses) - t0 + 1
    out = {"path": path, "methods": {}}
    for idx, spec in enumerate(method_specs):
        kind, fixed_k = parse_method(spec)
        boot = saws = None
        if kind == "baws":
            boot = BootstrapConfig(beta=beta, replications=replications, mode=mode,
                                   block_c=block_c,
                                   rng_seed=_derived_seed(seed, 2, rep, idx))
        cfg = BacktestConfig(method=kind, target=target, t0=t0, grid=grid,
                             bootstrap=boot, saws=saws, fixed_k=fixed_k,
                             seed=path_seed, error_control=error_control)
        records = run_backtest(path.losses, cfg)
        assert len(records) == horizon
        out["methods"][spec] = (
            np.array([r.theta for r in records]),
            np.array([r.k_hat for r in records], dtype=np.int64),
        )
    return out


def run_experiment(scenario, methods, target: ForecastTarget, *,
                   n: int, T: int = 2000, t0: int = 501, seed: int = 0,
                   alpha: float | None = None,
                   beta: float = 0.9, replications: int = 500,
                   mode: str | None = None, block_c: float = 1.0,
                   grid: CandidateGridConfig = CandidateGridConfig(),
                   error_control: str = "pcer",
                   workers: int | None = None) -> MetricsReport:
    """Replicate a scenario n times, run every method, aggregate the metrics.

    ``scenario`` is a scenario name (A1-A3, B1-B3, GARCH) or a callable
    mapping a seed to a ``ScenarioPath``.  The bootstrap mode defaults to
    moving-block for the serially dependent GARCH scenario and iid
    otherwise.  Replications run in parallel across processes when the
    machine (or the BAWS_WORKERS variable) allows.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if isinstance(target, (VaR, VaRES)) and alpha is None:
        alpha = target.alpha
    if mode is None:
        mode = "block" if isinstance(scenario, str) and scenario.upper() == "GARCH" else "iid"
    scenario_label = scenario if isinstance(scenario, str) else getattr(
        scenario, "__name__", "custom")

    tasks = [
        (scenario, T, alpha, seed, rep, tuple(methods), target, t0, grid,
         beta, replications, mode, block_c, error_control)
        for rep in range(n)
    ]
    workers = _experiment_workers() if workers is None else workers
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n)) as pool:
            results = list(pool.map(_replication, tasks))
    else:
        results = [_replication(task) for task in tasks]

    first_path = results[0]["path"]
    horizon = len(first_path.losses) - t0 + 1
    dim = param_dim(target)
    realized = np.stack([res["path"].losses[t0 - 1:] for res in results])
    if isinstance(target, Mean):
        truths = np.stack([res["path"].true_mean[t0 - 1:] for res in results])
    else:
        truths = np.stack([res["path"].true_var[t0 - 1:] for res in results])
    mu_paths = np.stack([res["path"].true_mean[t0 - 1:] for res in results])
    sigma_paths = np.stack([res["path"].true_sigma[t0 - 1:] for res in results])
    gaussian = first_path.innovations == "gaussian"

    rows: list[tuple[str, str, str, float]] = []
    for spec in methods:
        est = np.empty((n, horizon, dim))
        wins = np.empty((n, horizon), dtype=np.int64)
        for rep, res in enumerate(results):
            theta, k_hat = res["methods"][spec]
            est[rep] = theta
            wins[rep] = k_hat
        tensor = ExperimentTensor(est, truths, realized, windows=wins)
        rows.append((spec, scenario_label, "MAB", mab(tensor)))
        if n >= 2:
            rows.append((spec, scenario_label, "Var", mean_variance(tensor)))
        rows.append((spec, scenario_label, "MSE", mse(tensor)))
        if isinstance(target, Mean):
            rows.append((spec, scenario_label, "CR", cumulative_risk_mean(tensor)))
        elif isinstance(target, VaR):
            if gaussian:
                truth = GaussianTruth(mu_paths, sigma_paths)
            else:
                truth = SkewedTTruth(sigma_paths, first_path.nu, first_path.skew)
            rows.append((spec, scenario_label, "CR",
                         cumulative_risk_var(tensor, truth, target.alpha)))
        if isinstance(target, VaRES):
            rows.append((spec, scenario_label, "MAB_es", mab(tensor, component=1)))
            if n >= 2:
                rows.append((spec, scenario_label, "Var_es", mean_variance(tensor, component=1)))
            rows.append((spec, scenario_label, "MSE_es", mse(tensor, component=1)))
        rows.append((spec, scenario_label, "CL", cumulative_loss(tensor, target)))
    return MetricsReport(tuple(rows))


# ---------------------------------------------------------------------------
# CSV input/output (12 significant digits, UTF-8, plain decimal points)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def load_price_csv(path, price_col: str | None = None, loss_col: str | None = None,
                   date_col: str | None = None) -> LossSeries:
    """Load losses from a CSV of (date, price), (date, loss), or (loss).

    Prices convert to losses as -log(P_t / P_{t-1}).  Column names are
    matched case-insensitively; explicit names override detection.  Bad
    numbers raise ``DataError`` with the offending row.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    lower = [h.lower() for h in header]

    def find(name: str | None, fallback: str) -> int | None:
        if name is not None:
            if name.lower() not in lower:
                raise ConfigError(f"{path}: column {name!r} not found in header {header}")
            return lower.index(name.lower())
        return lower.index(fallback) if fallback in lower else None

    price_idx = find(price_col, "price")
    loss_idx = find(loss_col, "loss")
    date_idx = find(date_col, "date")
    if loss_col is not None:
        price_idx = None
    if price_col is not None:
        loss_idx = None
    if price_idx is None and loss_idx is None:
        raise ConfigError(f"{path}: need a 'price' or 'loss' column (header: {header})")
    if price_idx is not None and loss_idx is not None:
        raise ConfigError(f"{path}: both price and loss columns present; "
                          "specify which one to use")

    col = price_idx if price_idx is not None else loss_idx
    values, dates = [], []
    for rownum, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if col >= len(row):
            raise DataError(f"{path}: row {rownum} has too few columns")
        text = row[col].strip()
        try:
            value = float(text)
        except ValueError:
            raise DataError(f"{path}: row {rownum}: bad number {text!r}") from None
        if not np.isfinite(value):
            raise DataError(f"{path}: row {rownum}: non-finite value {text!r}")
        if price_idx is not None and value <= 0.0:
            raise DataError(f"{path}: row {rownum}: price must be positive, got {text}")
        values.append(value)
        if date_idx is not None and date_idx < len(row):
            dates.append(row[date_idx].strip())

    if price_idx is not None:
        if len(values) < 2:
            raise DataError(f"{path}: need at least 2 price rows")
        prices = np.asarray(values)
        losses = -np.log(prices[1:] / prices[:-1])
        return LossSeries(losses, tuple(dates[1:]) if date_idx is not None else None)
    if not values:
        raise DataError(f"{path}: no loss rows")
    return LossSeries(np.asarray(values), tuple(dates) if date_idx is not None else None)


def _theta_columns(target: ForecastTarget) -> list[str]:
    if isinstance(target, Mean):
        return ["mean_hat"]
    if isinstance(target, VaR):
        return ["var_hat"]
    return ["var_hat", "es_hat"]


def write_forecasts_csv(records, path, target: ForecastTarget) -> None:
    """Backtest records as wide CSV: t, date?, k_hat, estimates, realized, score."""
    records = list(records)
    with_dates = any(r.date is not None for r in records)
    header = ["t"] + (["date"] if with_dates else []) + ["k_hat"]
    header += _theta_columns(target) + ["realized_loss", "realized_score"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            row = [str(r.t)] + ([r.date or ""] if with_dates else []) + [str(r.k_hat)]
            row += [_fmt(v) for v in r.theta] + [_fmt(r.realized), _fmt(r.score)]
            writer.writerow(row)


def read_forecasts_csv(path) -> list[ForecastRecord]:
    """Parse a forecasts CSV back into records (inverse of write_forecasts_csv)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    idx = {name: pos for pos, name in enumerate(header)}
    theta_cols = [c for c in ("mean_hat", "var_hat", "es_hat") if c in idx]
    records = []
    for row in rows[1:]:
        records.append(ForecastRecord(
            t=int(row[idx["t"]]),
            k_hat=int(row[idx["k_hat"]]),
            theta=tuple(float(row[idx[c]]) for c in theta_cols),
            realized=float(row[idx["realized_loss"]]),
            score=float(row[idx["realized_score"]]),
            date=row[idx["date"]] or None if "date" in idx else None,
        ))
    return records


def write_long_csv(records, path, target: ForecastTarget) -> None:
    """Backtest records as long plot-ready CSV: series, t, value."""
    names = _theta_columns(target)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "t", "value"])
        for r in records:
            writer.writerow(["k_hat", str(r.t), str(r.k_hat)])
            for name, value in zip(names, r.theta):
                writer.writerow([name, str(r.t), _fmt(value)])
            writer.writerow(["realized_loss", str(r.t), _fmt(r.realized)])
            writer.writerow(["realized_score", str(r.t), _fmt(r.score)])


def write_metrics_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "scenario", "metric", "value"])
        for method, scenario, metric, value in report.rows:
            writer.writerow([method, scenario, metric, _fmt(value)])


def write_scenario_csv(path_obj: ScenarioPath, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "loss", "true_mean", "true_sigma", "true_var"])
        T = path_obj.losses.size
        for i in range(T):
            writer.writerow([
                str(i + 1),
                _fmt(path_obj.losses[i]),
                _fmt(path_obj.true_mean[i]),
                _fmt(path_obj.true_sigma[i]),
                _fmt(path_obj.true_var[i]) if path_obj.true_var is not None else "",
            ])


def emit_results(obj, path, fmt: str = "wide",
                 target: ForecastTarget | None = None) -> None:
    """Write records, a metrics report, or a scenario path to CSV."""
    if isinstance(obj, MetricsReport):
        write_metrics_csv(obj, path)
    elif isinstance(obj, ScenarioPath):
        write_scenario_csv(obj, path)
    else:
        if target is None:
            raise ConfigError("emitting forecast records requires the target")
        if fmt == "long":
            write_long_csv(obj, path, target)
        elif fmt == "wide":
            write_forecasts_csv(obj, path, target)
        else:
            raise ConfigError(f"unknown format {fmt!r}")
