"""Simulation harness for support-recovery phase transitions.

A phase-transition experiment sweeps a grid of sample-size multipliers
theta, drawing n = ceil(theta * s * log p) observations per replication
and recording how often the penalized discriminant recovers the true
support exactly.  Sparsity regimes tie s to p; a correlation sweep
repeats the experiment with an equal-correlation Sigma_TT block at each
rho.  Every replication is seeded from the cell coordinates, so results
are bit-identical across runs and across worker counts.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import DataFormatError, NumericError
from .model import CovarianceSpec, discriminant_direction, make_model, sample_dataset
from .sda import fit_sda
from .theory import lambda_of, lambda_sda

#: Sparsity regimes and their stable integer ids used in seed derivation.
REGIMES = {"fractional_power": 0, "sublinear": 1, "linear": 2}

LAMBDA_RULES = ("paper_sda", "theorem3", "fixed")

#: Covariance kinds usable as a Sigma_TT block (dimension s, embedded on
#: the support with an identity elsewhere).
BLOCK_KINDS = ("identity", "equal_correlation", "toeplitz")

#: Standard multiplier grid for phase-transition plots.
DEFAULT_THETA_GRID = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0)

#: A run aborts when more than this fraction of its replications fail.
FAILURE_ABORT_FRACTION = 0.01


def sparsity_of(regime: str, p: int) -> int:
    """Support size for a sparsity regime at dimension p.

    fractional_power: ceil(2 p^0.45); sublinear: ceil(0.4 p / log(0.4 p))
    (needs 0.4 p > 1); linear: ceil(0.4 p).  Requires p >= 3 and rejects
    a regime whose formula exceeds p at this dimension.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {sorted(REGIMES)}")
    if not isinstance(p, (int, np.integer)) or p < 3:
        raise ValueError(f"p must be an integer >= 3, got {p}")
    if regime == "fractional_power":
        s = math.ceil(2.0 * p**0.45)
    elif regime == "sublinear":
        if 0.4 * p <= 1.0:
            raise ValueError(f"sublinear regime needs 0.4 p > 1, got p={p}")
        s = math.ceil(0.4 * p / math.log(0.4 * p))
    else:
        s = math.ceil(0.4 * p)
    if s > p:
        raise ValueError(f"regime {regime!r} gives s={s} > p={p}")
    return s


def sample_size_of(theta: float, s: int, p: int) -> int:
    """n = ceil(theta * s * log p), natural log."""
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if s < 1 or p < 2:
        raise ValueError(f"need s >= 1 and p >= 2, got s={s}, p={p}")
    return math.ceil(theta * s * math.log(p))


def hamming(t_hat: Sequence[int], t: Sequence[int]) -> int:
    """Size of the symmetric difference of two index sets."""
    a, b = set(t_hat), set(t)
    if len(a) != len(tuple(t_hat)) or len(b) != len(tuple(t)):
        raise ValueError("index sets must not contain duplicates")
    return len(a ^ b)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a phase-transition experiment.

    `covariance_kind`/`covariance_rho` describe the Sigma_TT block
    (dimension s, embedded on the support); `lambda_rule` picks the
    penalty per replication: 'paper_sda' uses the reference scaling,
    'theorem3' the theoretical rate, 'fixed' the constant
    `lambda_value`.  `support_threshold` optionally drops fitted entries
    below a magnitude, solely to absorb solver tolerance.
    """

    regimes: tuple[str, ...] = ("fractional_power",)
    p_list: tuple[int, ...] = (100,)
    theta_grid: tuple[float, ...] = DEFAULT_THETA_GRID
    replications: int = 200
    covariance_kind: str = "identity"
    covariance_rho: float = 0.0
    lambda_rule: str = "paper_sda"
    lambda_value: Optional[float] = None
    support_threshold: float = 0.0
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "regimes", tuple(self.regimes))
        object.__setattr__(self, "p_list", tuple(int(p) for p in self.p_list))
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if not self.regimes:
            raise ValueError("regimes must be non-empty")
        for regime in self.regimes:
            if regime not in REGIMES:
                raise ValueError(f"unknown regime {regime!r}; expected one of {sorted(REGIMES)}")
        if len(set(self.regimes)) != len(self.regimes):
            raise ValueError("regimes must not repeat")
        if not self.p_list:
            raise ValueError("p_list must be non-empty")
        for p in self.p_list:
            if p < 3:
                raise ValueError(f"every p must be >= 3, got {p}")
        if len(set(self.p_list)) != len(self.p_list):
            raise ValueError("p_list must not repeat")
        if not self.theta_grid:
            raise ValueError("theta_grid must be non-empty")
        if any(t <= 0 for t in self.theta_grid):
            raise ValueError("theta values must be positive")
        if any(b <= a for a, b in zip(self.theta_grid, self.theta_grid[1:])):
            raise ValueError("theta_grid must be strictly increasing")
        if not isinstance(self.replications, (int, np.integer)) or self.replications < 1:
            raise ValueError(f"replications must be a positive integer, got {self.replications}")
        if self.covariance_kind not in BLOCK_KINDS:
            raise ValueError(
                f"covariance_kind must be one of {BLOCK_KINDS}, got {self.covariance_kind!r}"
            )
        if not 0.0 <= self.covariance_rho < 1.0:
            raise ValueError(f"covariance_rho must lie in [0, 1), got {self.covariance_rho}")
        if self.lambda_rule not in LAMBDA_RULES:
            raise ValueError(
                f"lambda_rule must be one of {LAMBDA_RULES}, got {self.lambda_rule!r}"
            )
        if self.lambda_rule == "fixed":
            if self.lambda_value is None or not self.lambda_value > 0:
                raise ValueError("lambda_rule 'fixed' needs a positive lambda_value")
        elif self.lambda_value is not None:
            raise ValueError("lambda_value is only used with lambda_rule 'fixed'")
        if self.support_threshold < 0:
            raise ValueError(f"support_threshold must be >= 0, got {self.support_threshold}")
        if not isinstance(self.base_seed, (int, np.integer)) or not 0 <= self.base_seed < 2**64:
            raise ValueError(f"base_seed must be an integer in [0, 2^64), got {self.base_seed}")


@dataclass(frozen=True)
class ExperimentRow:
    """One aggregated cell of a phase-transition table.

    Aggregates run over the successful replications; `failures` counts
    replications whose fit did not converge.  `seed` is the base seed
    the replication streams were derived from.
    """

    regime: str
    p: int
    rho: float
    s: int
    theta: float
    n: int
    mean_hamming: float
    stderr_hamming: float
    exact_recovery_rate: float
    replications: int
    failures: int
    seed: int

    def sort_key(self):
        return (self.regime, self.p, self.rho, self.theta)


#: CSV column order; names match the ExperimentRow fields.
COLUMNS = (
    "regime",
    "p",
    "rho",
    "s",
    "theta",
    "n",
    "mean_hamming",
    "stderr_hamming",
    "exact_recovery_rate",
    "replications",
    "failures",
    "seed",
)

_INT_COLUMNS = {"p", "s", "n", "replications", "failures", "seed"}
_FLOAT_COLUMNS = {"rho", "theta", "mean_hamming", "stderr_hamming", "exact_recovery_rate"}


def _format_cell(name: str, value) -> str:
    if name in _FLOAT_COLUMNS:
        return format(float(value), ".17g")
    return str(value)


@dataclass(frozen=True)
class ExperimentTable:
    """Sorted collection of experiment rows with RFC-4180 CSV I/O."""

    rows: tuple[ExperimentRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def to_csv(self) -> str:
        """Render with a header row, CRLF line endings, and floats at 17
        significant digits so values round-trip exactly."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow([_format_cell(name, getattr(row, name)) for name in COLUMNS])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            handle.write(self.to_csv())

    @staticmethod
    def from_csv(text: str) -> "ExperimentTable":
        """Parse a table produced by to_csv.

        Malformed input raises DataFormatError carrying the 1-based line
        and column of the offending cell.
        """
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("missing header row", line=1) from None
        if tuple(header) != COLUMNS:
            for j, (got, want) in enumerate(zip(header, COLUMNS)):
                if got != want:
                    raise DataFormatError(
                        f"header field {got!r} should be {want!r}", line=1, column=j + 1
                    )
            raise DataFormatError(
                f"expected {len(COLUMNS)} header fields, got {len(header)}", line=1
            )
        rows = []
        for i, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(COLUMNS):
                raise DataFormatError(
                    f"expected {len(COLUMNS)} fields, got {len(record)}", line=i
                )
            values = {}
            for j, (name, cell) in enumerate(zip(COLUMNS, record)):
                try:
                    if name in _INT_COLUMNS:
                        values[name] = int(cell)
                    elif name in _FLOAT_COLUMNS:
                        values[name] = float(cell)
                    else:
                        values[name] = cell
                except ValueError:
                    raise DataFormatError(
                        f"field {name!r} got non-numeric value {cell!r}", line=i, column=j + 1
                    ) from None
            if values["regime"] not in REGIMES:
                raise DataFormatError(
                    f"unknown regime {values['regime']!r}", line=i, column=1
                )
            rows.append(ExperimentRow(**values))
        return ExperimentTable(rows=tuple(rows))

    @staticmethod
    def read_csv(path) -> "ExperimentTable":
        return ExperimentTable.from_csv(Path(path).read_text())

    def crossing_thetas(self, rate: float = 0.99) -> dict:
        """Smallest grid theta whose recovery rate reaches `rate`, per
        (regime, p, rho) group; None where the grid never crosses."""
        out: dict = {}
        for row in sorted(self.rows, key=ExperimentRow.sort_key):
            key = (row.regime, row.p, row.rho)
            if key not in out:
                out[key] = None
            if out[key] is None and row.exact_recovery_rate >= rate:
                out[key] = row.theta
        return out


@dataclass(frozen=True)
class _Cell:
    """Picklable work unit: one (regime, p, theta, rho) table cell."""

    regime: str
    p: int
    theta: float
    theta_index: int
    rho: float
    rho_index: int
    covariance_kind: str
    replications: int
    lambda_rule: str
    lambda_value: Optional[float]
    support_threshold: float
    base_seed: int


def replication_seed(
    base_seed: int, p: int, regime: str, theta_index: int, rho_index: int, r: int
) -> np.random.SeedSequence:
    """Seed stream for one replication, mixed from the cell coordinates.

    The entropy tuple (base_seed, p, regime id, theta index, rho index,
    r) makes every replication independent of execution order, so the
    same coordinates always reproduce the same draw.
    """
    return np.random.SeedSequence([base_seed, p, REGIMES[regime], theta_index, rho_index, r])


def _cell_lambda(rule: str, lambda_value, model, n: int) -> float:
    if rule == "paper_sda":
        return lambda_sda(model, n)
    if rule == "theorem3":
        return lambda_of(model, n)
    return float(lambda_value)


def _run_cell(cell: _Cell) -> ExperimentRow:
    s = sparsity_of(cell.regime, cell.p)
    n = sample_size_of(cell.theta, s, cell.p)
    if n <= s + 2:
        raise ValueError(
            f"cell (regime={cell.regime}, p={cell.p}, theta={cell.theta}) gives "
            f"n={n} <= s+2={s + 2}; oracle quantities are undefined there"
        )
    if cell.covariance_kind == "identity":
        block = CovarianceSpec("identity", cell.p)
    else:
        block = CovarianceSpec(cell.covariance_kind, s, rho=cell.rho)

    total = 0
    total_sq = 0
    exact = 0
    failures = 0
    successes = 0
    for r in range(cell.replications):
        stream = replication_seed(
            cell.base_seed, cell.p, cell.regime, cell.theta_index, cell.rho_index, r
        )
        model_seed, data_seed = stream.spawn(2)
        model = make_model(cell.p, s, block, seed=model_seed)
        truth = discriminant_direction(model).support
        dataset = sample_dataset(model, n, seed=data_seed)
        lam = _cell_lambda(cell.lambda_rule, cell.lambda_value, model, n)
        try:
            fit = fit_sda(dataset, lam)
        except NumericError:
            failures += 1
            continue
        dist = hamming(fit.support(cell.support_threshold), truth)
        total += dist
        total_sq += dist * dist
        if dist == 0:
            exact += 1
        successes += 1

    if successes == 0:
        raise NumericError(
            f"every replication failed in cell (regime={cell.regime}, "
            f"p={cell.p}, theta={cell.theta}, rho={cell.rho})"
        )
    mean = total / successes
    if successes > 1:
        var = max(total_sq - total * total / successes, 0.0) / (successes - 1)
        stderr = math.sqrt(var / successes)
    else:
        stderr = 0.0
    return ExperimentRow(
        regime=cell.regime,
        p=cell.p,
        rho=cell.rho,
        s=s,
        theta=cell.theta,
        n=n,
        mean_hamming=mean,
        stderr_hamming=stderr,
        exact_recovery_rate=exact / successes,
        replications=cell.replications,
        failures=failures,
        seed=cell.base_seed,
    )


def _run_cells(cells: Sequence[_Cell], workers: int) -> ExperimentTable:
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(cells) == 1:
        rows = [_run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    attempted = sum(cell.replications for cell in cells)
    failed = sum(row.failures for row in rows)
    if failed > FAILURE_ABORT_FRACTION * attempted:
        raise NumericError(
            f"{failed} of {attempted} replications failed "
            f"(> {FAILURE_ABORT_FRACTION:.0%} abort threshold)"
        )
    rows.sort(key=ExperimentRow.sort_key)
    return ExperimentTable(rows=tuple(rows))


def _phase_cells(config: ExperimentConfig, rho: float, rho_index: int) -> list[_Cell]:
    return [
        _Cell(
            regime=regime,
            p=p,
            theta=theta,
            theta_index=k,
            rho=rho,
            rho_index=rho_index,
            covariance_kind=config.covariance_kind,
            replications=config.replications,
            lambda_rule=config.lambda_rule,
            lambda_value=config.lambda_value,
            support_threshold=config.support_threshold,
            base_seed=config.base_seed,
        )
        for regime in config.regimes
        for p in config.p_list
        for k, theta in enumerate(config.theta_grid)
    ]


def run_phase_transition(config: ExperimentConfig, *, workers: int = 1) -> ExperimentTable:
    """Run the full (regime, p, theta) grid of `config`.

    Each cell aggregates `config.replications` independent fits with the
    order-independent statistics (sum, sum of squares, exact-recovery
    count), so the table bytes do not depend on `workers`.  Raises
    NumericError if more than FAILURE_ABORT_FRACTION of all replications
    fail to converge.
    """
    cells = _phase_cells(config, rho=config.covariance_rho, rho_index=0)
    return _run_cells(cells, workers)


def run_correlation_sweep(
    config: ExperimentConfig, rho_list: Sequence[float], *, workers: int = 1
) -> ExperimentTable:
    """Repeat the experiment with an equal-correlation Sigma_TT at each
    rho in `rho_list` and stack the results into one table.

    Replication streams are keyed by the position of rho in `rho_list`,
    so putting 0.0 first makes those rows coincide bit-for-bit with an
    identity-covariance run of the same config and base seed.
    `config.covariance_kind` and `covariance_rho` are ignored in favor
    of the sweep's own equal-correlation blocks.
    """
    rho_list = [float(r) for r in rho_list]
    if not rho_list:
        raise ValueError("rho_list must be non-empty")
    if any(not 0.0 <= r < 1.0 for r in rho_list):
        raise ValueError(f"every rho must lie in [0, 1), got {rho_list}")
    if len(set(rho_list)) != len(rho_list):
        raise ValueError("rho_list must not repeat")
    cells = []
    for rho_index, rho in enumerate(rho_list):
        kind = "identity" if rho == 0.0 else "equal_correlation"
        sweep = ExperimentConfig(
            regimes=config.regimes,
            p_list=config.p_list,
            theta_grid=config.theta_grid,
            replications=config.replications,
            covariance_kind=kind,
            covariance_rho=rho,
            lambda_rule=config.lambda_rule,
            lambda_value=config.lambda_value,
            support_threshold=config.support_threshold,
            base_seed=config.base_seed,
        )
        cells.extend(_phase_cells(sweep, rho=rho, rho_index=rho_index))
    return _run_cells(cells, workers)
