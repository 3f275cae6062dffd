"""Monte Carlo replication of recovery-criterion tables."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..diagnostics import r_criterion
from ..filterbank import apply_filter_range, feasible_bank, oracle_bank, static_pca_estimate
from ..fracsim import simulate_panel
from ..spectral import default_grid_size, get_kernel
from ..theory import MemoryProfile, delta_rate, truncation_M
from .config import ExperimentConfig

__all__ = [
    "CellResult",
    "MonteCarloTable",
    "emit_table",
    "parse_table_csv",
    "replication_seed",
    "resolve_threads",
    "run_montecarlo",
]

FAILURE_LIMIT = 0.2
INVALID = "-"


def replication_seed(base_seed: int, n: int, T: int, rep: int) -> int:
    """64-bit seed derived from (base_seed, n, T, rep) without shared state."""
    ss = np.random.SeedSequence([int(base_seed), int(n), int(T), int(rep)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("LMGDFM_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


@dataclass(frozen=True)
class CellResult:
    n: int
    T: int
    method: str
    values: np.ndarray  # per-replication R, NaN where the replication failed
    failures: int

    @property
    def count(self) -> int:
        return int(np.sum(np.isfinite(self.values)))

    @property
    def valid(self) -> bool:
        return self.count > 0 and self.failures < FAILURE_LIMIT * self.values.size

    @property
    def mean(self) -> float:
        ok = self.values[np.isfinite(self.values)]
        return float(ok.mean()) if ok.size else math.nan

    @property
    def std(self) -> float:
        ok = self.values[np.isfinite(self.values)]
        return float(ok.std(ddof=1)) if ok.size > 1 else math.nan

    def cell(self) -> str:
        if not self.valid:
            return INVALID
        std = self.std
        return f"{self.mean:.3f}({std:.3f})" if math.isfinite(std) else f"{self.mean:.3f}"


@dataclass
class MonteCarloTable:
    config: ExperimentConfig
    cells: dict[tuple[int, int, str], CellResult]
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def ns(self) -> list[int]:
        return sorted({n for n, _, _ in self.cells})

    @property
    def Ts(self) -> list[int]:
        return sorted({T for _, T, _ in self.cells})

    def get(self, n: int, T: int, method: str) -> CellResult:
        return self.cells[(n, T, method)]


def _time_window(T: int, rule: str) -> tuple[int, int]:
    """1-based inclusive range of t entering the criterion."""
    if rule == "central":
        return math.ceil(0.2 * T), math.floor(0.8 * T)
    if rule == "center":
        return T // 2, T // 2
    return 1, T


def _truncation(config: ExperimentConfig, spec, n: int, T: int) -> int:
    if config.M is not None:
        return config.M
    spread = MemoryProfile.from_matrix(spec.d).spread
    delta = delta_rate(T, T ** -config.b, spread)
    return truncation_M(delta, n, config.beta, config.C_M)


_ESTIMATION_ERRORS = (ArithmeticError, ValueError, np.linalg.LinAlgError)


def _replication(config: ExperimentConfig, n: int, T: int, rep: int) -> dict[str, float]:
    spec = config.model_for(n)
    panel = simulate_panel(spec, T, replication_seed(config.seed, n, T, rep))
    t0, t1 = _time_window(T, config.t_rule)
    chi = panel.chi[:, t0 - 1: t1]
    M = _truncation(config, spec, n, T)
    N = config.N_grid or max(default_grid_size(T), 4 * M)
    out = {}
    for method in config.methods:
        try:
            if method == "dynamic":
                bank = feasible_bank(panel, spec.q, T ** -config.b, get_kernel(config.kernel), M, N)
                est = apply_filter_range(bank, panel.X, t0, t1)
            elif method == "oracle":
                est = apply_filter_range(oracle_bank(spec, M, N), panel.X, t0, t1)
            else:
                est = static_pca_estimate(panel, config.q_static or spec.q)[:, t0 - 1: t1]
            value = r_criterion(est, chi)
            out[method] = value if math.isfinite(value) else math.nan
        except _ESTIMATION_ERRORS:
            out[method] = math.nan
    return out


def run_montecarlo(config: ExperimentConfig, threads: int | None = None) -> MonteCarloTable:
    """Simulate and estimate every (n, T) cell; replications run on a thread pool.

    Results are stored by replication index, so tables do not depend on the
    thread count or completion order.
    """
    threads = resolve_threads(threads)
    start = time.perf_counter()
    R = config.replications
    jobs = [(n, T, r) for n, T in config.grid for r in range(R)]
    if threads == 1:
        results = [_replication(config, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _replication(config, *job), jobs))
    cells = {}
    for g, (n, T) in enumerate(config.grid):
        block = results[g * R: (g + 1) * R]
        for method in config.methods:
            values = np.array([res[method] for res in block], dtype=float)
            cells[(n, T, method)] = CellResult(n, T, method, values, int(np.sum(~np.isfinite(values))))
    wall = time.perf_counter() - start
    return MonteCarloTable(config, cells, wall, {"config_hash": config.config_hash(), "seed": config.seed})


def emit_table(table: MonteCarloTable, method: str, fmt: str = "csv") -> str:
    """Rows n, columns T, cells ``mean(std)`` to 3 decimals; invalid cells are ``-``."""
    header = ["n\\T"] + [str(T) for T in table.Ts]
    rows = []
    for n in table.ns:
        row = [str(n)]
        for T in table.Ts:
            cell = table.cells.get((n, T, method))
            row.append(INVALID if cell is None else cell.cell())
        rows.append(row)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_table_csv(text: str) -> dict[tuple[int, int], tuple[float, float] | None]:
    """Inverse of the csv emitter: (n, T) -> (mean, std), or None for invalid cells."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    Ts = [int(x) for x in header[1:]]
    out = {}
    for row in reader:
        n = int(row[0])
        for T, cell in zip(Ts, row[1:]):
            if cell == INVALID:
                out[(n, T)] = None
            elif "(" in cell:
                mean, std = cell.rstrip(")").split("(")
                out[(n, T)] = (float(mean), float(std))
            else:
                out[(n, T)] = (float(cell), math.nan)
    return out
