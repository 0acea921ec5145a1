"""Iteration sequences, threshold constants and lifespan scaling analysis.

The mean functional U0(t) of a solution with nonnegative data admits a
chain of lower bounds C_j (t - L_j)^(gamma_j) built from three coupled
sequences: gamma_{j+1} = 1 + p gamma_j, slicing times L_j given by
partial products of ell_k = 1 + p^(-k), and a coefficient recursion
C_{j+1} = (p - 1/2) C_j^p p^(-2(j+1)) / ((gamma_j p + 1) ell_{j+1}^(gamma_j p + 1)).

Everything is evaluated in log space (C_j underflows in direct space
within a few steps for small C_0); the derived constants K, M, E0, E1,
epsilon0, j0 control when the chain diverges and give the lifespan
bound T(eps) <= (E1 eps)^-(p-1).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .semilinear import SolveConfig, Trajectory, initial_data, mean_functional, scalar_blowup_time, solve

__all__ = [
    "BlowupSequences",
    "LifespanRecord",
    "SweepResult",
    "LowerBoundReport",
    "gamma_seq",
    "partial_products",
    "m_constant",
    "c_seq",
    "sum_identity",
    "thresholds",
    "build_sequences",
    "verify_lower_bounds",
    "lifespan_sweep",
]

_GAMMA_CAP = 60
_PRODUCT_TOL = 1e-16


def _check_p(p: float) -> None:
    if p <= 1.0:
        raise ValueError("exponent p must exceed 1")


def gamma_seq(p: float, J: int) -> np.ndarray:
    """gamma_j = (p^j - 1)/(p - 1) for j = 0..J (checked against the recursion)."""
    _check_p(p)
    if J < 0:
        raise ValueError("J must be nonnegative")
    if J > _GAMMA_CAP:
        raise ValueError(f"J capped at {_GAMMA_CAP} (p^J overflows beyond that)")
    j = np.arange(J + 1)
    closed = (p**j - 1.0) / (p - 1.0)
    rec = np.empty(J + 1)
    rec[0] = 0.0
    for i in range(J):
        rec[i + 1] = 1.0 + p * rec[i]
    if np.max(np.abs(closed - rec) / (1.0 + closed)) > 1e-12:
        raise AssertionError("closed form and recursion for gamma_j disagree")
    return closed


def partial_products(p: float) -> tuple[np.ndarray, float]:
    """Partial products L_j of prod(1 + p^-k), truncated once p^-k < 1e-16."""
    _check_p(p)
    products = []
    acc = 1.0
    k = 0
    while True:
        term = p ** (-k)
        acc *= 1.0 + term
        products.append(acc)
        if term < _PRODUCT_TOL:
            break
        k += 1
    return np.array(products), float(acc)


def m_constant(p: float) -> float:
    """Uniform lower bound M for ell_j^(-gamma_j); the limit is e^(-1/(p-1))."""
    _check_p(p)
    limit = math.exp(-1.0 / (p - 1.0))
    best = 1.0  # j = 0 term (gamma_0 = 0)
    for j in range(1, 201):
        gamma = (p**j - 1.0) / (p - 1.0)
        log_term = -gamma * math.log1p(p ** (-j))
        best = min(best, math.exp(log_term))
        if abs(math.exp(-log_term) - 1.0 / limit) < 1e-14:
            break
    return min(best, limit)


def c_seq(p: float, C0: float, J: int) -> np.ndarray:
    """Coefficients C_j of the lower-bound chain, by the exact recursion.

    Computed in log space; entries that underflow in direct space come
    back as 0.0 with a warning naming the first such index.  Also
    asserts the simplified chain bound
    C_j >= K C_{j-1}^p p^(-3j) with K = (p - 1/2)(p - 1) M term by term.
    """
    _check_p(p)
    if C0 <= 0.0:
        raise ValueError("C0 must be positive")
    log_c = _log_c_seq(p, math.log(C0), J)
    K = (p - 0.5) * (p - 1.0) * m_constant(p)
    for j in range(1, J + 1):
        chain = math.log(K) + p * log_c[j - 1] - 3.0 * j * math.log(p)
        if log_c[j] < chain - 1e-9 * max(1.0, abs(chain)):
            raise AssertionError(f"chain bound violated at j={j}")
    out = np.exp(log_c)
    under = np.nonzero(out == 0.0)[0]
    if under.size:
        warnings.warn(f"C_j underflows to zero from j={under[0]}; use log-space values")
    return out


def _log_c_seq(p: float, log_c0: float, J: int) -> np.ndarray:
    gamma = gamma_seq(p, min(J, _GAMMA_CAP))
    log_c = np.empty(J + 1)
    log_c[0] = log_c0
    log_p = math.log(p)
    for j in range(J):
        gp1 = gamma[j] * p + 1.0 if j < gamma.size else math.inf
        log_ell = math.log1p(p ** (-(j + 1)))
        log_c[j + 1] = (
            math.log(p - 0.5)
            + p * log_c[j]
            - 2.0 * (j + 1) * log_p
            - math.log(gp1)
            - gp1 * log_ell
        )
    return log_c


def sum_identity(j: int, p: float) -> tuple[float, float]:
    """Both sides of sum_{k<j} (j-k) p^k = ((p^(j+1)-p)/(p-1) - j)/(p-1)."""
    _check_p(p)
    if j < 1:
        raise ValueError("j must be >= 1")
    k = np.arange(j)
    lhs = float(np.sum((j - k) * p**k))
    rhs = ((p ** (j + 1) - p) / (p - 1.0) - j) / (p - 1.0)
    return lhs, rhs


class Thresholds(NamedTuple):
    K: float
    E0: float
    E1: float
    epsilon0: float
    j0: int


def thresholds(p: float, C_data: float) -> Thresholds:
    """Constants controlling divergence of the lower-bound chain.

    K = (p-1/2)(p-1)M;  j0 = smallest integer >= log K/(3 log p) - p/(p-1)
    clamped at 0;  E0 = K^(1/(p-1)) p^(-3p/(p-1)^2) C_data;
    E1 = 2^(-1/(p-1)) E0;  epsilon0 = (2L)^(-1/(p-1)) / E1.
    """
    _check_p(p)
    if C_data <= 0.0:
        raise ValueError("C_data must be positive")
    K = (p - 0.5) * (p - 1.0) * m_constant(p)
    j0_real = math.log(K) / (3.0 * math.log(p)) - p / (p - 1.0)
    j0 = max(0, math.ceil(j0_real - 1e-12))
    log_e0 = math.log(K) / (p - 1.0) - 3.0 * p * math.log(p) / (p - 1.0) ** 2 + math.log(C_data)
    E0 = math.exp(log_e0)
    E1 = 2.0 ** (-1.0 / (p - 1.0)) * E0
    _, L = partial_products(p)
    epsilon0 = (2.0 * L) ** (-1.0 / (p - 1.0)) / E1
    return Thresholds(K=K, E0=E0, E1=E1, epsilon0=epsilon0, j0=j0)


@dataclass
class BlowupSequences:
    """All sequences and constants of the lower-bound chain for one (p, C0)."""

    p: float
    J: int
    gamma: np.ndarray
    ell: np.ndarray
    L_partial: np.ndarray
    L_limit: float
    C: np.ndarray
    log_C: np.ndarray
    K: float
    M: float
    E0: float
    E1: float
    epsilon0: float
    j0: int
    C0: float


def build_sequences(p: float, C_data: float, epsilon: float, J: int = 30) -> BlowupSequences:
    """Assemble the full sequence table with C0 = C_data * epsilon."""
    _check_p(p)
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    gamma = gamma_seq(p, min(J, _GAMMA_CAP))
    L_partial, L_limit = partial_products(p)
    ell = 1.0 + p ** (-np.arange(J + 1, dtype=float))
    th = thresholds(p, C_data)
    C0 = C_data * epsilon
    if C0 > 0.0:
        log_c = _log_c_seq(p, math.log(C0), J)
        with np.errstate(under="ignore"):
            C = np.exp(log_c)
    else:
        log_c = np.full(J + 1, -math.inf)
        C = np.zeros(J + 1)
    return BlowupSequences(
        p=p, J=J, gamma=gamma, ell=ell, L_partial=L_partial, L_limit=L_limit,
        C=C, log_C=log_c, K=th.K, M=m_constant(p), E0=th.E0, E1=th.E1,
        epsilon0=th.epsilon0, j0=th.j0, C0=C0,
    )


@dataclass
class LowerBoundReport:
    """Minimum slack of U0(t) against each lower-bound curve."""

    js: list[int]
    min_slack: list[float]   # min over t of U0 / (C_j (t-L_j)^gamma_j); inf if vacuous
    passed: list[bool]
    warning: str | None


def verify_lower_bounds(traj: Trajectory, seqs: BlowupSequences, Jmax: int,
                        slack: float = 0.999) -> LowerBoundReport:
    """Check U0(t) >= slack * C_j (t - L_j)^gamma_j on the recorded times.

    Times before L_j are skipped per bound; if the trajectory never
    reaches L_Jmax the report is partial and carries a warning.
    """
    if Jmax > seqs.J:
        raise ValueError("Jmax exceeds the sequence depth")
    t_end = traj.T_num if traj.T_num is not None else traj.times[-1]
    js, mins, passed = [], [], []
    warning = None
    for j in range(Jmax + 1):
        L_j = seqs.L_partial[min(j, seqs.L_partial.size - 1)]
        mask = (traj.times >= L_j) & (traj.times < t_end)
        if not np.any(mask):
            warning = f"trajectory ends at t={t_end:.3g} before L_{j}={L_j:.3g}; report truncated"
            break
        t = traj.times[mask]
        u0 = traj.U0_values[mask]
        bound = seqs.C[j] * (t - L_j) ** seqs.gamma[j]
        ok = bool(np.all(u0 >= slack * bound))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(bound > 0, u0 / bound, math.inf)
        js.append(j)
        mins.append(float(np.min(ratio)))
        passed.append(ok)
    return LowerBoundReport(js=js, min_slack=mins, passed=passed, warning=warning)


@dataclass
class LifespanRecord:
    epsilon: float
    T_num: float
    bound: float          # (E1 * epsilon)^-(p-1)
    data_constant: float  # integral of u0


@dataclass
class SweepResult:
    records: list[LifespanRecord]
    failed: list[float]          # epsilons that did not blow up before t_max
    slope: float
    slope_ci: tuple[float, float]
    compensated_max: float
    compensated_min: float

    @property
    def compensated_ratio(self) -> float:
        return self.compensated_max / self.compensated_min


def _fit_slope(log_eps: np.ndarray, log_T: np.ndarray) -> tuple[float, tuple[float, float]]:
    slope = float(np.polyfit(log_eps, log_T, 1)[0])
    if log_eps.size <= 2:
        return slope, (slope, slope)
    loo = []
    for i in range(log_eps.size):
        keep = np.arange(log_eps.size) != i
        loo.append(float(np.polyfit(log_eps[keep], log_T[keep], 1)[0]))
    return slope, (min(loo), max(loo))


def lifespan_sweep(base_cfg: SolveConfig, epsilons, mode: str = "pde",
                   threads: int = 1) -> SweepResult:
    """Blow-up times across a grid of data sizes, with a log-log slope fit.

    mode='pde' runs the spectral solver per epsilon (in parallel when
    threads > 1); mode='scalar' uses the constant-data ODE surrogate.
    Runs that fail to blow up before t_max are excluded from the fit and
    reported in ``failed``.  The slope confidence interval is the
    min/max over leave-one-out refits.
    """
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 4:
        raise ValueError("need at least 4 epsilon values for a slope fit")
    if any(e <= 0 for e in epsilons):
        raise ValueError("epsilons must be positive")
    if mode not in ("pde", "scalar"):
        raise ValueError("mode must be 'pde' or 'scalar'")

    p = base_cfg.p
    data0, data1 = initial_data(base_cfg)
    c_data = mean_functional(data0)
    th = thresholds(p, c_data) if c_data > 0 else None

    def run(eps: float) -> float | None:
        if mode == "scalar":
            return scalar_blowup_time(p, eps * mean_functional(data0), eps * mean_functional(data1),
                                      threshold=base_cfg.blowup_threshold, t_max=base_cfg.t_max)
        traj = solve(replace(base_cfg, epsilon=eps))
        return traj.T_num

    if threads > 1 and mode == "pde":
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, epsilons))
    else:
        outcomes = [run(e) for e in epsilons]

    records, failed = [], []
    for eps, t_num in zip(epsilons, outcomes):
        if t_num is None:
            failed.append(eps)
            continue
        bound = (th.E1 * eps) ** (-(p - 1.0)) if th is not None else math.nan
        records.append(LifespanRecord(epsilon=eps, T_num=t_num, bound=bound, data_constant=c_data))
    if len(records) < 4:
        raise RuntimeError(f"only {len(records)} runs blew up; cannot fit a slope (failed: {failed})")

    eps_arr = np.array([r.epsilon for r in records])
    t_arr = np.array([r.T_num for r in records])
    slope, ci = _fit_slope(np.log(eps_arr), np.log(t_arr))
    comp = t_arr * eps_arr ** (p - 1.0)
    return SweepResult(records=records, failed=failed, slope=slope, slope_ci=ci,
                       compensated_max=float(comp.max()), compensated_min=float(comp.min()))
