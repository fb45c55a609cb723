"""Two-stage lagged skeleton learning with a positive partial-correlation test.

The conditional-independence test regresses the conditioning set out of both
series by ordinary least squares and evaluates the Pearson correlation of the
residuals with a two-sided Student-t test. Links are only ever accepted with a
positive correlation, matching the semantics of anomaly co-occurrence: flags
rise together, they do not trade places.

Stage 1 selects candidate parents per target channel by iteratively deepening
the conditioning set over the strongest remaining candidates; stage 2 retests
every surviving link conditioned on both endpoints' parents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InputError, InvariantViolation
from .flags import FlagMatrix
from .graphs import LaggedLink, SkeletonGraph
from .sparse import PriorLinkSet

__all__ = ["CITestResult", "anac_ci_test", "select_parents", "learn_skeleton"]


@dataclass(frozen=True)
class CITestResult:
    rho: float
    p_value: float
    dof: int


def _residualize_pair(
    x: np.ndarray, y: np.ndarray, design: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    # Normal equations with a pseudoinverse: same residuals as lstsq, one
    # small k x k factorization instead of an n x k SVD per series.
    targets = np.column_stack([x, y])
    gram = design.T @ design
    coefs = np.linalg.pinv(gram) @ (design.T @ targets)
    resid = targets - design @ coefs
    return resid[:, 0], resid[:, 1]


def anac_ci_test(x: np.ndarray, y: np.ndarray, z: tuple[np.ndarray, ...] = ()) -> CITestResult:
    """Partial correlation of x and y given z, with a Student-t p-value.

    Intercepts are always included in the regressions. Zero-variance residuals
    yield (rho=0, p=1) rather than raising; binary inputs are treated as 0/1
    reals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    conditioners = [np.asarray(c, dtype=float) for c in z]
    n = x.size
    if y.size != n or any(c.size != n for c in conditioners):
        raise InputError("all series passed to the CI test must share one length")
    k = len(conditioners)
    if n <= k + 3:
        raise InputError(f"need more than {k + 3} samples for {k} conditioners, got {n}")
    design = np.column_stack([np.ones(n), *conditioners])
    res_x, res_y = _residualize_pair(x, y, design)
    dof = n - k - 2
    sx = res_x.std()
    sy = res_y.std()
    if sx <= 0 or sy <= 0:
        return CITestResult(rho=0.0, p_value=1.0, dof=dof)
    rho = float(np.dot(res_x - res_x.mean(), res_y - res_y.mean()) / (n * sx * sy))
    rho = float(np.clip(rho, -1.0, 1.0))
    if abs(rho) >= 1.0:
        return CITestResult(rho=rho, p_value=0.0, dof=dof)
    t_stat = rho * np.sqrt(dof / (1.0 - rho * rho))
    p_value = float(2.0 * stats.t.sf(abs(t_stat), dof))
    return CITestResult(rho=rho, p_value=p_value, dof=dof)


def _lagged_column(data: np.ndarray, channel: int, lag: int, start: int) -> np.ndarray:
    """Values of ``channel`` shifted back by ``lag`` over the window [start, T)."""
    t = data.shape[0]
    return data[start - lag : t - lag, channel]


class _LaggedView:
    """Cache of lag-shifted channel columns over a common sample window."""

    def __init__(self, flags: FlagMatrix):
        self.data = flags.flags.astype(float)
        self.channels = flags.channels
        self.index = {name: i for i, name in enumerate(flags.channels)}
        self._cache: dict[tuple[int, int, int], np.ndarray] = {}

    def column(self, channel: str, lag: int, start: int) -> np.ndarray:
        key = (self.index[channel], lag, start)
        if key not in self._cache:
            self._cache[key] = _lagged_column(self.data, key[0], lag, start)
        return self._cache[key]


def _candidate_order(rho_map, candidates):
    return sorted(candidates, key=lambda c: (-rho_map[c], c[0], c[1]))


def select_parents(
    flags: FlagMatrix,
    target: str,
    tau_max: int,
    alpha_pc: float,
    priors: PriorLinkSet,
    max_conds: int = 3,
) -> list[tuple[str, int]]:
    """Iterative condition selection of lagged parents for one target.

    Candidates are every prior-allowed (channel, lag) with lag in
    [0, tau_max]; each round tests every remaining candidate against the
    target conditioned on the q strongest other candidates, removing those
    that turn non-significant or non-positive. Survivors come back ordered by
    correlation strength. Lags are reported as non-positive integers.
    """
    if target not in flags.channels:
        raise InputError(f"unknown channel {target!r}")
    if flags.n_samples <= tau_max + 10:
        raise InputError("not enough samples for the requested tau_max")
    view = _LaggedView(flags)
    y = view.column(target, 0, tau_max)
    candidates = [
        (name, lag)
        for lag in range(tau_max + 1)
        for name in flags.channels
        if name != target and priors.allows(name, target, -lag)
    ]
    rho_map: dict[tuple[str, int], float] = {}

    survivors = []
    for cand in candidates:
        res = anac_ci_test(y, view.column(cand[0], cand[1], tau_max))
        rho_map[cand] = res.rho
        if res.p_value <= alpha_pc and res.rho > 0:
            survivors.append(cand)

    for q in range(1, max_conds + 1):
        if q > len(survivors) - 1:
            break
        changed = False
        ordered = _candidate_order(rho_map, survivors)
        for cand in list(ordered):
            if cand not in survivors:
                continue
            conds = [c for c in _candidate_order(rho_map, survivors) if c != cand][:q]
            res = anac_ci_test(
                y,
                view.column(cand[0], cand[1], tau_max),
                tuple(view.column(c, lag, tau_max) for c, lag in conds),
            )
            rho_map[cand] = res.rho
            if res.p_value > alpha_pc or res.rho <= 0:
                survivors.remove(cand)
                changed = True
        if not changed:
            break
    return _candidate_order(rho_map, survivors)


def _mci_conditions(
    candidate: tuple[str, int],
    target: str,
    target_parents: list[tuple[str, int]],
    source_parents: list[tuple[str, int]],
    mci_mode: str,
) -> list[tuple[str, int]]:
    conds = [c for c in target_parents if c != candidate]
    if mci_mode == "full":
        shift = candidate[1]
        for name, lag in source_parents:
            shifted = (name, lag + shift)
            if shifted == (target, 0) or shifted == candidate:
                continue
            if shifted not in conds:
                conds.append(shifted)
    return conds


def learn_skeleton(
    flags: FlagMatrix,
    tau_max: int,
    alpha: float,
    priors: PriorLinkSet,
    mci_mode: str = "full",
    max_conds: int = 3,
) -> SkeletonGraph:
    """Parent selection per channel, then momentary-CI retesting of each link.

    A link source@-s -> target is kept when the retest conditioned on the
    target's other parents (and, in ``full`` mode, the source's parents
    shifted by s) stays significant with positive correlation. Contemporaneous
    candidates are tested in both orientations and both may survive; pruning
    resolves them later.
    """
    if mci_mode not in ("full", "target-only"):
        raise InputError(f"unknown mci_mode {mci_mode!r}")
    parents = {
        name: select_parents(flags, name, tau_max, alpha, priors, max_conds)
        for name in flags.channels
    }
    view = _LaggedView(flags)
    links = []
    for target in flags.channels:
        for cand in parents[target]:
            conds = _mci_conditions(cand, target, parents[target], parents[cand[0]], mci_mode)
            start = max(tau_max, cand[1], *(lag for _, lag in conds)) if conds else max(
                tau_max, cand[1]
            )
            res = anac_ci_test(
                view.column(target, 0, start),
                view.column(cand[0], cand[1], start),
                tuple(view.column(c, lag, start) for c, lag in conds),
            )
            if res.p_value <= alpha and res.rho > 0:
                links.append(
                    LaggedLink(
                        source=cand[0],
                        target=target,
                        lag=-cand[1],
                        weight=res.rho,
                        p_value=res.p_value,
                    )
                )
    for link in links:
        if not priors.allows(link.source, link.target, link.lag):
            raise InvariantViolation(f"learned link {link} not admitted by priors")
        if not (link.weight > 0 and link.p_value <= alpha):
            raise InvariantViolation(f"learned link {link} fails significance contract")
    return SkeletonGraph(flags.channels, tuple(links))
