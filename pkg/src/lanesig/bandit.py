"""Rank-weighted Thompson sampling over per-arc Beta posteriors.

Each (destination, origin) arc carries Beta(alpha, beta) hyperparameters and
a rank percentile. A recommendation round samples a connection probability
per arc, multiplies it by the rank percentile, and recommends the top K of
the adjusted values. Operator feedback then bumps alpha for selected arcs
and beta for arcs that were shown but passed over, so consistently selected
arcs converge toward certain recommendation.

Posterior counts are stored as integers on top of the fixed priors, which
keeps replayed histories bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEEDBACK_MODES = ("not_selected", "any_recommended")

# beta never drops below this, however many inactivity penalties accrue
BETA_FLOOR = 0.01

DEFAULT_RANKPCT = 0.5


class UnknownArcError(KeyError):
    """A destination or origin id not present in the state grid."""


class RoundReplayError(ValueError):
    """Feedback arrived for a round other than the next unapplied one."""


@dataclass(frozen=True)
class RecommendationRound:
    """One sampling pass for a destination, kept for audit and replay.

    ``sampled`` and ``adjusted`` hold the per-arc draws and their
    rank-weighted values in state origin order; ``sampled`` is None on a
    bootstrap round, which ranks by percentile alone without sampling.
    """

    dest_id: str
    t: int
    k: int
    seed: int
    recommended: tuple[str, ...]
    sampled: tuple[float, ...] | None
    adjusted: tuple[float, ...]
    bootstrap: bool
    selected: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ExpectedArcs:
    """Moments of the predicted connection count for one destination."""

    mean: float
    sd: float
    k_suggested: int


@dataclass
class BanditState:
    origin_ids: tuple[str, ...]
    dest_ids: tuple[str, ...]
    alpha0: float
    beta0: float
    alpha_count: np.ndarray  # (n_dest, n_fc) selections
    shown_count: np.ndarray  # (n_dest, n_fc) beta increments from feedback
    penalty_count: np.ndarray  # (n_dest, n_fc) rank-drop penalties
    rankpct: np.ndarray  # (n_dest, n_fc)
    rounds_applied: np.ndarray  # (n_dest,) feedback rounds per destination
    t: int = 0  # total feedback rounds applied
    rankpct_defaulted: tuple[tuple[str, str], ...] = ()
    _origin_index: dict[str, int] = field(default_factory=dict, repr=False)
    _dest_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._origin_index = {oid: i for i, oid in enumerate(self.origin_ids)}
        self._dest_index = {did: j for j, did in enumerate(self.dest_ids)}

    @property
    def n_fc(self) -> int:
        return len(self.origin_ids)

    @property
    def n_dest(self) -> int:
        return len(self.dest_ids)

    def dest_index(self, dest_id: str) -> int:
        try:
            return self._dest_index[dest_id]
        except KeyError:
            raise UnknownArcError(f"unknown destination {dest_id!r}") from None

    def origin_index(self, origin_id: str) -> int:
        try:
            return self._origin_index[origin_id]
        except KeyError:
            raise UnknownArcError(f"unknown origin {origin_id!r}") from None

    def alpha(self, dest_id: str, origin_id: str) -> float:
        return self.alpha0 + float(
            self.alpha_count[self.dest_index(dest_id), self.origin_index(origin_id)]
        )

    def beta(self, dest_id: str, origin_id: str) -> float:
        j, i = self.dest_index(dest_id), self.origin_index(origin_id)
        return max(
            self.beta0 + float(self.shown_count[j, i]) - float(self.penalty_count[j, i]),
            BETA_FLOOR,
        )

    def alpha_row(self, dest_id: str) -> np.ndarray:
        return self.alpha0 + self.alpha_count[self.dest_index(dest_id)].astype(float)

    def beta_row(self, dest_id: str) -> np.ndarray:
        j = self.dest_index(dest_id)
        raw = self.beta0 + self.shown_count[j].astype(float) - self.penalty_count[j].astype(float)
        return np.maximum(raw, BETA_FLOOR)

    def posterior_mean_row(self, dest_id: str) -> np.ndarray:
        a = self.alpha_row(dest_id)
        b = self.beta_row(dest_id)
        return a / (a + b)

    def rankpct_row(self, dest_id: str) -> np.ndarray:
        return self.rankpct[self.dest_index(dest_id)]


def _as_ids(ids_or_count: int | list[str] | tuple[str, ...], prefix: str) -> tuple[str, ...]:
    if isinstance(ids_or_count, int):
        if ids_or_count < 1:
            raise ValueError(f"need at least 1 {prefix} id")
        return tuple(f"{prefix}{i}" for i in range(ids_or_count))
    ids = tuple(ids_or_count)
    if not ids:
        raise ValueError(f"need at least 1 {prefix} id")
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate {prefix} ids")
    return ids


def init_state(
    origins: int | list[str] | tuple[str, ...],
    dests: int | list[str] | tuple[str, ...],
    alpha0: float = 0.1,
    beta0: float = 1.0,
    rankpct: dict[tuple[str, str], float] | None = None,
) -> BanditState:
    """Fresh posteriors at (alpha0, beta0) for the full arc grid.

    ``rankpct`` maps (dest_id, origin_id) to a percentile in [0, 1]; arcs
    without an entry default to 0.5 and are listed in ``rankpct_defaulted``.
    Integer arguments generate ``FC_i`` / ``D_j`` ids.
    """
    if not (alpha0 > 0.0 and beta0 > 0.0):
        raise ValueError("alpha0 and beta0 must be positive")
    origin_ids = _as_ids(origins, "FC_")
    dest_ids = _as_ids(dests, "D_")
    shape = (len(dest_ids), len(origin_ids))
    pct = np.full(shape, DEFAULT_RANKPCT)
    defaulted: list[tuple[str, str]] = []
    table = rankpct or {}
    for key, value in table.items():
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"rankpct for arc {key} must be in [0, 1], got {value}")
    for j, dest in enumerate(dest_ids):
        for i, origin in enumerate(origin_ids):
            value = table.get((dest, origin))
            if value is None:
                defaulted.append((dest, origin))
            else:
                pct[j, i] = value
    return BanditState(
        origin_ids=origin_ids,
        dest_ids=dest_ids,
        alpha0=alpha0,
        beta0=beta0,
        alpha_count=np.zeros(shape, dtype=np.int64),
        shown_count=np.zeros(shape, dtype=np.int64),
        penalty_count=np.zeros(shape, dtype=np.int64),
        rankpct=pct,
        rounds_applied=np.zeros(len(dest_ids), dtype=np.int64),
        t=0,
        rankpct_defaulted=tuple(defaulted),
    )


def _arc_stream(seed: int, dest_index: int, origin_index: int) -> np.random.Generator:
    # one counter-based stream per arc: the draw for an arc depends only on
    # (seed, dest, origin), not on evaluation order
    key = np.array(
        [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((dest_index << 32) | origin_index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def sample_connection(alpha: float, beta: float, rng: np.random.Generator) -> float:
    """Beta draw via two gamma draws."""
    ga = rng.standard_gamma(alpha)
    gb = rng.standard_gamma(beta)
    denom = ga + gb
    if denom == 0.0:
        return 0.0
    return float(ga / denom)


def sample_round(
    state: BanditState,
    dest_id: str,
    k: int,
    seed: int,
    bootstrap: bool | None = None,
) -> RecommendationRound:
    """Draw adjusted connection probabilities and recommend the top ``k`` arcs.

    ``bootstrap=None`` ranks by percentile alone on a destination's first
    round (nothing has been learned yet) and samples afterwards; pass an
    explicit bool to override. Ties order by higher percentile, then origin
    id. Identical (state, seed, k) always reproduce the same round.
    """
    j = state.dest_index(dest_id)
    if not (1 <= k <= state.n_fc):
        raise ValueError(f"k must be in [1, {state.n_fc}], got {k}")
    if bootstrap is None:
        bootstrap = int(state.rounds_applied[j]) == 0
    pct = state.rankpct[j]
    if bootstrap:
        sampled = None
        adjusted = pct.astype(float).copy()
    else:
        draws = np.empty(state.n_fc)
        for i in range(state.n_fc):
            rng = _arc_stream(seed, j, i)
            draws[i] = sample_connection(
                state.alpha0 + float(state.alpha_count[j, i]),
                max(
                    state.beta0
                    + float(state.shown_count[j, i])
                    - float(state.penalty_count[j, i]),
                    BETA_FLOOR,
                ),
                rng,
            )
        sampled = tuple(float(v) for v in draws)
        adjusted = draws * pct
    id_rank = {oid: r for r, oid in enumerate(sorted(state.origin_ids))}
    order = sorted(
        range(state.n_fc),
        key=lambda i: (-adjusted[i], -pct[i], id_rank[state.origin_ids[i]]),
    )
    recommended = tuple(state.origin_ids[i] for i in order[:k])
    return RecommendationRound(
        dest_id=dest_id,
        t=int(state.rounds_applied[j]),
        k=k,
        seed=int(seed),
        recommended=recommended,
        sampled=sampled,
        adjusted=tuple(float(v) for v in adjusted),
        bootstrap=bool(bootstrap),
    )


def apply_feedback(
    state: BanditState,
    dest_id: str,
    recommended: tuple[str, ...] | list[str],
    selected: tuple[str, ...] | list[str],
    mode: str = "not_selected",
    t: int | None = None,
) -> dict[str, tuple[int, int]]:
    """Update posteriors for one round; returns per-arc (d_alpha, d_beta).

    ``not_selected`` bumps beta only for arcs shown but passed over;
    ``any_recommended`` bumps beta for every shown arc, selected or not.
    Selections outside the recommended list still count toward alpha
    (operator override). The update is atomic: ids and round number are
    validated before anything changes, and replaying an already-applied
    round raises.
    """
    if mode not in FEEDBACK_MODES:
        raise ValueError(f"mode must be one of {FEEDBACK_MODES}, got {mode!r}")
    j = state.dest_index(dest_id)
    rec_idx = [state.origin_index(o) for o in recommended]
    sel_idx = [state.origin_index(o) for o in selected]
    expected_t = int(state.rounds_applied[j])
    if t is not None and t != expected_t:
        raise RoundReplayError(
            f"destination {dest_id!r} expects feedback for round {expected_t}, got {t}"
        )
    rec_set = set(rec_idx)
    sel_set = set(sel_idx)
    deltas: dict[str, tuple[int, int]] = {}
    for i in sorted(rec_set | sel_set):
        d_alpha = 1 if i in sel_set else 0
        if mode == "not_selected":
            d_beta = 1 if (i in rec_set and i not in sel_set) else 0
        else:
            d_beta = 1 if i in rec_set else 0
        state.alpha_count[j, i] += d_alpha
        state.shown_count[j, i] += d_beta
        deltas[state.origin_ids[i]] = (d_alpha, d_beta)
    state.rounds_applied[j] = expected_t + 1
    state.t += 1
    return deltas


def expected_arcs(
    state: BanditState,
    dest_id: str,
    theta: np.ndarray | list[float] | None = None,
    seed: int | None = None,
) -> ExpectedArcs:
    """Moments of the connection count, treating arcs as independent coins.

    The default estimate is the posterior mean times the rank percentile;
    pass ``seed`` to use a sampled round's adjusted values instead, or
    ``theta`` to supply estimates directly.
    """
    j = state.dest_index(dest_id)
    if theta is not None:
        values = np.asarray(theta, dtype=float)
        if values.shape != (state.n_fc,):
            raise ValueError(f"theta must have length {state.n_fc}")
    elif seed is not None:
        values = np.asarray(
            sample_round(state, dest_id, state.n_fc, seed, bootstrap=False).adjusted
        )
    else:
        values = state.posterior_mean_row(dest_id) * state.rankpct[j]
    if np.any((values < 0.0) | (values > 1.0)):
        raise ValueError("connection estimates must lie in [0, 1]")
    mean = float(values.sum())
    sd = float(np.sqrt(np.sum(values * (1.0 - values))))
    k = int(np.clip(round(mean), 1, state.n_fc))
    return ExpectedArcs(mean=mean, sd=sd, k_suggested=k)


def update_rankpct(state: BanditState, dest_id: str, table: dict[str, float]) -> None:
    """Refresh rank percentiles for one destination in place."""
    j = state.dest_index(dest_id)
    idx = [state.origin_index(o) for o in table]  # validate before mutating
    for origin_id, value in table.items():
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"rankpct for {origin_id!r} must be in [0, 1], got {value}")
    for origin_id, value in table.items():
        state.rankpct[j, state.origin_index(origin_id)] = value


def rank_drop_penalty(
    state: BanditState,
    old_ranks: dict[tuple[str, str], int],
    new_ranks: dict[tuple[str, str], int],
    threshold: int,
) -> list[tuple[str, str]]:
    """Dock beta for arcs whose rank worsened by at least ``threshold``.

    The effective beta is floored at 0.01 so posteriors stay valid. Returns
    the penalized arcs.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if set(old_ranks) != set(new_ranks):
        raise ValueError("old and new rank tables must cover the same arcs")
    penalized = []
    for (dest_id, origin_id), old_rank in old_ranks.items():
        if new_ranks[(dest_id, origin_id)] - old_rank >= threshold:
            j = state.dest_index(dest_id)
            i = state.origin_index(origin_id)
            state.penalty_count[j, i] += 1
            penalized.append((dest_id, origin_id))
    return penalized
