"""Online keep/discard environment over one day stream.

One episode walks a single day's merged stream in (unix_ts, text_id) order.
The observation is [embedding (768) | remaining budget fraction | max cosine
similarity to the texts already kept this episode]. Rewards:

    sc = 0, keep    -> -penalty (default 5)
    sc = 0, discard -> +1
    sc > 0, keep    -> n_sc * (1 - si_m)      with n_sc = sc / q_count
    sc > 0, discard -> -(n_sc * (1 - si_m))

Once the keep budget is exhausted the episode keeps emitting outcomes but
every remaining text is force-discarded (forced=True); the episode ends only
when the stream does, so each text receives exactly one decision.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._kernels import max_cosine
from .corpus import EMBEDDING_DIM, DayStream

OBS_DIM = EMBEDDING_DIM + 2
BUDGET_INDEX = EMBEDDING_DIM        # 768
SIM_INDEX = EMBEDDING_DIM + 1       # 769
DEFAULT_BUDGET = 300
DEFAULT_PENALTY = 5.0


class Action(enum.IntEnum):
    KEEP = 0
    DISCARD = 1


@dataclass
class StepInfo:
    text_id: str
    sc: int
    n_sc: float
    si_m: float
    forced: bool


@dataclass
class StepOutcome:
    reward: float
    next_observation: np.ndarray | None
    info: StepInfo

    @property
    def terminal(self) -> bool:
        return self.next_observation is None


def reward_value(sc: int, action: Action | int, si_m: float, q_count: int,
                 penalty: float = DEFAULT_PENALTY) -> float:
    """Reward for one decision; total on its stated domain."""
    if q_count < 1:
        raise ValueError("q_count must be >= 1")
    if sc < 0:
        raise ValueError("sc must be >= 0")
    discard = int(action) == int(Action.DISCARD)
    if sc == 0:
        return 1.0 if discard else -float(penalty)
    n_sc = sc / q_count
    value = n_sc - n_sc * si_m
    return -value if discard else value


class EpisodeDone(RuntimeError):
    """Raised when step() is called after the episode terminated."""


class StreamEnv:
    """Single-day environment; one instance is single-threaded."""

    def __init__(self, day_stream: DayStream, q_count: int,
                 budget_max: int = DEFAULT_BUDGET, penalty: float = DEFAULT_PENALTY):
        if budget_max < 1:
            raise ValueError("budget_max must be >= 1")
        if q_count < 1:
            raise ValueError("q_count must be >= 1")
        self.day_stream = day_stream
        self.q_count = int(q_count)
        self.budget_max = int(budget_max)
        self.penalty = float(penalty)
        self.zero_norm_warnings = 0
        self._kept = np.empty((self.budget_max, EMBEDDING_DIM), dtype=np.float32)
        self._kept_norms = np.empty(self.budget_max, dtype=np.float64)
        self.reset()

    # ----------------------------------------------------------------- state

    @property
    def done(self) -> bool:
        return self._cursor >= len(self.day_stream.items)

    @property
    def kept_count(self) -> int:
        return self._kept_count

    @property
    def kept_ids(self) -> list[str]:
        return list(self._kept_ids)

    @property
    def budget_exhausted(self) -> bool:
        return self._kept_count >= self.budget_max

    @property
    def current_text(self):
        return None if self.done else self.day_stream.items[self._cursor]

    @property
    def current_similarity(self) -> float:
        """si_m of the text awaiting a decision (0.0 after terminal)."""
        return self._current_si

    def kept_embeddings(self) -> np.ndarray:
        return self._kept[:self._kept_count].copy()

    # ------------------------------------------------------------------- api

    def reset(self) -> np.ndarray | None:
        """Start the episode; returns the first observation, or None when the
        day stream is empty (immediately terminal)."""
        self._cursor = 0
        self._kept_count = 0
        self._kept_ids: list[str] = []
        self._steps_emitted = 0
        if not self.day_stream.items:
            self._current_obs = None
            self._current_si = 0.0
            return None
        self._current_obs, self._current_si = self._build_observation()
        return self._current_obs

    def max_similarity(self, embedding: np.ndarray) -> float:
        """Max cosine between an embedding and the kept set (0.0 when empty
        or when the embedding has zero norm, counted as a warning)."""
        emb = np.asarray(embedding, dtype=np.float32)
        sim = max_cosine(emb, self._kept, self._kept_norms, self._kept_count)
        # Zero-norm queries come back as exactly 0.0; only then pay for the
        # norm to tell them apart from a genuine zero cosine.
        if self._kept_count and sim == 0.0 and not emb.any():
            self.zero_norm_warnings += 1
        return sim

    def step(self, action: Action | int) -> StepOutcome:
        if self.done:
            raise EpisodeDone("step() called on a terminated episode")
        text = self.day_stream.items[self._cursor]
        si_m = self._current_si
        forced = self.budget_exhausted
        effective = Action.DISCARD if forced else Action(int(action))
        reward = reward_value(text.sc, effective, si_m, self.q_count, self.penalty)
        if effective == Action.KEEP:
            emb = text.embedding
            self._kept[self._kept_count] = emb
            self._kept_norms[self._kept_count] = float(
                np.linalg.norm(emb.astype(np.float64)))
            self._kept_count += 1
            self._kept_ids.append(text.text_id)
        self._cursor += 1
        self._steps_emitted += 1
        if self.done:
            self._current_obs, self._current_si = None, 0.0
        else:
            self._current_obs, self._current_si = self._build_observation()
        info = StepInfo(text_id=text.text_id, sc=text.sc,
                        n_sc=text.sc / self.q_count, si_m=si_m, forced=forced)
        return StepOutcome(reward=reward, next_observation=self._current_obs, info=info)

    # ------------------------------------------------------------- internals

    def _build_observation(self) -> tuple[np.ndarray, float]:
        text = self.day_stream.items[self._cursor]
        si_m = self.max_similarity(text.embedding)
        obs = np.empty(OBS_DIM, dtype=np.float32)
        obs[:EMBEDDING_DIM] = text.embedding
        obs[BUDGET_INDEX] = (self.budget_max - self._kept_count) / self.budget_max
        obs[SIM_INDEX] = si_m
        return obs, si_m
