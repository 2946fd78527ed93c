"""DQN training loop: epsilon-greedy exploration, uniform replay, target
network, leave-one-event-out cross-validation, per-episode diagnostics.

Determinism contract: identical (seed, config, corpus) reproduce the exact
same training trajectory and report. All randomness flows from four streams
spawned off the config seed (net init, action exploration, replay sampling,
episode shuffling); the environment itself is deterministic.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .config import TrainConfig, config_hash
from .corpus import Corpus
from .environment import Action, StreamEnv
from .qnetwork import AdamState, QNetwork, save_checkpoint


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; carries a diagnostic dump."""

    def __init__(self, message, dump: dict):
        super().__init__(message)
        self.dump = dump


@dataclass
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.05
    decay_steps: int = 500_000

    def value(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + (self.end - self.start) * frac


class ReplayBuffer:
    """FIFO ring of transitions; batches are sampled uniformly without
    replacement. Event ids ride along for fold-isolation diagnostics."""

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.bool_)
        self.event_ids: list[str | None] = [None] * capacity
        self.size = 0
        self.pos = 0
        self.inserted = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, done, event_id=None) -> None:
        i = self.pos
        self.obs[i] = obs
        self.actions[i] = int(action)
        self.rewards[i] = reward
        if next_obs is None:
            self.next_obs[i] = 0.0
        else:
            self.next_obs[i] = next_obs
        self.done[i] = done
        self.event_ids[i] = event_id
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > self.size:
            raise ValueError("not enough transitions to sample")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return (self.obs[idx], self.actions[idx], self.rewards[idx],
                self.next_obs[idx], self.done[idx], idx)


def take_rate(actions, forced) -> float | None:
    """Fraction of non-forced decisions that were keeps; None when the
    episode had no free decision."""
    free = [a for a, f in zip(actions, forced) if not f]
    if not free:
        return None
    return sum(1 for a in free if int(a) == int(Action.KEEP)) / len(free)


@dataclass
class EpisodeStats:
    index: int
    event_id: str
    day: str
    steps: int
    forced_steps: int
    episode_return: float
    take_rate: float | None
    sc0_take_rate: float | None
    scpos_take_rate: float | None
    scpos_nondup_take_rate: float | None
    mean_loss: float | None
    epsilon: float
    global_step: int


@dataclass
class TrainReport:
    episodes: list[EpisodeStats] = field(default_factory=list)
    wall_clock_s: float = 0.0
    total_steps: int = 0
    updates: int = 0
    checkpoint_path: str | None = None
    backend: str = _kernels.BACKEND_NAME
    config_hash: str = ""
    skipped_empty_days: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "episode", "event_id", "day", "return", "take_rate",
                        "sc0_take_rate", "scpos_take_rate", "scpos_nondup_take_rate",
                        "loss", "epsilon", "steps", "forced_steps"])
            for e in self.episodes:
                w.writerow([e.global_step, e.index, e.event_id, e.day,
                            repr(e.episode_return),
                            "" if e.take_rate is None else repr(e.take_rate),
                            "" if e.sc0_take_rate is None else repr(e.sc0_take_rate),
                            "" if e.scpos_take_rate is None else repr(e.scpos_take_rate),
                            "" if e.scpos_nondup_take_rate is None
                            else repr(e.scpos_nondup_take_rate),
                            "" if e.mean_loss is None else repr(e.mean_loss),
                            repr(e.epsilon), e.steps, e.forced_steps])

    def summary(self, last_n: int = 50) -> dict:
        tail = self.episodes[-last_n:]

        def mean_of(vals):
            vals = [v for v in vals if v is not None]
            return float(np.mean(vals)) if vals else None

        return {
            "episodes": len(self.episodes),
            "total_steps": self.total_steps,
            "updates": self.updates,
            "backend": self.backend,
            "config_hash": self.config_hash,
            "skipped_empty_days": self.skipped_empty_days,
            "last_episodes": len(tail),
            "mean_return": mean_of([e.episode_return for e in tail]),
            "mean_take_rate": mean_of([e.take_rate for e in tail]),
            "mean_sc0_take_rate": mean_of([e.sc0_take_rate for e in tail]),
            "mean_scpos_take_rate": mean_of([e.scpos_take_rate for e in tail]),
            "mean_scpos_nondup_take_rate": mean_of(
                [e.scpos_nondup_take_rate for e in tail]),
            "mean_loss": mean_of([e.mean_loss for e in tail]),
        }


def _rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    init_ss, act_ss, replay_ss, shuffle_ss = ss.spawn(4)
    return (int(init_ss.generate_state(1)[0]),
            np.random.default_rng(act_ss),
            np.random.default_rng(replay_ss),
            np.random.default_rng(shuffle_ss))


def train(corpus: Corpus, config: TrainConfig, duplicate_ids: set[str] | None = None,
          checkpoint_path=None, log_every: int | None = None) -> tuple[QNetwork, TrainReport]:
    """Run DQN training over the corpus' training events.

    duplicate_ids (optional, from a generator truth sidecar) refines the
    per-episode diagnostics; it never influences learning.
    """
    config.validate()
    holdout = set(config.holdout_events)
    train_events = [eid for eid in sorted(corpus.events) if eid not in holdout]
    if not train_events:
        raise ValueError("training fold is empty")
    day_keys = [key for key in sorted(corpus.day_streams) if key[0] in set(train_events)]
    if not day_keys:
        raise ValueError("no day streams in the training fold")
    duplicate_ids = duplicate_ids or set()

    init_seed, act_rng, replay_rng, shuffle_rng = _rngs(config.seed)
    net = QNetwork.create(hidden=tuple(config.hidden), seed=init_seed,
                          loss=config.loss, huber_delta=config.huber_delta)
    target = net.copy()
    adam = AdamState.for_net(net, lr=config.lr, weight_decay=config.weight_decay)
    buffer = ReplayBuffer(config.replay_capacity, net.obs_dim)
    schedule = EpsilonSchedule(config.epsilon_start, config.epsilon_end,
                               config.epsilon_decay_steps)
    min_fill = max(config.min_replay, config.batch_size)

    report = TrainReport(config_hash=config_hash(config))
    started = time.perf_counter()
    step = 0
    episode_index = 0
    done_training = False
    while not done_training:
        order = shuffle_rng.permutation(len(day_keys))
        for key_idx in order:
            if step >= config.total_steps:
                done_training = True
                break
            event_id, day = day_keys[key_idx]
            ds = corpus.day_streams[(event_id, day)]
            env = StreamEnv(ds, q_count=corpus.events[event_id].query_count,
                            budget_max=config.budget_max, penalty=config.penalty)
            obs = env.reset()
            if obs is None:
                report.skipped_empty_days += 1
                continue
            ep_return = 0.0
            ep_actions: list[int] = []
            ep_forced: list[bool] = []
            ep_losses: list[float] = []
            ep_sc0: list[int] = []
            ep_scpos: list[int] = []
            ep_scpos_nondup: list[int] = []
            while not env.done and step < config.total_steps:
                epsilon = schedule.value(step)
                if act_rng.random() < epsilon:
                    action = int(act_rng.integers(2))
                else:
                    action, _ = net.act(obs)
                out = env.step(action)
                info = out.info
                effective = Action.DISCARD if info.forced else Action(action)
                ep_return += out.reward
                ep_actions.append(int(effective))
                ep_forced.append(info.forced)
                if not info.forced:
                    taken = 1 if effective == Action.KEEP else 0
                    if info.sc == 0:
                        ep_sc0.append(taken)
                    else:
                        ep_scpos.append(taken)
                        if info.text_id not in duplicate_ids:
                            ep_scpos_nondup.append(taken)
                if config.include_forced_in_replay or not info.forced:
                    buffer.push(obs, effective, out.reward, out.next_observation,
                                out.terminal, event_id)
                obs = out.next_observation
                step += 1
                if len(buffer) >= min_fill and step % config.train_every == 0:
                    b_obs, b_act, b_rew, b_next, b_done, _ = buffer.sample(
                        config.batch_size, replay_rng)
                    q_next = target.forward(b_next)
                    targets = b_rew.astype(np.float64) + config.gamma * np.where(
                        b_done, 0.0, q_next.max(axis=1).astype(np.float64))
                    loss, grads = net.loss_and_grads(b_obs, b_act, targets)
                    if not np.isfinite(loss):
                        raise TrainingDiverged(
                            f"non-finite loss at step {step}",
                            dump={"step": step, "episode": episode_index,
                                  "event_id": event_id, "day": day,
                                  "epsilon": epsilon, "loss": loss})
                    adam.step(net, grads)
                    report.updates += 1
                    ep_losses.append(loss)
                if step % config.target_sync_interval == 0:
                    target.load_params_from(net)
            report.episodes.append(EpisodeStats(
                index=episode_index, event_id=event_id, day=day,
                steps=len(ep_actions), forced_steps=sum(ep_forced),
                episode_return=ep_return,
                take_rate=take_rate(ep_actions, ep_forced),
                sc0_take_rate=(sum(ep_sc0) / len(ep_sc0)) if ep_sc0 else None,
                scpos_take_rate=(sum(ep_scpos) / len(ep_scpos)) if ep_scpos else None,
                scpos_nondup_take_rate=(sum(ep_scpos_nondup) / len(ep_scpos_nondup))
                if ep_scpos_nondup else None,
                mean_loss=float(np.mean(ep_losses)) if ep_losses else None,
                epsilon=schedule.value(step - 1),
                global_step=step))
            episode_index += 1
            if log_every and episode_index % log_every == 0:
                s = report.episodes[-1]
                print(f"episode {s.index} step {s.global_step} "
                      f"return {s.episode_return:.2f} take {s.take_rate}")
        if not report.episodes and not done_training and report.skipped_empty_days:
            raise ValueError("all training day streams are empty")
    report.wall_clock_s = time.perf_counter() - started
    report.total_steps = step
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, net, adam=adam, training_step=step,
                        meta={"config_hash": report.config_hash,
                              "backend": report.backend})
        report.checkpoint_path = str(checkpoint_path)
    return net, report


@dataclass
class FoldResult:
    holdout_event: str
    train_summary: dict
    selection: dict
    kept_per_day: dict[str, int]


def crossval(corpus: Corpus, config: TrainConfig,
             duplicate_ids: set[str] | None = None) -> dict:
    """Leave-one-event-out cross-validation (one fold per event)."""
    from .selector import select_day  # local import, avoids a cycle

    event_ids = sorted(corpus.events)
    if len(event_ids) < 2:
        raise ValueError("cross-validation requires at least two events")
    folds: list[FoldResult] = []
    for i, held in enumerate(event_ids):
        fold_cfg = replace(config, holdout_events=[held], seed=config.seed + i)
        net, rep = train(corpus, fold_cfg, duplicate_ids=duplicate_ids)
        kept_per_day = {}
        sel_stats = {"decisions": 0, "kept": 0, "kept_sc_positive": 0}
        for day in corpus.events[held].day_ids:
            ds = corpus.day_streams[(held, day)]
            res = select_day(net, ds, budget_max=config.budget_max)
            kept_per_day[day] = len(res.kept)
            sel_stats["decisions"] += res.decisions_total
            sel_stats["kept"] += len(res.kept)
            sc_by_id = {t.text_id: t.sc for t in ds.items}
            sel_stats["kept_sc_positive"] += sum(
                1 for k in res.kept if sc_by_id[k.text_id] > 0)
        folds.append(FoldResult(holdout_event=held, train_summary=rep.summary(),
                                selection=sel_stats, kept_per_day=kept_per_day))
    kept_means = [np.mean(list(f.kept_per_day.values())) for f in folds]
    return {
        "folds": [
            {"holdout_event": f.holdout_event, "train": f.train_summary,
             "selection": f.selection, "kept_per_day": f.kept_per_day}
            for f in folds
        ],
        "mean_kept_per_day": float(np.mean(kept_means)),
    }
