"""Progressive task-transition schedule over training stages.

Two phases:

* ``stage2-ramp``: the probability of drawing new-stage (stage-2)
  samples rises linearly from 0 to ``target_new`` over ``ramp_steps``
  steps and then holds; stage-1 takes the remainder.
* ``stage3-steady``: a fixed three-way mix retaining earlier stages,
  default (0.2, 0.2, 0.6) over stages 1/2/3.

Stage ids are 1-based.  Draws are categorical over the step's
probability vector, deterministic per seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STAGE2_RAMP = "stage2-ramp"
STAGE3_STEADY = "stage3-steady"


@dataclass(frozen=True)
class MixSchedule:
    phase: str = STAGE2_RAMP
    ramp_steps: int = 1000
    target_new: float = 0.8
    stage3_mix: tuple[float, float, float] = (0.2, 0.2, 0.6)

    def __post_init__(self):
        if self.phase not in (STAGE2_RAMP, STAGE3_STEADY):
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.ramp_steps < 1:
            raise ValueError("ramp_steps must be >= 1")
        if not 0.0 < self.target_new <= 1.0:
            raise ValueError("target_new must lie in (0, 1]")
        if abs(sum(self.stage3_mix) - 1.0) > 1e-12 or min(self.stage3_mix) < 0:
            raise ValueError("stage3_mix must be a probability vector")

    @property
    def retained_old(self) -> float:
        return 1.0 - self.target_new


def mix_probabilities(step: int, schedule: MixSchedule) -> np.ndarray:
    """Stage sampling probabilities at a training step.

    Ramp phase: p_stage2 = min(step/ramp_steps, 1) * target_new and
    p_stage1 = 1 - p_stage2 (two entries).  Steady stage-3 phase:
    the fixed three-way mix.
    """
    if step < 0:
        raise ValueError("step must be >= 0")
    if schedule.phase == STAGE3_STEADY:
        return np.asarray(schedule.stage3_mix, dtype=np.float64)
    p2 = min(step / schedule.ramp_steps, 1.0) * schedule.target_new
    return np.array([1.0 - p2, p2], dtype=np.float64)


def sample_stage(step: int, schedule: MixSchedule, rng: np.random.Generator) -> int:
    """Draw a 1-based stage id from the step's mix."""
    p = mix_probabilities(step, schedule)
    return int(rng.choice(len(p), p=p)) + 1


def worker_rng(seed: int, worker_id: int = 0) -> np.random.Generator:
    """Independent per-worker stream derived from (seed, worker id)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, worker_id])))


@dataclass
class DrawLog:
    """Tally of stage draws for a seeded run."""

    seed: int
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def log_draws(steps: int, schedule: MixSchedule, seed: int, fixed_step: int | None = None) -> DrawLog:
    """Draw once per step (or ``steps`` times at ``fixed_step``) and tally."""
    rng = worker_rng(seed)
    counts: dict[int, int] = {}
    for i in range(steps):
        s = sample_stage(fixed_step if fixed_step is not None else i, schedule, rng)
        counts[s] = counts.get(s, 0) + 1
    return DrawLog(seed, counts)
