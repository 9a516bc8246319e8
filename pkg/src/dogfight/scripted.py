"""Rule-based opponent controllers for the first three curriculum levels.

L1 holds position (minimum-speed flight; the motion model has no hover).
L2 acts uniformly at random with occasional trigger pulls. L3 pursues the
closest agent: it turns the short way toward the target by a randomized
fraction of the antenna train angle, slows down as it closes in, fires more
eagerly the better it is aligned, and occasionally breaks away in a fleeing
dash. All constants live in ScriptConfig.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScriptConfig
from .env import LowLevelAction, SPEED_BINS, heading_delta_to_bin, speed_to_bin
from .geometry import ata, bearing_to, clockwise_sign_to, distance, signed_heading_delta
from .observations import closest_opponents
from .simcore import AircraftState, World


def l1_policy(world: World, opp_id: int) -> LowLevelAction:
    """Static target: no turn, minimum speed, no firing."""
    if not world.get(opp_id).alive:
        raise ValueError(f"aircraft {opp_id} is destroyed")
    return LowLevelAction(h=0, v=0, c=0, r=0)


def l2_policy(world: World, opp_id: int, rng: np.random.Generator,
              script: ScriptConfig | None = None) -> LowLevelAction:
    """Random maneuvers and firing."""
    if not world.get(opp_id).alive:
        raise ValueError(f"aircraft {opp_id} is destroyed")
    cfg = script or ScriptConfig()
    return LowLevelAction(
        h=int(rng.integers(-6, 7)),
        v=int(rng.integers(0, SPEED_BINS + 1)),
        c=int(rng.random() < cfg.l2_fire_prob),
        r=int(rng.random() < cfg.l2_fire_prob),
    )


def _pursuit_speed_bin(aircraft: AircraftState, target_distance: float,
                       cfg: ScriptConfig) -> int:
    """Full speed far out, slowing linearly to a fraction of max up close."""
    span = cfg.full_speed_distance - cfg.close_distance
    frac_along = np.clip((target_distance - cfg.close_distance) / span, 0.0, 1.0)
    speed_frac = cfg.min_speed_fraction + (1.0 - cfg.min_speed_fraction) * frac_along
    return speed_to_bin(aircraft.spec, speed_frac * aircraft.spec.max_speed)


def l3_policy(world: World, opp_id: int, rng: np.random.Generator,
              script: ScriptConfig | None = None,
              flee_state: dict[int, int] | None = None,
              r_override: float | None = None) -> tuple[LowLevelAction, int | None]:
    """Pursuit controller: returns the action and the pursued target id.

    `flee_state` maps opponent id -> remaining flee decisions and is mutated
    here; `r_override` pins the turn-fraction randomness (used by tests).
    """
    opponent = world.get(opp_id)
    if not opponent.alive:
        raise ValueError(f"aircraft {opp_id} is destroyed")
    cfg = script or ScriptConfig()
    targets = closest_opponents(world, opponent, 1)
    if not targets:
        return LowLevelAction(h=0, v=0, c=0, r=0), None
    target = targets[0]

    if flee_state is not None:
        if flee_state.get(opp_id, 0) > 0:
            flee_state[opp_id] -= 1
            return _flee_action(opponent, target), target.id
        if cfg.flee_probability > 0 and rng.random() < cfg.flee_probability:
            flee_state[opp_id] = cfg.flee_duration - 1
            return _flee_action(opponent, target), target.id

    train_angle = ata(opponent.pos, opponent.heading, target.pos)
    sign = clockwise_sign_to(opponent.pos, opponent.heading, target.pos)
    r = rng.random() if r_override is None else r_override
    h = heading_delta_to_bin(sign * r * train_angle)

    gap = distance(opponent.pos, target.pos)
    v = _pursuit_speed_bin(opponent, gap, cfg)

    if cfg.fire_ata_scale > 0:
        fire_prob = max(0.0, 1.0 - train_angle / cfg.fire_ata_scale)
    else:
        fire_prob = 0.0
    c = int(fire_prob > 0 and rng.random() < fire_prob)
    r_fire = int(opponent.spec.has_rockets and fire_prob > 0
                 and rng.random() < fire_prob)
    return LowLevelAction(h=h, v=v, c=c, r=r_fire), target.id


def _flee_action(opponent: AircraftState, target: AircraftState) -> LowLevelAction:
    away = bearing_to(target.pos, opponent.pos)  # direction putting target astern
    delta = signed_heading_delta(opponent.heading, away)
    return LowLevelAction(h=heading_delta_to_bin(delta), v=SPEED_BINS, c=0, r=0)


@dataclass
class ScriptedController:
    """Per-environment opponent controller with its own RNG stream and
    per-aircraft flee bookkeeping."""

    level: str
    rng: np.random.Generator
    script: ScriptConfig = field(default_factory=ScriptConfig)
    flee_state: dict[int, int] = field(default_factory=dict)

    def __call__(self, world: World, opponent_id: int) -> tuple[LowLevelAction, int | None]:
        if self.level == "L1":
            return l1_policy(world, opponent_id), None
        if self.level == "L2":
            action = l2_policy(world, opponent_id, self.rng, self.script)
            targets = closest_opponents(world, world.get(opponent_id), 1)
            return action, targets[0].id if targets else None
        if self.level == "L3":
            return l3_policy(world, opponent_id, self.rng, self.script,
                             self.flee_state)
        raise ValueError(f"no scripted behavior for level {self.level!r}")

    def reset(self):
        self.flee_state.clear()
