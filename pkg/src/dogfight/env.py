"""Combat environment: scenario generation, action decoding, the env-step
loop (several sim rounds per decision), reward dispatch, and outcome
classification.

One env step holds each aircraft's decoded setpoints for a fixed number of
simulation rounds (10 by default, i.e. one second). Opponent controllers are
queried once per env step. Episodes terminate when a team is wiped out or the
horizon is reached; simultaneous extinction counts as a draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .config import ScenarioConfig
from .geometry import Vec2, wrap_heading
from .observations import build_obs, closest_opponents, encode_low_action
from .rewards import reward_escape, reward_fight, reward_standard
from .simcore import (
    AC1,
    AC2,
    AircraftState,
    RocketLaunch,
    SimConfig,
    SimEvent,
    TEAM_AGENT,
    TEAM_OPPONENT,
    World,
    make_spec,
    step_round,
)

OUTCOME_ONGOING = "ongoing"
OUTCOME_WIN = "win"
OUTCOME_LOSS = "loss"
OUTCOME_DRAW = "draw"

HEADING_STEP_DEG = 15.0
SPEED_BINS = 8


@dataclass(frozen=True)
class LowLevelAction:
    """One discrete control decision: relative heading bin h in {-6..6},
    speed bin v in {0..8}, cannon trigger c, rocket trigger r."""

    h: int
    v: int
    c: int = 0
    r: int = 0

    def __post_init__(self):
        if not -6 <= self.h <= 6:
            raise ValueError(f"h out of range: {self.h}")
        if not 0 <= self.v <= SPEED_BINS:
            raise ValueError(f"v out of range: {self.v}")
        if self.c not in (0, 1) or self.r not in (0, 1):
            raise ValueError("c and r must be 0 or 1")

    @classmethod
    def from_heads(cls, samples) -> "LowLevelAction":
        """Decode per-head categorical samples (h-index, v, c, r)."""
        return cls(h=int(samples[0]) - 6, v=int(samples[1]),
                   c=int(samples[2]), r=int(samples[3]))

    def to_heads(self) -> tuple[int, int, int, int]:
        return (self.h + 6, self.v, self.c, self.r)


@dataclass(frozen=True)
class CommanderAction:
    """Option choice: 0 activates escape, i >= 1 attacks sensed opponent i."""

    a_c: int
    n_options: int = 3  # 3 with two sensed opponents, 4 with three

    def __post_init__(self):
        if not 0 <= self.a_c < self.n_options:
            raise ValueError(f"a_c {self.a_c} outside {self.n_options} options")


@dataclass
class StepResult:
    rewards: dict[int, float]
    done: dict[int, bool]
    outcome: str
    events: list[SimEvent]
    obs: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def terminal(self) -> bool:
        return self.outcome != OUTCOME_ONGOING


class OpponentController(Protocol):
    def __call__(self, world: World, opponent_id: int) -> tuple[LowLevelAction, int | None]:
        """Return the opponent's action and an optional rocket-target id."""
        ...


def decode_speed(spec, v: int) -> float:
    """Linear speed mapping: bin 0 is the type minimum, bin 8 the maximum."""
    return spec.min_speed + (spec.max_speed - spec.min_speed) * v / SPEED_BINS


def speed_to_bin(spec, speed: float) -> int:
    frac = (speed - spec.min_speed) / (spec.max_speed - spec.min_speed)
    return int(np.clip(round(frac * SPEED_BINS), 0, SPEED_BINS))


def heading_delta_to_bin(delta_deg: float) -> int:
    """Nearest action bin for a desired relative heading change, clamped to
    the +/-90 degree command envelope."""
    clamped = float(np.clip(delta_deg, -90.0, 90.0))
    return int(np.clip(round(clamped / HEADING_STEP_DEG), -6, 6))


def apply_action(world: World, agent_id: int, action: LowLevelAction,
                 target_id: int | None = None) -> RocketLaunch | None:
    """Decode an action into simulator setpoints. The rocket trigger aims at
    `target_id` when given, else the closest living opponent; inert triggers
    (no rockets, not ready) are ignored."""
    aircraft = world.get(agent_id)
    if not aircraft.alive:
        raise ValueError(f"cannot act for destroyed aircraft {agent_id}")
    aircraft.target_heading = wrap_heading(aircraft.heading + HEADING_STEP_DEG * action.h)
    aircraft.speed = decode_speed(aircraft.spec, action.v)
    aircraft.cannon_firing = bool(action.c)
    if action.r and aircraft.spec.has_rockets:
        if target_id is None or not world.get(target_id).alive:
            nearest = closest_opponents(world, aircraft, 1)
            target_id = nearest[0].id if nearest else None
        if target_id is not None:
            from .simcore import fire_rocket

            return fire_rocket(world, agent_id, target_id)
    return None


def _sample_team_types(rng: np.random.Generator, size: int) -> list[str]:
    """Aircraft types for one team: both types present whenever size >= 2,
    a uniform single pick otherwise."""
    if size == 1:
        return [AC1 if rng.random() < 0.5 else AC2]
    types = [AC1, AC2]
    types += [AC1 if rng.random() < 0.5 else AC2 for _ in range(size - 2)]
    perm = rng.permutation(size)
    return [types[i] for i in perm]


def generate_world(scenario: ScenarioConfig, rng: np.random.Generator,
                   sim_cfg: SimConfig | None = None,
                   agent_types: list[str] | None = None,
                   opponent_types: list[str] | None = None) -> World:
    """Spawn both teams in randomly-chosen opposite halves of the map with
    random positions, headings, and speeds.

    Fixed type lists override the random per-episode sampling (needed when
    per-agent networks tie an agent id to one airframe)."""
    agents_left = rng.random() < 0.5
    margin = scenario.spawn_margin
    half = scenario.map_size / 2.0
    fixed = {TEAM_AGENT: agent_types, TEAM_OPPONENT: opponent_types}

    def spawn(team: str, count: int, left: bool, cannon: int, rockets: int,
              start_id: int) -> list[AircraftState]:
        lo_x, hi_x = (margin, half) if left else (half, scenario.map_size - margin)
        types = fixed[team] or _sample_team_types(rng, count)
        crafts = []
        for i in range(count):
            spec = make_spec(types[i])
            heading = rng.uniform(0.0, 360.0)
            crafts.append(AircraftState(
                id=start_id + i, team=team, spec=spec,
                pos=Vec2(rng.uniform(lo_x, hi_x),
                         rng.uniform(margin, scenario.map_size - margin)),
                heading=heading, target_heading=heading,
                speed=rng.uniform(spec.min_speed, spec.max_speed),
                cannon_ammo=cannon,
                rockets=rockets if spec.has_rockets else 0,
            ))
        return crafts

    aircraft = spawn(TEAM_AGENT, scenario.n_agents, agents_left,
                     scenario.agent_cannon, scenario.agent_rockets, 0)
    aircraft += spawn(TEAM_OPPONENT, scenario.n_opponents, not agents_left,
                      scenario.opponent_cannon, scenario.opponent_rockets,
                      scenario.n_agents)
    return World(aircraft=aircraft, map_size=scenario.map_size, rng=rng,
                 cfg=sim_cfg or SimConfig())


def classify_outcome(world: World, step_count: int, horizon: int) -> str:
    agents_alive = bool(world.alive(TEAM_AGENT))
    opponents_alive = bool(world.alive(TEAM_OPPONENT))
    if not agents_alive and not opponents_alive:
        return OUTCOME_DRAW
    if not opponents_alive:
        return OUTCOME_WIN
    if not agents_alive:
        return OUTCOME_LOSS
    if step_count >= horizon:
        return OUTCOME_DRAW
    return OUTCOME_ONGOING


class CombatEnv:
    """Decision-step environment over the round-level simulator.

    `reward_kind` selects the active reward function: ("fight", variant),
    ("escape", variant), ("standard", None), or ("none", None) when an outer
    loop (the commander trainer) does its own accounting.
    """

    def __init__(self, scenario: ScenarioConfig,
                 opponent_controller: OpponentController | None = None,
                 reward_kind: tuple[str, str | None] = ("fight", "base"),
                 obs_kind: str = "fight",
                 sim_cfg: SimConfig | None = None,
                 agent_types: list[str] | None = None):
        self.scenario = scenario
        self.opponent_controller = opponent_controller
        self.reward_kind = reward_kind
        self.obs_kind = obs_kind
        self.sim_cfg = sim_cfg or SimConfig()
        self.agent_types = agent_types
        self.world: World | None = None
        self.step_count = 0
        self.outcome = OUTCOME_ONGOING
        self.attack_targets: dict[int, int | None] = {}
        self.prev_actions: dict[int, list[float]] = {}
        self.round_listener = None  # called (world, events) after each sim round
        self._rng = np.random.default_rng(scenario.seed)

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed: int | None = None) -> dict[int, np.ndarray]:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.world = generate_world(self.scenario, self._rng, self.sim_cfg,
                                    agent_types=self.agent_types)
        self.step_count = 0
        self.outcome = OUTCOME_ONGOING
        self.attack_targets = {}
        self.prev_actions = {}
        return self.observations()

    def agent_ids(self) -> list[int]:
        return [a.id for a in self.world.alive(TEAM_AGENT)]

    def opponent_ids(self) -> list[int]:
        return [a.id for a in self.world.alive(TEAM_OPPONENT)]

    def observe(self, agent_id: int, kind: str | None = None) -> np.ndarray:
        kind = kind or self.obs_kind
        return build_obs(kind, self.world, agent_id, self.scenario,
                         target_id=self.attack_targets.get(agent_id))

    def observations(self) -> dict[int, np.ndarray]:
        return {aid: self.observe(aid) for aid in self.agent_ids()}

    # -- stepping -----------------------------------------------------------

    def set_attack_target(self, agent_id: int, target_id: int | None):
        self.attack_targets[agent_id] = target_id

    def step(self, actions: dict[int, LowLevelAction],
             opponent_actions: dict[int, tuple[LowLevelAction, int | None]] | None = None,
             ) -> StepResult:
        """Apply one decision per living aircraft, run the round loop, and
        score the step. Opponent actions come from the configured controller
        unless supplied explicitly (hierarchical mode)."""
        if self.world is None:
            raise RuntimeError("call reset() before step()")
        if self.outcome != OUTCOME_ONGOING:
            raise RuntimeError("episode already terminal")
        world = self.world
        events: list[SimEvent] = []

        for aid in sorted(actions):
            if world.get(aid).alive:
                launch = apply_action(world, aid, actions[aid],
                                      self.attack_targets.get(aid))
                if launch is not None:
                    events.append(launch)

        for oid in self.opponent_ids():
            if opponent_actions is not None:
                picked = opponent_actions.get(oid)
            elif self.opponent_controller is not None:
                picked = self.opponent_controller(world, oid)
            else:
                picked = None
            if picked is None:
                continue
            action, rocket_target = picked
            launch = apply_action(world, oid, action, rocket_target)
            if launch is not None:
                events.append(launch)

        for _ in range(self.scenario.rounds_per_step):
            round_events = step_round(world)
            events.extend(round_events)
            if self.round_listener is not None:
                self.round_listener(world, round_events)

        self.step_count += 1
        self.outcome = classify_outcome(world, self.step_count, self.scenario.horizon)
        terminal = self.outcome != OUTCOME_ONGOING

        rewards = {aid: self._reward(events, aid) for aid in sorted(actions)}
        done = {aid: (terminal or not world.get(aid).alive) for aid in sorted(actions)}

        self.prev_actions = {
            aid: encode_low_action(act) for aid, act in actions.items()
        }
        if opponent_actions:
            self.prev_actions.update(
                {oid: encode_low_action(a) for oid, (a, _) in opponent_actions.items()})

        obs = {aid: self.observe(aid) for aid in self.agent_ids()} if not terminal else {}
        return StepResult(rewards=rewards, done=done, outcome=self.outcome,
                          events=events, obs=obs)

    def _reward(self, events: list[SimEvent], agent_id: int) -> float:
        kind, variant = self.reward_kind
        if kind == "fight":
            return reward_fight(self.world, events, agent_id,
                                variant or "base", self.scenario.share_fraction)
        if kind == "escape":
            return reward_escape(self.world, events, agent_id,
                                 variant or "base", self.scenario)
        if kind == "standard":
            return reward_standard(self.world, events, agent_id, self.scenario)
        if kind == "none":
            return 0.0
        raise ValueError(f"unknown reward kind {kind!r}")
