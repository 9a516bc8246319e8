"""Reward functions for the fight, escape, commander, and single-policy
baselines, plus the favorable-situation predicate and option termination.

Event-driven terms are computed from the SimEvents of one env step; the
kill reward uses the geometry snapshot embedded in kill events (the victim's
antenna train angle toward the shooter at the instant of destruction).
"""

from __future__ import annotations

import math

from .config import ScenarioConfig
from .geometry import ata, distance
from .simcore import (
    CannonKill,
    OutOfBounds,
    RocketKill,
    SimEvent,
    World,
)

DESTROYED_PENALTY = -2.0  # R_d
FRIENDLY_KILL_PENALTY = -2.0  # R_fr
BOUNDARY_PENALTY = -5.0  # R_b
FRIENDLY_VICTIM_PENALTY = -2.0  # R_fp (FriPun variant)

COMMANDER_KILL = 1.0
COMMANDER_DESTROYED = -1.0
COMMANDER_BOUNDARY = -2.0
ASSESS_BONUS = 0.1

PROXIMITY_STEP = 0.1  # per-time-step escape shaping magnitude

KILL_EVENTS = (CannonKill, RocketKill)


def reward_kill_term(ata_component: float, c_rem: int, c_max: int) -> float:
    """Kill reward: normalized victim-toward-shooter antenna train angle plus
    the fraction of ammunition already expended."""
    if not 0.0 <= ata_component <= 1.0:
        raise ValueError("ata_component must be normalized to [0, 1]")
    if c_max <= 0:
        return ata_component
    if c_rem > c_max:
        raise ValueError("remaining ammunition exceeds allocation")
    return ata_component + (c_max - c_rem) / c_max


def _kill_reward(world: World, event: CannonKill | RocketKill) -> float:
    shooter = world.get(event.shooter)
    c_max = shooter.initial_cannon + shooter.initial_rockets
    c_rem = event.shooter_cannon_left + event.shooter_rockets_left
    return reward_kill_term(event.victim_ata_deg / 180.0, c_rem, c_max)


def _team(world: World, aircraft_id: int) -> str:
    return world.get(aircraft_id).team


def fight_base_reward(world: World, events: list[SimEvent], agent_id: int,
                      fripun: bool = False) -> float:
    """Per-step fight reward for one agent from this step's events."""
    team = _team(world, agent_id)
    total = 0.0
    for event in events:
        if isinstance(event, KILL_EVENTS):
            shooter_team = _team(world, event.shooter)
            victim_team = _team(world, event.victim)
            if event.shooter == agent_id:
                if victim_team != team:
                    total += _kill_reward(world, event)
                else:
                    total += FRIENDLY_KILL_PENALTY
            elif event.victim == agent_id:
                if shooter_team != team:
                    total += DESTROYED_PENALTY
                elif fripun:
                    total += FRIENDLY_VICTIM_PENALTY
        elif isinstance(event, OutOfBounds) and event.aircraft == agent_id:
            total += BOUNDARY_PENALTY
    return total


def reward_fight(world: World, events: list[SimEvent], agent_id: int,
                 variant: str = "base", rho: float = 0.5) -> float:
    """Fight reward under the base, friendly-punishment, or shared-fraction
    scheme. Shared fraction adds ``rho`` times the teammates' base rewards."""
    if variant == "base":
        return fight_base_reward(world, events, agent_id)
    if variant == "fripun":
        return fight_base_reward(world, events, agent_id, fripun=True)
    if variant == "shfrac":
        team = _team(world, agent_id)
        own = fight_base_reward(world, events, agent_id)
        others = sum(
            fight_base_reward(world, events, a.id)
            for a in world.aircraft
            if a.team == team and a.id != agent_id
        )
        return own + rho * others
    raise ValueError(f"unknown fight reward variant {variant!r}")


def _closest_opponent_distance(world: World, agent_id: int) -> float:
    agent = world.get(agent_id)
    foes = [a for a in world.aircraft if a.alive and a.team != agent.team]
    if not foes:
        return math.inf
    return min(distance(agent.pos, a.pos) for a in foes)


def escape_base_reward(world: World, events: list[SimEvent], agent_id: int) -> float:
    """Non-positive survival reward: only penalties apply."""
    team = _team(world, agent_id)
    total = 0.0
    for event in events:
        if isinstance(event, KILL_EVENTS):
            if event.victim == agent_id and _team(world, event.shooter) != team:
                total += DESTROYED_PENALTY
            elif event.shooter == agent_id and _team(world, event.victim) == team:
                total += FRIENDLY_KILL_PENALTY
        elif isinstance(event, OutOfBounds) and event.aircraft == agent_id:
            total += BOUNDARY_PENALTY
    return total


def reward_escape(world: World, events: list[SimEvent], agent_id: int,
                  variant: str = "base",
                  scenario: ScenarioConfig | None = None) -> float:
    """Escape reward: base penalties, optionally plus per-step distance (or
    distance-and-speed) shaping evaluated on the post-step world."""
    cfg = scenario or ScenarioConfig()
    total = escape_base_reward(world, events, agent_id)
    if variant == "base":
        return total
    agent = world.get(agent_id)
    if not agent.alive:
        return total
    d = _closest_opponent_distance(world, agent_id)
    if variant == "dist":
        if d < cfg.near_distance:
            total -= PROXIMITY_STEP
        elif d > cfg.far_distance:
            total += PROXIMITY_STEP
        return total
    if variant == "dist_speed":
        if d < cfg.near_distance and agent.speed < cfg.slow_speed:
            total -= PROXIMITY_STEP
        elif d > cfg.far_distance and agent.speed > cfg.fast_speed:
            total += PROXIMITY_STEP
        return total
    raise ValueError(f"unknown escape reward variant {variant!r}")


def reward_standard(world: World, events: list[SimEvent], agent_id: int,
                    scenario: ScenarioConfig | None = None) -> float:
    """Single-policy baseline reward: fight terms plus the distance bonus
    only (no proximity penalty)."""
    cfg = scenario or ScenarioConfig()
    total = fight_base_reward(world, events, agent_id)
    agent = world.get(agent_id)
    if agent.alive and _closest_opponent_distance(world, agent_id) > cfg.far_distance:
        total += PROXIMITY_STEP
    return total


def favorable_situation(world: World, a_id: int, b_id: int,
                        scenario: ScenarioConfig | None = None) -> bool:
    """True when `a` is close enough to `b` and roughly pointing at it: the
    attack-opportunity predicate."""
    cfg = scenario or ScenarioConfig()
    a = world.get(a_id)
    b = world.get(b_id)
    if not (a.alive and b.alive):
        return False
    if distance(a.pos, b.pos) >= cfg.favorable_distance:
        return False
    return ata(a.pos, a.heading, b.pos) < cfg.favorable_ata


def assess_commander_action(world: World, agent_id: int, a_c: int,
                            sensed_opponents: list[int],
                            scenario: ScenarioConfig | None = None) -> float:
    """Action-assessment reward for one commander decision, evaluated at
    decision time against the agent's sensed opponent list (nearest first).

    a_c = 0 selects escape; a_c = i selects attack on sensed opponent i.
    """
    cfg = scenario or ScenarioConfig()
    agent = world.get(agent_id)
    if a_c > 0:
        idx = a_c - 1
        if idx >= len(sensed_opponents) or not world.get(sensed_opponents[idx]).alive:
            return -ASSESS_BONUS  # selected an inactive opponent index
        if favorable_situation(world, agent_id, sensed_opponents[idx], cfg):
            return ASSESS_BONUS
        return 0.0
    # escape chosen: justified when some nearby opponent points at the agent
    # while the agent already points away
    for opp_id in sensed_opponents:
        opp = world.get(opp_id)
        if not opp.alive:
            continue
        if distance(agent.pos, opp.pos) >= cfg.favorable_distance:
            continue
        if (ata(opp.pos, opp.heading, agent.pos) < cfg.favorable_ata
                and ata(agent.pos, agent.heading, opp.pos) > cfg.escape_away_ata):
            return ASSESS_BONUS
    return 0.0


def commander_event_reward(world: World, events: list[SimEvent], agent_id: int) -> float:
    """Combat outcome terms credited to the commander for one env step of an
    option: +1 per opponent killed by the agent, -1 when the agent is shot
    down, -2 when it leaves the map. Friendly-kill punishment is omitted."""
    team = _team(world, agent_id)
    total = 0.0
    for event in events:
        if isinstance(event, KILL_EVENTS):
            if event.shooter == agent_id and _team(world, event.victim) != team:
                total += COMMANDER_KILL
            elif event.victim == agent_id:
                total += COMMANDER_DESTROYED
        elif isinstance(event, OutOfBounds) and event.aircraft == agent_id:
            total += COMMANDER_BOUNDARY
    return total


def reward_commander(world: World, agent_id: int, a_c: int,
                     sensed_opponents: list[int],
                     option_events: list[SimEvent],
                     scenario: ScenarioConfig | None = None,
                     assess: bool = True) -> float:
    """Total commander reward for one option: the decision assessment plus
    the event terms accumulated over the option's lifetime."""
    total = commander_event_reward(world, option_events, agent_id)
    if assess:
        total += assess_commander_action(world, agent_id, a_c, sensed_opponents, scenario)
    return total


def _near_boundary(world: World, agent_id: int, margin: float) -> bool:
    a = world.get(agent_id)
    return min(a.pos.x, a.pos.y,
               world.map_size - a.pos.x, world.map_size - a.pos.y) < margin


def option_terminated(world: World, agent_id: int, steps_in_option: int,
                      step_events: list[SimEvent],
                      scenario: ScenarioConfig | None = None) -> bool:
    """Commander re-invocation test: the option horizon elapsed, any aircraft
    was destroyed this step, the agent nears the map boundary, or any
    agent/opponent pair reached a favorable situation."""
    cfg = scenario or ScenarioConfig()
    if steps_in_option >= cfg.option_horizon:
        return True
    for event in step_events:
        if isinstance(event, KILL_EVENTS + (OutOfBounds,)):
            return True
    agent = world.get(agent_id)
    if agent.alive and _near_boundary(world, agent_id, cfg.boundary_margin):
        return True
    for a in world.alive("agent"):
        for o in world.alive("opponent"):
            if (favorable_situation(world, a.id, o.id, cfg)
                    or favorable_situation(world, o.id, a.id, cfg)):
                return True
    return False
