"""Evaluation harness: win/loss/draw statistics, per-type event counters,
escape-mode outcomes, commander command statistics, and trajectory logs.

Counter semantics (fixed; the bookkeeping acceptance test replays event logs
against these rules):
  kills[T]           opponent aircraft destroyed by the fire of an agent of
                     type T (cannon or rocket),
  friendly_kills[T]  agent-team aircraft destroyed by the fire of an agent
                     of type T,
  deaths[T]          agent-team aircraft of type T destroyed by any cause,
                     boundary exits included,
  escaped episodes   no agent-team death of any cause (boundary included),
  kill episodes      at least one opponent-team death of any cause,
  killed episodes    at least one agent-team death of any cause.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .env import CombatEnv, LowLevelAction, OUTCOME_DRAW, OUTCOME_LOSS, OUTCOME_WIN
from .nn.networks import PolicyNetwork, sample_action
from .observations import build_obs_commander, closest_opponents
from .rewards import option_terminated
from .simcore import (
    CannonKill,
    OutOfBounds,
    RocketExpired,
    RocketKill,
    RocketLaunch,
    SimEvent,
    TEAM_AGENT,
    TEAM_OPPONENT,
    World,
)
from .train.policies import LowLevelActor, SnapshotController, pad_to

KILL_EVENTS = (CannonKill, RocketKill)


@dataclass
class EvalReport:
    episodes: int = 0
    wins: int = 0
    losses: int = 0
    draws: int = 0
    kills: dict = field(default_factory=lambda: {"AC1": 0, "AC2": 0})
    deaths: dict = field(default_factory=lambda: {"AC1": 0, "AC2": 0})
    friendly_kills: dict = field(default_factory=lambda: {"AC1": 0, "AC2": 0})
    escaped_episodes: int = 0
    kill_episodes: int = 0
    killed_episodes: int = 0
    fight_commands: int = 0
    escape_commands: int = 0
    opponent_selection: list = field(default_factory=lambda: [0, 0, 0])
    total_steps: int = 0
    seed: int = 0

    @property
    def win_rate(self) -> float:
        return self.wins / self.episodes if self.episodes else 0.0

    @property
    def loss_rate(self) -> float:
        return self.losses / self.episodes if self.episodes else 0.0

    @property
    def draw_rate(self) -> float:
        return self.draws / self.episodes if self.episodes else 0.0

    @property
    def mean_episode_length(self) -> float:
        return self.total_steps / self.episodes if self.episodes else 0.0

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["win_rate"] = self.win_rate
        data["loss_rate"] = self.loss_rate
        data["draw_rate"] = self.draw_rate
        data["mean_episode_length"] = self.mean_episode_length
        return data

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2,
                                         sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        data = json.loads(Path(path).read_text())
        kwargs = {f.name: data[f.name] for f in dataclasses.fields(cls)}
        return cls(**kwargs)


def count_events(world: World, events: list[SimEvent], report: EvalReport):
    """Accumulate one env step's events into the report counters."""
    for event in events:
        if isinstance(event, KILL_EVENTS):
            shooter = world.get(event.shooter)
            victim = world.get(event.victim)
            if shooter.team == TEAM_AGENT:
                if victim.team == TEAM_OPPONENT:
                    report.kills[shooter.spec.type_id] += 1
                else:
                    report.friendly_kills[shooter.spec.type_id] += 1
            if victim.team == TEAM_AGENT:
                report.deaths[victim.spec.type_id] += 1
        elif isinstance(event, OutOfBounds):
            aircraft = world.get(event.aircraft)
            if aircraft.team == TEAM_AGENT:
                report.deaths[aircraft.spec.type_id] += 1


def team_death_flags(world: World, events: list[SimEvent]) -> tuple[bool, bool]:
    """(an agent died, an opponent died) for one step's events, any cause."""
    agent_died = opponent_died = False
    for event in events:
        victim_id = None
        if isinstance(event, KILL_EVENTS):
            victim_id = event.victim
        elif isinstance(event, OutOfBounds):
            victim_id = event.aircraft
        if victim_id is None:
            continue
        if world.get(victim_id).team == TEAM_AGENT:
            agent_died = True
        else:
            opponent_died = True
    return agent_died, opponent_died


# --- evaluation-time actors --------------------------------------------------


class RandomActor:
    """Uniform random low-level actions (bookkeeping/termination tests)."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def begin_episode(self, env: CombatEnv):
        pass

    def actions(self, env: CombatEnv) -> dict[int, LowLevelAction]:
        return {
            aid: LowLevelAction(
                h=int(self.rng.integers(-6, 7)), v=int(self.rng.integers(0, 9)),
                c=int(self.rng.random() < 0.3), r=int(self.rng.random() < 0.1))
            for aid in env.agent_ids()
        }

    def observe_step(self, env: CombatEnv, result):
        pass


class LowLevelEvalActor:
    """Greedy (or sampled) execution of one low-level policy per type."""

    def __init__(self, policy: PolicyNetwork, kind: str,
                 rng: np.random.Generator, greedy: bool = True):
        self.actor = LowLevelActor(policy, kind, rng, greedy=greedy)

    def begin_episode(self, env: CombatEnv):
        pass

    def actions(self, env: CombatEnv) -> dict[int, LowLevelAction]:
        return {aid: self.actor.action_for(env.world, aid, scenario=env.scenario)
                for aid in env.agent_ids()}

    def observe_step(self, env: CombatEnv, result):
        pass


class CTCEEvalActor:
    """Joint-network execution (the single-policy baseline)."""

    def __init__(self, policy: PolicyNetwork, kind: str,
                 rng: np.random.Generator, n_agents: int, greedy: bool = True):
        from .observations import OBS_LAYOUTS

        self.policy = policy
        self.kind = kind
        self.rng = rng
        self.greedy = greedy
        self.n_agents = n_agents
        self.slot_obs = OBS_LAYOUTS["escape-AC1" if kind == "escape" else "fight-AC1"]

    def begin_episode(self, env: CombatEnv):
        pass

    def actions(self, env: CombatEnv) -> dict[int, LowLevelAction]:
        world = env.world
        slots = []
        for aid in range(self.n_agents):
            if world.get(aid).alive:
                slots.append(pad_to(env.observe(aid, self.kind), self.slot_obs))
            else:
                slots.append(np.zeros(self.slot_obs))
        out = self.policy.forward_actor("joint", np.concatenate(slots))
        actions = {}
        for aid in env.agent_ids():
            logits = [lg.data[0] for lg in out.logits[aid * 4:(aid + 1) * 4]]
            samples, _, _ = sample_action(logits, self.rng, greedy=self.greedy)
            actions[aid] = LowLevelAction.from_heads(samples)
        return actions

    def observe_step(self, env: CombatEnv, result):
        pass


class HierarchyEvalActor:
    """Commander over frozen fight/escape policies, re-invoked at option
    boundaries; tracks command and opponent-selection statistics."""

    def __init__(self, commander: PolicyNetwork, fight: PolicyNetwork,
                 escape: PolicyNetwork, rng: np.random.Generator,
                 senses: int = 2, opt: bool = True, greedy: bool = True,
                 opponents: SnapshotController | None = None):
        self.commander = commander
        self.fight_actor = LowLevelActor(fight, "fight", rng, greedy=greedy)
        self.escape_actor = LowLevelActor(escape, "escape", rng, greedy=greedy)
        self.rng = rng
        self.senses = senses
        self.opt = opt
        self.greedy = greedy
        self.opponents = opponents  # rerolled at option boundaries when set
        self.fight_commands = 0
        self.escape_commands = 0
        self.opponent_selection = [0, 0, 0]
        self._hiddens: dict[int, np.ndarray] = {}
        self._decisions: dict[int, dict] = {}
        self._steps_in_option = 0
        self._last_events: list[SimEvent] = []

    def begin_episode(self, env: CombatEnv):
        self._hiddens = {aid: self.commander.initial_hidden()
                         for aid in env.agent_ids()}
        self._decisions = {}
        self._steps_in_option = 0
        self._last_events = []
        if self.opponents is not None:
            self.opponents.reset()

    def _needs_decision(self, env: CombatEnv) -> bool:
        if not self._decisions:
            return True
        return any(option_terminated(env.world, aid, self._steps_in_option,
                                     self._last_events, env.scenario)
                   for aid in env.agent_ids())

    def _decide(self, env: CombatEnv):
        world = env.world
        self._decisions = {}
        self._steps_in_option = 0
        for aid in env.agent_ids():
            obs = build_obs_commander(world, aid, env.scenario, senses=self.senses)
            sensed = [o.id for o in closest_opponents(world, world.get(aid),
                                                      self.senses)]
            hidden = self._hiddens.get(aid, self.commander.initial_hidden())
            out = self.commander.forward_actor("cmd", obs, hidden)
            samples, _, _ = sample_action([lg.data[0] for lg in out.logits],
                                          self.rng, greedy=self.greedy)
            self._hiddens[aid] = out.hidden.data if out.hidden is not None else hidden
            a_c = samples[0]
            target_idx = a_c if self.opt else (1 if a_c > 0 else 0)
            if target_idx == 0:
                self.escape_commands += 1
            else:
                self.fight_commands += 1
                self.opponent_selection[min(target_idx, 3) - 1] += 1
            self._decisions[aid] = {"target_idx": target_idx, "sensed": sensed}
        if self.opponents is not None:
            self.opponents.reassign(world)

    def actions(self, env: CombatEnv) -> dict[int, LowLevelAction]:
        if self._needs_decision(env):
            self._decide(env)
        world = env.world
        actions = {}
        for aid in env.agent_ids():
            decision = self._decisions.get(aid)
            if decision is None:
                continue
            if decision["target_idx"] == 0:
                env.set_attack_target(aid, None)
                actions[aid] = self.escape_actor.action_for(
                    world, aid, scenario=env.scenario)
            else:
                sensed = decision["sensed"]
                target = None
                if decision["target_idx"] - 1 < len(sensed):
                    cand = sensed[decision["target_idx"] - 1]
                    if world.get(cand).alive:
                        target = cand
                env.set_attack_target(aid, target)
                actions[aid] = self.fight_actor.action_for(
                    world, aid, target_id=target, scenario=env.scenario)
        return actions

    def observe_step(self, env: CombatEnv, result):
        self._steps_in_option += 1
        self._last_events = result.events


class AlwaysFightActor(HierarchyEvalActor):
    """No-commander baseline: every agent runs the fight policy on its
    closest opponent, options never switch."""

    def _needs_decision(self, env) -> bool:
        return not self._decisions

    def _decide(self, env):
        self._decisions = {aid: {"target_idx": 1,
                                 "sensed": [o.id for o in closest_opponents(
                                     env.world, env.world.get(aid), 1)]}
                           for aid in env.agent_ids()}
        self._steps_in_option = 0
        if self.opponents is not None:
            self.opponents.reassign(env.world)

    def actions(self, env):
        # refresh closest-opponent targets every step
        self._decide(env)
        return super().actions(env)


# --- episode loop -------------------------------------------------------------


def evaluate(actor, opponent_controller, scenario: ScenarioConfig,
             episodes: int, seed: int = 0,
             episode_hook=None, trajectory_recorder=None,
             reward_kind: tuple[str, str | None] = ("none", None)) -> EvalReport:
    """Run `episodes` evaluation episodes and aggregate counters.

    `episode_hook(events, outcome, world)` receives each finished episode's
    full event log (the bookkeeping replayer uses this). A trajectory
    recorder captures round-level state for the requested episode index.
    """
    report = EvalReport(seed=seed)
    master = np.random.default_rng(seed)
    env = CombatEnv(scenario, opponent_controller, reward_kind=reward_kind,
                    obs_kind="fight")
    for episode in range(episodes):
        env.round_listener = None
        if trajectory_recorder is not None and trajectory_recorder.wants(episode):
            trajectory_recorder.begin(env, episode)
            env.round_listener = trajectory_recorder.on_round
        env.reset(seed=int(master.integers(1 << 62)))
        controller_reset = getattr(opponent_controller, "reset", None)
        if controller_reset:
            controller_reset()
        hook = getattr(opponent_controller, "on_episode_start", None)
        if hook:
            hook(env.world)
        actor.begin_episode(env)
        episode_events: list[SimEvent] = []
        agent_death = opponent_death = False
        length = 0
        while True:
            result = env.step(actor.actions(env))
            actor.observe_step(env, result)
            length += 1
            episode_events.extend(result.events)
            count_events(env.world, result.events, report)
            a_died, o_died = team_death_flags(env.world, result.events)
            agent_death = agent_death or a_died
            opponent_death = opponent_death or o_died
            if result.terminal:
                break
        report.episodes += 1
        report.total_steps += length
        if result.outcome == OUTCOME_WIN:
            report.wins += 1
        elif result.outcome == OUTCOME_LOSS:
            report.losses += 1
        else:
            report.draws += 1
        if not agent_death:
            report.escaped_episodes += 1
        if opponent_death:
            report.kill_episodes += 1
        if agent_death:
            report.killed_episodes += 1
        if episode_hook is not None:
            episode_hook(episode_events, result.outcome, env.world)
        if trajectory_recorder is not None and trajectory_recorder.wants(episode):
            trajectory_recorder.finish(env)
    report.fight_commands = getattr(actor, "fight_commands", 0)
    report.escape_commands = getattr(actor, "escape_commands", 0)
    report.opponent_selection = list(getattr(actor, "opponent_selection",
                                             [0, 0, 0]))
    return report


def scenario_sweep(cells: list[dict], actor_factory, opponent_factory,
                   base_scenario: ScenarioConfig, episodes: int,
                   seed: int = 0) -> list[tuple[str, EvalReport]]:
    """One evaluation per grid cell. A cell dict carries a name plus
    ScenarioConfig overrides (team sizes, horizon, opponent fight
    probability). Large cells (10v10, 15v15) should set horizon=1000."""
    results = []
    for i, cell in enumerate(cells):
        overrides = {k: v for k, v in cell.items() if k != "name"}
        scenario = dataclasses.replace(base_scenario, **overrides)
        actor = actor_factory(scenario, seed + i)
        controller = opponent_factory(scenario, seed + 1000 + i)
        report = evaluate(actor, controller, scenario, episodes, seed=seed + i)
        results.append((cell["name"], report))
    return results


def standard_sweep_cells() -> list[dict]:
    return [
        {"name": "2v2", "n_agents": 2, "n_opponents": 2},
        {"name": "3v3", "n_agents": 3, "n_opponents": 3},
        {"name": "4v4", "n_agents": 4, "n_opponents": 4},
        {"name": "5v5", "n_agents": 5, "n_opponents": 5},
        {"name": "2v4", "n_agents": 2, "n_opponents": 4},
        {"name": "3v5", "n_agents": 3, "n_opponents": 5},
        {"name": "3v3-PF", "n_agents": 3, "n_opponents": 3,
         "opponent_fight_prob": 1.0},
        {"name": "3v3-PE", "n_agents": 3, "n_opponents": 3,
         "opponent_fight_prob": 0.0},
        {"name": "10v10", "n_agents": 10, "n_opponents": 10, "horizon": 1000},
        {"name": "15v15", "n_agents": 15, "n_opponents": 15, "horizon": 1000},
    ]


# --- trajectory logs ----------------------------------------------------------


def event_to_dict(event: SimEvent) -> dict:
    data = {"kind": type(event).__name__}
    data.update(dataclasses.asdict(event))
    return data


_EVENT_TYPES = {cls.__name__: cls for cls in
                (CannonKill, RocketKill, RocketLaunch, RocketExpired, OutOfBounds)}


def event_from_dict(data: dict) -> SimEvent:
    kind = data.pop("kind")
    return _EVENT_TYPES[kind](**data)


@dataclass
class TrajectoryLog:
    header: dict
    rounds: list[dict] = field(default_factory=list)
    landmarks: list[dict] = field(default_factory=list)

    def record_round(self, world: World, events: list[SimEvent]):
        self.rounds.append({
            "round": world.round_idx,
            "aircraft": [
                {"id": a.id, "team": a.team, "type": a.spec.type_id,
                 "x": a.pos.x, "y": a.pos.y, "heading": a.heading,
                 "speed": a.speed, "alive": a.alive}
                for a in world.aircraft
            ],
            "events": [event_to_dict(e) for e in events],
        })
        for event in events:
            victim_id = None
            if isinstance(event, KILL_EVENTS):
                victim_id = event.victim
            elif isinstance(event, OutOfBounds):
                victim_id = event.aircraft
            if victim_id is not None:
                victim = world.get(victim_id)
                self.landmarks.append({
                    "id": victim_id, "round": world.round_idx,
                    "x": victim.pos.x, "y": victim.pos.y,
                })


class TrajectoryRecorder:
    """Plugs into CombatEnv's round listener for one chosen episode."""

    def __init__(self, episode_index: int, header: dict | None = None):
        self.episode_index = episode_index
        self.header = header or {}
        self.log: TrajectoryLog | None = None

    def wants(self, episode: int) -> bool:
        return episode == self.episode_index

    def begin(self, env: CombatEnv, episode: int):
        header = dict(self.header)
        header["episode"] = episode
        header["scenario"] = dataclasses.asdict(env.scenario)
        self.log = TrajectoryLog(header=header)

    def on_round(self, world: World, events: list[SimEvent]):
        self.log.record_round(world, events)

    def finish(self, env: CombatEnv):
        env.round_listener = None


def export_trajectory(log: TrajectoryLog, path: str | Path):
    """Write a trajectory as JSON lines: header record, one record per
    round, and a landmark record per destruction."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "header", **log.header}, sort_keys=True) + "\n")
        for rec in log.rounds:
            fh.write(json.dumps({"type": "round", **rec}, sort_keys=True) + "\n")
        for rec in log.landmarks:
            fh.write(json.dumps({"type": "landmark", **rec}, sort_keys=True) + "\n")


def import_trajectory(path: str | Path) -> TrajectoryLog:
    header = None
    rounds = []
    landmarks = []
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        rec = json.loads(line)
        kind = rec.pop("type")
        if kind == "header":
            header = rec
        elif kind == "round":
            rounds.append(rec)
        elif kind == "landmark":
            landmarks.append(rec)
        else:
            raise ValueError(f"unknown trajectory record type {kind!r}")
    if header is None:
        raise ValueError("trajectory file has no header record")
    log = TrajectoryLog(header=header)
    log.rounds = rounds
    log.landmarks = landmarks
    return log
