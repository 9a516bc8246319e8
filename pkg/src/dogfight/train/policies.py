"""Action drivers: how policies of each training framework pick actions and
record transitions, plus the frozen-snapshot opponent controller.

CTDE keeps one network instance per aircraft type shared by all same-type
agents. DTDE gives every agent id its own parameter store with a local
critic. CTCE drives the whole team through a single joint network whose head
list concatenates every agent slot's four control heads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import ScenarioConfig
from ..env import CombatEnv, LowLevelAction
from ..nn.networks import (
    NetworkConfig,
    PolicyNetwork,
    ctce_config,
    escape_config,
    fight_config,
)
from ..observations import (
    FIGHT_HEADS,
    OBS_LAYOUTS,
    build_critic_input,
    build_obs,
    closest_opponents,
    critic_input_width,
    encode_low_action,
)
from ..simcore import TEAM_AGENT, TEAM_OPPONENT, World
from .buffer import Transition

LOW_ACTION_HEADS = len(FIGHT_HEADS)


def instance_for(world: World, aircraft_id: int) -> str:
    return world.get(aircraft_id).spec.type_id.lower()


def make_low_level_policy(kind: str, framework: str, scenario: ScenarioConfig,
                          seed: int, attention: bool = True,
                          fc_baseline: bool = False,
                          dtype: str = "float32"):
    """Networks for one low-level training mode.

    Returns a PolicyNetwork (ctde/ctce) or a per-agent-id dict (dtde).
    """
    slots = scenario.n_agents + scenario.n_opponents
    if kind == "escape":
        global_width = slots * (OBS_LAYOUTS["escape-AC1"] + 4)
    else:
        global_width = slots * (OBS_LAYOUTS["fight-AC1"] + 4)

    if framework == "ctde":
        if kind == "escape":
            return PolicyNetwork(escape_config(global_width, dtype=dtype), seed=seed)
        return PolicyNetwork(fight_config(global_width, attention=attention,
                                          fc_baseline=fc_baseline, dtype=dtype),
                             seed=seed)
    if framework == "ctce":
        slot_obs = OBS_LAYOUTS["escape-AC1" if kind == "escape" else "fight-AC1"]
        config = ctce_config(kind, obs_width=scenario.n_agents * slot_obs,
                             head_arities=FIGHT_HEADS * scenario.n_agents,
                             critic_width=global_width, dtype=dtype)
        return PolicyNetwork(config, seed=seed)
    if framework == "dtde":
        raise ValueError("dtde policies are created per agent via make_dtde_policies")
    raise ValueError(f"unknown framework {framework!r}")


def make_dtde_policies(kind: str, agent_types: list[str], seed: int,
                       attention: bool = True,
                       dtype: str = "float32") -> dict[int, PolicyNetwork]:
    """Independent per-agent networks with local critics (own obs + own
    previous action)."""
    policies = {}
    for aid, type_id in enumerate(agent_types):
        layout = f"{'escape' if kind == 'escape' else 'fight'}-{type_id}"
        local_width = OBS_LAYOUTS[layout] + 4
        if kind == "escape":
            config = escape_config(local_width, dtype=dtype)
        else:
            config = fight_config(local_width, attention=attention, dtype=dtype)
        policies[aid] = PolicyNetwork(config, seed=seed + 1000 + aid)
    return policies


def pad_to(vec: np.ndarray, width: int) -> np.ndarray:
    if len(vec) == width:
        return vec
    out = np.zeros(width, dtype=vec.dtype)
    out[: len(vec)] = vec
    return out


@dataclass
class LowLevelActor:
    """Execution-time action selection for a frozen or training policy."""

    policy: PolicyNetwork
    kind: str  # fight | escape
    rng: np.random.Generator
    greedy: bool = False

    def action_for(self, world: World, agent_id: int,
                   target_id: int | None = None,
                   scenario: ScenarioConfig | None = None) -> LowLevelAction:
        obs = build_obs(self.kind, world, agent_id, scenario, target_id=target_id)
        instance = instance_for(world, agent_id)
        samples, _, _, _ = self.policy.act(instance, obs, self.rng,
                                           greedy=self.greedy)
        return LowLevelAction.from_heads(samples)


@dataclass
class SnapshotController:
    """Opponent controller running frozen fight/escape checkpoints.

    Each opponent carries a fight-or-escape assignment; `reassign` rerolls it
    with the configured fight probability (used at option boundaries in
    commander training; pure-fight opponents just keep the default)."""

    fight: PolicyNetwork | None
    escape: PolicyNetwork | None = None
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    fight_prob: float = 1.0
    greedy: bool = False
    scenario: ScenarioConfig | None = None
    assignments: dict[int, str] = field(default_factory=dict)

    def reset(self):
        self.assignments.clear()

    def reassign(self, world: World):
        for opp in world.alive(TEAM_OPPONENT):
            fight = self.rng.random() < self.fight_prob
            self.assignments[opp.id] = "fight" if fight and self.fight else "escape"

    def __call__(self, world: World, opponent_id: int
                 ) -> tuple[LowLevelAction, int | None]:
        mode = self.assignments.get(opponent_id,
                                    "fight" if self.fight else "escape")
        policy = self.fight if mode == "fight" else self.escape
        if policy is None:
            raise RuntimeError(f"no {mode} checkpoint loaded for opponents")
        obs = build_obs(mode, world, opponent_id, self.scenario)
        instance = instance_for(world, opponent_id)
        samples, _, _, _ = policy.act(instance, obs, self.rng, greedy=self.greedy)
        action = LowLevelAction.from_heads(samples)
        targets = closest_opponents(world, world.get(opponent_id), 1)
        return action, targets[0].id if targets else None


class CTDEDriver:
    """Shared-per-type policy: each agent samples from its type's instance;
    critics see the global observation/action concatenation."""

    def __init__(self, policy: PolicyNetwork, kind: str,
                 scenario: ScenarioConfig, rng: np.random.Generator):
        self.policy = policy
        self.kind = kind
        self.scenario = scenario
        self.rng = rng

    def begin_episode(self):
        pass

    def act(self, env: CombatEnv, episode: int
            ) -> tuple[dict[int, LowLevelAction], list[Transition]]:
        world = env.world
        critic_in = build_critic_input(self.kind, world, self.scenario,
                                       env.prev_actions,
                                       self.scenario.n_agents,
                                       self.scenario.n_opponents)
        actions: dict[int, LowLevelAction] = {}
        transitions: list[Transition] = []
        for aid in env.agent_ids():
            obs = env.observe(aid, self.kind)
            instance = instance_for(world, aid)
            samples, log_prob, _, _ = self.policy.act(instance, obs, self.rng)
            value = self.policy.forward_critic(instance, critic_in).item()
            actions[aid] = LowLevelAction.from_heads(samples)
            transitions.append(Transition(
                instance=instance, agent_id=aid, episode=episode, obs=obs,
                action=np.array(samples), log_prob=log_prob, value=value,
                reward=0.0, done=False, critic_input=critic_in))
        return actions, transitions


class DTDEDriver:
    """Fully decentralized: per-agent networks and local critics."""

    def __init__(self, policies: dict[int, PolicyNetwork], kind: str,
                 scenario: ScenarioConfig, rng: np.random.Generator):
        self.policies = policies
        self.kind = kind
        self.scenario = scenario
        self.rng = rng

    def begin_episode(self):
        pass

    def act(self, env: CombatEnv, episode: int
            ) -> tuple[dict[int, LowLevelAction], list[Transition]]:
        world = env.world
        actions: dict[int, LowLevelAction] = {}
        transitions: list[Transition] = []
        for aid in env.agent_ids():
            policy = self.policies[aid]
            obs = env.observe(aid, self.kind)
            instance = instance_for(world, aid)
            prev = env.prev_actions.get(aid, [0.0] * 4)
            critic_in = np.concatenate([obs, np.asarray(prev)])
            samples, log_prob, _, _ = policy.act(instance, obs, self.rng)
            value = policy.forward_critic(instance, critic_in).item()
            actions[aid] = LowLevelAction.from_heads(samples)
            transitions.append(Transition(
                instance=instance, agent_id=aid, episode=episode,
                obs=obs, action=np.array(samples), log_prob=log_prob,
                value=value, reward=0.0, done=False, critic_input=critic_in))
        return actions, transitions


class CTCEDriver:
    """One joint network controls the whole team; a single transition per
    env step carries the joint action and the summed team reward."""

    def __init__(self, policy: PolicyNetwork, kind: str,
                 scenario: ScenarioConfig, rng: np.random.Generator):
        self.policy = policy
        self.kind = kind
        self.scenario = scenario
        self.rng = rng
        self.slot_obs = OBS_LAYOUTS["escape-AC1" if kind == "escape" else "fight-AC1"]

    def begin_episode(self):
        pass

    def joint_obs(self, env: CombatEnv) -> np.ndarray:
        world = env.world
        slots = []
        for aid in range(self.scenario.n_agents):
            if aid < len(world.aircraft) and world.get(aid).alive:
                obs = env.observe(aid, self.kind)
                slots.append(pad_to(obs, self.slot_obs))
            else:
                slots.append(np.zeros(self.slot_obs))
        return np.concatenate(slots)

    def act(self, env: CombatEnv, episode: int
            ) -> tuple[dict[int, LowLevelAction], list[Transition]]:
        world = env.world
        obs = self.joint_obs(env)
        out = self.policy.forward_actor("joint", obs)
        critic_in = build_critic_input(self.kind, world, self.scenario,
                                       env.prev_actions,
                                       self.scenario.n_agents,
                                       self.scenario.n_opponents)
        value = self.policy.forward_critic("joint", critic_in).item()

        n_heads = len(out.logits)
        action = np.zeros(n_heads, dtype=int)
        mask = np.zeros(n_heads)
        log_prob = 0.0
        actions: dict[int, LowLevelAction] = {}
        from ..nn.networks import sample_action

        for slot in range(self.scenario.n_agents):
            if not (slot < len(world.aircraft) and world.get(slot).alive):
                continue
            head_slice = slice(slot * LOW_ACTION_HEADS, (slot + 1) * LOW_ACTION_HEADS)
            logits = [lg.data[0] for lg in out.logits[head_slice]]
            samples, lp, _ = sample_action(logits, self.rng)
            action[head_slice] = samples
            mask[head_slice] = 1.0
            log_prob += lp
            actions[slot] = LowLevelAction.from_heads(samples)
        transition = Transition(
            instance="joint", agent_id=-1, episode=episode, obs=obs,
            action=action, log_prob=log_prob, value=value, reward=0.0,
            done=False, critic_input=critic_in, head_mask=mask)
        return actions, [transition]
