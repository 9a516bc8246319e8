"""Low-level policy training: single levels, the five-level curriculum with
league opponents, the two-phase escape schedule, and the single-policy
baseline.

Every random draw in a run descends from one master seed (separate spawned
streams for episode generation, action sampling, scripted opponents, and
minibatch shuffling), so single-worker runs with equal seeds produce
identical metrics logs byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..config import ScenarioConfig, ScriptConfig
from ..env import CombatEnv, OUTCOME_WIN
from ..nn.networks import PolicyNetwork
from ..nn.params import load_checkpoint, save_checkpoint
from ..simcore import SimConfig
from .buffer import RolloutBuffer
from .league import LOW_LEVELS, LeagueArchive
from .policies import (
    CTCEDriver,
    CTDEDriver,
    DTDEDriver,
    SnapshotController,
    make_dtde_policies,
    make_low_level_policy,
)
from .ppo import PPOConfig, UpdateStats, ppo_update
from .runs import RunDir

CURRICULUM_BASE_HORIZON = 200
CURRICULUM_HORIZON_STEP = 50


@dataclass
class TrainMode:
    """Framework/policy selection for one training run."""

    framework: str = "ctde"  # ctde | ctce | dtde
    kind: str = "fight"  # fight | escape | standard
    reward_variant: str = "base"  # fight: base|fripun|shfrac; escape: base|dist|dist_speed
    attention: bool = True
    fc_baseline: bool = False

    def __post_init__(self):
        if self.framework not in ("ctde", "ctce", "dtde"):
            raise ValueError(f"unknown framework {self.framework!r}")
        if self.kind not in ("fight", "escape", "standard"):
            raise ValueError(f"unknown policy kind {self.kind!r}")


def _spawn_seeds(master_seed: int, label: str, count: int) -> list[int]:
    label_key = int.from_bytes(label.encode("utf-8")[:4].ljust(4, b"\0"), "little")
    seq = np.random.SeedSequence([master_seed, label_key])
    return [int(s.generate_state(1)[0]) for s in seq.spawn(count)]


def curriculum_horizon(level: str) -> int:
    return CURRICULUM_BASE_HORIZON + CURRICULUM_HORIZON_STEP * LOW_LEVELS.index(level)


class LowLevelTrainer:
    """Episode collection + PPO updates for one low-level policy."""

    def __init__(self, scenario: ScenarioConfig, ppo: PPOConfig, mode: TrainMode,
                 run_dir: RunDir | None = None, seed: int = 0,
                 script: ScriptConfig | None = None,
                 sim_cfg: SimConfig | None = None):
        self.scenario = scenario
        self.ppo = ppo
        self.mode = mode
        self.run_dir = run_dir
        self.seed = seed
        self.script = script or ScriptConfig()
        self.sim_cfg = sim_cfg or SimConfig()
        seeds = _spawn_seeds(seed, "trainer", 4)
        self.episode_rng = np.random.default_rng(seeds[0])
        self.action_rng = np.random.default_rng(seeds[1])
        self.opponent_rng = np.random.default_rng(seeds[2])
        self.update_rng = np.random.default_rng(seeds[3])

        obs_kind = "escape" if mode.kind == "escape" else "fight"
        if mode.framework == "dtde":
            # per-agent networks need a fixed id -> airframe assignment
            type_rng = np.random.default_rng(seeds[1] ^ 0xD7DE)
            if scenario.n_agents >= 2:
                self.agent_types = ["AC1", "AC2"] + [
                    ("AC1" if type_rng.random() < 0.5 else "AC2")
                    for _ in range(scenario.n_agents - 2)]
            else:
                self.agent_types = ["AC1"]
            self.policies = make_dtde_policies(obs_kind, self.agent_types, seed,
                                               attention=mode.attention)
            self.policy = next(iter(self.policies.values()))  # checkpoint anchor
            self.driver = DTDEDriver(self.policies, obs_kind, scenario,
                                     self.action_rng)
        elif mode.framework == "ctce":
            self.policy = make_low_level_policy(mode.kind, "ctce", scenario, seed)
            self.policies = {0: self.policy}
            self.driver = CTCEDriver(self.policy, obs_kind, scenario,
                                     self.action_rng)
            self.agent_types = None
        else:
            self.policy = make_low_level_policy(
                mode.kind, "ctde", scenario, seed,
                attention=mode.attention, fc_baseline=mode.fc_baseline)
            self.policies = {0: self.policy}
            self.driver = CTDEDriver(self.policy, obs_kind, scenario,
                                     self.action_rng)
            self.agent_types = None

        self.buffer = RolloutBuffer()
        self.env_steps = 0
        self.episodes = 0
        self.updates = 0
        self._episode_returns: list[float] = []
        self._episode_lengths: list[int] = []
        self._episode_wins: list[bool] = []

    # -- environment plumbing -------------------------------------------------

    def _reward_kind(self) -> tuple[str, str | None]:
        if self.mode.kind == "fight":
            return ("fight", self.mode.reward_variant)
        if self.mode.kind == "escape":
            return ("escape", self.mode.reward_variant)
        return ("standard", None)

    def make_env(self, opponent_controller, horizon: int | None = None) -> CombatEnv:
        scenario = self.scenario if horizon is None else replace(
            self.scenario, horizon=horizon)
        obs_kind = "escape" if self.mode.kind == "escape" else "fight"
        return CombatEnv(scenario, opponent_controller,
                         reward_kind=self._reward_kind(), obs_kind=obs_kind,
                         sim_cfg=self.sim_cfg, agent_types=self.agent_types)

    def run_episode(self, env: CombatEnv) -> dict:
        env.reset(seed=int(self.episode_rng.integers(1 << 62)))
        hook = getattr(env.opponent_controller, "on_episode_start", None)
        if hook is not None:
            hook(env.world)
        reset_hook = getattr(env.opponent_controller, "reset", None)
        if reset_hook is not None:
            reset_hook()
        self.driver.begin_episode()
        total_reward = 0.0
        reward_agents = max(1, self.scenario.n_agents)
        length = 0
        while True:
            actions, transitions = self.driver.act(env, self.episodes)
            result = env.step(actions)
            length += 1
            if self.mode.framework == "ctce":
                team_reward = sum(result.rewards.values())
                transitions[0].reward = team_reward
                transitions[0].done = result.terminal
                total_reward += team_reward
            else:
                for t in transitions:
                    t.reward = result.rewards[t.agent_id]
                    t.done = result.done[t.agent_id]
                    total_reward += t.reward
            for t in transitions:
                self.buffer.add(t)
            if result.terminal:
                break
        self.env_steps += length
        self.episodes += 1
        outcome = result.outcome
        self._episode_returns.append(total_reward / reward_agents)
        self._episode_lengths.append(length)
        self._episode_wins.append(outcome == OUTCOME_WIN)
        return {"outcome": outcome, "length": length}

    def _update_policies(self) -> UpdateStats:
        if self.mode.framework == "dtde":
            stats = UpdateStats()
            for aid, policy in self.policies.items():
                sub = RolloutBuffer()
                sub.transitions = [t for t in self.buffer.transitions
                                   if t.agent_id == aid]
                if sub.transitions:
                    stats.merge(ppo_update(policy, sub, self.ppo, self.update_rng))
            return stats
        return ppo_update(self.policy, self.buffer, self.ppo, self.update_rng)

    def maybe_update(self, level: str) -> bool:
        if len(self.buffer) < self.ppo.batch_size:
            return False
        stats = self._update_policies()
        self.buffer.clear()
        self.updates += 1
        if self.run_dir is not None:
            window = len(self._episode_returns)
            self.run_dir.log_metrics({
                "entropy": stats.entropy,
                "env_steps": self.env_steps,
                "episodes": self.episodes,
                "level": level,
                "mean_length": float(np.mean(self._episode_lengths)) if window else 0.0,
                "mean_ratio_first_epoch": stats.mean_ratio_first_epoch,
                "mean_reward": float(np.mean(self._episode_returns)) if window else 0.0,
                "policy_loss": stats.policy_loss,
                "update": self.updates,
                "value_loss": stats.value_loss,
                "win_rate": float(np.mean(self._episode_wins)) if window else 0.0,
            })
        self._episode_returns.clear()
        self._episode_lengths.clear()
        self._episode_wins.clear()
        return True

    def train_level(self, level: str, opponent_controller, env_steps: int,
                    horizon: int | None = None):
        env = self.make_env(opponent_controller, horizon)
        start = self.env_steps
        while self.env_steps - start < env_steps:
            self.run_episode(env)
            self.maybe_update(level)

    # -- optimizer state (exact resume) ---------------------------------------

    def save_state(self, path: Path):
        arrays = {}
        for name, m in self.policy.store.moment1.items():
            arrays[f"adam.m.{name}"] = m
        for name, v in self.policy.store.moment2.items():
            arrays[f"adam.v.{name}"] = v
        store_like = _ArrayBag(arrays)
        save_checkpoint(path, store_like, {"step_count": self.policy.store.step_count})

    def load_state(self, path: Path):
        arrays, config = load_checkpoint(path)
        for name in self.policy.store.moment1:
            self.policy.store.moment1[name][...] = arrays[f"adam.m.{name}"]
            self.policy.store.moment2[name][...] = arrays[f"adam.v.{name}"]
        self.policy.store.step_count = config["step_count"]


class _ArrayBag:
    """Duck-typed stand-in so save_checkpoint can serialize raw arrays."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        from ..nn.autodiff import Tensor

        self.params = {name: Tensor(data) for name, data in arrays.items()}


def scripted_controller(level: str, rng: np.random.Generator,
                        script: ScriptConfig) -> "ScriptedControllerProxy":
    from ..scripted import ScriptedController

    return ScriptedController(level, rng, script)


class LeagueOpponentController:
    """Per-episode sampling of frozen snapshot opponents for league play."""

    def __init__(self, archive: LeagueArchive, below_level: str,
                 rng: np.random.Generator, scenario: ScenarioConfig,
                 pool: str = "archive"):
        self.archive = archive
        self.below_level = below_level
        self.rng = rng
        self.scenario = scenario
        self.pool = pool
        self.cache: dict[str, PolicyNetwork] = {}
        self.current: SnapshotController | None = None
        self.current_level: str | None = None

    def _net(self, level: str) -> PolicyNetwork:
        if level not in self.cache:
            self.cache[level] = self.archive.load("fight", level)
        return self.cache[level]

    def on_episode_start(self, world):
        if self.pool == "previous":
            idx = LOW_LEVELS.index(self.below_level)
            level = LOW_LEVELS[idx - 1]
        else:
            level = self.archive.sample_opponent_level(self.rng, self.below_level)
        self.current_level = level
        self.current = SnapshotController(fight=self._net(level), rng=self.rng,
                                          scenario=self.scenario)

    def __call__(self, world, opponent_id):
        if self.current is None:
            self.on_episode_start(world)
        return self.current(world, opponent_id)


def run_curriculum(scenario: ScenarioConfig, ppo: PPOConfig, mode: TrainMode,
                   run_dir: RunDir, archive: LeagueArchive, seed: int,
                   steps_per_level: dict[str, int] | int,
                   script: ScriptConfig | None = None,
                   levels: tuple[str, ...] = LOW_LEVELS,
                   l5_pool: str = "archive") -> LeagueArchive:
    """Five-level fight curriculum: scripted opponents through L3, the frozen
    L3 snapshot at L4, per-episode league sampling at L5. The episode horizon
    grows by 50 env steps per level from 200. Completed levels found in the
    archive are skipped, so interrupted runs resume at level granularity."""
    if mode.kind != "fight":
        raise ValueError("the curriculum trains the fight policy")
    script = script or ScriptConfig()
    trainer = LowLevelTrainer(scenario, ppo, mode, run_dir, seed, script)
    run_dir.write_config({
        "scenario": scenario.__dict__, "ppo": ppo.__dict__,
        "mode": mode.__dict__, "seed": seed, "levels": list(levels),
        "steps_per_level": steps_per_level, "l5_pool": l5_pool,
    })

    resumed_from = None
    for level in levels:
        if archive.has("fight", level):
            resumed_from = level
            continue
        if resumed_from is not None:
            arrays, _ = load_checkpoint(archive.path("fight", resumed_from))
            trainer.policy.store.load_arrays(arrays)
            state_path = run_dir.path / f"trainer_state_{resumed_from}.ckpt"
            if state_path.exists():
                trainer.load_state(state_path)
            resumed_from = None
        steps = (steps_per_level if isinstance(steps_per_level, int)
                 else steps_per_level[level])
        controller = _controller_for_level(level, trainer, archive, scenario,
                                           script, l5_pool)
        trainer.train_level(level, controller, steps,
                            horizon=curriculum_horizon(level))
        archive.save("fight", level, trainer.policy)
        trainer.save_state(run_dir.path / f"trainer_state_{level}.ckpt")
    return archive


def _controller_for_level(level: str, trainer: LowLevelTrainer,
                          archive: LeagueArchive, scenario: ScenarioConfig,
                          script: ScriptConfig, l5_pool: str):
    if level in ("L1", "L2", "L3"):
        return scripted_controller(level, trainer.opponent_rng, script)
    if level == "L4":
        if not archive.has("fight", "L3"):
            raise FileNotFoundError("L4 training requires the archived L3 snapshot")
        return SnapshotController(fight=archive.load("fight", "L3"),
                                  rng=trainer.opponent_rng, scenario=scenario)
    if level == "L5":
        return LeagueOpponentController(archive, "L5", trainer.opponent_rng,
                                        scenario, pool=l5_pool)
    raise ValueError(f"unknown curriculum level {level!r}")


ESCAPE_HORIZON = 300


def train_escape(scenario: ScenarioConfig, ppo: PPOConfig, run_dir: RunDir,
                 archive: LeagueArchive, seed: int,
                 steps_phase1: int, steps_phase2: int,
                 variant: str = "base",
                 script: ScriptConfig | None = None) -> LowLevelTrainer:
    """Escape policy: phase one against scripted L3, phase two against the
    frozen L5 fight snapshot, both at the L3 horizon."""
    if steps_phase2 > 0 and not archive.has("fight", "L5"):
        raise FileNotFoundError("escape phase 2 requires the archived L5 fight policy")
    mode = TrainMode(kind="escape", reward_variant=variant)
    trainer = LowLevelTrainer(scenario, ppo, mode, run_dir, seed,
                              script or ScriptConfig())
    run_dir.write_config({
        "scenario": scenario.__dict__, "ppo": ppo.__dict__,
        "mode": mode.__dict__, "seed": seed,
        "steps_phase1": steps_phase1, "steps_phase2": steps_phase2,
    })
    trainer.train_level(
        "escape-L3",
        scripted_controller("L3", trainer.opponent_rng, trainer.script),
        steps_phase1, horizon=ESCAPE_HORIZON)
    if steps_phase2 > 0:
        controller = SnapshotController(fight=archive.load("fight", "L5"),
                                        rng=trainer.opponent_rng,
                                        scenario=scenario)
        trainer.train_level("escape-vs-L5", controller, steps_phase2,
                            horizon=ESCAPE_HORIZON)
    archive.save("escape", "", trainer.policy)
    return trainer


def train_standard_baseline(scenario: ScenarioConfig, ppo: PPOConfig,
                            run_dir: RunDir, seed: int, env_steps: int,
                            script: ScriptConfig | None = None,
                            horizon: int = 300) -> LowLevelTrainer:
    """Single-policy baseline: one joint CTCE network with the combined
    fight/escape reward, trained directly against scripted L3 (no curriculum,
    no league archive)."""
    mode = TrainMode(framework="ctce", kind="standard")
    trainer = LowLevelTrainer(scenario, ppo, mode, run_dir, seed,
                              script or ScriptConfig())
    run_dir.write_config({
        "scenario": scenario.__dict__, "ppo": ppo.__dict__,
        "mode": mode.__dict__, "seed": seed, "env_steps": env_steps,
    })
    trainer.train_level(
        "standard-L3",
        scripted_controller("L3", trainer.opponent_rng, trainer.script),
        env_steps, horizon=horizon)
    save_checkpoint(run_dir.checkpoint_path("standard"), trainer.policy.store,
                    trainer.policy.config.to_dict())
    return trainer
