"""Command-line entry points: training, evaluation, sweeps, trajectory
export, gradient checking.

Configuration comes from an optional JSON file (--config) with sections
"scenario", "script", "sim", "ppo"; individual keys are overridable with
repeated --set section.key=value flags. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, ScriptConfig, apply_overrides, parse_config
from .evaluation import (
    AlwaysFightActor,
    CTCEEvalActor,
    EvalReport,
    HierarchyEvalActor,
    LowLevelEvalActor,
    RandomActor,
    TrajectoryRecorder,
    evaluate,
    export_trajectory,
    scenario_sweep,
    standard_sweep_cells,
)
from .nn.gradcheck import run_standard_suite
from .nn.networks import NetworkConfig, PolicyNetwork
from .nn.params import load_checkpoint
from .scripted import ScriptedController
from .train import (
    CommanderVariant,
    LeagueArchive,
    LowLevelTrainer,
    PPOConfig,
    RunDir,
    SnapshotController,
    TrainMode,
    run_curriculum,
    train_commander,
    train_escape,
    train_standard_baseline,
)
from .train.trainer import curriculum_horizon, scripted_controller


def _load_config(args) -> dict:
    raw = {}
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text())
    if getattr(args, "set", None):
        raw = apply_overrides(raw, args.set)
    return parse_config(raw)


def _ppo(cfg: dict, **overrides) -> PPOConfig:
    base = cfg.get("ppo", {})
    merged = dict(base)
    merged.update(overrides)
    return PPOConfig(**merged)


def _load_policy(path: str) -> PolicyNetwork:
    arrays, config = load_checkpoint(path)
    policy = PolicyNetwork(NetworkConfig.from_dict(config))
    policy.store.load_arrays(arrays)
    return policy


def cmd_gradcheck(args) -> int:
    reports = run_standard_suite(draws=args.draws, seed=args.seed)
    ok = True
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"[{status}] {report.name}: max relative error "
              f"{report.max_rel_error:.3e} over {report.checks} coordinates "
              f"(tolerance {report.tolerance:.0e})")
        ok = ok and report.passed
    return 0 if ok else 1


def cmd_train_low(args) -> int:
    cfg = _load_config(args)
    run = RunDir(args.run_dir)
    script = cfg.get("script", ScriptConfig())
    seed = args.seed

    if args.policy == "standard":
        scenario = cfg.get("scenario") or ScenarioConfig(
            n_agents=3, n_opponents=3, horizon=300)
        train_standard_baseline(scenario, _ppo(cfg), run, seed, args.steps,
                                script=script)
        return 0

    scenario = cfg.get("scenario") or ScenarioConfig()
    archive = LeagueArchive(args.league_dir or (Path(args.run_dir) / "league"))
    if args.policy == "escape":
        phase2 = args.steps_phase2 if args.steps_phase2 is not None else args.steps // 2
        train_escape(scenario, _ppo(cfg), run, archive, seed,
                     steps_phase1=args.steps - phase2, steps_phase2=phase2,
                     variant=args.variant if args.variant != "base" else "base",
                     script=script)
        return 0

    mode = TrainMode(framework=args.framework, kind="fight",
                     reward_variant=args.variant,
                     attention=not args.fc_baseline,
                     fc_baseline=args.fc_baseline)
    if args.level == "curriculum":
        run_curriculum(scenario, _ppo(cfg), mode, run, archive, seed,
                       steps_per_level=args.steps, script=script)
        return 0

    trainer = LowLevelTrainer(scenario, _ppo(cfg), mode, run, seed, script)
    run.write_config({"scenario": scenario.__dict__, "mode": mode.__dict__,
                      "seed": seed, "level": args.level, "steps": args.steps})
    if args.level in ("L1", "L2", "L3"):
        controller = scripted_controller(args.level, trainer.opponent_rng, script)
    elif args.level == "L4":
        controller = SnapshotController(fight=archive.load("fight", "L3"),
                                        rng=trainer.opponent_rng,
                                        scenario=scenario)
    else:
        from .train.trainer import LeagueOpponentController

        controller = LeagueOpponentController(archive, "L5",
                                              trainer.opponent_rng, scenario)
    trainer.train_level(args.level, controller, args.steps,
                        horizon=curriculum_horizon(args.level))
    archive.save("fight", args.level, trainer.policy)
    return 0


def cmd_train_commander(args) -> int:
    cfg = _load_config(args)
    run = RunDir(args.run_dir)
    scenario = cfg.get("scenario") or ScenarioConfig.commander_training()
    if args.fight_ckpt and args.escape_ckpt:
        fight = _load_policy(args.fight_ckpt)
        escape = _load_policy(args.escape_ckpt)
    else:
        archive = LeagueArchive(args.league_dir)
        fight = archive.load("fight", "L5")
        escape = archive.load("escape", "")
    variant = CommanderVariant(senses=args.senses, opt=not args.no_opt,
                               assess=not args.no_assess,
                               shared=not args.glob, arch=args.arch)
    scenario = dataclasses.replace(scenario, commander_senses=args.senses)
    train_commander(scenario, _ppo(cfg, batch_size=args.batch_size), variant,
                    fight, escape, run, args.seed, args.steps)
    return 0


def _make_opponents(spec: str, scenario: ScenarioConfig, script: ScriptConfig,
                    seed: int):
    """Opponent spec: scripted:L3, snapshot:<fight.ckpt>, or
    snapshot:<fight.ckpt>:<escape.ckpt>:<p_fight>."""
    rng = np.random.default_rng(seed)
    if spec.startswith("scripted:"):
        return ScriptedController(spec.split(":", 1)[1], rng, script)
    if spec.startswith("snapshot:"):
        parts = spec.split(":")[1:]
        fight = _load_policy(parts[0])
        escape = _load_policy(parts[1]) if len(parts) > 1 and parts[1] else None
        p_fight = float(parts[2]) if len(parts) > 2 else 1.0
        return SnapshotController(fight=fight, escape=escape, rng=rng,
                                  fight_prob=p_fight, scenario=scenario)
    raise ValueError(f"unknown opponent spec {spec!r}")


def _make_actor(args, scenario: ScenarioConfig, seed: int):
    rng = np.random.default_rng(seed)
    if args.agent == "random":
        return RandomActor(rng)
    if args.agent in ("fight", "escape"):
        policy = _load_policy(args.agent_ckpt)
        return LowLevelEvalActor(policy, args.agent, rng,
                                 greedy=not args.stochastic)
    if args.agent == "standard":
        policy = _load_policy(args.agent_ckpt)
        return CTCEEvalActor(policy, "fight", rng, scenario.n_agents,
                             greedy=not args.stochastic)
    if args.agent == "hierarchy":
        commander = _load_policy(args.commander_ckpt)
        fight = _load_policy(args.fight_ckpt)
        escape = _load_policy(args.escape_ckpt)
        senses = commander.config.instance("cmd").obs_width
        senses = 3 if senses == 44 else 2
        arity = commander.config.instance("cmd").head_arities[0]
        return HierarchyEvalActor(commander, fight, escape, rng, senses=senses,
                                  opt=(arity == senses + 1),
                                  greedy=not args.stochastic)
    raise ValueError(f"unknown agent kind {args.agent!r}")


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    scenario = cfg.get("scenario") or ScenarioConfig()
    script = cfg.get("script", ScriptConfig())
    actor = _make_actor(args, scenario, args.seed)
    opponents = _make_opponents(args.opponent, scenario, script, args.seed + 1)
    if args.agent == "hierarchy" and isinstance(opponents, SnapshotController):
        actor.opponents = opponents
    recorder = None
    if args.trajectory_out:
        recorder = TrajectoryRecorder(args.trajectory_episode,
                                      header={"agent": args.agent,
                                              "opponent": args.opponent})
    report = evaluate(actor, opponents, scenario, args.episodes,
                      seed=args.seed, trajectory_recorder=recorder)
    if args.out:
        report.save(args.out)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if recorder is not None and recorder.log is not None:
        export_trajectory(recorder.log, args.trajectory_out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    base = cfg.get("scenario") or ScenarioConfig.commander_training()
    script = cfg.get("script", ScriptConfig())
    commander = _load_policy(args.commander_ckpt)
    fight = _load_policy(args.fight_ckpt)
    escape = _load_policy(args.escape_ckpt)
    cells = [c for c in standard_sweep_cells()
             if not args.cells or c["name"] in args.cells.split(",")]
    if not cells:
        raise ValueError(f"no sweep cells match {args.cells!r}")

    def actor_factory(scenario, seed):
        rng = np.random.default_rng(seed)
        return HierarchyEvalActor(commander, fight, escape, rng)

    def opponent_factory(scenario, seed):
        return SnapshotController(
            fight=fight, escape=escape, rng=np.random.default_rng(seed),
            fight_prob=scenario.opponent_fight_prob, scenario=scenario)

    results = scenario_sweep(cells, actor_factory, opponent_factory, base,
                             args.episodes, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, report in results:
        report.save(out_dir / f"{name}.json")
        print(f"{name}: win {report.win_rate:.1%} / draw {report.draw_rate:.1%}"
              f" / loss {report.loss_rate:.1%}")
    return 0


def cmd_export_traj(args) -> int:
    cfg = _load_config(args)
    scenario = cfg.get("scenario") or ScenarioConfig()
    script = cfg.get("script", ScriptConfig())
    actor = _make_actor(args, scenario, args.seed)
    opponents = _make_opponents(args.opponent, scenario, script, args.seed + 1)
    recorder = TrajectoryRecorder(0, header={"agent": args.agent,
                                             "opponent": args.opponent})
    evaluate(actor, opponents, scenario, 1, seed=args.seed,
             trajectory_recorder=recorder)
    export_trajectory(recorder.log, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dogfight",
        description="2D air-combat simulation and hierarchical PPO training")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="config override")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train-low", help="train fight/escape/standard policies")
    common(p)
    p.add_argument("--policy", choices=["fight", "escape", "standard"],
                   required=True)
    p.add_argument("--level", default="curriculum",
                   choices=["L1", "L2", "L3", "L4", "L5", "curriculum"])
    p.add_argument("--framework", default="ctde",
                   choices=["ctde", "ctce", "dtde"])
    p.add_argument("--variant", default="base",
                   help="reward variant: base|fripun|shfrac (fight), "
                        "base|dist|dist_speed (escape)")
    p.add_argument("--fc-baseline", action="store_true",
                   help="two 500-wide layers instead of the attention net")
    p.add_argument("--steps", type=int, required=True,
                   help="env steps (per level for the curriculum)")
    p.add_argument("--steps-phase2", type=int, default=None,
                   help="escape: env steps vs the frozen L5 fight policy")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--league-dir", default=None)
    p.set_defaults(func=cmd_train_low)

    p = sub.add_parser("train-commander", help="train the option commander")
    common(p)
    p.add_argument("--league-dir", help="archive holding fight L5 + escape")
    p.add_argument("--fight-ckpt")
    p.add_argument("--escape-ckpt")
    p.add_argument("--senses", type=int, default=2, choices=[2, 3])
    p.add_argument("--no-opt", action="store_true")
    p.add_argument("--no-assess", action="store_true")
    p.add_argument("--glob", action="store_true",
                   help="joint CTCE commander network")
    p.add_argument("--arch", default="gru", choices=["gru", "sa", "fc"])
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=1000)
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_train_commander)

    def eval_common(p):
        common(p)
        p.add_argument("--agent", required=True,
                       choices=["fight", "escape", "standard", "hierarchy",
                                "random"])
        p.add_argument("--agent-ckpt")
        p.add_argument("--commander-ckpt")
        p.add_argument("--fight-ckpt")
        p.add_argument("--escape-ckpt")
        p.add_argument("--opponent", default="scripted:L3",
                       help="scripted:<level> or snapshot:<fight>[:<escape>[:p]]")
        p.add_argument("--stochastic", action="store_true",
                       help="sample instead of argmax at evaluation")

    p = sub.add_parser("evaluate", help="run evaluation episodes")
    eval_common(p)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--out", help="write the EvalReport JSON here")
    p.add_argument("--trajectory-out", help="record one episode's trajectory")
    p.add_argument("--trajectory-episode", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="scenario grid evaluation (hierarchy)")
    common(p)
    p.add_argument("--commander-ckpt", required=True)
    p.add_argument("--fight-ckpt", required=True)
    p.add_argument("--escape-ckpt", required=True)
    p.add_argument("--cells", default="",
                   help="comma list from: " + ",".join(
                       c["name"] for c in standard_sweep_cells()))
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-traj", help="simulate one episode and export it")
    eval_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_traj)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
