"""2D air-combat simulation with hierarchical multi-agent PPO training.

Subpackages: geometry and simulation core, the combat environment with its
observation/reward definitions, scripted curriculum opponents, a from-scratch
dense autodiff stack with the three policy architectures, PPO training with
curriculum/league/commander schedules, and the evaluation harness with its
command-line interface.
"""

__version__ = "0.1.0"
