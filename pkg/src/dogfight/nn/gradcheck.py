"""Central finite-difference verification of the analytic gradients.

Runs the real architectures (fight with attention, escape MLP, commander
GRU over a multi-step sequence) at float64, perturbs sampled parameter
coordinates by +/-h, and compares the numeric slope against the backward
pass. The scalar probe loss mixes every actor head and the critic so every
parameter influences the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, tmean, tsum
from .networks import (
    NetworkConfig,
    PolicyNetwork,
    commander_config,
    escape_config,
    fight_config,
)


@dataclass
class GradCheckReport:
    name: str
    checks: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def _probe_loss(net: PolicyNetwork, instance: str, obs: np.ndarray,
                critic_in: np.ndarray, seq_len: int = 1) -> Tensor:
    """Scalar loss touching every parameter: mean of all head logits chained
    through the observation sequence, plus the critic value."""
    hidden = None
    total = None
    for t in range(seq_len):
        out = net.forward_actor(instance, obs[t], hidden)
        hidden = out.hidden
        step_term = tmean(out.logits[0])
        for logits in out.logits[1:]:
            step_term = step_term + tmean(logits)
        total = step_term if total is None else total + step_term
    value = tsum(net.forward_critic(instance, critic_in))
    return total + value


def _relative_error(analytic: float, numeric: float) -> float:
    # Central differences on a loss of magnitude ~10 carry ~1e-11 absolute
    # noise at h=1e-4/float64, so gradients below ~1e-6 cannot be resolved
    # to 1e-4 relative; the denominator floor compares those absolutely.
    scale = max(abs(analytic), abs(numeric), 1e-6)
    return abs(analytic - numeric) / scale


def check_network(config: NetworkConfig, instance: str, *, draws: int = 100,
                  coords_per_draw: int = 8, h: float = 1e-4,
                  tolerance: float = 1e-4, seq_len: int = 1,
                  seed: int = 0) -> GradCheckReport:
    """Compare analytic and central-difference gradients on random draws.

    Every draw re-randomizes parameters and inputs; per draw a set of
    parameter coordinates is sampled such that each named array is hit at
    least once across the run.
    """
    rng = np.random.default_rng(seed)
    max_err = 0.0
    checks = 0
    for draw in range(draws):
        net = PolicyNetwork(config, seed=int(rng.integers(1 << 31)))
        store = net.store
        for tensor in store.params.values():
            tensor.data = rng.normal(0.0, 0.5, tensor.data.shape)
        inst = config.instance(instance)
        obs = rng.uniform(0.0, 1.0, (seq_len, 2, inst.obs_width))
        critic_in = rng.uniform(0.0, 1.0, (2, inst.critic_width))

        store.zero_grad()
        loss = _probe_loss(net, instance, obs, critic_in, seq_len)
        loss.backward()

        names = sorted(store.params)
        picks = [names[draw % len(names)]]  # cycle to cover every array
        picks += [names[int(rng.integers(len(names)))]
                  for _ in range(coords_per_draw - 1)]
        for name in picks:
            tensor = store.params[name]
            flat_idx = int(rng.integers(tensor.data.size))
            idx = np.unravel_index(flat_idx, tensor.data.shape)
            analytic = float(tensor.grad[idx]) if tensor.grad is not None else 0.0
            original = tensor.data[idx]
            tensor.data[idx] = original + h
            up = _probe_loss(net, instance, obs, critic_in, seq_len).item()
            tensor.data[idx] = original - h
            down = _probe_loss(net, instance, obs, critic_in, seq_len).item()
            tensor.data[idx] = original
            numeric = (up - down) / (2.0 * h)
            max_err = max(max_err, _relative_error(analytic, numeric))
            checks += 1
    return GradCheckReport(name=f"{config.kind}/{instance}", checks=checks,
                           max_rel_error=max_err, tolerance=tolerance)


def run_standard_suite(draws: int = 100, seed: int = 0) -> list[GradCheckReport]:
    """Gradient checks for the three production architectures at float64.

    The commander check runs the GRU over a five-step sequence so gradients
    flow through time.
    """
    reports = []
    fight = fight_config(critic_width=40, dtype="float64")
    reports.append(check_network(fight, "ac1", draws=draws, seed=seed))
    escape = escape_config(critic_width=40, dtype="float64")
    reports.append(check_network(escape, "ac2", draws=draws, seed=seed + 1))
    commander = commander_config(senses=2, critic_width=40, dtype="float64")
    reports.append(check_network(commander, "cmd", draws=draws, seq_len=5,
                                 seed=seed + 2))
    return reports
