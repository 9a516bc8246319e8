"""Actor-critic networks for the fight, escape, and commander policies.

Each policy owns one ParamStore. Fight and escape policies hold two network
instances (one per aircraft type, differing input/output widths); the
commander holds a single instance. A core layer is stored once per policy
and reused by every instance's actor and critic, so updates through any path
move all of them (the parameter-sharing mechanism the architectures rely
on). The fight actor tokenizes its observation into entity blocks and runs
single-head scaled dot-product self-attention over them; the commander actor
carries a GRU hidden state across its invocations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..observations import (
    FIGHT_HEADS,
    OBS_LAYOUTS,
    commander_block_widths,
    fight_token_splits,
)
from .autodiff import (
    Tensor,
    concat,
    log_softmax,
    matmul,
    sigmoid,
    softmax,
    stack,
    tanh,
    tmean,
    transpose_last2,
    tsum,
)
from .params import ParamStore, orthogonal_init

EMBED_WIDTH = 100


@dataclass(frozen=True)
class InstanceSpec:
    """One network instance: its input layout and output heads."""

    name: str  # parameter prefix, e.g. "ac1"
    obs_width: int
    head_arities: tuple[int, ...]
    critic_width: int
    token_splits: tuple[int, ...] | None = None  # attention tokens, or None


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture description for one policy's networks."""

    kind: str  # fight | escape | commander | ctce
    instances: tuple[InstanceSpec, ...]
    embed_width: int = EMBED_WIDTH
    recurrent: bool = False
    hidden_width: int = EMBED_WIDTH
    fc_baseline: bool = False  # two wide tanh layers, no attention/GRU
    fc_width: int = 500
    dtype: str = "float32"

    def instance(self, name: str) -> InstanceSpec:
        for spec in self.instances:
            if spec.name == name:
                return spec
        raise KeyError(f"no instance {name!r} in {self.kind} network")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "embed_width": self.embed_width,
            "recurrent": self.recurrent,
            "hidden_width": self.hidden_width,
            "fc_baseline": self.fc_baseline,
            "fc_width": self.fc_width,
            "dtype": self.dtype,
            "instances": [
                {
                    "name": s.name,
                    "obs_width": s.obs_width,
                    "head_arities": list(s.head_arities),
                    "critic_width": s.critic_width,
                    "token_splits": list(s.token_splits) if s.token_splits else None,
                }
                for s in self.instances
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        instances = tuple(
            InstanceSpec(
                name=item["name"],
                obs_width=item["obs_width"],
                head_arities=tuple(item["head_arities"]),
                critic_width=item["critic_width"],
                token_splits=tuple(item["token_splits"]) if item["token_splits"] else None,
            )
            for item in data["instances"]
        )
        return cls(kind=data["kind"], instances=instances,
                   embed_width=data["embed_width"], recurrent=data["recurrent"],
                   hidden_width=data["hidden_width"],
                   fc_baseline=data["fc_baseline"], fc_width=data["fc_width"],
                   dtype=data["dtype"])


def fight_config(critic_width: int, attention: bool = True,
                 fc_baseline: bool = False, dtype: str = "float32") -> NetworkConfig:
    instances = tuple(
        InstanceSpec(
            name=type_id.lower(),
            obs_width=OBS_LAYOUTS[f"fight-{type_id}"],
            head_arities=FIGHT_HEADS,
            critic_width=critic_width,
            token_splits=fight_token_splits(type_id) if attention and not fc_baseline else None,
        )
        for type_id in ("AC1", "AC2")
    )
    return NetworkConfig(kind="fight", instances=instances,
                         fc_baseline=fc_baseline, dtype=dtype)


def escape_config(critic_width: int, dtype: str = "float32") -> NetworkConfig:
    instances = tuple(
        InstanceSpec(
            name=type_id.lower(),
            obs_width=OBS_LAYOUTS[f"escape-{type_id}"],
            head_arities=FIGHT_HEADS,
            critic_width=critic_width,
        )
        for type_id in ("AC1", "AC2")
    )
    return NetworkConfig(kind="escape", instances=instances, dtype=dtype)


def commander_config(senses: int, critic_width: int, arch: str = "gru",
                     dtype: str = "float32") -> NetworkConfig:
    """Commander network; `arch` selects gru (default), sa, or fc."""
    obs_width = OBS_LAYOUTS[f"commander-n{senses}"]
    spec = InstanceSpec(
        name="cmd",
        obs_width=obs_width,
        head_arities=(senses + 1,),
        critic_width=critic_width,
        token_splits=commander_block_widths(senses) if arch == "sa" else None,
    )
    return NetworkConfig(kind="commander", instances=(spec,),
                         recurrent=(arch == "gru"),
                         fc_baseline=(arch == "fc"), dtype=dtype)


def ctce_config(kind: str, obs_width: int, head_arities: tuple[int, ...],
                critic_width: int, dtype: str = "float32") -> NetworkConfig:
    """Single joint network consuming team-concatenated observations and
    emitting every agent's heads."""
    spec = InstanceSpec(name="joint", obs_width=obs_width,
                        head_arities=head_arities, critic_width=critic_width)
    return NetworkConfig(kind=kind, instances=(spec,), dtype=dtype)


@dataclass
class ActorOutput:
    logits: list[Tensor]  # one [B, arity] tensor per head
    hidden: Tensor | None  # [B, H] for recurrent actors
    trace: list[Tensor] = field(default_factory=list)  # graph roots for backward


class PolicyNetwork:
    """Forward passes for one policy's actor/critic instances."""

    def __init__(self, config: NetworkConfig, store: ParamStore | None = None,
                 seed: int = 0):
        self.config = config
        self.store = store or ParamStore(dtype=config.dtype, seed=seed)
        self._build()

    # -- parameter construction ---------------------------------------------

    def _linear(self, name: str, fan_in: int, fan_out: int):
        self.store.get_or_create(
            f"{name}.W", lambda rng: orthogonal_init(rng, (fan_in, fan_out)))
        self.store.get_or_create(
            f"{name}.b", lambda rng: np.zeros(fan_out))

    def _build(self):
        cfg = self.config
        core_width = cfg.fc_width if cfg.fc_baseline else (
            cfg.hidden_width if cfg.recurrent else cfg.embed_width)
        # green core layer: one copy per policy, shared by every instance's
        # actor and critic
        self._linear("shared.core", core_width, core_width)
        for inst in cfg.instances:
            prefix = inst.name
            if cfg.fc_baseline:
                self._linear(f"{prefix}.embed", inst.obs_width, cfg.fc_width)
            elif inst.token_splits:
                for i, width in enumerate(inst.token_splits):
                    self._linear(f"{prefix}.embed{i}", width, cfg.embed_width)
                for proj in ("q", "k", "v"):
                    self.store.get_or_create(
                        f"{prefix}.attn.{proj}",
                        lambda rng: orthogonal_init(
                            rng, (cfg.embed_width, cfg.embed_width)))
            else:
                self._linear(f"{prefix}.embed", inst.obs_width, cfg.embed_width)
            if cfg.recurrent:
                for gate in ("z", "r", "n"):
                    self.store.get_or_create(
                        f"{prefix}.gru.W{gate}",
                        lambda rng: orthogonal_init(
                            rng, (cfg.embed_width, cfg.hidden_width)))
                    self.store.get_or_create(
                        f"{prefix}.gru.U{gate}",
                        lambda rng: orthogonal_init(
                            rng, (cfg.hidden_width, cfg.hidden_width)))
                    self.store.get_or_create(
                        f"{prefix}.gru.b{gate}",
                        lambda rng: np.zeros(cfg.hidden_width))
            for j, arity in enumerate(inst.head_arities):
                self._linear(f"{prefix}.head{j}", core_width, arity)
            critic_embed = cfg.fc_width if cfg.fc_baseline else cfg.embed_width
            if cfg.recurrent:
                critic_embed = cfg.hidden_width
            self._linear(f"{prefix}.critic.embed", inst.critic_width, critic_embed)
            self._linear(f"{prefix}.critic.value", core_width, 1)

    # -- forward helpers ------------------------------------------------------

    def _affine(self, name: str, x: Tensor) -> Tensor:
        return matmul(x, self.store[f"{name}.W"]) + self.store[f"{name}.b"]

    def _embed(self, inst: InstanceSpec, obs: np.ndarray) -> Tensor:
        cfg = self.config
        x = np.asarray(obs, dtype=self.store.dtype)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[-1] != inst.obs_width:
            raise ValueError(
                f"{cfg.kind}/{inst.name} expects obs width {inst.obs_width}, "
                f"got {x.shape[-1]}")
        if cfg.fc_baseline:
            return tanh(self._affine(f"{inst.name}.embed", Tensor(x)))
        if inst.token_splits:
            tokens = []
            offset = 0
            for i, width in enumerate(inst.token_splits):
                block = Tensor(x[:, offset:offset + width])
                tokens.append(tanh(self._affine(f"{inst.name}.embed{i}", block)))
                offset += width
            seq = stack(tokens, axis=1)  # [B, T, E]
            q = matmul(seq, self.store[f"{inst.name}.attn.q"])
            k = matmul(seq, self.store[f"{inst.name}.attn.k"])
            v = matmul(seq, self.store[f"{inst.name}.attn.v"])
            scores = matmul(q, transpose_last2(k)) * (1.0 / math.sqrt(cfg.embed_width))
            attended = matmul(softmax(scores, axis=-1), v)  # [B, T, E]
            return tmean(attended, axis=1)  # pool over entity tokens
        return tanh(self._affine(f"{inst.name}.embed", Tensor(x)))

    def _gru_step(self, prefix: str, x: Tensor, h: Tensor) -> Tensor:
        s = self.store
        z = sigmoid(matmul(x, s[f"{prefix}.gru.Wz"]) + matmul(h, s[f"{prefix}.gru.Uz"])
                    + s[f"{prefix}.gru.bz"])
        r = sigmoid(matmul(x, s[f"{prefix}.gru.Wr"]) + matmul(h, s[f"{prefix}.gru.Ur"])
                    + s[f"{prefix}.gru.br"])
        n = tanh(matmul(x, s[f"{prefix}.gru.Wn"])
                 + mul_t(r, matmul(h, s[f"{prefix}.gru.Un"]))
                 + s[f"{prefix}.gru.bn"])
        one_minus_z = 1.0 + (-1.0) * z
        return mul_t(one_minus_z, n) + mul_t(z, h)

    def initial_hidden(self, batch: int = 1) -> np.ndarray:
        return np.zeros((batch, self.config.hidden_width), dtype=self.store.dtype)

    def forward_actor(self, instance: str, obs: np.ndarray,
                      hidden: np.ndarray | Tensor | None = None) -> ActorOutput:
        """Head logits for a batch of observations. Recurrent actors consume
        and return a hidden state; others ignore it."""
        inst = self.config.instance(instance)
        features = self._embed(inst, obs)
        new_hidden = None
        if self.config.recurrent:
            if hidden is None:
                hidden = self.initial_hidden(features.shape[0])
            h = hidden if isinstance(hidden, Tensor) else Tensor(
                np.asarray(hidden, dtype=self.store.dtype))
            new_hidden = self._gru_step(inst.name, features, h)
            features = new_hidden
        core = tanh(self._affine("shared.core", features))
        logits = [self._affine(f"{inst.name}.head{j}", core)
                  for j in range(len(inst.head_arities))]
        bad = [lg for lg in logits if not np.all(np.isfinite(lg.data))]
        if bad:
            raise FloatingPointError("non-finite actor logits")
        return ActorOutput(logits=logits, hidden=new_hidden,
                           trace=logits + ([new_hidden] if new_hidden is not None else []))

    def forward_critic(self, instance: str, critic_input: np.ndarray) -> Tensor:
        """Scalar state value from the global (observations + actions)
        concatenation."""
        inst = self.config.instance(instance)
        x = np.asarray(critic_input, dtype=self.store.dtype)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[-1] != inst.critic_width:
            raise ValueError(
                f"{self.config.kind}/{instance} critic expects width "
                f"{inst.critic_width}, got {x.shape[-1]}")
        features = tanh(self._affine(f"{inst.name}.critic.embed", Tensor(x)))
        core = tanh(self._affine("shared.core", features))
        return self._affine(f"{inst.name}.critic.value", core)

    # -- action selection ------------------------------------------------------

    def act(self, instance: str, obs: np.ndarray, rng: np.random.Generator,
            hidden: np.ndarray | None = None, greedy: bool = False):
        """Sample one action tuple; returns (head samples, log_prob, entropy,
        new hidden array or None)."""
        out = self.forward_actor(instance, obs, hidden)
        logits = [lg.data[0] for lg in out.logits]
        samples, log_prob, entropy = sample_action(logits, rng, greedy=greedy)
        new_hidden = out.hidden.data if out.hidden is not None else None
        return samples, log_prob, entropy, new_hidden

    def log_prob_entropy(self, instance: str, obs_batch: np.ndarray,
                         action_batch: np.ndarray,
                         hidden_batch: np.ndarray | None = None,
                         head_mask: np.ndarray | None = None
                         ) -> tuple[Tensor, Tensor]:
        """Differentiable log-probabilities (summed over heads) and entropy
        for stored actions; used by the PPO surrogate.

        `head_mask` [B, n_heads] excludes heads that did not act (joint
        networks with destroyed agents)."""
        inst = self.config.instance(instance)
        out = self.forward_actor(instance, obs_batch, hidden_batch)
        log_probs = []
        entropies = []
        for j, logits in enumerate(out.logits):
            lsm = log_softmax(logits, axis=-1)
            actions = np.clip(action_batch[:, j].astype(int), 0,
                              inst.head_arities[j] - 1)
            onehot = np.eye(inst.head_arities[j], dtype=self.store.dtype)[actions]
            lp = tsum(lsm * onehot, axis=1)
            probs = softmax(logits, axis=-1)
            ent = -1.0 * tsum(probs * lsm, axis=1)
            if head_mask is not None:
                lp = lp * head_mask[:, j]
                ent = ent * head_mask[:, j]
            log_probs.append(lp)
            entropies.append(ent)
        total_lp = log_probs[0]
        total_ent = entropies[0]
        for lp in log_probs[1:]:
            total_lp = total_lp + lp
        for ent in entropies[1:]:
            total_ent = total_ent + ent
        return total_lp, total_ent


def mul_t(a: Tensor, b: Tensor) -> Tensor:
    return a * b


def sample_action(logits_per_head: list[np.ndarray], rng: np.random.Generator,
                  greedy: bool = False) -> tuple[tuple[int, ...], float, float]:
    """Sample one categorical action per head from raw logits.

    Returns the per-head indices, the summed log-probability of the sample,
    and the summed entropy of the head distributions.
    """
    samples = []
    log_prob = 0.0
    entropy = 0.0
    for logits in logits_per_head:
        logits = np.asarray(logits, dtype=np.float64)
        if not np.all(np.isfinite(logits)):
            raise FloatingPointError("non-finite logits in sample_action")
        shifted = logits - logits.max()
        probs = np.exp(shifted)
        probs /= probs.sum()
        if greedy:
            idx = int(np.argmax(probs))
        else:
            idx = int(rng.choice(len(probs), p=probs))
        samples.append(idx)
        log_prob += float(np.log(probs[idx]))
        entropy += float(-(probs * np.log(np.maximum(probs, 1e-12))).sum())
    return tuple(samples), log_prob, entropy


def backward(trace: list[Tensor], output_grads: list[np.ndarray]):
    """Seed the forward trace's outputs with gradients and propagate them to
    every parameter; gradients land on the ParamStore tensors."""
    from .autodiff import backward_from

    backward_from(trace, output_grads)
