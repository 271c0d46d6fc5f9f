"""Minimal neural toolkit: fixed-architecture MLPs with exact reverse-mode
gradients, layer normalization, LeakyReLU, Adam, and squashed-Gaussian policy
heads.  Everything is float64; there is no autodiff graph, just the handful of
architectures this project needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

LEAKY_SLOPE = 0.01
NORM_EPS = 1e-5
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
# Policy-head guards.  The std floor and pre-squash mean bound keep the
# squashed-Gaussian log-density bounded, which breaks the entropy-collapse /
# reward-explosion feedback loop the score-function estimator is prone to.
# The floor sits where a floor-pinned policy still has entropy above the
# temperature target, so the entropy term stays a small bonus, not a bleed.
LOG_STD_MIN = -1.0
LOG_STD_MAX = 2.0
MEAN_BOUND = 3.0
SCORE_CLIP = 10.0  # per-sample standardized-residual clip in the actor gradient

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DivergenceError(RuntimeError):
    """Raised when a parameter update produces a non-finite value."""


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "leaky_relu"  # leaky_relu | identity | tanh
    normalize: bool = False

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dims must be >= 1")
        if self.activation not in ("leaky_relu", "identity", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")


def _init_layer(spec: LayerSpec, rng: np.random.Generator) -> dict:
    # Uniform fan-in scaling, same convention as the usual Linear default.
    bound = 1.0 / math.sqrt(spec.in_dim)
    layer = {
        "W": rng.uniform(-bound, bound, size=(spec.out_dim, spec.in_dim)),
        "b": rng.uniform(-bound, bound, size=spec.out_dim),
    }
    if spec.normalize:
        layer["gain"] = np.ones(spec.out_dim)
        layer["shift"] = np.zeros(spec.out_dim)
    return layer


class Mlp:
    """Feed-forward network: per layer, affine -> optional layernorm -> activation.

    Holds its own Adam state; ``adam_step`` mutates parameters in place
    (single-writer contract).  ``forward``/``backward`` are pure given params.
    """

    def __init__(self, specs: Sequence[LayerSpec], rng: np.random.Generator):
        self.specs = list(specs)
        for a, b in zip(self.specs, self.specs[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError("layer dims do not chain")
        self.layers = [_init_layer(s, rng) for s in self.specs]
        self.adam_m = [{k: np.zeros_like(v) for k, v in l.items()} for l in self.layers]
        self.adam_v = [{k: np.zeros_like(v) for k, v in l.items()} for l in self.layers]
        self.adam_t = 0

    @classmethod
    def from_dims(
        cls,
        dims: Sequence[int],
        rng: np.random.Generator,
        *,
        hidden_normalize: bool = True,
        out_activation: str = "identity",
    ) -> "Mlp":
        """Network from unit dimensions, e.g. (42, 128, 16).

        Hidden layers get layernorm + LeakyReLU; the output layer is plain
        affine unless ``out_activation`` says otherwise.
        """
        specs = []
        for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            last = i == len(dims) - 2
            specs.append(
                LayerSpec(
                    a,
                    b,
                    activation=out_activation if last else "leaky_relu",
                    normalize=False if last else hidden_normalize,
                )
            )
        return cls(specs, rng)

    @property
    def in_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.specs[-1].out_dim

    def forward(self, x: np.ndarray, want_cache: bool = False):
        """Evaluate the network on a vector or a (batch, in_dim) matrix."""
        squeeze = x.ndim == 1
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if h.shape[1] != self.in_dim:
            raise ValueError(f"input dim {h.shape[1]} != {self.in_dim}")
        cache = {"input": h, "layers": [], "squeeze": squeeze} if want_cache else None
        for spec, layer in zip(self.specs, self.layers):
            z = h @ layer["W"].T + layer["b"]
            if spec.normalize:
                mu = z.mean(axis=1, keepdims=True)
                centered = z - mu
                var = (centered**2).mean(axis=1, keepdims=True)
                inv_std = 1.0 / np.sqrt(var + NORM_EPS)
                xhat = centered * inv_std
                pre = xhat * layer["gain"] + layer["shift"]
            else:
                xhat = None
                inv_std = None
                pre = z
            if spec.activation == "leaky_relu":
                out = np.where(pre > 0.0, pre, LEAKY_SLOPE * pre)
            elif spec.activation == "tanh":
                out = np.tanh(pre)
            else:
                out = pre
            if cache is not None:
                cache["layers"].append(
                    {"x": h, "xhat": xhat, "inv_std": inv_std, "pre": pre, "out": out}
                )
            h = out
        result = h[0] if squeeze else h
        if want_cache:
            return result, cache
        return result

    def backward(self, cache: dict, grad_out: np.ndarray):
        """Exact gradients of the cached forward pass.

        Returns (param_grads, input_grad) where param_grads mirrors the layer
        structure.
        """
        g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
        grads = [None] * len(self.layers)
        for i in reversed(range(len(self.layers))):
            spec, layer, lc = self.specs[i], self.layers[i], cache["layers"][i]
            if spec.activation == "leaky_relu":
                g = g * np.where(lc["pre"] > 0.0, 1.0, LEAKY_SLOPE)
            elif spec.activation == "tanh":
                g = g * (1.0 - lc["out"] ** 2)
            layer_grads = {}
            if spec.normalize:
                xhat = lc["xhat"]
                layer_grads["gain"] = (g * xhat).sum(axis=0)
                layer_grads["shift"] = g.sum(axis=0)
                gx = g * layer["gain"]
                # Standard layernorm backward (biased variance).
                g = lc["inv_std"] * (
                    gx
                    - gx.mean(axis=1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=1, keepdims=True)
                )
            layer_grads["W"] = g.T @ lc["x"]
            layer_grads["b"] = g.sum(axis=0)
            grads[i] = layer_grads
            g = g @ layer["W"]
        input_grad = g[0] if cache["squeeze"] else g
        return grads, input_grad

    def zero_grads(self) -> list[dict]:
        return [{k: np.zeros_like(v) for k, v in l.items()} for l in self.layers]

    @staticmethod
    def add_grads(acc: list[dict], grads: list[dict]) -> None:
        for a, g in zip(acc, grads):
            for k in a:
                a[k] += g[k]

    def adam_step(self, grads: list[dict], lr: float) -> None:
        """Bias-corrected Adam update in place; raises on non-finite results."""
        if lr < 0.0:
            raise ValueError("lr must be nonnegative")
        if lr == 0.0:
            return
        self.adam_t += 1
        c1 = 1.0 - ADAM_BETA1**self.adam_t
        c2 = 1.0 - ADAM_BETA2**self.adam_t
        with np.errstate(invalid="ignore"):
            for layer, m, v, g in zip(self.layers, self.adam_m, self.adam_v, grads):
                for k in layer:
                    gk = g[k]
                    m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * gk
                    v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * gk**2
                    layer[k] -= lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + ADAM_EPS)
                    if not np.all(np.isfinite(layer[k])):
                        raise DivergenceError(f"non-finite parameter in {k} after Adam step")

    # --- parameter plumbing -------------------------------------------------

    def named_params(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for k, v in layer.items():
                out[f"{prefix}layer{i}/{k}"] = v
        return out

    def load_named_params(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        for i, layer in enumerate(self.layers):
            for k in layer:
                src = arrays[f"{prefix}layer{i}/{k}"]
                if src.shape != layer[k].shape:
                    raise ValueError(f"shape mismatch for {prefix}layer{i}/{k}")
                layer[k] = src.astype(np.float64).copy()

    def copy(self) -> "Mlp":
        clone = Mlp(self.specs, np.random.default_rng(0))
        clone.load_named_params(self.named_params())
        clone.adam_m = [{k: v.copy() for k, v in d.items()} for d in self.adam_m]
        clone.adam_v = [{k: v.copy() for k, v in d.items()} for d in self.adam_v]
        clone.adam_t = self.adam_t
        return clone

    def params_hash(self) -> int:
        acc = 0
        for name in sorted(self.named_params()):
            acc ^= hash(self.named_params()[name].tobytes())
        return acc


def soft_update(target: Mlp, source: Mlp, rate: float) -> None:
    """target <- (1 - rate) * target + rate * source."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    for tl, sl in zip(target.layers, source.layers):
        for k in tl:
            tl[k] = (1.0 - rate) * tl[k] + rate * sl[k]


# --- squashed-Gaussian policy head ------------------------------------------


@dataclass(frozen=True)
class PolicyHead:
    """Pre-squash Gaussian parameters; log_std already clamped."""

    mean: np.ndarray
    log_std: np.ndarray


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _tanh_log_jacobian(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2), stable for large |u|
    return 2.0 * (math.log(2.0) - u - _softplus(-2.0 * u))


def squashed_log_prob(head: PolicyHead, bounds: np.ndarray, u_raw: np.ndarray) -> float:
    """Log density of action = bounds * tanh(u_raw) under the head's Gaussian."""
    std = np.exp(head.log_std)
    xi = (u_raw - head.mean) / std
    gauss = -0.5 * xi**2 - head.log_std - _LOG_SQRT_2PI
    return float(np.sum(gauss - _tanh_log_jacobian(u_raw) - np.log(bounds)))


def policy_sample(
    head: PolicyHead, bounds: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Sample an action in (-bounds, bounds) and return it with its log density."""
    std = np.exp(head.log_std)
    u = head.mean + std * rng.standard_normal(head.mean.shape)
    action = bounds * np.tanh(u)
    return action, squashed_log_prob(head, bounds, u)


def policy_deterministic(head: PolicyHead, bounds: np.ndarray) -> np.ndarray:
    return bounds * np.tanh(head.mean)


def raw_action(action: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Invert the squash: clip slightly inside (-1, 1) before atanh."""
    ratio = np.clip(action / bounds, -1.0 + 1e-12, 1.0 - 1e-12)
    return np.arctanh(ratio)


class GaussianPolicy:
    """Per-robot actor: MLP trunk producing a squashed-Gaussian head.

    The trunk output splits into mean and raw log_std (clamped to
    [LOG_STD_MIN, LOG_STD_MAX]).  Action bounds scale the tanh output.
    """

    def __init__(
        self,
        obs_dim: int,
        bounds: np.ndarray,
        hidden: Sequence[int],
        rng: np.random.Generator,
    ):
        self.bounds = np.asarray(bounds, dtype=np.float64)
        self.act_dim = self.bounds.size
        self.net = Mlp.from_dims((obs_dim, *hidden, 2 * self.act_dim), rng)
        # Small head init: start near mean 0 / std ~0.6 so the squash stays in
        # its responsive range and early exploration is not saturated.
        self.net.layers[-1]["W"] *= 0.01
        self.net.layers[-1]["b"] *= 0.0
        self.net.layers[-1]["b"][self.act_dim :] = -0.5

    def head(self, obs: np.ndarray, want_cache: bool = False):
        if want_cache:
            out, cache = self.net.forward(obs, want_cache=True)
        else:
            out = self.net.forward(obs)
            cache = None
        if out.ndim == 1:
            raw_mean, raw_log_std = out[: self.act_dim], out[self.act_dim :]
        else:
            raw_mean, raw_log_std = out[:, : self.act_dim], out[:, self.act_dim :]
        # Soft-bound the pre-squash mean: the action range is unaffected
        # (tanh(MEAN_BOUND) ~ 0.995) but the log-density stays bounded.
        mean = MEAN_BOUND * np.tanh(raw_mean / MEAN_BOUND)
        log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
        h = PolicyHead(mean=mean, log_std=log_std)
        if want_cache:
            return h, {"net": cache, "raw_log_std": raw_log_std, "mean": mean}
        return h

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        return policy_sample(self.head(obs), self.bounds, rng)

    def act_deterministic(self, obs: np.ndarray) -> np.ndarray:
        return policy_deterministic(self.head(obs), self.bounds)

    def sample_batch(
        self, obs: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized sampling: obs (B, D) -> actions (B, A), log_probs (B,)."""
        head = self.head(obs)
        std = np.exp(head.log_std)
        u = head.mean + std * rng.standard_normal(head.mean.shape)
        actions = self.bounds * np.tanh(u)
        xi = (u - head.mean) / std
        gauss = -0.5 * xi**2 - head.log_std - _LOG_SQRT_2PI
        log_probs = np.sum(gauss - _tanh_log_jacobian(u) - np.log(self.bounds), axis=1)
        return actions, log_probs

    def log_prob_batch(self, obs: np.ndarray, actions: np.ndarray):
        """Log densities of stored actions, with a cache for ``backward_log_prob``."""
        head, cache = self.head(obs, want_cache=True)
        u = raw_action(actions, self.bounds)
        std = np.exp(head.log_std)
        xi = (u - head.mean) / std
        gauss = -0.5 * xi**2 - head.log_std - _LOG_SQRT_2PI
        log_probs = np.sum(gauss - _tanh_log_jacobian(u) - np.log(self.bounds), axis=1)
        cache.update({"xi": xi, "std": std, "log_std": head.log_std})
        return log_probs, cache

    def backward_log_prob(
        self, cache: dict, dlogp: np.ndarray, head_reg: float = 0.0
    ) -> list[dict]:
        """Gradients of sum(dlogp * log_prob) w.r.t. trunk parameters.

        For a fixed stored action: d logp / d mean = xi / std and
        d logp / d log_std = xi^2 - 1 (clamp zeroes the latter at the rails);
        the mean gradient chains through the soft bound.  Replayed actions far
        outside the current policy produce enormous xi, so the standardized
        residual is clipped at SCORE_CLIP inside the gradient only.
        ``head_reg`` adds an L2 penalty on the raw head outputs.
        """
        d = dlogp[:, None]
        xi = np.clip(cache["xi"], -SCORE_CLIP, SCORE_CLIP)
        dmean = d * xi / cache["std"]
        # chain through mean = B tanh(raw/B): d mean / d raw = 1 - (mean/B)^2
        dmean = dmean * (1.0 - (cache["mean"] / MEAN_BOUND) ** 2)
        dlog_std = d * (xi**2 - 1.0)
        raw = cache["raw_log_std"]
        dlog_std = dlog_std * ((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX))
        grad_out = np.concatenate([dmean, dlog_std], axis=1)
        if head_reg > 0.0:
            b = grad_out.shape[0]
            raw_mean = cache["net"]["layers"][-1]["out"][:, : self.act_dim]
            grad_out += (2.0 * head_reg / b) * np.concatenate([raw_mean, raw], axis=1)
        grads, _ = self.net.backward(cache["net"], grad_out)
        return grads

    def adam_step(self, grads: list[dict], lr: float) -> None:
        self.net.adam_step(grads, lr)

    def named_params(self, prefix: str = "") -> dict[str, np.ndarray]:
        return self.net.named_params(prefix)

    def load_named_params(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        self.net.load_named_params(arrays, prefix)


# --- checkpoint container -----------------------------------------------------


def save_checkpoint(path: str, arrays: dict[str, np.ndarray], manifest: dict) -> None:
    """Named-tensor container: float64 arrays + a JSON manifest entry."""
    payload = {name: np.ascontiguousarray(a) for name, a in arrays.items()}
    payload["__manifest__"] = np.frombuffer(
        json.dumps(manifest).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **payload)


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(path) as data:
        manifest = json.loads(bytes(data["__manifest__"]).decode("utf-8"))
        arrays = {k: data[k].copy() for k in data.files if k != "__manifest__"}
    return arrays, manifest
