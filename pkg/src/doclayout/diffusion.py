"""Discrete-sequence denoising diffusion over layout tokens.

Token sequences are embedded into a continuous latent, noised through the
forward Gaussian chain, and a small bidirectional transformer learns to
predict the clean latent from any step. Sampling runs the reverse chain
from pure noise and a rounding head (tied to the embedding table, with
learned biases) maps the final latent back to tokens; structural repair
then turns tokens into layouts.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from .core import (ClassSchema, DequantReport, Layout, TokenSequence,
                   Vocabulary, dequantize_with_report, quantize)
from .errors import FormatError, NumericalError, ValidationError
from .schedule import NoiseSchedule, posterior_variance

__all__ = [
    "SequenceSpec",
    "DenoiserConfig",
    "TrainConfig",
    "Denoiser",
    "encode_corpus",
    "embed_tokens",
    "round_latent",
    "loss",
    "train",
    "sample",
    "SampleStats",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class SequenceSpec:
    """Everything needed to move between layouts and fixed-length tokens."""

    vocab: Vocabulary
    schema: ClassSchema
    page: tuple[float, float]
    max_len: int = 130

    def __post_init__(self):
        if self.max_len < 7:
            raise ValidationError("max_len must fit at least one box (7 tokens)")

    @property
    def max_boxes(self) -> int:
        return (self.max_len - 2) // 5

    def to_dict(self) -> dict:
        return {
            "grid_size": self.vocab.grid_size,
            "class_names": list(self.schema.names),
            "page": list(self.page),
            "max_len": self.max_len,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceSpec":
        schema = ClassSchema(tuple(d["class_names"]))
        return cls(
            vocab=Vocabulary(int(d["grid_size"]), schema.K),
            schema=schema,
            page=tuple(d["page"]),
            max_len=int(d["max_len"]),
        )


@dataclass(frozen=True)
class DenoiserConfig:
    vocab_size: int
    d: int = 32
    width: int = 128
    layers: int = 4
    heads: int = 4
    max_len: int = 130
    tie_rounding: bool = True

    def __post_init__(self):
        if self.d < 8:
            raise ValidationError("embedding width d must be at least 8")
        if self.width % 2:
            raise ValidationError("transformer width must be even")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    max_steps: int = 2000
    seed: int = 0
    T: int = 2000
    d: int = 32
    schedule: str = "sqrt"

    def __post_init__(self):
        if self.lr <= 0:
            raise ValidationError("learning rate must be positive")
        if self.T < 1:
            raise ValidationError("T must be at least 1")


def _sinusoidal(t: torch.Tensor, width: int) -> torch.Tensor:
    half = width // 2
    freqs = torch.exp(
        -math.log(10_000.0) * torch.arange(half, dtype=torch.float32) / max(half - 1, 1)
    )
    ang = t.float()[:, None] * freqs[None, :]
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)


class _Block(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(width)
        self.attn = nn.MultiheadAttention(width, heads, batch_first=True)
        self.ln2 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, 4 * width), nn.GELU(), nn.Linear(4 * width, width)
        )

    def forward(self, h):
        a = self.ln1(h)
        h = h + self.attn(a, a, a, need_weights=False)[0]
        return h + self.mlp(self.ln2(h))


class Denoiser(nn.Module):
    """Embedding table, clean-latent predictor, and rounding head."""

    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.cfg = cfg
        self.embedding = nn.Embedding(cfg.vocab_size, cfg.d)
        self.in_proj = nn.Linear(cfg.d, cfg.width)
        self.pos_emb = nn.Parameter(torch.zeros(1, cfg.max_len, cfg.width))
        self.time_mlp = nn.Sequential(
            nn.Linear(cfg.width, cfg.width), nn.GELU(), nn.Linear(cfg.width, cfg.width)
        )
        self.blocks = nn.ModuleList(_Block(cfg.width, cfg.heads) for _ in range(cfg.layers))
        self.out_norm = nn.LayerNorm(cfg.width)
        self.out_proj = nn.Linear(cfg.width, cfg.d)
        if cfg.tie_rounding:
            # bias -|E_v|^2/2 makes argmax rounding the exact nearest-row
            # decoder at initialization
            with torch.no_grad():
                bias0 = -0.5 * (self.embedding.weight ** 2).sum(dim=1)
            self.round_bias = nn.Parameter(bias0.clone())
            self.round_proj = None
        else:
            self.round_bias = None
            self.round_proj = nn.Linear(cfg.d, cfg.vocab_size)

    def rounding_logits(self, x: torch.Tensor) -> torch.Tensor:
        if self.cfg.tie_rounding:
            return x @ self.embedding.weight.t() + self.round_bias
        return self.round_proj(x)

    def predict_x0(self, x_t: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        h = self.in_proj(x_t) + self.pos_emb[:, : x_t.shape[1], :]
        h = h + self.time_mlp(_sinusoidal(t, self.cfg.width))[:, None, :]
        for blk in self.blocks:
            h = blk(h)
        return self.out_proj(self.out_norm(h))


def encode_corpus(layouts, spec: SequenceSpec) -> tuple[np.ndarray, int]:
    """Quantize and pad layouts to an (N, max_len) id matrix.

    Layouts with more boxes than fit are truncated; the count of truncated
    layouts is returned alongside.
    """
    rows = []
    truncated = 0
    for lay in layouts:
        if len(lay) > spec.max_boxes:
            truncated += 1
            lay = lay.replace_elements(lay.elements[: spec.max_boxes])
        seq = quantize(lay, spec.vocab).padded(spec.max_len, spec.vocab)
        rows.append(seq.tokens)
    if not rows:
        raise ValidationError("cannot encode an empty corpus")
    return np.asarray(rows, dtype=np.int64), truncated


def embed_tokens(model: Denoiser, tokens) -> torch.Tensor:
    """Table lookup: token ids -> (len, d) latent."""
    ids = torch.as_tensor(
        tokens.tokens if isinstance(tokens, TokenSequence) else tokens,
        dtype=torch.long,
    )
    with torch.no_grad():
        return model.embedding(ids)


def round_latent(model: Denoiser, x0: torch.Tensor, page) -> TokenSequence:
    """Argmax rounding of a (len, d) latent back to a token sequence."""
    with torch.no_grad():
        ids = model.rounding_logits(x0).argmax(dim=-1)
    return TokenSequence(tuple(int(i) for i in ids), (float(page[0]), float(page[1])))


def _schedule_coefs(schedule: NoiseSchedule):
    """Per-step tensors used by the loss and the sampler."""
    ab = torch.from_numpy(np.array(schedule.alpha_bar, dtype=np.float64)).float()
    sqrt_ab = ab.sqrt()
    sqrt_om = (1.0 - ab).clamp(min=0.0).sqrt()
    # weight of (x0_hat - x0) in the posterior-mean gap; the t = 1 entry is
    # the decoder step where the target is x0 itself
    coef = np.zeros(schedule.T + 1)
    coef[1] = 1.0
    for t in range(2, schedule.T + 1):
        coef[t] = (
            np.sqrt(schedule.alpha_bar[t - 1]) * schedule.beta[t]
            / (1.0 - schedule.alpha_bar[t])
        )
    return sqrt_ab, sqrt_om, torch.from_numpy(coef).float()


def loss(
    ids: torch.Tensor,
    model: Denoiser,
    schedule: NoiseSchedule,
    generator: torch.Generator,
    coefs=None,
) -> tuple[torch.Tensor, dict]:
    """Stochastic training objective for one batch of token ids.

    Draws one step t per example and combines the posterior-mean regression,
    the embedding-consistency anchor (clean-latent prediction against E(s)),
    and the rounding cross-entropy.
    """
    if ids.ndim != 2 or ids.shape[0] == 0:
        raise ValidationError("loss expects a nonempty (B, L) id batch")
    sqrt_ab, sqrt_om, coef = coefs if coefs is not None else _schedule_coefs(schedule)
    b = ids.shape[0]

    e_s = model.embedding(ids)
    sigma0 = float(np.sqrt(1.0 - schedule.alpha_bar[1]))
    x0 = e_s + sigma0 * torch.randn(e_s.shape, generator=generator)

    t = torch.randint(1, schedule.T + 1, (b,), generator=generator)
    eps = torch.randn(x0.shape, generator=generator)
    x_t = sqrt_ab[t][:, None, None] * x0 + sqrt_om[t][:, None, None] * eps

    x0_hat = model.predict_x0(x_t, t)
    # || mu_theta - mu_hat ||^2 collapses to a t-weighted gap between the
    # predicted and true clean latents
    gap = (x0_hat - x0) * coef[t][:, None, None]
    mse_term = (gap ** 2).mean()
    embed_term = ((x0_hat - e_s) ** 2).mean()
    logits = model.rounding_logits(x0)
    round_term = nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), ids.reshape(-1)
    )
    total = mse_term + embed_term + round_term
    return total, {
        "mse_term": float(mse_term.detach()),
        "round_term": float(round_term.detach()),
        "embed_term": float(embed_term.detach()),
    }


def train(
    token_matrix: np.ndarray,
    cfg: TrainConfig,
    model_cfg: DenoiserConfig | None = None,
    spec: SequenceSpec | None = None,
    log_fp=None,
):
    """Train a denoiser; deterministic given the seed.

    Returns ``(model, schedule, log_rows)`` where each log row is
    ``(step, loss, mse_term, round_term, embed_term)``. The optional
    ``log_fp`` receives the same rows as CSV while training runs.
    """
    tokens = np.asarray(token_matrix, dtype=np.int64)
    if tokens.ndim != 2 or tokens.shape[0] == 0:
        raise ValidationError("training corpus must be a nonempty (N, L) matrix")
    if model_cfg is None:
        if spec is None:
            raise ValidationError("need a DenoiserConfig or a SequenceSpec")
        model_cfg = DenoiserConfig(
            vocab_size=spec.vocab.size, d=cfg.d, max_len=spec.max_len
        )
    if tokens.shape[1] != model_cfg.max_len:
        raise ValidationError(
            f"token rows have length {tokens.shape[1]}, model expects {model_cfg.max_len}"
        )

    torch.manual_seed(cfg.seed)
    model = Denoiser(model_cfg)
    schedule = NoiseSchedule.make(cfg.schedule, cfg.T)
    gen = torch.Generator().manual_seed(cfg.seed + 1)
    batch_rng = np.random.default_rng(cfg.seed + 2)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    coefs = _schedule_coefs(schedule)

    if log_fp is not None:
        log_fp.write("step,loss,mse_term,round_term,embed_term\n")
    rows = []
    data = torch.from_numpy(tokens)
    for step in range(1, cfg.max_steps + 1):
        idx = batch_rng.integers(0, len(tokens), size=cfg.batch_size)
        batch = data[torch.from_numpy(idx)]
        total, parts = loss(batch, model, schedule, gen, coefs)
        total_val = float(total.detach())
        if not math.isfinite(total_val):
            raise NumericalError(
                f"training diverged at step {step}: loss={total_val}, "
                f"parts={parts}, lr={cfg.lr}"
            )
        opt.zero_grad()
        total.backward()
        opt.step()
        row = (step, total_val, parts["mse_term"], parts["round_term"],
               parts["embed_term"])
        rows.append(row)
        if log_fp is not None:
            log_fp.write(",".join(repr(v) for v in row) + "\n")
    return model, schedule, rows


@dataclass(frozen=True)
class SampleStats:
    count: int
    valid: int
    dropped_groups: int

    @property
    def validity_rate(self) -> float:
        return self.valid / self.count if self.count else 0.0


def sample(
    model: Denoiser,
    schedule: NoiseSchedule,
    count: int,
    spec: SequenceSpec,
    seed: int = 0,
    batch_size: int = 64,
    clamp: bool = True,
) -> tuple[list[Layout], SampleStats]:
    """Ancestral sampling from pure noise, then rounding and repair.

    ``clamp`` projects the predicted clean latent onto the nearest embedding
    row at every step, which keeps the chain on the token manifold and
    substantially improves rounding stability.
    """
    if count < 0:
        raise ValidationError("count must be nonnegative")
    gen = torch.Generator().manual_seed(seed)
    sqrt_ab, _sqrt_om, coef = _schedule_coefs(schedule)
    sigmas = [0.0, 0.0] + [
        math.sqrt(posterior_variance(t, schedule)) for t in range(2, schedule.T + 1)
    ]
    coef_xt = np.zeros(schedule.T + 1)
    for t in range(2, schedule.T + 1):
        coef_xt[t] = (
            np.sqrt(schedule.alpha[t]) * (1.0 - schedule.alpha_bar[t - 1])
            / (1.0 - schedule.alpha_bar[t])
        )

    layouts: list[Layout] = []
    valid = 0
    dropped = 0
    model.eval()
    with torch.no_grad():
        remaining = count
        while remaining > 0:
            b = min(batch_size, remaining)
            remaining -= b
            x = torch.randn((b, spec.max_len, model.cfg.d), generator=gen)
            for t in range(schedule.T, 0, -1):
                t_vec = torch.full((b,), t, dtype=torch.long)
                x0_hat = model.predict_x0(x, t_vec)
                if clamp:
                    ids = model.rounding_logits(x0_hat).argmax(dim=-1)
                    x0_hat = model.embedding(ids)
                if t >= 2:
                    mu = float(coef[t]) * x0_hat + float(coef_xt[t]) * x
                    x = mu + sigmas[t] * torch.randn(x.shape, generator=gen)
                else:
                    x = x0_hat
            ids = model.rounding_logits(x).argmax(dim=-1)
            for row in ids:
                seq = TokenSequence(tuple(int(i) for i in row), spec.page)
                layout, report = dequantize_with_report(
                    seq, spec.vocab, spec.schema, spec.page
                )
                layouts.append(layout)
                valid += int(report.clean)
                dropped += report.dropped_groups
    return layouts, SampleStats(count=count, valid=valid, dropped_groups=dropped)


def save_checkpoint(
    path,
    model: Denoiser,
    schedule: NoiseSchedule,
    train_cfg: TrainConfig,
    spec: SequenceSpec,
) -> None:
    """Self-describing npz container: configs as JSON, tensors as arrays."""
    meta = {
        "model_cfg": asdict(model.cfg),
        "train_cfg": asdict(train_cfg),
        "spec": spec.to_dict(),
        "schedule_kind": schedule.kind,
        "T": schedule.T,
    }
    arrays = {
        f"param/{k}": v.detach().numpy() for k, v in model.state_dict().items()
    }
    arrays["schedule/beta"] = np.asarray(schedule.beta)
    np.savez_compressed(path, meta=json.dumps(meta), **arrays)


def load_checkpoint(path):
    """Returns ``(model, schedule, train_cfg, spec)``."""
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            state = {
                k[len("param/"):]: torch.from_numpy(data[k])
                for k in data.files
                if k.startswith("param/")
            }
            beta = data["schedule/beta"]
    except (KeyError, ValueError, OSError, io.UnsupportedOperation) as exc:
        raise FormatError(f"unreadable checkpoint {path}: {exc}") from exc
    model_cfg = DenoiserConfig(**meta["model_cfg"])
    model = Denoiser(model_cfg)
    model.load_state_dict(state)
    schedule = NoiseSchedule.from_betas(beta[1:], kind=meta["schedule_kind"])
    train_cfg = TrainConfig(**meta["train_cfg"])
    spec = SequenceSpec.from_dict(meta["spec"])
    return model, schedule, train_cfg, spec
