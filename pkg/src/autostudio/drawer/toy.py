"""Seeded, deterministic stand-in for the diffusion backbone.

Everything is fixed by (seed, dims): projection weights, hash-based token
embeddings, and a linear pixel/latent codec (8x8 block means, no learned
VAE). That makes every equation in the attention core exactly testable and
keeps full draws under a second.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from ..attention import (
    ProjectionWeights,
    SubjectContext,
    cross_attention,
    masked_subject_attention,
    parallel_fuse,
)
from ..registry import EmbeddingVector
from .schedule import DiffusionSchedule, derive_seed

_TOKEN_RE = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class ToyParams:
    """Dimensions of the toy model; defaults keep runtimes desk-scale."""

    downsample: int = 8          # pixel block size per latent cell
    channels: int = 3
    text_dim: int = 16
    key_dim: int = 8
    max_tokens: int = 16
    img_patch_grid: int = 4      # image embedding: grid x grid RGB patch means
    img_tokens: int = 4
    subject_canvas: int = 256    # long side for per-subject draws
    subject_init_noise: float = 0.02  # start scale for the short per-subject draws
    state_gain: float = 5.0      # state weight in the clean prediction
    cond_gain: float = 2.0       # attention refinement weight in the clean prediction
    text_value_scale: float = 2.0  # extra gain on text value projections

    @property
    def img_embedding_dim(self) -> int:
        return self.img_patch_grid * self.img_patch_grid * 3

    @property
    def img_token_dim(self) -> int:
        return self.img_embedding_dim // self.img_tokens


class ToyDenoiser:
    """Deterministic toy model: weights, encoders, codec, one denoise step."""

    def __init__(self, seed: int, params: ToyParams | None = None):
        self.seed = int(seed)
        self.params = params or ToyParams()
        p = self.params
        rng = np.random.default_rng(derive_seed(self.seed, "weights"))
        scale_t = 1.0 / np.sqrt(p.text_dim)
        scale_i = 1.0 / np.sqrt(p.img_token_dim)
        self.text_weights = ProjectionWeights(
            w_q=rng.standard_normal((p.channels, p.key_dim)),
            w_k=rng.standard_normal((p.text_dim, p.key_dim)) * scale_t,
            w_v=rng.standard_normal((p.text_dim, p.channels)) * scale_t * p.text_value_scale,
            source="text-branch",
        )
        self.image_weights = ProjectionWeights(
            w_q=rng.standard_normal((p.channels, p.key_dim)),
            w_k=rng.standard_normal((p.img_token_dim, p.key_dim)) * scale_i,
            w_v=rng.standard_normal((p.img_token_dim, p.channels)) * scale_i,
            source="image-branch",
        )

    # -- encoders --

    def embed_text(self, text: str) -> np.ndarray:
        """Hash-based token embeddings: (L, text_dim), stable across runs."""
        tokens = _TOKEN_RE.findall(text.lower())[: self.params.max_tokens] or [""]
        rows = []
        for tok in tokens:
            digest = hashlib.sha256(tok.encode("utf-8")).digest()
            tok_rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            rows.append(tok_rng.standard_normal(self.params.text_dim))
        return np.stack(rows)

    def embed_image(self, image: np.ndarray) -> EmbeddingVector:
        """Downsampled patch statistics of a uint8 RGB image."""
        g = self.params.img_patch_grid
        h, w = image.shape[:2]
        pix = image.astype(np.float64) / 255.0
        values = []
        for r in range(g):
            for c in range(g):
                patch = pix[r * h // g:(r + 1) * h // g, c * w // g:(c + 1) * w // g]
                values.extend(patch.reshape(-1, 3).mean(axis=0))
        return EmbeddingVector(values=tuple(values), provenance="toy-encoder")

    def image_tokens(self, vec: EmbeddingVector) -> np.ndarray:
        p = self.params
        if vec.dim != p.img_embedding_dim:
            raise ValueError(f"expected dim {p.img_embedding_dim}, got {vec.dim}")
        return np.asarray(vec.values, dtype=np.float64).reshape(p.img_tokens, p.img_token_dim)

    # -- pixel/latent codec (fixed linear resampling) --

    def latent_shape(self, width: int, height: int) -> tuple[int, int, int]:
        d = self.params.downsample
        return (-(-height // d), -(-width // d), self.params.channels)

    def encode(self, image: np.ndarray) -> np.ndarray:
        """uint8 (H, W, 3) -> (h, w, 3) block means mapped into [-1, 1]."""
        d = self.params.downsample
        h, w = image.shape[:2]
        lh, lw = -(-h // d), -(-w // d)
        padded = np.empty((lh * d, lw * d, 3), dtype=np.float64)
        padded[:h, :w] = image.astype(np.float64) / 255.0
        if lh * d > h:
            padded[h:, :w] = padded[h - 1:h, :w]
        if lw * d > w:
            padded[:, w:] = padded[:, w - 1:w]
        blocks = padded.reshape(lh, d, lw, d, 3).mean(axis=(1, 3))
        return blocks * 2.0 - 1.0

    def decode(self, latent: np.ndarray, width: int, height: int) -> np.ndarray:
        """(h, w, 3) latent -> uint8 (height, width, 3) by block upsampling."""
        d = self.params.downsample
        pix = np.clip((latent + 1.0) / 2.0, 0.0, 1.0)
        up = np.repeat(np.repeat(pix, d, axis=0), d, axis=1)[:height, :width]
        return np.round(up * 255.0).astype(np.uint8)

    # -- one denoise model call --

    def refine(
        self,
        z: np.ndarray,
        global_tokens: np.ndarray,
        contexts: list[SubjectContext],
        alpha: float,
        beta: float,
    ) -> np.ndarray:
        """Clean-latent prediction via the parallel attention refinement.

        The prediction is tanh of (state_gain * state + cond_gain * refined
        attention). With state_gain above 1 every cell is bistable: whatever
        sign pattern the early, noisiest steps establish survives to the end,
        so content injected there shapes the result, while the attention term
        picks the basin wherever the state is still weak (as on the gently
        started subject canvases). With weight-only state dependence the
        trajectory would converge to a start-independent fixed point and
        early injection could never matter. With no subjects the parallel
        branches are skipped and global attention alone conditions the
        prediction.
        """
        z_g = cross_attention(z, global_tokens, self.text_weights)
        if not contexts:
            fused = z_g
        else:
            z_f = masked_subject_attention(z, contexts, self.text_weights, "text").latent
            z_h = masked_subject_attention(z, contexts, self.image_weights, "image").latent
            fused = parallel_fuse(z_g, z_f, z_h, alpha, beta)
        return np.tanh(self.params.state_gain * z + self.params.cond_gain * fused)

    def step(
        self,
        z: np.ndarray,
        t: int,
        schedule: DiffusionSchedule,
        global_tokens: np.ndarray,
        contexts: list[SubjectContext],
        alpha: float,
        beta: float,
    ) -> tuple[np.ndarray, np.ndarray]:
        """One reverse update t -> t-1; returns (next latent, clean prediction).

        At t=0 the clean prediction is the final latent.
        """
        x0 = self.refine(z, global_tokens, contexts, alpha, beta)
        if t == 0:
            return x0, x0
        sig_t = schedule.signal_at(t)
        sig_prev = schedule.signal_at(t - 1)
        eps = (z - np.sqrt(sig_t) * x0) / np.sqrt(1.0 - sig_t)
        z_prev = np.sqrt(sig_prev) * x0 + np.sqrt(1.0 - sig_prev) * eps
        return z_prev, x0

    def initial_noise(self, shape: tuple[int, int, int], seed: int) -> np.ndarray:
        return np.random.default_rng(derive_seed(seed, "init")).standard_normal(shape)


def subject_response_fraction(
    latent: np.ndarray,
    mask: np.ndarray,
    text_tokens: np.ndarray,
    denoiser: ToyDenoiser,
) -> float:
    """Share of the latent's response to a subject's token direction that
    falls inside the subject's mask. Diagnostic for guidance locality.

    The per-cell response is the squared cosine between the cell's channels
    and the subject's mean value direction, so the measure reads alignment,
    not magnitude.
    """
    direction = text_tokens.mean(axis=0) @ denoiser.text_weights.w_v
    norm = np.linalg.norm(direction)
    if norm == 0:
        return 0.0
    direction /= norm
    cell_norms = np.square(latent).sum(axis=2)
    response = np.square(latent @ direction) / np.maximum(cell_norms, 1e-12)
    total = response.sum()
    if total == 0:
        return 0.0
    return float(response[mask > 0].sum() / total)
