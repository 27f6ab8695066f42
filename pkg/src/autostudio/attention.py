"""Parallel masked cross-attention over dense float64 tensors.

Latents are (h, w, c) arrays, embeddings (L, d) token sequences. The four
operations compose into the drawer's per-step refinement: generic
cross-attention, per-subject masked attention for the text and image
branches, the overlap weighting matrix, and the final weighted fusion.
Single-head and double precision throughout, so results can be checked
against a naive reference to tight tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ShapeMismatch
from .model import SubjectId

TEXT_BRANCH = "text"
IMAGE_BRANCH = "image"


@dataclass(frozen=True)
class ProjectionWeights:
    """Query/key/value projections for one branch.

    W_q: (c, d_k), W_k: (d, d_k), W_v: (d, c). The image branch carries its
    own triplet, standing in for adapter weights.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    source: str = TEXT_BRANCH

    def __post_init__(self):
        if self.w_q.ndim != 2 or self.w_k.ndim != 2 or self.w_v.ndim != 2:
            raise ShapeMismatch("projection weights must be 2-D")
        if self.w_q.shape[1] != self.w_k.shape[1]:
            raise ShapeMismatch(
                f"key dims differ: W_q {self.w_q.shape} vs W_k {self.w_k.shape}"
            )
        if self.w_k.shape[0] != self.w_v.shape[0]:
            raise ShapeMismatch(
                f"embedding dims differ: W_k {self.w_k.shape} vs W_v {self.w_v.shape}"
            )

    @property
    def key_dim(self) -> int:
        return self.w_q.shape[1]


@dataclass
class SubjectContext:
    """Per-subject conditioning: text tokens, optional image tokens, latent mask."""

    id: SubjectId
    text_tokens: np.ndarray
    mask: np.ndarray
    image_tokens: np.ndarray | None = None


class MaskedAttentionResult(NamedTuple):
    latent: np.ndarray
    empty: bool  # no context contributed; latent is all zeros


def _check_latent(z: np.ndarray) -> None:
    if z.ndim != 3:
        raise ShapeMismatch(f"latent must be (h, w, c), got {z.shape}")


def cross_attention(z: np.ndarray, tokens: np.ndarray, weights: ProjectionWeights) -> np.ndarray:
    """Single-head cross-attention of a latent against a token sequence.

    Flattens the latent to (h*w, c), projects queries/keys/values, applies a
    row-wise softmax over tokens scaled by sqrt(key_dim), and reshapes back.
    """
    _check_latent(z)
    if tokens.ndim != 2:
        raise ShapeMismatch(f"tokens must be (L, d), got {tokens.shape}")
    h, w, c = z.shape
    if weights.w_q.shape[0] != c:
        raise ShapeMismatch(f"W_q expects {weights.w_q.shape[0]} channels, latent has {c}")
    if weights.w_k.shape[0] != tokens.shape[1]:
        raise ShapeMismatch(
            f"W_k expects dim {weights.w_k.shape[0]}, tokens have {tokens.shape[1]}"
        )
    flat = z.reshape(h * w, c)
    q = flat @ weights.w_q
    k = tokens @ weights.w_k
    v = tokens @ weights.w_v
    logits = q @ k.T / np.sqrt(weights.key_dim)
    logits -= logits.max(axis=1, keepdims=True)
    attn = np.exp(logits)
    attn /= attn.sum(axis=1, keepdims=True)
    return (attn @ v).reshape(h, w, c)


def overlap_weight_matrix(masks: list[np.ndarray], shape: tuple[int, int] | None = None) -> np.ndarray:
    """Per-cell weight 1/k where k masks cover the cell, 0 where none do."""
    if not masks:
        if shape is None:
            raise ShapeMismatch("no masks and no shape given")
        return np.zeros(shape, dtype=np.float64)
    first = masks[0].shape
    for m in masks:
        if m.shape != first:
            raise ShapeMismatch(f"mask shapes differ: {m.shape} vs {first}")
    coverage = np.zeros(first, dtype=np.float64)
    for m in masks:
        coverage += (m > 0)
    out = np.zeros(first, dtype=np.float64)
    covered = coverage > 0
    out[covered] = 1.0 / coverage[covered]
    return out


def masked_subject_attention(
    z: np.ndarray,
    contexts: list[SubjectContext],
    weights: ProjectionWeights,
    branch: str = TEXT_BRANCH,
) -> MaskedAttentionResult:
    """Sum of per-subject mask-filtered attentions, overlap-averaged.

    Each subject's cross-attention is restricted to its own mask; cells
    covered by several subjects are averaged via the overlap weight matrix.
    The image branch skips subjects without image tokens. With no
    contributing subject the result is a zero latent with the empty flag set,
    never NaN.
    """
    _check_latent(z)
    h, w, _ = z.shape
    active: list[SubjectContext] = []
    for ctx in sorted(contexts, key=lambda c: c.id):
        if ctx.mask.shape != (h, w):
            raise ShapeMismatch(f"mask {ctx.mask.shape} does not match latent ({h}, {w})")
        tokens = ctx.text_tokens if branch == TEXT_BRANCH else ctx.image_tokens
        if tokens is None:
            continue
        active.append(ctx)
    if not active or not any(ctx.mask.any() for ctx in active):
        return MaskedAttentionResult(np.zeros_like(z), empty=True)

    total = np.zeros_like(z)
    for ctx in active:
        tokens = ctx.text_tokens if branch == TEXT_BRANCH else ctx.image_tokens
        total += cross_attention(z, tokens, weights) * ctx.mask[:, :, None]
    m_s = overlap_weight_matrix([ctx.mask for ctx in active])
    return MaskedAttentionResult(total * m_s[:, :, None], empty=False)


def parallel_fuse(
    z_global: np.ndarray,
    z_text: np.ndarray,
    z_image: np.ndarray,
    alpha: float,
    beta: float,
) -> np.ndarray:
    """Weighted fusion of the global, subject-text and subject-image latents.

    alpha=1 and alpha=0,beta=0 are exact passthroughs of the global and text
    latent respectively: these are the documented ablation switches and must
    be bit-identical, so they bypass the arithmetic.
    """
    if not (z_global.shape == z_text.shape == z_image.shape):
        raise ShapeMismatch(
            f"fusion shapes differ: {z_global.shape}, {z_text.shape}, {z_image.shape}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if beta < 0.0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if alpha == 1.0:
        return z_global.copy()
    if alpha == 0.0 and beta == 0.0:
        return z_text.copy()
    return alpha * z_global + (1.0 - alpha) * (z_text + beta * z_image)
