"""Parallel masked cross-attention for UNet patching, in torch.

The math mirrors the engine's toy core: per-subject cross-attention filtered
by each subject's latent-resolution mask, overlap-averaged, run once for text
tokens and once for image tokens, then fused with the global branch as
alpha * global + (1 - alpha) * (text + beta * image).

Numerically testable with random tensors; no pretrained weights involved at
this level. The diffusers backbone installs PUNetAttnProcessor on every
cross-attention layer and feeds it per-subject token slices and masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F


def cross_attention(
    hidden: torch.Tensor,   # (cells, channels)
    tokens: torch.Tensor,   # (L, d)
    w_q: torch.Tensor,      # (channels, d_k)
    w_k: torch.Tensor,      # (d, d_k)
    w_v: torch.Tensor,      # (d, channels)
) -> torch.Tensor:
    q = hidden @ w_q
    k = tokens @ w_k
    v = tokens @ w_v
    logits = q @ k.T / math.sqrt(w_q.shape[1])
    return F.softmax(logits, dim=-1) @ v


def overlap_weights(masks: list[torch.Tensor]) -> torch.Tensor:
    """Per-cell 1/k over the k masks covering the cell, 0 where none do."""
    if not masks:
        raise ValueError("need at least one mask")
    coverage = torch.zeros_like(masks[0])
    for mask in masks:
        coverage = coverage + (mask > 0).to(coverage.dtype)
    weights = torch.zeros_like(coverage)
    covered = coverage > 0
    weights[covered] = 1.0 / coverage[covered]
    return weights


def masked_branch(
    hidden: torch.Tensor,
    subject_tokens: list[torch.Tensor | None],
    masks: list[torch.Tensor],   # each (cells,)
    w_q: torch.Tensor,
    w_k: torch.Tensor,
    w_v: torch.Tensor,
) -> torch.Tensor:
    """Sum of mask-filtered per-subject attentions, overlap-averaged.

    Subjects with no tokens for this branch are skipped; with none left the
    branch contributes zeros.
    """
    active = [(t, m) for t, m in zip(subject_tokens, masks) if t is not None]
    if not active:
        return torch.zeros_like(hidden)
    total = torch.zeros_like(hidden)
    for tokens, mask in active:
        total = total + cross_attention(hidden, tokens, w_q, w_k, w_v) * mask.unsqueeze(-1)
    weights = overlap_weights([m for _, m in active])
    return total * weights.unsqueeze(-1)


def parallel_refine(
    hidden: torch.Tensor,
    global_tokens: torch.Tensor,
    text_tokens: list[torch.Tensor | None],
    image_tokens: list[torch.Tensor | None],
    masks: list[torch.Tensor],
    text_proj: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    image_proj: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    alpha: float,
    beta: float,
) -> torch.Tensor:
    z_global = cross_attention(hidden, global_tokens, *text_proj)
    if alpha >= 1.0 or not masks:
        return z_global
    z_text = masked_branch(hidden, text_tokens, masks, *text_proj)
    z_image = masked_branch(hidden, image_tokens, masks, *image_proj)
    return alpha * z_global + (1.0 - alpha) * (z_text + beta * z_image)


@dataclass
class SubjectTokens:
    """Per-subject conditioning slices handed to the processor."""

    text: torch.Tensor | None
    image: torch.Tensor | None
    mask_full: torch.Tensor      # (H, W) at the reference latent resolution


@dataclass
class PUNetState:
    """Shared per-denoise-step state for all patched layers."""

    global_tokens: torch.Tensor
    subjects: list[SubjectTokens] = field(default_factory=list)
    alpha: float = 0.2
    beta: float = 0.7


class PUNetAttnProcessor:
    """Drop-in attention processor replacing a layer's cross-attention.

    Uses the layer's own to_q/to_k/to_v projections for the text branch and
    the adapter projections (to_k_ip/to_v_ip, when present) for the image
    branch. Masks are pooled to the layer's spatial size on the fly.
    """

    def __init__(self, state: PUNetState):
        self.state = state

    def _pooled_masks(self, cells: int) -> list[torch.Tensor]:
        masks = []
        for subject in self.state.subjects:
            full = subject.mask_full
            side = int(math.sqrt(cells * full.shape[0] / full.shape[1]))
            height = max(side, 1)
            width = max(cells // height, 1)
            pooled = F.adaptive_max_pool2d(full[None, None].float(), (height, width))[0, 0]
            masks.append(pooled.reshape(-1)[:cells])
        return masks

    def __call__(self, attn, hidden_states, encoder_hidden_states=None, **kwargs):
        if encoder_hidden_states is None:
            # self-attention layers are left untouched
            encoder_hidden_states = hidden_states
        batch, cells, _ = hidden_states.shape
        state = self.state
        w_q = attn.to_q.weight.T
        w_k = attn.to_k.weight.T
        w_v = attn.to_v.weight.T
        text_proj = (w_q, w_k, w_v)
        if hasattr(attn, "to_k_ip") and hasattr(attn, "to_v_ip"):
            image_proj = (w_q, attn.to_k_ip.weight.T, attn.to_v_ip.weight.T)
        else:
            image_proj = text_proj
        masks = self._pooled_masks(cells)
        outputs = []
        for b in range(batch):
            outputs.append(
                parallel_refine(
                    hidden_states[b],
                    state.global_tokens,
                    [s.text for s in state.subjects],
                    [s.image for s in state.subjects],
                    masks,
                    text_proj,
                    image_proj,
                    state.alpha,
                    state.beta,
                )
            )
        out = torch.stack(outputs)
        if hasattr(attn, "to_out"):
            out = attn.to_out[0](out)
        return out
