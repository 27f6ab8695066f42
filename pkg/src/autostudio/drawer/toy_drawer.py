"""Toy draw orchestration: per-subject partial draws, guidance composition,
the blended main denoise loop, and inpainting-style edits.

A draw is a pure function of the request (all randomness flows from keyed
seed streams), so identical requests produce byte-identical PNGs.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ..attention import SubjectContext
from ..errors import MissingPriorTurn, SchemaViolation
from ..layout.geometry import rasterize_mask, rasterize_mask_interior, resize_centered
from ..model import BoundingBox, FrameSize
from ..registry import EmbeddingVector
from .guidance import GuidanceSet, compose_guidance, forward_diffuse
from .protocol import DrawRequest, DrawResponse, DrawSubject, PerSubjectResult
from .schedule import DiffusionSchedule, derive_seed
from .toy import ToyDenoiser, ToyParams


@dataclass
class PriorTurn:
    """Previous turn's artifacts needed for edit clamping."""

    trajectory: np.ndarray      # (T, h, w, c): effective latent consumed at each step
    final_latent: np.ndarray
    image: np.ndarray           # uint8 (H, W, 3)


@dataclass
class DrawArtifacts:
    """In-process outputs beyond the wire response: kept for edits and tests."""

    trajectory: np.ndarray
    final_latent: np.ndarray
    image: np.ndarray
    guidance: GuidanceSet | None
    contexts: list[SubjectContext]
    denoiser: ToyDenoiser
    pre_injection: np.ndarray | None = None  # (T, h, w, c) when tracing


@dataclass
class _SubjectDraw:
    subject: DrawSubject
    image: np.ndarray
    latent: np.ndarray
    embedding: EmbeddingVector
    steps: int
    image_branch: bool
    crop: np.ndarray = field(default=None, repr=False)


def png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image).save(buf, format="PNG")
    return buf.getvalue()


def png_to_array(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


class ToyDrawer:
    """Deterministic in-process drawer implementing the wire contract."""

    kind = "toy"

    def __init__(self, toy_params: ToyParams | None = None, workers: int = 0):
        self.params = toy_params or ToyParams()
        self.workers = workers

    # -- public API --

    def draw(self, request: DrawRequest, prior: PriorTurn | None = None) -> DrawResponse:
        return self.draw_full(request, prior)[0]

    def draw_full(
        self, request: DrawRequest, prior: PriorTurn | None = None
    ) -> tuple[DrawResponse, DrawArtifacts]:
        if request.mode == "edit":
            if prior is None:
                raise MissingPriorTurn("edit requires the previous turn's artifacts")
            if request.edit_region is None:
                raise SchemaViolation("edit mode requires edit_region")

        denoiser = ToyDenoiser(
            request.params.model_seed if request.params.model_seed is not None else request.seed,
            self.params,
        )
        schedule = DiffusionSchedule.linear(request.params.steps)
        frame = request.frame
        lh, lw, _ = denoiser.latent_shape(frame.width, frame.height)

        subjects = sorted(request.subjects, key=lambda s: s.id)
        guidance_on = request.params.guidance == "on" and bool(subjects)

        diagnostics: dict = {
            "mode": request.mode,
            "guidance": "on" if guidance_on else "off",
            "frame": [frame.width, frame.height],
            "params_echo": {
                "r": request.params.r,
                "alpha": request.params.alpha,
                "beta": request.params.beta,
                "steps": request.params.steps,
            },
            "subject_steps": {},
            "subject_image_branch": {},
            "image_branch": {},
            "injected_steps": [],
        }

        # Subject draws run whenever subjects exist: they feed embeddings to
        # the image branch in every mode. The guidance switch only controls
        # whether their composed latents are injected into the main loop, so
        # the ablation changes exactly one pipeline aspect.
        draws: list[_SubjectDraw] = []
        guidance: GuidanceSet | None = None
        if subjects:
            draws = self._draw_subjects(subjects, denoiser, schedule, request)
            for d in draws:
                diagnostics["subject_steps"][d.subject.id.render()] = d.steps
                diagnostics["subject_image_branch"][d.subject.id.render()] = d.image_branch
        if guidance_on:
            segments = [(d.crop, d.subject.box) for d in draws]
            image_g, mask = compose_guidance(segments, frame, lh, lw)
            guidance = forward_diffuse(
                image_g,
                schedule,
                derive_seed(request.seed, "turn-guidance"),
                encode=denoiser.encode,
                mask=mask,
            )

        embeddings = {d.subject.id.render(): d.embedding for d in draws}
        contexts = self._main_contexts(
            request, subjects, denoiser, frame, lh, lw, embeddings, diagnostics
        )
        final, image, traj, pre_traj, injected, clamp_mask = self._denoise(
            denoiser, schedule, request, contexts, guidance, prior, lh, lw
        )
        diagnostics["injected_steps"] = injected
        if request.trace:
            diagnostics["trace"] = [
                {"t": t, "injected": t in injected} for t in range(schedule.steps - 1, -1, -1)
            ]
            if clamp_mask is not None:
                diagnostics["edit_cells"] = int(clamp_mask.sum())

        per_subject = []
        for sub in subjects:
            per_subject.append(
                PerSubjectResult(
                    id=sub.id,
                    crop_box=sub.box,
                    embedding=embeddings.get(sub.id.render(), sub.embedding),
                )
            )
        response = DrawResponse(
            image_png=png_bytes(image), per_subject=per_subject, diagnostics=diagnostics
        )
        artifacts = DrawArtifacts(
            trajectory=traj,
            final_latent=final,
            image=image,
            guidance=guidance,
            contexts=contexts,
            denoiser=denoiser,
            pre_injection=pre_traj,
        )
        return response, artifacts

    # -- per-subject generation (partial denoise on the subject canvas) --

    def _draw_subjects(
        self,
        subjects: list[DrawSubject],
        denoiser: ToyDenoiser,
        schedule: DiffusionSchedule,
        request: DrawRequest,
    ) -> list[_SubjectDraw]:
        def run(sub: DrawSubject) -> _SubjectDraw:
            return self._draw_one_subject(sub, denoiser, schedule, request)

        if self.workers > 1 and len(subjects) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(run, subjects))
        else:
            results = [run(s) for s in subjects]
        return results

    def _draw_one_subject(
        self,
        sub: DrawSubject,
        denoiser: ToyDenoiser,
        schedule: DiffusionSchedule,
        request: DrawRequest,
    ) -> _SubjectDraw:
        canvas = self.params.subject_canvas
        canvas_frame = FrameSize(canvas, canvas)
        lh, lw, _ = denoiser.latent_shape(canvas, canvas)
        b_hat = resize_centered(sub.box, canvas)
        scale = b_hat.w / sub.box.w

        caption_full = ", ".join(
            [sub.caption]
            + [c.caption for c in sub.components]
            + [request.global_caption, request.background_caption]
        )
        image_tokens = denoiser.image_tokens(sub.embedding) if sub.embedding else None
        contexts = [
            SubjectContext(
                id=sub.id,
                text_tokens=denoiser.embed_text(caption_full),
                mask=rasterize_mask(b_hat, canvas_frame, lh, lw),
                image_tokens=image_tokens,
            )
        ]
        for comp in sub.components:
            mapped = _map_box(comp.box, sub.box, b_hat, scale)
            clipped = _clip_box(mapped, canvas_frame)
            if clipped is None:
                continue
            contexts.append(
                SubjectContext(
                    id=comp.id,
                    text_tokens=denoiser.embed_text(comp.caption),
                    mask=rasterize_mask(clipped, canvas_frame, lh, lw),
                )
            )

        global_tokens = denoiser.embed_text(
            f"{request.global_caption}, {request.background_caption}"
        )
        steps = schedule.subject_steps()
        # a short partial draw cannot clean full-strength noise, so the
        # subject canvas starts gently and lets the conditioning dominate
        z = self.params.subject_init_noise * denoiser.initial_noise(
            (lh, lw, self.params.channels),
            derive_seed(request.seed, "subject", sub.id.render()),
        )
        x0 = z
        for t in range(schedule.steps - 1, schedule.steps - 1 - steps, -1):
            z, x0 = denoiser.step(
                z, t, schedule, global_tokens, contexts,
                request.params.alpha, request.params.beta,
            )
        image = denoiser.decode(x0, canvas, canvas)
        embedding = sub.embedding or denoiser.embed_image(image)

        x0i = int(round(b_hat.x)); y0i = int(round(b_hat.y))
        x1i = int(round(b_hat.right)); y1i = int(round(b_hat.bottom))
        crop = image[y0i:y1i, x0i:x1i]
        return _SubjectDraw(
            subject=sub,
            image=image,
            latent=z,
            embedding=embedding,
            steps=steps,
            image_branch=sub.embedding is not None,
            crop=crop,
        )

    # -- main pass --

    def _main_contexts(self, request, subjects, denoiser, frame, lh, lw, embeddings, diagnostics):
        contexts = []
        for sub in subjects:
            box = _clip_box(sub.box, frame)
            if box is None:
                continue
            caption_full = ", ".join(
                [sub.caption]
                + [c.caption for c in sub.components]
                + [request.global_caption, request.background_caption]
            )
            emb = embeddings.get(sub.id.render(), sub.embedding)
            tokens = denoiser.image_tokens(emb) if emb is not None else None
            diagnostics["image_branch"][sub.id.render()] = tokens is not None
            contexts.append(
                SubjectContext(
                    id=sub.id,
                    text_tokens=denoiser.embed_text(caption_full),
                    mask=rasterize_mask(box, frame, lh, lw),
                    image_tokens=tokens,
                )
            )
        return contexts

    def _denoise(self, denoiser, schedule, request, contexts, guidance, prior, lh, lw):
        shape = (lh, lw, self.params.channels)
        global_tokens = denoiser.embed_text(
            f"{request.global_caption}, {request.background_caption}"
        )
        z = denoiser.initial_noise(shape, derive_seed(request.seed, "main-init"))

        clamp_mask = None
        if request.mode == "edit":
            if prior.trajectory.shape != (schedule.steps, *shape):
                raise SchemaViolation(
                    f"prior trajectory {prior.trajectory.shape} does not match "
                    f"{(schedule.steps, *shape)}"
                )
            region = _clip_box(request.edit_region, request.frame)
            if region is None:
                clamp_mask = np.zeros((lh, lw))
            else:
                clamp_mask = rasterize_mask_interior(region, request.frame, lh, lw)

        r = request.params.r
        threshold = r * schedule.steps
        injected: list[int] = []
        traj = np.empty((schedule.steps, *shape))
        pre_traj = np.empty_like(traj) if request.trace else None
        x0 = z
        for t in range(schedule.steps - 1, -1, -1):
            if pre_traj is not None:
                pre_traj[t] = z
            if guidance is not None and t >= threshold and guidance.mask.any():
                m = guidance.mask[:, :, None]
                z = z * (1.0 - m) + guidance.frame_at(t) * m
                injected.append(t)
            if clamp_mask is not None:
                e = clamp_mask[:, :, None]
                z = prior.trajectory[t] * (1.0 - e) + z * e
            traj[t] = z
            z, x0 = denoiser.step(
                z, t, schedule, global_tokens, contexts,
                request.params.alpha, request.params.beta,
            )
        final = x0
        if clamp_mask is not None:
            e = clamp_mask[:, :, None]
            final = prior.final_latent * (1.0 - e) + final * e
        image = denoiser.decode(final, request.frame.width, request.frame.height)
        return final, image, traj, pre_traj, injected, clamp_mask


def _map_box(box: BoundingBox, parent: BoundingBox, parent_mapped: BoundingBox, scale: float) -> BoundingBox:
    return BoundingBox(
        x=parent_mapped.x + (box.x - parent.x) * scale,
        y=parent_mapped.y + (box.y - parent.y) * scale,
        w=box.w * scale,
        h=box.h * scale,
    )


def _clip_box(box: BoundingBox, frame: FrameSize) -> BoundingBox | None:
    x0 = max(box.x, 0.0)
    y0 = max(box.y, 0.0)
    x1 = min(box.right, float(frame.width))
    y1 = min(box.bottom, float(frame.height))
    if x1 <= x0 or y1 <= y0:
        return None
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)
