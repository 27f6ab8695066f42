"""Real diffusion backbone: SD1.5/SDXL via diffusers with P-UNet patching.

Quality is explicitly out of CI scope; this module exists so a machine with
weights can serve the same wire contract the stub does. All heavy imports
are deferred so the rest of the bridge works without them.

Assumption (documented): the parallel masked attention replaces every
cross-attention layer of the UNet; the paper does not state the injection
points, and all-layers is the uniform choice.
"""

from __future__ import annotations

import base64
import io
import logging
import math

import numpy as np
from PIL import Image

from .config import BridgeConfig
from .extractor import make_extractor
from .wire import WIRE_SCHEMA

logger = logging.getLogger(__name__)

DEFAULT_MODELS = {
    "sd15": "runwayml/stable-diffusion-v1-5",
    "sdxl": "stabilityai/stable-diffusion-xl-base-1.0",
}


class DiffusersBackbone:
    name = "diffusers"

    def __init__(self, config: BridgeConfig):
        try:
            import torch
            from diffusers import StableDiffusionPipeline, StableDiffusionXLPipeline
        except ImportError as exc:
            raise RuntimeError(
                "the diffusers backbone requires the 'real' extras "
                "(pip install 'autostudio-bridge[real]')"
            ) from exc
        self.torch = torch
        self.config = config
        model_id = config.model_id or DEFAULT_MODELS[config.backbone]
        cls = StableDiffusionXLPipeline if config.backbone == "sdxl" else StableDiffusionPipeline
        logger.info("loading %s on %s", model_id, config.device)
        self.pipe = cls.from_pretrained(model_id).to(config.device)
        self.extractor = make_extractor(config.detection, config.segmentation)
        self._patch_attention()

    # -- wiring --

    def _patch_attention(self) -> None:
        from .punet import PUNetAttnProcessor, PUNetState

        self.state = PUNetState(global_tokens=self.torch.zeros(1, 1))
        processors = {}
        for name, proc in self.pipe.unet.attn_processors.items():
            if name.endswith("attn2.processor"):  # cross-attention layers only
                processors[name] = PUNetAttnProcessor(self.state)
            else:
                processors[name] = proc
        self.pipe.unet.set_attn_processor(processors)

    def _encode_text(self, text: str):
        tokenizer, encoder = self.pipe.tokenizer, self.pipe.text_encoder
        tokens = tokenizer(
            text, padding="max_length", truncation=True,
            max_length=tokenizer.model_max_length, return_tensors="pt",
        ).input_ids.to(self.config.device)
        with self.torch.no_grad():
            return encoder(tokens).last_hidden_state[0]

    def _latents_for(self, image: Image.Image):
        torch = self.torch
        array = np.asarray(image.convert("RGB"), dtype=np.float32) / 127.5 - 1.0
        tensor = torch.from_numpy(array).permute(2, 0, 1)[None].to(self.config.device)
        with torch.no_grad():
            posterior = self.pipe.vae.encode(tensor).latent_dist
        return posterior.mean * self.pipe.vae.config.scaling_factor

    # -- the draw contract --

    def draw(self, request: dict) -> dict:  # pragma: no cover - needs weights
        torch = self.torch
        params = request["params"]
        frame = request["frame"]
        steps = int(params["steps"])
        seed = int(request["seed"])
        subjects = request["subjects"]
        guidance_on = params.get("guidance", "on") == "on" and bool(subjects)

        from .punet import SubjectTokens

        self.state.alpha = float(params["alpha"])
        self.state.beta = float(params["beta"])
        self.state.global_tokens = self._encode_text(
            f"{request['global_caption']}, {request['background_caption']}"
        )
        latent_h = frame["height"] // self.pipe.vae_scale_factor
        latent_w = frame["width"] // self.pipe.vae_scale_factor
        self.state.subjects = []
        for subject in subjects:
            mask = torch.zeros(latent_h, latent_w)
            x, y, w, h = subject["box"]
            sx = latent_w / frame["width"]
            sy = latent_h / frame["height"]
            mask[int(y * sy):int((y + h) * sy), int(x * sx):int((x + w) * sx)] = 1.0
            image_tokens = None
            if subject.get("embedding"):
                vec = torch.tensor(subject["embedding"]["values"], dtype=torch.float32)
                image_tokens = vec.reshape(4, -1).to(self.config.device)
            caption = ", ".join(
                [subject["caption"]]
                + [c["caption"] for c in subject.get("components", [])]
                + [request["global_caption"], request["background_caption"]]
            )
            self.state.subjects.append(SubjectTokens(
                text=self._encode_text(caption), image=image_tokens, mask_full=mask,
            ))

        generator = torch.Generator(self.config.device).manual_seed(seed)
        scheduler = self.pipe.scheduler
        scheduler.set_timesteps(steps, device=self.config.device)

        guidance_latents = None
        per_subject = []
        if guidance_on:
            canvas = Image.new("RGB", (frame["width"], frame["height"]))
            subject_steps = max(1, math.ceil(steps / 10))
            for i, subject in enumerate(subjects):
                x, y, w, h = (int(round(v)) for v in subject["box"])
                scale = 1024 / max(w, h)
                single = self.pipe(
                    prompt=subject["caption"],
                    num_inference_steps=subject_steps,
                    width=1024, height=1024,
                    generator=torch.Generator(self.config.device).manual_seed(seed + i + 1),
                    output_type="pil",
                ).images[0]
                crop_w, crop_h = int(w * scale), int(h * scale)
                left = (1024 - crop_w) // 2
                top = (1024 - crop_h) // 2
                crop, _mask = self.extractor.extract(
                    np.asarray(single), (left, top, crop_w, crop_h), subject["caption"],
                )
                canvas.paste(Image.fromarray(crop).resize((w, h)), (x, y))
                per_subject.append({"id": subject["id"], "crop_box": subject["box"]})
            guidance_latents = self._latents_for(canvas)
        else:
            per_subject = [{"id": s["id"], "crop_box": s["box"]} for s in subjects]

        r = float(params["r"])
        injected: list[int] = []

        def on_step(pipe, step_index, timestep, callback_kwargs):
            if guidance_latents is None:
                return callback_kwargs
            t_reverse = steps - 1 - step_index
            if t_reverse >= r * steps:
                noise = torch.randn(
                    guidance_latents.shape, generator=generator,
                    device=self.config.device,
                )
                noised = scheduler.add_noise(guidance_latents, noise, timestep[None])
                masks = torch.zeros_like(callback_kwargs["latents"][: , :1])
                for subject_state in self.state.subjects:
                    m = subject_state.mask_full.to(self.config.device)
                    masks = torch.maximum(masks, m[None, None])
                callback_kwargs["latents"] = (
                    callback_kwargs["latents"] * (1 - masks) + noised * masks
                )
                injected.append(t_reverse)
            return callback_kwargs

        result = self.pipe(
            prompt=request["global_caption"],
            num_inference_steps=steps,
            width=frame["width"], height=frame["height"],
            generator=generator,
            callback_on_step_end=on_step,
            output_type="pil",
        ).images[0]

        buf = io.BytesIO()
        result.save(buf, format="PNG")
        return {
            "schema": WIRE_SCHEMA,
            "image": base64.b64encode(buf.getvalue()).decode("ascii"),
            "per_subject": per_subject,
            "diagnostics": {
                "backbone": self.config.backbone,
                "mode": request["mode"],
                "guidance": "on" if guidance_on else "off",
                "params_echo": {
                    "r": params["r"], "alpha": params["alpha"],
                    "beta": params["beta"], "steps": steps,
                },
                "injected_steps": injected,
            },
        }
