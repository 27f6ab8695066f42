"""Bridge entry point."""

from __future__ import annotations

import logging

import click

from .config import BACKBONES, BridgeConfig
from .service import serve


@click.command()
@click.option("--addr", default="127.0.0.1:8090", help="host:port to bind.")
@click.option("--backbone", type=click.Choice(list(BACKBONES)), default="stub")
@click.option("--device", default="cpu")
@click.option("--steps", type=int, default=30)
@click.option("--model-id", default=None, help="Checkpoint id override.")
@click.option("--detection/--no-detection", default=False,
              help="Use an open-vocabulary detector for subject extraction.")
@click.option("--segmentation/--no-segmentation", default=False)
def main(addr, backbone, device, steps, model_id, detection, segmentation):
    """Serve the draw wire protocol over a diffusion backbone."""
    logging.basicConfig(level=logging.INFO)
    config = BridgeConfig(
        backbone=backbone, device=device, steps=steps, model_id=model_id,
        detection=detection, segmentation=segmentation,
    )
    serve(addr, config)


if __name__ == "__main__":
    main()
