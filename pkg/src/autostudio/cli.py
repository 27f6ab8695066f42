"""Command line entry points: run scripts, serve HTTP, validate layouts, report."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .engine.config import load_config, parse_frame
from .engine.pipeline import replay
from .engine.service import serve as serve_http
from .errors import AutoStudioError, LayoutFormatError
from .layout.lineformat import parse_layout
from .layout.rules import validate
from .model import FrameSize


def _engine_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="TOML config file."),
        click.option("--backend", type=click.Choice(["mock", "http"]), default=None),
        click.option("--drawer", type=click.Choice(["toy", "http"]), default=None),
        click.option("--seed", type=int, default=None),
        click.option("--r", "r", type=float, default=None, help="Guidance start fraction."),
        click.option("--alpha", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--steps", type=int, default=None),
        click.option("--frame", default=None, help="Frame size as WxH, e.g. 1024x1024."),
        click.option("--no-supervisor", is_flag=True, default=False),
        click.option("--alpha-one", is_flag=True, default=False),
        click.option("--guidance-off", is_flag=True, default=False),
        click.option("--transcript", "transcript_path", type=click.Path(exists=True),
                     default=None, help="Scripted-mock transcript file."),
        click.option("--best-effort", is_flag=True, default=False,
                     help="Draw even when the layout keeps violations."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _collect_overrides(**kw) -> dict:
    overrides: dict = {}
    for key in ("backend", "drawer", "seed", "r", "alpha", "beta", "steps", "transcript_path"):
        if kw.get(key) is not None:
            overrides[key] = kw[key]
    if kw.get("frame"):
        overrides["frame"] = kw["frame"]
    for flag in ("no_supervisor", "alpha_one", "guidance_off"):
        if kw.get(flag):
            overrides[flag] = True
    if kw.get("best_effort"):
        overrides["strict"] = False
    return overrides


@click.group()
@click.option("-v", "--verbose", is_flag=True, default=False)
def main(verbose: bool):
    """Interactive multi-turn image generation engine."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--script", "script_path", type=click.Path(exists=True), required=True,
              help="Replay script JSON.")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Directory that will hold the session.")
@click.option("--session-id", default="session")
@_engine_options
def run(script_path, out_dir, session_id, config_path, **kw):
    """Replay a scripted dialogue and persist all turn artifacts."""
    config = load_config(config_path, _collect_overrides(**kw))
    try:
        session = replay(script_path, out_dir, base_config=config, session_id=session_id)
    except AutoStudioError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"session {session.id}: {len(session.turns)} turns -> {session.root}")
    for record in session.turns:
        click.echo(f"  turn {record.k}: {record.prompt!r} -> {record.image_path}")


@main.command()
@click.option("--addr", default="127.0.0.1:8080", help="host:port to bind (\":8080\" works).")
@click.option("--root", "root_dir", type=click.Path(), default="sessions",
              help="Directory for session artifacts.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Static UI assets to serve under /ui.")
@_engine_options
def serve(addr, root_dir, ui_dir, config_path, **kw):
    """Run the HTTP service."""
    config = load_config(config_path, _collect_overrides(**kw))
    serve_http(addr, config, root_dir, ui_dir=ui_dir)


@main.command("validate-layout")
@click.argument("layout_file", type=click.Path(exists=True))
@click.option("--frame", default="1024x1024", help="Frame size as WxH.")
@click.option("--json", "as_json", is_flag=True, default=False)
def validate_layout(layout_file, frame, as_json):
    """Check a layout file against the rulebook; exit 1 on violations."""
    frame_size: FrameSize = parse_frame(frame)
    text = Path(layout_file).read_text(encoding="utf-8")
    try:
        if text.lstrip().startswith("{"):
            from .layout.lineformat import layout_from_json

            layout = layout_from_json(json.loads(text))
        else:
            layout = parse_layout(text, frame=frame_size)
    except LayoutFormatError as exc:
        for violation in exc.violations:
            click.echo(f"Format: {violation.message}", err=True)
        sys.exit(1)
    findings = validate(layout)
    if as_json:
        click.echo(json.dumps(
            [{"kind": v.kind.value, "ids": [i.render() for i in v.ids],
              "measure": v.measure, "message": v.message} for v in findings],
            indent=2,
        ))
    else:
        for violation in findings:
            click.echo(f"{violation.kind.value}: {violation.message}")
        if not findings:
            click.echo("compliant")
    sys.exit(1 if findings else 0)


@main.command()
@click.option("--session", "session_root", type=click.Path(exists=True), required=True,
              help="Session directory (contains session.json).")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def report(session_root, out_dir):
    """Render layout-overlay figures and a summary CSV for a session."""
    from .report import write_session_report

    try:
        written = write_session_report(session_root, out_dir)
    except AutoStudioError as exc:
        raise click.ClickException(str(exc)) from exc
    for path in written:
        click.echo(str(path))


if __name__ == "__main__":
    main()
