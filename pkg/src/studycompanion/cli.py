"""Terminal client: setup wizard, interactive chat, reports, replay, serve."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .engine import (
    Engine,
    EngineConfig,
    WizardAnswers,
    bundled_fixture_path,
    load_config,
    load_fixture,
    replay_fixture,
    run_setup_wizard,
    save_config,
)
from .gateway import load_providers
from .profile import iso_now
from .prompts import render_learner_summary
from .report import assess_profile
from .store import SqliteStore


@click.group()
@click.option("--config", "config_path", default=None, help="Path to the config file.")
@click.option("--store", "store_path", default=None, help="Path to the profile database.")
@click.option("--dict", "dict_path", default=None, help="Path to a keyword dictionary file.")
@click.option("--provider", "provider", default=None, help="Override the configured provider.")
@click.pass_context
def main(ctx: click.Context, config_path, store_path, dict_path, provider) -> None:
    """Learner-profiled study companion."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=config_path, store_path=store_path, dict_path=dict_path, provider=provider
    )


def _load_engine(ctx: click.Context) -> Engine:
    options = ctx.obj
    config = load_config(options["config_path"])
    if config is None:
        raise click.ClickException("no configuration found; run 'studycompanion init' first")
    if options["store_path"]:
        config.store_path = options["store_path"]
    if options["dict_path"]:
        config.dictionary_path = options["dict_path"]
    if options["provider"]:
        config.provider = options["provider"]
    return Engine.from_config(config)


@main.command()
@click.pass_context
def init(ctx: click.Context) -> None:
    """Four-step setup wizard: provider, style, detail, student info."""
    providers = load_providers()
    provider_names = sorted(providers)
    preselected = ctx.obj.get("provider")

    while True:
        provider = preselected or click.prompt(
            "Step 1/4, LLM provider", type=click.Choice(provider_names), default="mock"
        )
        style = click.prompt(
            "Step 2/4, teaching style", type=click.Choice(["warm", "direct"]), default="warm"
        )
        detail = click.prompt(
            "Step 3/4, detail level",
            type=click.Choice(["concise", "thorough"]),
            default="concise",
        )
        name = click.prompt("Step 4/4, student name")
        grade = click.prompt("          student grade (1-12)", type=int)
        subjects_raw = click.prompt("          subjects (comma separated)", default="")
        goal = click.prompt("          learning goal", default="")
        subjects = tuple(s.strip() for s in subjects_raw.split(",") if s.strip())
        try:
            config, profile = run_setup_wizard(
                WizardAnswers(
                    provider=provider,
                    style=style,
                    detail=detail,
                    student_name=name,
                    grade=grade,
                    subjects=subjects,
                    goal=goal,
                ),
                providers,
                now=iso_now(),
            )
            break
        except ValueError as err:
            click.echo(f"  {err}", err=True)
            preselected = None

    if ctx.obj.get("store_path"):
        config.store_path = ctx.obj["store_path"]
    if ctx.obj.get("dict_path"):
        config.dictionary_path = ctx.obj["dict_path"]
    path = save_config(config, ctx.obj.get("config_path"))

    store_file = Path(config.store_path).expanduser()
    store_file.parent.mkdir(parents=True, exist_ok=True)
    store = SqliteStore(store_file)
    try:
        existing = store.load_profile(profile.student_id)
        if existing is None:
            store.save_profile(profile)
            click.echo(f"created profile for {config.student_name} ({profile.student_id})")
        else:
            click.echo(f"existing profile for {profile.student_id} kept")
    finally:
        store.close()
    click.echo(f"configuration saved to {path}")


@main.command()
@click.option("--show-internals", is_flag=True, help="Print profile deltas and fired rules.")
@click.pass_context
def chat(ctx: click.Context, show_internals: bool) -> None:
    """Interactive chat loop; /quit ends the session."""
    engine = _load_engine(ctx)
    student_id = engine.config.student_id
    if not student_id:
        raise click.ClickException("config has no student; rerun 'studycompanion init'")
    session = engine.open_session(student_id)
    click.echo(f"session started for {student_id} (provider: {engine.config.provider})")
    click.echo("type /quit to end the session")
    try:
        while True:
            text = click.prompt("you", prompt_suffix="> ")
            if text.strip() == "/quit":
                break
            if not text.strip():
                continue
            result = engine.handle_turn(session, text)
            if show_internals:
                for entry in result.delta:
                    click.echo(
                        f"  [profile update: {entry.path} {entry.old!r} -> {entry.new!r}"
                        f" ({entry.signal})]"
                    )
                if result.strategy.fired:
                    click.echo(f"  [strategy: {', '.join(result.strategy.fired)}]")
            click.echo(f"companion> {result.reply}")
    except (EOFError, KeyboardInterrupt, click.Abort):
        pass
    finally:
        record = engine.close_session(session)
        click.echo(f"session closed: {record.content}")


@main.group()
def profile() -> None:
    """Learner profile inspection."""


@profile.command("show")
@click.option("--student", "student_id", default=None, help="Student id (default: configured).")
@click.pass_context
def profile_show(ctx: click.Context, student_id) -> None:
    engine = _load_engine(ctx)
    student_id = student_id or engine.config.student_id
    loaded = engine.store.load_profile(student_id)
    if loaded is None:
        raise click.ClickException(f"no profile for {student_id!r}")
    click.echo(render_learner_summary(loaded))
    click.echo(f"- Sessions: {loaded.behavioral.session_count}")
    click.echo(f"- Frustration count: {loaded.emotional.frustration_count}")
    click.echo(f"- Updated: {loaded.updated_at}")


@main.command()
@click.option("--student", "student_id", default=None, help="Student id (default: configured).")
@click.pass_context
def report(ctx: click.Context, student_id) -> None:
    """Assessment table: per-dimension scores and the weighted overall."""
    engine = _load_engine(ctx)
    student_id = student_id or engine.config.student_id
    loaded = engine.store.load_profile(student_id)
    if loaded is None:
        raise click.ClickException(f"no profile for {student_id!r}")
    assessment = assess_profile(loaded, session_saturation=engine.config.session_saturation)
    click.echo(f"assessment for {student_id}")
    click.echo(f"{'dimension':<14} {'score':>6} {'weight':>7}")
    for name, score in assessment.per_dimension.items():
        click.echo(f"{name:<14} {score:>6.2f} {assessment.weights[name]:>7.2f}")
    click.echo(f"{'overall':<14} {assessment.overall:>6.2f}")


@main.command()
@click.argument("fixture")
def replay(fixture: str) -> None:
    """Replay a scripted transcript against the mock provider and verify it."""
    path = Path(fixture)
    if not path.exists():
        path = bundled_fixture_path(fixture)
    if not path.exists():
        raise click.ClickException(f"no fixture at {fixture!r}")
    doc = load_fixture(path)
    result = replay_fixture(doc)
    for index, turn in enumerate(result.turn_docs):
        click.echo(f"turn {index + 1}: {turn['category']}, fired {turn['strategy']['fired']}")
    if result.failures:
        for failure in result.failures:
            click.echo(f"FAIL {failure}", err=True)
        sys.exit(1)
    click.echo(f"{result.fixture_name}: {len(result.turn_docs)} turns ok")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.pass_context
def serve(ctx: click.Context, host: str, port: int) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app

    engine = _load_engine(ctx)
    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
