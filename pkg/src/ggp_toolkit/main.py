"""
ggp command line: check, compile, bench, play, mine, evolve and score.

Exit codes: 0 success, 1 input error, 2 inconclusive or degraded result,
3 internal failure.
"""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Optional

import click
from loguru import logger
from pydantic import ValidationError

from . import __version__
from .errors import GgpError
from .evolution.evolve import evolve
from .evolution.records import load_records, save_record
from .evolution.tournament import make_runner, score_knowledge
from .knowledge.knowledge_file import load_knowledge, save_knowledge
from .knowledge.parameters import KnowledgeParameters
from .mining.miner import mine_knowledge
from .player.agents import AGENT_KINDS, make_agent
from .player.match import run_match
from .reasoning.bench import bench_random_playouts
from .reasoning.compiler import Backend, CompiledGame, build_game
from .rules.kif import load_rulesheet
from .rules.mgdl import Verdict, check_conformance
from .settings import AppConfig, ClockConfig, MiningConfig, RunConfig, SearchConfig, configure_logging, load_config

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGRADED = 2
EXIT_INTERNAL = 3


class GgpGroup(click.Group):
    """Maps every failure to the toolkit's exit codes instead of click's defaults."""

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs.pop("standalone_mode", None)
        try:
            code = super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as e:
            e.show()
            code = EXIT_INPUT
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_INPUT
        except (GgpError, FileNotFoundError, ValidationError) as e:
            logger.error(f"{type(e).__name__}: {e}")
            code = EXIT_INPUT
        except Exception:
            logger.exception("Internal failure")
            code = EXIT_INTERNAL
        sys.exit(code or EXIT_OK)


# --- Shared option groups ---

def rulesheet_option(f):
    return click.option(
        "--rulesheet", required=True, type=click.Path(path_type=Path), help="Path to a KIF rule sheet."
    )(f)


def backend_option(f):
    return click.option(
        "--backend",
        type=click.Choice([b.value for b in Backend]),
        default=Backend.QUERY.value,
        show_default=True,
        help="Evaluation model of the reasoner.",
    )(f)


def clock_options(f):
    for option in reversed(
        [
            click.option("--startclock-ms", type=int, default=None, help="Startclock in milliseconds."),
            click.option("--playclock-ms", type=int, default=None, help="Playclock in milliseconds."),
            click.option("--multiplier", type=float, default=None, help="Game clock multiplier."),
            click.option("--playouts", type=int, default=None, help="Playouts per move instead of the playclock."),
            click.option("--tt-capacity", type=int, default=None, help="Transposition table capacity (unbounded if omitted)."),
        ]
    ):
        f = option(f)
    return f


def mining_options(f):
    for option in reversed(
        [
            click.option("--phi-threshold", type=float, default=None, help="Minimum |phi| of a kept feature."),
            click.option("--eps-d", type=float, default=None, help="Itemset count in desirable states (fraction if < 1)."),
            click.option("--eps-u", type=float, default=None, help="Itemset count allowed in undesirable states (fraction if < 1)."),
        ]
    ):
        f = option(f)
    return f


def _app(ctx: click.Context) -> AppConfig:
    return ctx.obj["config"]


def _run_config(subcommand: str, rulesheet: Path, **values: Any) -> RunConfig:
    return RunConfig(subcommand=subcommand, rulesheet=rulesheet, **{k: v for k, v in values.items() if v is not None})


def _clocks(app: AppConfig, startclock_ms, playclock_ms, multiplier, playouts) -> ClockConfig:
    update = {
        "startclock_ms": startclock_ms,
        "playclock_ms": playclock_ms,
        "multiplier": multiplier,
        "playouts": playouts,
    }
    return ClockConfig.model_validate(app.clocks.model_dump() | {k: v for k, v in update.items() if v is not None})


def _mining(app: AppConfig, phi_threshold, eps_d, eps_u) -> MiningConfig:
    update = {"phi_threshold": phi_threshold, "eps_d": eps_d, "eps_u": eps_u}
    return MiningConfig.model_validate(app.mining.model_dump() | {k: v for k, v in update.items() if v is not None})


def _search(app: AppConfig, seed: int, tt_capacity: Optional[int]) -> SearchConfig:
    update: dict[str, Any] = {"seed": seed}
    if tt_capacity is not None:
        update["tt_capacity"] = tt_capacity
    return SearchConfig.model_validate(app.search.model_dump() | update)


def _game(run: RunConfig) -> CompiledGame:
    return build_game(load_rulesheet(run.rulesheet), run.backend)


# --- Commands ---

@click.group(cls=GgpGroup)
@click.version_option(__version__)
@click.option("--config", "config_path", default="config.toml", show_default=True, help="Configuration file.")
@click.option("--log-level", default="INFO", show_default=True, help="Level of the stderr log sink.")
@click.pass_context
def cli(ctx: click.Context, config_path: str, log_level: str):
    """General Game Playing toolchain."""
    config = load_config(config_path)
    configure_logging(log_level, config.folders.logs)
    ctx.obj = {"config": config}


@cli.command()
@rulesheet_option
def check(rulesheet: Path) -> int:
    """Checks whether a rule sheet is in mGDL."""
    run = _run_config("check", rulesheet)
    sheet = load_rulesheet(run.rulesheet)
    result = check_conformance(sheet)
    click.echo(f"{sheet.name}: {result.verdict}")
    for witness in result.witnesses:
        click.echo(f"  witness: {witness}")
    return EXIT_OK if result.verdict is Verdict.CONFORMING else EXIT_DEGRADED


@cli.command("compile")
@rulesheet_option
@backend_option
@click.option("--dump", is_flag=True, help="Print the query plan.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write the plan dump to this file.")
def compile_cmd(rulesheet: Path, backend: str, dump: bool, out: Optional[Path]) -> int:
    """Compiles a rule sheet and reports its query plan."""
    run = _run_config("compile", rulesheet, backend=backend, out=out)
    game = _game(run)
    plan = game.plan
    click.echo(
        f"{game.name}: {len(game.roles)} roles, {len(plan.procedures)} procedures, "
        f"{len(plan.fact_signatures)} fact overloads, column capacity {plan.column_capacity}"
    )
    if dump:
        click.echo(plan.dump())
    if run.out is not None:
        run.out.parent.mkdir(parents=True, exist_ok=True)
        run.out.write_text(plan.dump() + "\n", encoding="utf-8")
        logger.success(f"Plan written to {run.out}")
    return EXIT_DEGRADED if game.inconclusive else EXIT_OK


@cli.command()
@rulesheet_option
@click.option(
    "--backend",
    type=click.Choice([*(b.value for b in Backend), "both"]),
    default=Backend.QUERY.value,
    show_default=True,
    help="Reasoner to measure; 'both' prints one line per backend.",
)
@click.option("--seconds", type=float, default=10.0, show_default=True, help="Wall-clock budget per backend.")
@click.option("--games", type=int, default=None, help="Fixed number of playouts instead of a time budget.")
@click.option("--seed", type=int, default=0, show_default=True)
def bench(rulesheet: Path, backend: str, seconds: float, games: Optional[int], seed: int) -> int:
    """Random-playout throughput: game, backend, games/s, mean length."""
    if games is None and seconds <= 0:
        raise click.UsageError("--seconds must be positive")
    if games is not None and games < 1:
        raise click.UsageError("--games must be at least 1")
    run = _run_config("bench", rulesheet, seed=seed)
    sheet = load_rulesheet(run.rulesheet)
    backends = list(Backend) if backend == "both" else [Backend(backend)]
    for b in backends:
        result = bench_random_playouts(build_game(sheet, b), seconds, seed, games)
        click.echo(result.line())
    return EXIT_OK


@cli.command()
@rulesheet_option
@backend_option
@click.option(
    "--agent",
    "agents",
    multiple=True,
    type=click.Choice(AGENT_KINDS),
    help="Agent per role in role order; missing roles play uct.",
)
@clock_options
@click.option("--knowledge", type=click.Path(path_type=Path), default=None, help="Knowledge file for uct+knowledge agents.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Game record file.")
@click.pass_context
def play(ctx, rulesheet, backend, agents, startclock_ms, playclock_ms, multiplier, playouts, tt_capacity, knowledge, seed, out) -> int:
    """Plays one local match and writes its game record."""
    app = _app(ctx)
    run = _run_config("play", rulesheet, backend=backend, seed=seed, knowledge=knowledge, out=out, tt_capacity=tt_capacity)
    clocks = _clocks(app, startclock_ms, playclock_ms, multiplier, playouts)
    game = _game(run)
    kinds = list(agents) + ["uct"] * (len(game.roles) - len(agents))
    if len(kinds) > len(game.roles):
        raise click.UsageError(f"{game.name} has {len(game.roles)} roles, got {len(agents)} agents")
    knowledge_file = load_knowledge(run.knowledge) if run.knowledge is not None else None
    players = [
        make_agent(kind, _search(app, seed + i, run.tt_capacity), clocks, knowledge_file) for i, kind in enumerate(kinds)
    ]

    record = run_match(game, players, clocks, match_id=f"{game.name}-{seed}", seed=seed)
    path = run.out or app.folders.runs / "matches" / f"{record.match_id}.xml"
    save_record(record, path)
    click.echo(" ".join(f"{role}={score}" for role, score in record.scores) + f"\t{len(record.states) - 1} turns\t{path}")
    return EXIT_OK


@cli.command()
@click.option("--records", "records_paths", multiple=True, required=True, type=click.Path(path_type=Path), help="Record file or directory; repeatable.")
@rulesheet_option
@mining_options
@click.option("--out", type=click.Path(path_type=Path), required=True, help="Knowledge file to write.")
@click.pass_context
def mine(ctx, records_paths, rulesheet, phi_threshold, eps_d, eps_u, out) -> int:
    """Mines weighted feature lists from game records."""
    app = _app(ctx)
    run = _run_config("mine", rulesheet, out=out)
    sheet = load_rulesheet(run.rulesheet)
    if sheet.board is None:
        raise GgpError(f"{sheet.name} has no board extension")
    for path in records_paths:
        if not path.exists():
            raise FileNotFoundError(f"records {path} not found")
    records = load_records(records_paths)
    if not records:
        raise GgpError(f"no game records found in {', '.join(map(str, records_paths))}")
    mining = _mining(app, phi_threshold, eps_d, eps_u)

    knowledge = mine_knowledge(records, sheet.board, mining, KnowledgeParameters(), roles=sheet.roles)
    save_knowledge(knowledge, run.out)
    for role, lists in knowledge.players.items():
        click.echo(f"{role}: {len(lists.winning)} winning, {len(lists.losing)} losing")
    return EXIT_OK


@cli.command("evolve")
@rulesheet_option
@backend_option
@clock_options
@click.option("--population", type=int, default=None)
@click.option("--generations", type=int, default=None)
@click.option("--matches-per-round", type=int, default=None)
@click.option("--seed-matches", type=int, default=None, help="Bare-UCT matches that seed the first mining step.")
@click.option("--workers", type=int, default=None, help="Parallel match processes.")
@mining_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Run directory.")
@click.option("--resume", is_flag=True, help="Continue the run found in the run directory.")
@click.pass_context
def evolve_cmd(
    ctx, rulesheet, backend, startclock_ms, playclock_ms, multiplier, playouts, tt_capacity,
    population, generations, matches_per_round, seed_matches, workers, phi_threshold, eps_d, eps_u, seed, out, resume,
) -> int:
    """Evolves a knowledge file; writes records, populations and log.tsv into the run directory."""
    app = _app(ctx)
    run = _run_config("evolve", rulesheet, backend=backend, seed=seed, out=out, tt_capacity=tt_capacity)
    update = {
        "population": population,
        "generations": generations,
        "matches_per_round": matches_per_round,
        "seed_matches": seed_matches,
        "workers": workers,
    }
    config = app.evolution.model_validate(app.evolution.model_dump() | {k: v for k, v in update.items() if v is not None})
    clocks = _clocks(app, startclock_ms, playclock_ms, multiplier, playouts)
    mining = _mining(app, phi_threshold, eps_d, eps_u)
    game = _game(run)
    run_dir = run.out or app.folders.runs / f"evolve-{game.name}-{seed}"

    result = evolve(game, run_dir, config, _search(app, seed, run.tt_capacity), clocks, mining, seed, resume)
    click.echo(f"best fitness {result.best_fitness:.3f}\t{run_dir / 'best.xml'}")
    return EXIT_OK


@cli.command()
@rulesheet_option
@backend_option
@clock_options
@click.option("--knowledge", type=click.Path(path_type=Path), required=True, help="Knowledge file to score.")
@click.option("--matches", type=int, default=100, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Directory for the match records.")
@click.pass_context
def score(ctx, rulesheet, backend, startclock_ms, playclock_ms, multiplier, playouts, tt_capacity, knowledge, matches, workers, seed, out) -> int:
    """Win rate of a knowledge file against the half-clock bare-UCT baseline."""
    if matches < 1:
        raise click.UsageError("--matches must be at least 1")
    app = _app(ctx)
    run = _run_config("score", rulesheet, backend=backend, seed=seed, knowledge=knowledge, out=out, tt_capacity=tt_capacity)
    clocks = _clocks(app, startclock_ms, playclock_ms, multiplier, playouts)
    game = _game(run)
    individual, records = score_knowledge(
        game, load_knowledge(run.knowledge), matches, _search(app, seed, run.tt_capacity), clocks, make_runner(workers), seed
    )
    if run.out is not None:
        for record in records:
            save_record(record, run.out / f"match-{record.match_id}.xml")
    click.echo(f"win rate {individual.fitness:.3f} over {individual.matches} matches")
    return EXIT_OK if len(records) == individual.matches else EXIT_DEGRADED


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
