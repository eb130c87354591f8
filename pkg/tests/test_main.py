from types import SimpleNamespace

import pytest
from click.testing import CliRunner
from loguru import logger

from ggp_toolkit.evolution.records import load_record
from ggp_toolkit.knowledge.knowledge_file import KnowledgeFile, load_knowledge, save_knowledge
from ggp_toolkit.main import EXIT_DEGRADED, EXIT_INPUT, EXIT_OK, cli

WITNESS_SHEET = "(<= (foo (bar a))) (<= (baz ?x) (foo ?x))"


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    """Runs every command from an empty directory so logs and runs stay in tmp_path."""
    monkeypatch.chdir(tmp_path)
    yield tmp_path
    logger.remove()


def invoke(*args: str):
    return CliRunner().invoke(cli, [str(a) for a in args])


# --- check ---

@pytest.mark.parametrize("name", ["tictactoe.kif", "tictactoe.ext.kif", "connectfour.ext.kif", "nim.kif"])
def test_check_bundled_games(games_dir, name):
    result = invoke("check", "--rulesheet", games_dir / name)
    assert result.exit_code == EXIT_OK
    assert "conforming" in result.stdout.lower()


def test_check_witness(workdir):
    path = workdir / "witness.kif"
    path.write_text(WITNESS_SHEET, encoding="utf-8")
    result = invoke("check", "--rulesheet", path)
    assert result.exit_code == EXIT_DEGRADED
    assert "witness:" in result.stdout


def test_check_input_errors(workdir):
    assert invoke("check", "--rulesheet", workdir / "missing.kif").exit_code == EXIT_INPUT
    broken = workdir / "broken.kif"
    broken.write_text("(role white", encoding="utf-8")
    assert invoke("check", "--rulesheet", broken).exit_code == EXIT_INPUT
    assert invoke("check").exit_code == EXIT_INPUT


# --- compile and bench ---

def test_compile(tictactoe_path, workdir):
    out = workdir / "plan.txt"
    result = invoke("compile", "--rulesheet", tictactoe_path, "--backend", "table", "--dump", "--out", out)
    assert result.exit_code == EXIT_OK
    assert result.stdout.startswith("tictactoe: 2 roles")
    assert "backend table" in result.stdout
    assert out.read_text(encoding="utf-8").startswith("backend table")


def test_bench_both_backends(tictactoe_path):
    result = invoke("bench", "--rulesheet", tictactoe_path, "--backend", "both", "--games", 3)
    assert result.exit_code == EXIT_OK
    lines = result.stdout.strip().splitlines()
    assert [line.split("\t")[:2] for line in lines] == [["tictactoe", "table"], ["tictactoe", "query"]]


def test_bench_needs_a_budget(tictactoe_path):
    assert invoke("bench", "--rulesheet", tictactoe_path, "--seconds", 0).exit_code == EXIT_INPUT
    assert invoke("bench", "--rulesheet", tictactoe_path, "--games", 0).exit_code == EXIT_INPUT


# --- play, mine and score ---

def play_random(path, out, seed):
    return invoke("play", "--rulesheet", path, "--agent", "random", "--agent", "random", "--seed", seed, "--out", out)


def test_play(tictactoe_path, workdir):
    out = workdir / "match.xml"
    result = play_random(tictactoe_path, out, 4)
    assert result.exit_code == EXIT_OK
    record = load_record(out)
    assert record.match_id == "tictactoe-4"
    assert record.roles == ("xplayer", "oplayer")
    assert "xplayer=" in result.stdout


def test_play_default_location(nim_path, workdir):
    result = invoke("play", "--rulesheet", nim_path, "--agent", "random", "--playouts", 5)
    assert result.exit_code == EXIT_OK
    assert (workdir / "runs" / "matches" / "nim-0.xml").is_file()


def test_play_rejects_extra_agents(tictactoe_path):
    result = invoke("play", "--rulesheet", tictactoe_path, *["--agent", "random"] * 3)
    assert result.exit_code == EXIT_INPUT


def test_play_needs_knowledge_for_knowledge_agents(tictactoe_ext_path):
    result = invoke("play", "--rulesheet", tictactoe_ext_path, "--agent", "uct+knowledge", "--playouts", 5)
    assert result.exit_code == EXIT_INPUT


@pytest.fixture
def records_dir(tictactoe_ext_path, workdir):
    folder = workdir / "records"
    for seed in range(6):
        assert play_random(tictactoe_ext_path, folder / f"m{seed}.xml", seed).exit_code == EXIT_OK
    return folder


def test_mine(tictactoe_ext_path, records_dir, workdir):
    out = workdir / "mined.xml"
    result = invoke("mine", "--records", records_dir, "--rulesheet", tictactoe_ext_path, "--phi-threshold", 0.2, "--out", out)
    assert result.exit_code == EXIT_OK
    assert "xplayer:" in result.stdout and "oplayer:" in result.stdout
    assert set(load_knowledge(out).players) <= {"xplayer", "oplayer"}


def test_mine_input_errors(tictactoe_path, tictactoe_ext_path, records_dir, workdir):
    out = workdir / "mined.xml"
    assert invoke("mine", "--records", records_dir, "--rulesheet", tictactoe_path, "--out", out).exit_code == EXIT_INPUT
    missing = workdir / "nothing"
    assert invoke("mine", "--records", missing, "--rulesheet", tictactoe_ext_path, "--out", out).exit_code == EXIT_INPUT
    empty = workdir / "empty"
    empty.mkdir()
    assert invoke("mine", "--records", empty, "--rulesheet", tictactoe_ext_path, "--out", out).exit_code == EXIT_INPUT
    assert not out.exists()


def test_score(tictactoe_ext_path, workdir):
    knowledge = workdir / "k.xml"
    save_knowledge(KnowledgeFile(), knowledge)
    out = workdir / "scored"
    result = invoke(
        "score", "--rulesheet", tictactoe_ext_path, "--knowledge", knowledge, "--matches", 2, "--playouts", 4, "--out", out
    )
    assert result.exit_code == EXIT_OK
    assert "over 2 matches" in result.stdout
    assert len(list(out.iterdir())) == 2


def test_score_input_errors(tictactoe_ext_path, workdir):
    missing = workdir / "missing.xml"
    assert invoke("score", "--rulesheet", tictactoe_ext_path, "--knowledge", missing).exit_code == EXIT_INPUT
    knowledge = workdir / "k.xml"
    save_knowledge(KnowledgeFile(), knowledge)
    args = ("score", "--rulesheet", tictactoe_ext_path, "--knowledge", knowledge, "--matches", 0)
    assert invoke(*args).exit_code == EXIT_INPUT


# --- evolve ---

def test_evolve_small_run(tictactoe_ext_path, workdir):
    run_dir = workdir / "run"
    args = [
        "evolve", "--rulesheet", tictactoe_ext_path, "--population", 2, "--generations", 1,
        "--matches-per-round", 1, "--seed-matches", 2, "--workers", 1, "--playouts", 3, "--out", run_dir,
    ]
    result = invoke(*args)
    assert result.exit_code == EXIT_OK
    assert (run_dir / "best.xml").is_file()
    assert (run_dir / "log.tsv").is_file()
    load_knowledge(run_dir / "best.xml")


def test_evolve_mining_overrides(tictactoe_ext_path, workdir, monkeypatch):
    seen = {}

    def fake_evolve(game, run_dir, config, search, clocks, mining, seed, resume):
        seen["mining"] = mining
        return SimpleNamespace(best_fitness=0.5)

    monkeypatch.setattr("ggp_toolkit.main.evolve", fake_evolve)
    args = ["evolve", "--rulesheet", tictactoe_ext_path, "--phi-threshold", 0.3, "--eps-d", 0.4, "--eps-u", 0.01]
    assert invoke(*args).exit_code == EXIT_OK
    mining = seen["mining"]
    assert (mining.phi_threshold, mining.eps_d, mining.eps_u) == (0.3, 0.4, 0.01)
    assert mining.n_naive == 3
    assert invoke("evolve", "--rulesheet", tictactoe_ext_path, "--phi-threshold", 1.5).exit_code == EXIT_INPUT


def test_evolve_needs_a_board(tictactoe_path, workdir):
    result = invoke("evolve", "--rulesheet", tictactoe_path, "--population", 2, "--generations", 0, "--out", workdir / "run")
    assert result.exit_code == EXIT_INPUT


def test_version():
    result = invoke("--version")
    assert result.exit_code == EXIT_OK
