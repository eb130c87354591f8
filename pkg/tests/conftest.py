import os
from pathlib import Path

import hypothesis
import pytest

from ggp_toolkit.reasoning.compiler import Backend, CompiledGame, build_game
from ggp_toolkit.rules.kif import load_rulesheet, parse_kif

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("dev", max_examples=25, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))

GAMES = Path(__file__).resolve().parents[1] / "data" / "games"


@pytest.fixture(scope="session")
def games_dir() -> Path:
    return GAMES


@pytest.fixture(scope="session")
def tictactoe_path() -> Path:
    return GAMES / "tictactoe.kif"


@pytest.fixture(scope="session")
def tictactoe_ext_path() -> Path:
    return GAMES / "tictactoe.ext.kif"


@pytest.fixture(scope="session")
def connectfour_path() -> Path:
    return GAMES / "connectfour.ext.kif"


@pytest.fixture(scope="session")
def nim_path() -> Path:
    return GAMES / "nim.kif"


_compiled: dict[tuple[str, Backend], CompiledGame] = {}


def compiled(name: str, backend: Backend = Backend.QUERY) -> CompiledGame:
    """Compiled bundled game, cached for the whole session."""
    key = (name, backend)
    if key not in _compiled:
        _compiled[key] = build_game(load_rulesheet(GAMES / name), backend)
    return _compiled[key]


@pytest.fixture(scope="session", params=list(Backend), ids=lambda b: b.value)
def backend(request) -> Backend:
    return request.param


@pytest.fixture(scope="session")
def tictactoe() -> CompiledGame:
    return compiled("tictactoe.kif")


@pytest.fixture(scope="session")
def tictactoe_ext() -> CompiledGame:
    return compiled("tictactoe.ext.kif")


@pytest.fixture(scope="session")
def connectfour() -> CompiledGame:
    return compiled("connectfour.ext.kif")


@pytest.fixture(scope="session")
def nim() -> CompiledGame:
    return compiled("nim.kif")


BOARD8_SHEET = """
(role white)
(init (cell 1 1 x))
(<= (legal white (play ?i ?j x)) (true (cell ?i ?j x)))
(boardboundaries 1 8)
(boardfunctor cell)
(boardpattern dim dim piece)
(playfunctor play)
(playpattern dim dim piece)
"""


@pytest.fixture(scope="session")
def board8():
    """An 8x8 board on [1, 8] with (cell i j piece) facts and (play i j piece) moves."""
    return parse_kif(BOARD8_SHEET).board
