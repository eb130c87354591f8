# Configuration models and logging setup shared by every command
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

from loguru import logger
from pydantic import BaseModel, Field, field_validator, model_validator

from .reasoning.compiler import Backend

GOAL_SCALE = 100.0


@dataclass
class Folders:
    games: Path = field(default_factory=lambda: Path("data/games"))
    runs: Path = field(default_factory=lambda: Path("runs"))
    logs: Path = field(default_factory=lambda: Path("logs"))


class SearchConfig(BaseModel):
    # exploration constant on the 0-100 goal scale, converted for [0,1] payouts
    exploration: float = Field(default=40.0, ge=0.0)
    expansion_per_playout: int = Field(default=1, ge=1)
    tt_capacity: Optional[int] = Field(default=None, ge=1)
    tt_eviction: Literal["lru", "random"] = "lru"
    max_simulation_steps: int = Field(default=10_000, ge=1)
    seed: int = 0

    @property
    def c(self) -> float:
        return self.exploration / GOAL_SCALE


class ClockConfig(BaseModel):
    startclock_ms: int = Field(default=1000, gt=0)
    playclock_ms: int = Field(default=1000, gt=0)
    multiplier: float = Field(default=1.0, gt=0.0)
    # playout budget per move; replaces the wall clock when set
    playouts: Optional[int] = Field(default=None, ge=0)

    @property
    def playclock_seconds(self) -> float:
        return self.playclock_ms * self.multiplier / 1000.0

    @property
    def startclock_seconds(self) -> float:
        return self.startclock_ms * self.multiplier / 1000.0

    def halved(self) -> "ClockConfig":
        """Clocks for the handicapped baseline agent."""
        playouts = None if self.playouts is None else max(1, self.playouts // 2)
        return self.model_copy(update={"multiplier": self.multiplier / 2, "playouts": playouts})


class MiningConfig(BaseModel):
    phi_threshold: float = Field(default=0.1, ge=0.0, lt=1.0)
    # values >= 1 are basket counts, values < 1 fractions of the pool size
    eps_d: float = Field(default=0.2, gt=0.0)
    eps_u: float = Field(default=0.05, ge=0.0)
    n_naive: int = Field(default=3, ge=1)
    n_max: int = Field(default=5, ge=1)
    knearest_k: list[int] = [2, 3]
    max_itemsets_per_feature: int = Field(default=3, ge=0)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_sizes(self) -> "MiningConfig":
        if self.n_max < self.n_naive:
            raise ValueError(f"n_max ({self.n_max}) must be >= n_naive ({self.n_naive})")
        if any(k < 1 for k in self.knearest_k):
            raise ValueError("knearest_k entries must be >= 1")
        return self


class EvolutionConfig(BaseModel):
    population: int = Field(default=24, ge=1)
    generations: int = Field(default=10, ge=0)
    crossover_rate: float = Field(default=0.75, ge=0.0, le=1.0)
    mutation_rate: float = Field(default=0.015, ge=0.0, le=1.0)
    elitism: float = Field(default=0.15, ge=0.0, le=1.0)
    fresh_fraction: float = Field(default=0.10, ge=0.0, le=1.0)
    rank_pressure: float = Field(default=1.7, ge=1.0, le=2.0)
    seed_matches: int = Field(default=300, ge=0)
    matches_per_round: int = Field(default=50, ge=1)
    elo_k: float = Field(default=32.0, gt=0.0)
    workers: int = Field(default=4, ge=1)


class RunConfig(BaseModel):
    """Validated inputs of one CLI invocation."""

    subcommand: str
    rulesheet: Path
    seed: int = 0
    backend: Backend = Backend.QUERY
    clocks: ClockConfig = ClockConfig()
    tt_capacity: Optional[int] = Field(default=None, ge=1)
    knowledge: Optional[Path] = None
    out: Optional[Path] = None

    @field_validator("rulesheet")
    @classmethod
    def _rulesheet_exists(cls, path: Path) -> Path:
        if not path.is_file():
            raise ValueError(f"rule sheet {path} not found")
        return path

    @field_validator("knowledge")
    @classmethod
    def _knowledge_exists(cls, path: Optional[Path]) -> Optional[Path]:
        if path is not None and not path.is_file():
            raise ValueError(f"knowledge file {path} not found")
        return path


class AppConfig(BaseModel):
    folders: Folders = Folders()
    search: SearchConfig = SearchConfig()
    clocks: ClockConfig = ClockConfig()
    mining: MiningConfig = MiningConfig()
    evolution: EvolutionConfig = EvolutionConfig()


def load_config(config_path: str | Path = "config.toml") -> AppConfig:
    """
    Loads config.toml into the typed configuration; a missing file gives defaults.

    :param config_path: Path to the TOML file.
    :return: The validated AppConfig.
    """
    try:
        with open(config_path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        logger.warning(f"Configuration file {config_path} not found, using defaults.")
        return AppConfig()

    folders = Folders(**{k: Path(v) for k, v in raw.get("folders", {}).items()})
    return AppConfig(
        folders=folders,
        search=SearchConfig(**raw.get("search", {})),
        clocks=ClockConfig(**raw.get("clocks", {})),
        mining=MiningConfig(**raw.get("mining", {})),
        evolution=EvolutionConfig(**raw.get("evolution", {})),
    )


def configure_logging(level: str = "INFO", log_dir: Path = Path("logs")) -> None:
    """Rotating debug log file plus a stderr sink at the requested level."""
    logger.remove()
    log_dir.mkdir(parents=True, exist_ok=True)
    logger.add(log_dir / "logfile.log", rotation="1 week", level="DEBUG")
    logger.add(sys.stderr, level=level.upper())
