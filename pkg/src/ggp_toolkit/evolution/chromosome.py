"""
Chromosomes of the evolution: a knowledge file read as a gene string.

The genes are the fields of KnowledgeParameters (real, natural and boolean
values with their bounds); the per-role feature lists travel with them and
are recombined by weight rather than position.
"""
from __future__ import annotations

from dataclasses import dataclass
from ggp_toolkit._compat import StrEnum
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from ..knowledge.features import Feature, sort_features
from ..knowledge.knowledge_file import KnowledgeFile, RoleKnowledge
from ..knowledge.parameters import KnowledgeParameters, gene_bounds

# Gaussian step of real genes, as a share of the bound width
MUTATION_SIGMA = 0.1
INITIAL_ELO = 1500.0


class GeneKind(StrEnum):
    REAL = "real"
    NATURAL = "natural"
    BOOLEAN = "boolean"


@dataclass(frozen=True)
class Gene:
    name: str
    kind: GeneKind
    low: float = 0.0
    high: float = 1.0


def _genes() -> tuple[Gene, ...]:
    kinds = {"number": GeneKind.REAL, "integer": GeneKind.NATURAL, "boolean": GeneKind.BOOLEAN}
    genes = []
    for name, (json_type, low, high) in gene_bounds().items():
        kind = kinds[json_type]
        if kind is GeneKind.BOOLEAN:
            genes.append(Gene(name, kind))
        else:
            genes.append(Gene(name, kind, float(low), float(high)))  # type: ignore[arg-type]
    return tuple(genes)


GENES = _genes()


@dataclass
class Individual:
    knowledge: KnowledgeFile
    fitness: Optional[float] = None
    elo: float = INITIAL_ELO
    matches: int = 0
    # draws count half
    wins: float = 0.0

    @property
    def scored(self) -> bool:
        return self.fitness is not None

    def summary(self) -> dict[str, Any]:
        return {"fitness": self.fitness, "elo": self.elo, "matches": self.matches, "wins": self.wins}


# --- Genes ---

def random_gene(gene: Gene, rng: np.random.Generator) -> Any:
    match gene.kind:
        case GeneKind.BOOLEAN:
            return bool(rng.random() < 0.5)
        case GeneKind.NATURAL:
            return int(rng.integers(int(gene.low), int(gene.high) + 1))
        case _:
            return float(rng.uniform(gene.low, gene.high))


def mutate_gene(gene: Gene, value: Any, rng: np.random.Generator) -> Any:
    match gene.kind:
        case GeneKind.BOOLEAN:
            return not value
        case GeneKind.NATURAL:
            step = 1 if rng.random() < 0.5 else -1
            return int(min(gene.high, max(gene.low, value + step)))
        case _:
            sigma = MUTATION_SIGMA * (gene.high - gene.low)
            return float(np.clip(value + rng.normal(0.0, sigma), gene.low, gene.high))


def random_parameters(rng: np.random.Generator) -> KnowledgeParameters:
    return KnowledgeParameters.model_validate({g.name: random_gene(g, rng) for g in GENES})


def gene_values(params: KnowledgeParameters) -> dict[str, Any]:
    return params.model_dump()


# --- Feature lists ---

def merge_features(lists: Iterable[Sequence[Feature]], limit: int) -> tuple[Feature, ...]:
    """The `limit` heaviest distinct features of all lists; a duplicate keeps its highest weight."""
    best: dict[Feature, Feature] = {}
    for features in lists:
        for f in features:
            if f not in best or f.weight > best[f].weight:
                best[f] = f
    return tuple(sort_features(best.values())[:limit])


def _truncate(players: dict[str, RoleKnowledge], limit: int) -> dict[str, RoleKnowledge]:
    return {
        role: RoleKnowledge(tuple(sort_features(k.winning)[:limit]), tuple(sort_features(k.losing)[:limit]))
        for role, k in players.items()
    }


def with_parameters(knowledge: KnowledgeFile, params: KnowledgeParameters) -> KnowledgeFile:
    """Replaces the parameters; lists longer than the new max size are cut to their heaviest features."""
    return KnowledgeFile(params, _truncate(knowledge.players, params.max_knowledge_size))


# --- Operators ---

def random_knowledge(roles: Sequence[str], rng: np.random.Generator) -> KnowledgeFile:
    return KnowledgeFile(random_parameters(rng), {role: RoleKnowledge() for role in roles})


def uniform_crossover(
    a: KnowledgeFile,
    b: KnowledgeFile,
    rate: float,
    rng: np.random.Generator,
) -> tuple[KnowledgeFile, KnowledgeFile]:
    """
    With probability `rate`, swaps each gene independently with probability 0.5;
    each child's feature lists become the heaviest distinct features of both parents.
    Otherwise the children are copies of the parents.
    """
    if rng.random() >= rate:
        return a, b
    va, vb = gene_values(a.parameters), gene_values(b.parameters)
    swap = rng.random(len(GENES)) < 0.5
    ca, cb = dict(va), dict(vb)
    for gene, s in zip(GENES, swap):
        if s:
            ca[gene.name], cb[gene.name] = vb[gene.name], va[gene.name]

    roles = list(dict.fromkeys([*a.players, *b.players]))
    children = []
    for values in (ca, cb):
        params = KnowledgeParameters.model_validate(values)
        limit = params.max_knowledge_size
        players = {
            role: RoleKnowledge(
                merge_features((a.role(role).winning, b.role(role).winning), limit),
                merge_features((a.role(role).losing, b.role(role).losing), limit),
            )
            for role in roles
        }
        children.append(KnowledgeFile(params, players))
    return children[0], children[1]


def mutate(knowledge: KnowledgeFile, rate: float, rng: np.random.Generator) -> KnowledgeFile:
    """Each gene mutates with probability `rate`: booleans flip, naturals step by one, reals take a clamped Gaussian step."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate {rate} outside [0, 1]")
    hits = rng.random(len(GENES)) < rate
    if not hits.any():
        return knowledge
    values = gene_values(knowledge.parameters)
    for gene, hit in zip(GENES, hits):
        if hit:
            values[gene.name] = mutate_gene(gene, values[gene.name], rng)
    return with_parameters(knowledge, KnowledgeParameters.model_validate(values))


def adopt_features(knowledge: KnowledgeFile, mined: KnowledgeFile, rng: np.random.Generator) -> KnowledgeFile:
    """
    Merges mined features into an individual: each mined feature is adopted with
    probability equal to the learning factor gene and enters at its mined weight.
    """
    params = knowledge.parameters
    limit = params.max_knowledge_size
    players = dict(knowledge.players)
    for role, lists in mined.players.items():
        own = knowledge.role(role)
        merged = []
        for current, found in ((own.winning, lists.winning), (own.losing, lists.losing)):
            adopted = [f for f in found if rng.random() < params.learning_factor]
            replaced = set(adopted)
            merged.append(merge_features((adopted, [f for f in current if f not in replaced]), limit))
        players[role] = RoleKnowledge(*merged)
    return KnowledgeFile(params, players)


def copy_individual(individual: Individual) -> Individual:
    return Individual(individual.knowledge, individual.fitness, individual.elo, individual.matches, individual.wins)


def fresh_population(n: int, roles: Sequence[str], rng: np.random.Generator) -> list[Individual]:
    return [Individual(random_knowledge(roles, rng)) for _ in range(n)]
