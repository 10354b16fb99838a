import pathlib

import pytest

from moltiers.molgraph import MolecularGraph, load_molecules
from moltiers.smiles import parse_smiles

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

VANILLIN = "O=Cc1ccc(O)c(OC)c1"


@pytest.fixture(scope="session")
def corpus_path() -> pathlib.Path:
    return DATA / "corpus30.smi"


@pytest.fixture(scope="session")
def corpus_graphs(corpus_path) -> list[MolecularGraph]:
    records = load_molecules(corpus_path)
    assert len(records) == 30
    assert all(r.graph is not None for r in records), [r.error for r in records]
    return [r.graph for r in records]


@pytest.fixture(scope="session")
def vanillin() -> MolecularGraph:
    return parse_smiles(VANILLIN, name="vanillin")
