"""Molecular graph model and feature matrices.

Hydrogens are explicit nodes: graphs carry every atom, adjacency is binary
and symmetric, and for a connected molecule U = N - 1 + R where R is the
number of independent rings. Ring perception (a shortest-cycle basis) runs
at construction so rings, per-bond ring flags and conjugation flags are
always available.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from .cycles import shortest_cycle_basis

ELEMENTS = ("H", "B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I")

#: Standard valences; multi-valent elements list every allowed state.
VALENCES = {
    "H": (1,),
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "F": (1,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

BOND_ORDERS = ("single", "double", "triple", "aromatic")

#: Width of the node feature rows produced by :func:`featurize_nodes`.
NODE_FEATURE_DIM = len(ELEMENTS) + 5


@dataclass
class Atom:
    element: str
    formal_charge: int = 0
    aromatic: bool = False
    index: int = -1

    def __post_init__(self):
        if self.element not in ELEMENTS:
            raise ValueError(f"unsupported element {self.element!r}")


@dataclass
class Bond:
    first: int
    second: int
    order: str
    in_ring: bool = False
    conjugated: bool = False

    def __post_init__(self):
        if self.order not in BOND_ORDERS:
            raise ValueError(f"unsupported bond order {self.order!r}")
        if self.first == self.second:
            raise ValueError(f"bond joins atom {self.first} to itself")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.first, self.second)


class MolecularGraph:
    """One connected molecule with explicit hydrogens.

    Construction validates connectivity, builds the adjacency matrix, runs
    ring perception and derives the per-bond ring and conjugation flags.
    Treat instances as immutable afterwards.
    """

    def __init__(self, atoms: list[Atom], bonds: list[Bond], name: str = "", smiles: str = ""):
        if not atoms:
            raise ValueError("a molecule needs at least one atom")
        self.atoms = list(atoms)
        self.bonds = list(bonds)
        self.name = name
        self.smiles = smiles
        n = len(self.atoms)
        for i, atom in enumerate(self.atoms):
            atom.index = i

        self.adjacency = np.zeros((n, n))
        seen_pairs = set()
        for bond in self.bonds:
            i, j = bond.endpoints
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"bond endpoint out of range: {bond.endpoints}")
            key = (min(i, j), max(i, j))
            if key in seen_pairs:
                raise ValueError(f"duplicate bond between atoms {key}")
            seen_pairs.add(key)
            self.adjacency[i, j] = 1.0
            self.adjacency[j, i] = 1.0

        self._neighbors: list[list[int]] = [[] for _ in range(n)]
        self._bonds_at: list[list[Bond]] = [[] for _ in range(n)]
        for bond in self.bonds:
            i, j = bond.endpoints
            self._neighbors[i].append(j)
            self._neighbors[j].append(i)
            self._bonds_at[i].append(bond)
            self._bonds_at[j].append(bond)

        self._check_connected()

        self.rings: tuple[tuple[int, ...], ...] = tuple(
            shortest_cycle_basis(n, [b.endpoints for b in self.bonds])
        )
        expected = len(self.bonds) - n + 1
        if len(self.rings) != expected:
            raise RuntimeError(f"ring perception found {len(self.rings)}, expected {expected}")

        ring_edges = set()
        ring_atoms = set()
        for ring in self.rings:
            ring_atoms.update(ring)
            for i, node in enumerate(ring):
                nxt = ring[(i + 1) % len(ring)]
                ring_edges.add((min(node, nxt), max(node, nxt)))
        self._ring_atoms = frozenset(ring_atoms)

        multi = [
            any(b.order in ("double", "triple", "aromatic") for b in self._bonds_at[i])
            for i in range(n)
        ]
        for bond in self.bonds:
            i, j = bond.endpoints
            bond.in_ring = (min(i, j), max(i, j)) in ring_edges
            bond.conjugated = bond.order == "single" and multi[i] and multi[j]

        self._node_features: np.ndarray | None = None
        self._edge_features: np.ndarray | None = None

    def _check_connected(self) -> None:
        n = len(self.atoms)
        seen = {0}
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for nbr in self._neighbors[node]:
                if nbr not in seen:
                    seen.add(nbr)
                    queue.append(nbr)
        if len(seen) != n:
            raise ValueError(f"molecular graph is disconnected ({len(seen)} of {n} atoms reachable)")

    # -- simple accessors ---------------------------------------------------

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    @property
    def ring_count(self) -> int:
        return len(self.rings)

    def neighbors(self, index: int) -> list[int]:
        return self._neighbors[index]

    def bonds_at(self, index: int) -> list[Bond]:
        return self._bonds_at[index]

    def atom_in_ring(self, index: int) -> bool:
        return index in self._ring_atoms

    def heavy_degree(self, index: int) -> int:
        return sum(1 for nbr in self._neighbors[index] if self.atoms[nbr].element != "H")

    def attached_hydrogens(self, index: int) -> int:
        return sum(1 for nbr in self._neighbors[index] if self.atoms[nbr].element == "H")

    def element_counts(self) -> dict[str, int]:
        return dict(Counter(atom.element for atom in self.atoms))

    def formula(self) -> str:
        """Element summary in Hill order: C, H, then the rest alphabetically."""
        counts = Counter(atom.element for atom in self.atoms)
        ordered = [e for e in ("C", "H") if e in counts]
        ordered += sorted(e for e in counts if e not in ("C", "H"))
        return "".join(f"{e}{counts[e]}" if counts[e] > 1 else e for e in ordered)

    @property
    def node_features(self) -> np.ndarray:
        if self._node_features is None:
            self._node_features = featurize_nodes(self)
        return self._node_features

    @property
    def edge_features(self) -> np.ndarray:
        if self._edge_features is None:
            self._edge_features = featurize_edges(self)
        return self._edge_features

    def __repr__(self) -> str:
        label = self.name or self.smiles or "?"
        return f"MolecularGraph({label}: {self.num_atoms} atoms, {self.num_bonds} bonds)"


def featurize_nodes(graph: MolecularGraph) -> np.ndarray:
    """Node feature matrix, one row per atom.

    Columns, in order: one-hot element over ELEMENTS (11), aromatic flag,
    formal charge, heavy-atom degree, attached hydrogen count, in-ring flag.
    """
    n = graph.num_atoms
    features = np.zeros((n, NODE_FEATURE_DIM))
    for i, atom in enumerate(graph.atoms):
        features[i, ELEMENTS.index(atom.element)] = 1.0
        features[i, 11] = 1.0 if atom.aromatic else 0.0
        features[i, 12] = float(atom.formal_charge)
        features[i, 13] = float(graph.heavy_degree(i))
        features[i, 14] = float(graph.attached_hydrogens(i))
        features[i, 15] = 1.0 if graph.atom_in_ring(i) else 0.0
    return features


def featurize_edges(graph: MolecularGraph) -> np.ndarray:
    """Edge feature matrix aligned with ``graph.bonds``.

    Columns: one-hot bond order (single, double, triple, aromatic), a
    conjugation flag (single bond whose both endpoints carry a multiple or
    aromatic bond), and a same-ring flag.
    """
    features = np.zeros((graph.num_bonds, len(BOND_ORDERS) + 2))
    for k, bond in enumerate(graph.bonds):
        features[k, BOND_ORDERS.index(bond.order)] = 1.0
        features[k, 4] = 1.0 if bond.conjugated else 0.0
        features[k, 5] = 1.0 if bond.in_ring else 0.0
    return features


@dataclass
class MoleculeRecord:
    """One line of a molecule file: either a parsed graph or a failure."""

    line_number: int
    text: str
    graph: MolecularGraph | None = None
    error: Exception | None = None


def load_molecules(path) -> list[MoleculeRecord]:
    """Read a molecule file: one ``SMILES [name]`` per line; blank lines and
    ``#`` comments are skipped. Parse failures are captured per record, not
    raised."""
    from .smiles import SmilesError, parse_smiles

    records: list[MoleculeRecord] = []
    with open(path, encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            smiles = parts[0]
            name = parts[1].strip() if len(parts) > 1 else smiles
            record = MoleculeRecord(line_number, line)
            try:
                record.graph = parse_smiles(smiles, name=name)
            except SmilesError as err:
                record.error = err
            records.append(record)
    return records
