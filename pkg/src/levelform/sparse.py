"""Dyadic stopping-time construction of sparse collections on grid functions.

Intervals are addressed by (generation, index) so that membership, nesting,
and carrier measures are exact integer and rational arithmetic; only the
averages themselves are floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ResolutionError, SparseDominationError
from .kernels import GridFunction1D


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """Dyadic subinterval of a root interval: generation g splits it 2^g ways."""

    generation: int
    index: int

    def __post_init__(self):
        if self.generation < 0 or not 0 <= self.index < (1 << self.generation):
            raise ConfigError("dyadic address out of range")

    @property
    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        g, i = self.generation + 1, self.index << 1
        return (DyadicInterval(g, i), DyadicInterval(g, i + 1))

    def contains(self, other: "DyadicInterval") -> bool:
        shift = other.generation - self.generation
        return shift >= 0 and (other.index >> shift) == self.index

    @property
    def relative_measure(self) -> Fraction:
        return Fraction(1, 1 << self.generation)

    def span(self, a: float, b: float) -> tuple[float, float]:
        width = (b - a) / (1 << self.generation)
        return (a + self.index * width, a + (self.index + 1) * width)


@dataclass
class SparseFamily:
    """Stopping-time output: intervals, their carriers, and the grid frame."""

    a: float
    b: float
    cells: int
    lam: float
    members: list[DyadicInterval]
    carriers: dict[DyadicInterval, Fraction]
    eta: Fraction
    max_depth: int
    depth_exhausted: bool = False

    def member_average(self, F: GridFunction1D, I: DyadicInterval) -> float:
        lo, hi = _cell_range(self.cells, I)
        block = np.abs(F.values[lo:hi])
        return float(np.mean(block))


def _cell_range(cells: int, I: DyadicInterval) -> tuple[int, int]:
    per = cells >> I.generation
    return (I.index * per, (I.index + 1) * per)


def _block_average(prefix: np.ndarray, cells: int, I: DyadicInterval) -> float:
    lo, hi = _cell_range(cells, I)
    return (prefix[hi] - prefix[lo]) / (hi - lo)


def build_sparse_greedy(F: GridFunction1D, G: GridFunction1D, lam: float = 4.0,
                        max_depth: int = 10) -> SparseFamily:
    """Greedy stopping-time family for the pair (|F|, |G|).

    A child becomes a new member when its average of |F| or |G| exceeds lam
    times the corresponding average over the most recent member above it.
    With lam >= 4 the carriers provably keep at least half of each member.
    """
    if lam <= 2.0:
        raise ConfigError("stopping factor must exceed 2")
    if F.a != G.a or F.b != G.b or len(F.values) != len(G.values):
        raise ConfigError("sparse construction needs matching grids")
    m = len(F.values)
    if max_depth < 0 or m % (1 << max_depth) != 0:
        raise ResolutionError(f"{m} cells do not refine to depth {max_depth}")

    pf = np.concatenate([[0.0], np.cumsum(np.abs(F.values), dtype=float)])
    pg = np.concatenate([[0.0], np.cumsum(np.abs(G.values), dtype=float)])

    root = DyadicInterval(0, 0)
    members: list[DyadicInterval] = [root]
    stop_children: dict[DyadicInterval, list[DyadicInterval]] = {root: []}
    depth_exhausted = False

    stack = [(root, root)]
    while stack:
        current, anchor = stack.pop()
        if current.generation == max_depth:
            continue
        af = _block_average(pf, m, anchor)
        ag = _block_average(pg, m, anchor)
        for child in current.children:
            stops = (_block_average(pf, m, child) > lam * af
                     or _block_average(pg, m, child) > lam * ag)
            if stops:
                members.append(child)
                stop_children[anchor].append(child)
                stop_children[child] = []
                stack.append((child, child))
                if child.generation == max_depth:
                    depth_exhausted = True
            else:
                stack.append((child, anchor))

    carriers = {I: I.relative_measure - sum((J.relative_measure for J in kids),
                                            Fraction(0))
                for I, kids in stop_children.items()}
    eta = min((carriers[I] / I.relative_measure for I in members), default=Fraction(1))
    members.sort()
    return SparseFamily(a=F.a, b=F.b, cells=m, lam=lam, members=members,
                        carriers=carriers, eta=eta, max_depth=max_depth,
                        depth_exhausted=depth_exhausted)


def verify_sparsity(family: SparseFamily) -> Fraction:
    """Recompute carriers from scratch and check exact disjoint packing.

    Returns the worst carrier fraction; raises if any member's retained mass
    is inconsistent or if members at one address repeat.
    """
    members = family.members
    if len(set(members)) != len(members):
        raise SparseDominationError("duplicate members in sparse family")
    for I in members:
        inside = [J for J in members if J != I and I.contains(J)]
        maximal = [J for J in inside
                   if not any(K.contains(J) for K in inside if K != J)]
        shed = sum((J.relative_measure for J in maximal), Fraction(0))
        carrier = I.relative_measure - shed
        if carrier != family.carriers[I]:
            raise SparseDominationError(f"carrier mismatch at {I}")
        if carrier < 0:
            raise SparseDominationError(f"negative carrier at {I}")
    return min(family.carriers[I] / I.relative_measure for I in members)


def sparse_form(family: SparseFamily, F: GridFunction1D, G: GridFunction1D) -> float:
    """Sum over members of avg|F| avg|G| |I| in grid length units."""
    total = 0.0
    length = F.b - F.a
    for I in family.members:
        total += (family.member_average(F, I) * family.member_average(G, I)
                  * float(I.relative_measure) * length)
    return total


def merge_families(fam_f: SparseFamily, fam_g: SparseFamily) -> SparseFamily:
    """Union of two families over the same frame, carriers recomputed."""
    if (fam_f.a, fam_f.b, fam_f.cells) != (fam_g.a, fam_g.b, fam_g.cells):
        raise ConfigError("families live on different frames")
    members = sorted(set(fam_f.members) | set(fam_g.members))
    carriers: dict[DyadicInterval, Fraction] = {}
    for I in members:
        inside = [J for J in members if J != I and I.contains(J)]
        maximal = [J for J in inside
                   if not any(K.contains(J) for K in inside if K != J)]
        carriers[I] = I.relative_measure - sum((J.relative_measure for J in maximal),
                                               Fraction(0))
    eta = min((carriers[I] / I.relative_measure for I in members), default=Fraction(1))
    return SparseFamily(a=fam_f.a, b=fam_f.b, cells=fam_f.cells,
                        lam=max(fam_f.lam, fam_g.lam), members=members,
                        carriers=carriers, eta=eta,
                        max_depth=max(fam_f.max_depth, fam_g.max_depth),
                        depth_exhausted=fam_f.depth_exhausted or fam_g.depth_exhausted)


def domination_ratio(lhs_value: float, family: SparseFamily,
                     F: GridFunction1D, G: GridFunction1D) -> float:
    """|lhs| divided by the sparse form; raises when the sparse side degenerates."""
    sp = sparse_form(family, F, G)
    lhs = abs(lhs_value)
    if sp == 0.0:
        if lhs > 0.0:
            raise SparseDominationError("sparse form vanished against nonzero pairing")
        return 0.0
    return lhs / sp


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def family_to_json_dict(family: SparseFamily) -> dict:
    return {
        "schema": 1,
        "root": [family.a, family.b],
        "cells": family.cells,
        "lam": family.lam,
        "eta": [family.eta.numerator, family.eta.denominator],
        "max_depth": family.max_depth,
        "depth_exhausted": family.depth_exhausted,
        "members": [[I.generation, I.index] for I in family.members],
    }


def family_from_json_dict(data: dict) -> SparseFamily:
    if data.get("schema") != 1:
        raise ConfigError("unknown sparse family schema")
    members = []
    for g, i in data["members"]:
        if not isinstance(g, int) or not isinstance(i, int):
            raise ConfigError("non-integer dyadic address")
        members.append(DyadicInterval(g, i))
    if len(set(members)) != len(members):
        raise ConfigError("repeated dyadic address")
    carriers: dict[DyadicInterval, Fraction] = {}
    for I in members:
        inside = [J for J in members if J != I and I.contains(J)]
        maximal = [J for J in inside
                   if not any(K.contains(J) for K in inside if K != J)]
        carriers[I] = I.relative_measure - sum((J.relative_measure for J in maximal),
                                               Fraction(0))
    eta = min((carriers[I] / I.relative_measure for I in members), default=Fraction(1))
    a, b = data["root"]
    fam = SparseFamily(a=float(a), b=float(b), cells=int(data["cells"]),
                       lam=float(data["lam"]), members=sorted(members),
                       carriers=carriers, eta=eta, max_depth=int(data["max_depth"]),
                       depth_exhausted=bool(data["depth_exhausted"]))
    stored = Fraction(data["eta"][0], data["eta"][1])
    if stored != eta:
        raise ConfigError("stored sparsity constant disagrees with members")
    return fam


def save_family(family: SparseFamily, path) -> None:
    with open(path, "w") as fh:
        json.dump(family_to_json_dict(family), fh, indent=1)


def load_family(path) -> SparseFamily:
    with open(path) as fh:
        return family_from_json_dict(json.load(fh))
