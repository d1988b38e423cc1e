"""Discrimination criteria, detection signatures and the distinguishing limits.

``ll_matrix_element`` evaluates <phi_i| C^dag C |phi_j> for a product C of
output annihilators by expanding every output operator onto input modes.  Two
states are pairwise distinguishable exactly when all such elements vanish.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .circuits import click_prefixes, classify_group
from .errors import ArityError, ContractError, DimensionError
from .fock import (
    Pattern,
    StateVector,
    Statistics,
    annihilate,
    as_statistics,
    as_unitary,
    canonical_pattern,
)

LL_TOL = 1e-10
RANK_TOL = 1e-9


def _post_click(u, psi: StateVector, clicks: Sequence[int]) -> dict[Pattern, complex]:
    state: dict[Pattern, complex] = dict(psi.amplitudes)
    for s in clicks:
        state = annihilate(state, u.matrix[s, :], psi.statistics)
    return state


def _inner(a: dict, b: dict) -> complex:
    return complex(sum(np.conj(a[k]) * v for k, v in b.items() if k in a))


def _check_pair(u, phi_i: StateVector, phi_j: StateVector):
    if (phi_i.mode_count, phi_i.photon_number, phi_i.statistics) != (
        phi_j.mode_count,
        phi_j.photon_number,
        phi_j.statistics,
    ):
        raise DimensionError("states differ in mode count, photon number or statistics")
    if phi_i.mode_count != u.dim:
        raise DimensionError(f"states live on {phi_i.mode_count} modes, unitary acts on {u.dim}")


def ll_matrix_element(u, phi_i: StateVector, phi_j: StateVector, pattern: Sequence[int]) -> complex:
    """<phi_i| c^dag_{s_1} ... c^dag_{s_m} c_{s_m} ... c_{s_1} |phi_j>."""
    u = as_unitary(u)
    _check_pair(u, phi_i, phi_j)
    n = phi_i.photon_number
    if not 1 <= len(pattern) <= n:
        raise ArityError(f"pattern order must lie in 1..{n}, got {len(pattern)}")
    if any(not 0 <= s < u.dim for s in pattern):
        raise DimensionError(f"pattern {tuple(pattern)} outside {u.dim} modes")
    return _inner(_post_click(u, phi_i, pattern), _post_click(u, phi_j, pattern))


def _post_click_tree(u, psi: StateVector, order: int) -> dict[Pattern, dict]:
    """Post-click states for every canonical click multiset up to ``order``."""
    stats = psi.statistics
    out: dict[Pattern, dict] = {}
    frontier = {(): dict(psi.amplitudes)}
    for _ in range(order):
        nxt = {}
        for prefix, state in frontier.items():
            start = prefix[-1] if prefix else 0
            if stats is Statistics.FERMION and prefix:
                start += 1
            for s in range(start, u.dim):
                post = annihilate(state, u.matrix[s, :], stats)
                nxt[prefix + (s,)] = post
        out.update(nxt)
        frontier = nxt
    return out


def ll_pairwise_distinguishable(u, phi_i: StateVector, phi_j: StateVector, tol: float = LL_TOL) -> bool:
    """True iff every matrix element of every order 1..n vanishes."""
    u = as_unitary(u)
    _check_pair(u, phi_i, phi_j)
    if phi_i is phi_j or phi_i.amplitudes == phi_j.amplitudes:
        raise ValueError("a state cannot be discriminated from itself")
    n = phi_i.photon_number
    tree_i = _post_click_tree(u, phi_i, n)
    tree_j = _post_click_tree(u, phi_j, n)
    return all(abs(_inner(tree_i[p], tree_j[p])) <= tol for p in tree_i)


def simplified_g1_distinguishable(
    u, phi_i: StateVector, phi_j: StateVector, tol: float = LL_TOL, group=None
) -> bool:
    """Single-mode-power conditions <phi_i| (c_s^dag)^m (c_s)^m |phi_j> = 0 for m = 1..n.

    Only claimed for G1 circuits; a G2 circuit is refused.  Pass a precomputed
    ``group`` tag to skip reclassification in loops.
    """
    u = as_unitary(u)
    _check_pair(u, phi_i, phi_j)
    if phi_i.amplitudes == phi_j.amplitudes:
        raise ValueError("a state cannot be discriminated from itself")
    n = phi_i.photon_number
    D = u.dim // n
    if group is None:
        group = classify_group(u, n, D, phi_i.statistics)
    if group.group != "G1":
        raise ContractError("the single-mode criterion is only valid for G1 circuits")
    top = 1 if phi_i.statistics is Statistics.FERMION else n
    for s in range(u.dim):
        a, b = dict(phi_i.amplitudes), dict(phi_j.amplitudes)
        for _ in range(top):
            a = annihilate(a, u.matrix[s, :], phi_i.statistics)
            b = annihilate(b, u.matrix[s, :], phi_j.statistics)
            if abs(_inner(a, b)) > tol:
                return False
    return True


# --- detection signatures ------------------------------------------------------


@dataclass(frozen=True)
class DetectorMode:
    index: int
    per_photon_coefficients: tuple[np.ndarray, ...]


def detector_mode(u, s: int, n: int) -> DetectorMode:
    """Row ``s`` of U split into one D-vector per photon block."""
    u = as_unitary(u)
    D = u.dim // n
    row = u.matrix[s]
    return DetectorMode(s, tuple(row[k * D : (k + 1) * D].copy() for k in range(n)))


@dataclass(frozen=True)
class DetectionSignature:
    vector: np.ndarray
    click_prefix: Pattern
    final_click: int


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, set()
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        sign *= -1 if length % 2 == 0 else 1
    return sign


def detection_signature(u, prefix: Sequence[int], final: int, statistics=Statistics.BOSON, n: int | None = None):
    """(Anti)symmetrized product of detector modes, expanded on per-photon levels.

    Component ``(l_0, ..., l_{n-1})`` is the conjugate of
    ``sum_sigma sign(sigma) prod_k U[s_sigma(k), k*D + l_k]`` with clicks
    ``s = prefix + (final,)``; the sign only enters for fermions.
    """
    u = as_unitary(u)
    stats = as_statistics(statistics)
    clicks = tuple(prefix) + (final,)
    n = len(clicks) if n is None else n
    if len(clicks) != n:
        raise ArityError(f"need {n - 1} prefix clicks, got {len(prefix)}")
    if u.dim % n:
        raise DimensionError(f"{u.dim} modes do not split into {n} photon blocks")
    D = u.dim // n
    rows = u.matrix[list(clicks)]
    vec = np.zeros(D**n, dtype=complex)
    for perm in itertools.permutations(range(n)):
        term = np.ones(1, dtype=complex)
        for k in range(n):
            term = np.kron(term, rows[perm[k], k * D : (k + 1) * D])
        if stats is Statistics.FERMION:
            term = _perm_sign(perm) * term
        vec += term
    return DetectionSignature(np.conj(vec), tuple(prefix), int(final))


def signature_matrix(u, prefix: Sequence[int], statistics=Statistics.BOSON) -> np.ndarray:
    u = as_unitary(u)
    n = len(prefix) + 1
    return np.array(
        [detection_signature(u, prefix, f, statistics, n).vector for f in range(u.dim)]
    )


def numerical_rank(m: np.ndarray, rel_tol: float = RANK_TOL) -> int:
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def signature_rank(u, prefix: Sequence[int], statistics=Statistics.BOSON, tol: float = RANK_TOL) -> int:
    """Rank of the nD signatures obtained by sweeping the final click."""
    return numerical_rank(signature_matrix(u, prefix, statistics), tol)


def min_signature_rank(u, n: int, statistics=Statistics.BOSON, tol: float = RANK_TOL) -> tuple[int, Pattern]:
    """Smallest signature rank over every (n-1)-click prefix, with its prefix."""
    u = as_unitary(u)
    best = None
    for prefix in click_prefixes(u.dim, n - 1, statistics):
        r = signature_rank(u, prefix, statistics, tol)
        if best is None or r < best[0]:
            best = (r, canonical_pattern(prefix))
    return best


# --- limits -----------------------------------------------------------------------


@dataclass(frozen=True)
class LimitValue:
    n: int
    D: int
    n1: int
    n2_lower: int
    cc_bits: float
    me: float
    me_is_lower_bound: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "D": self.D,
            "n1": self.n1,
            "n2_lower": self.n2_lower,
            "cc_bits": self.cc_bits,
            "me": self.me,
            "me_is_lower_bound": self.me_is_lower_bound,
        }


def limits(n: int, D: int) -> LimitValue:
    """G1 limit nD-(n-1), G2 lower bound D^(n-1), capacity log2 N1 and efficiency."""
    if n < 2 or D < 2:
        raise DimensionError(f"need n >= 2 and D >= 2, got n={n}, D={D}")
    n1 = n * D - (n - 1)
    if n == 2:
        me, lower = (2 * D - 1) / D**2, False
    else:
        me, lower = 1 / D, True
    return LimitValue(n, D, n1, D ** (n - 1), math.log2(n1), me, lower)
