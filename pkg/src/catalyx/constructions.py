"""Explicit catalysis unitaries and optimal catalysts.

Every constructor returns certified objects: unitaries are verified against
the partial-transpose test and catalysts against compatibility at build time.
All constructions are deterministic (no RNG) and refuse total dimensions
beyond the desk-scale cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import hilbert
from .catalysis import CatalysisInstance, canonical_form
from .entropy import DegeneracyVector
from .hilbert import (
    DensityOperator,
    EigenspaceDecomposition,
    StateVector,
    UnitaryOperator,
    clock_matrix,
    eigenspace_decompose,
    eigh_desc,
    fourier_matrix,
    kron_all,
    maximally_mixed,
    weyl_set,
)

DIMENSION_CAP = 4096
EXTRACTION_REGISTER_CAP = 64


def _check_total_dim(total: int, what: str) -> None:
    if total > DIMENSION_CAP:
        raise ValueError(f"{what} needs total dimension {total} > cap {DIMENSION_CAP}")


def _as_degeneracy(r) -> DegeneracyVector:
    return r if isinstance(r, DegeneracyVector) else DegeneracyVector(r)


# ---------------------------------------------------------------------------
# degeneracy-vector dephasing


def degeneracy_decomposition(r) -> EigenspaceDecomposition:
    """Eigenspace data of the entropy-optimal catalyst for multiplicities r:
    eigenvalue r_i/||r||^2 on a contiguous block of size r_i (blocks reported
    in descending eigenvalue order)."""
    r = _as_degeneracy(r)
    n2 = r.norm2sq
    dim = sum(r.r)
    blocks = []
    offset = 0
    for ri in r.r:
        p = np.zeros((dim, dim), dtype=complex)
        p[offset : offset + ri, offset : offset + ri] = np.eye(ri)
        blocks.append((ri / n2, p, ri))
        offset += ri
    blocks.sort(key=lambda b: -b[0])
    return EigenspaceDecomposition(
        [b[0] for b in blocks], [b[1] for b in blocks], [b[2] for b in blocks]
    )


def conserved_optimal_catalyst(r) -> DensityOperator:
    """Catalyst maximizing every degeneracy-aware Renyi entropy under the
    multiplicity constraint: eigenvalue r_i/||r||^2 per block, giving
    2 log2 ||r||_2 for all alpha."""
    r = _as_degeneracy(r)
    diag = np.concatenate([np.full(ri, ri / r.norm2sq) for ri in r.r])
    return DensityOperator(np.diag(diag.astype(complex)), [len(diag)])


def dephasing_catalysis(r, certify_samples: int = 8) -> CatalysisInstance:
    """Exact computational-basis dephasing on dimension ||r||^2 driven by a
    catalyst with degeneracy vector r.

    Block m couples clock powers Z^(S_m + i r_m + j) (S_m the cumulative
    square, i in [0, r_m), j in [1, r_m]) to the dyad |m_i><m_j| with the
    coefficient w^(i j), w a primitive r_m-th root of unity.  The i-range is
    chosen so the exponents of block m tile S_m + {1..r_m^2}; together the
    blocks cover every clock power exactly once, which is what makes the
    induced channel the exact dephasing map.
    """
    r = _as_degeneracy(r)
    big_d = r.norm2sq
    b_dim = sum(r.r)
    _check_total_dim(big_d * b_dim, "dephasing construction")
    z = clock_matrix(big_d)
    zpow = [np.linalg.matrix_power(z, k) for k in range(big_d + max(r.r) ** 2 + 1)]
    u = np.zeros((big_d * b_dim, big_d * b_dim), dtype=complex)
    s_m = 0
    offset = 0
    for rm in r.r:
        omega = np.exp(2j * np.pi / rm)
        for i in range(rm):
            for j in range(1, rm + 1):
                dyad = np.zeros((b_dim, b_dim), dtype=complex)
                dyad[offset + i, offset + j - 1] = 1.0
                u += (omega ** (i * j) / np.sqrt(rm)) * np.kron(
                    zpow[(s_m + i * rm + j) % big_d], dyad
                )
        s_m += rm * rm
        offset += rm
    sigma = conserved_optimal_catalyst(r)
    return canonical_form(
        UnitaryOperator(u, [big_d, b_dim]), sigma, n_samples=certify_samples
    )


# ---------------------------------------------------------------------------
# maximal-extraction construction


@dataclass(frozen=True)
class MaxExtractionResult:
    instance: CatalysisInstance
    input_state: StateVector  # maximally entangled on (A1 A2) x (E1 E2)
    register_dim: int         # R = lcm of the squared multiplicities


def max_extraction_catalysis(
    sigma: DensityOperator, group_tol: float = hilbert.GROUP_TOL
) -> MaxExtractionResult:
    """Catalysis that extracts the full degeneracy-aware entropy of ``sigma``
    when fed the returned maximally entangled input.

    The system splits into an n-dimensional block label and an R-dimensional
    register (R the lcm of the squared multiplicities).  Block i applies the
    i-th clock power on the label, one of r_i^2 register projectors, and the
    matching discrete displacement on the i-th eigenspace of the catalyst.
    The output spectrum is {lambda_i / r_i}, each with multiplicity r_i^2.
    """
    dec = eigenspace_decompose(sigma, group_tol)
    n = len(dec.eigenvalues)
    big_r = math.lcm(*[m * m for m in dec.multiplicities])
    if big_r > EXTRACTION_REGISTER_CAP:
        raise ValueError(
            f"register dimension {big_r} exceeds cap {EXTRACTION_REGISTER_CAP}; "
            "use a catalyst with smaller eigenspace multiplicities"
        )
    db = sigma.dim
    _check_total_dim(n * big_r * db, "maximal-extraction construction")
    zn = clock_matrix(n)
    u = np.zeros((n * big_r * db, n * big_r * db), dtype=complex)
    support = np.zeros((db, db), dtype=complex)
    for i, (ri, pi) in enumerate(zip(dec.multiplicities, dec.projectors)):
        v_i = np.linalg.matrix_power(zn, i + 1)
        _, vecs = eigh_desc(pi)
        basis = vecs[:, :ri]
        support += pi
        block = big_r // (ri * ri)
        for j, w in enumerate(weyl_set(ri)):
            p_j = np.zeros((big_r, big_r), dtype=complex)
            p_j[j * block : (j + 1) * block, j * block : (j + 1) * block] = np.eye(block)
            w_emb = basis @ w @ basis.conj().T
            u += kron_all([v_i, p_j, w_emb])
    # act as the identity on the catalyst's kernel so u is unitary even for
    # rank-deficient catalysts
    kernel = np.eye(db) - support
    if np.linalg.norm(kernel) > 1e-12:
        u += kron_all([np.eye(n), np.eye(big_r), kernel])
    inst = canonical_form(UnitaryOperator(u, [n, big_r, db]), sigma, a_count=2)
    da = n * big_r
    amps = np.zeros(da * da, dtype=complex)
    amps[np.arange(da) * da + np.arange(da)] = 1 / np.sqrt(da)
    psi = StateVector(amps, [n, big_r, n, big_r])
    return MaxExtractionResult(instance=inst, input_state=psi, register_dim=big_r)


# ---------------------------------------------------------------------------
# initialization with correlated intermediates


@dataclass(frozen=True)
class GeneralizedCatalysis:
    """A unitary acting on a fresh input plus an already-correlated
    intermediate, preserving the far-side marginal."""

    unitary: UnitaryOperator
    intermediate: DensityOperator
    n_a1: int  # leading subsystems forming the fresh input
    n_a2: int  # subsystems of the intermediate on the near side


def initialization_classical(d: int) -> GeneralizedCatalysis:
    """Initialization of a d-level system (d odd) using a maximally correlated
    classical intermediate: the permutation
    (a, b, c) -> (c - b, c + k, k),  k = (a - b) / 2  (mod d),
    which sends every input to |0>, keeps the memory-catalyst mutual
    information at log2 d and returns the catalyst marginal exactly."""
    if d < 3 or d % 2 == 0:
        raise ValueError("initialization with a classical intermediate needs odd d >= 3")
    inv2 = pow(2, -1, d)
    u = np.zeros((d**3, d**3), dtype=complex)
    for a in range(d):
        for b in range(d):
            for c in range(d):
                k = ((a - b) * inv2) % d
                out = (((c - b) % d) * d + (c + k) % d) * d + k
                u[out, (a * d + b) * d + c] = 1.0
    inter = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        inter[i * d + i, i * d + i] = 1.0 / d
    return GeneralizedCatalysis(
        unitary=UnitaryOperator(u, [d, d, d]),
        intermediate=DensityOperator(inter, [d, d]),
        n_a1=1,
        n_a2=1,
    )


def initialization_masking(m: int) -> GeneralizedCatalysis:
    """Initialization of an m^2-level system using two m-level maximally mixed
    registers and an m-level entangled pair.

    Registers: input halves (Aa, Ab), near-side randomness A1, near half A2 of
    the pair, far half B2, far randomness B1.  The input is swapped into
    (A2, B2), B2 is refreshed by swapping with A1, and A2 is masked by a shift
    twirl controlled on B1.  The far-side marginal (B2, B1) returns to
    maximally mixed exactly and the input register ends in the fixed pure
    entangled state, for every input and every m >= 2.
    """
    if m < 2:
        raise ValueError("masking initialization needs m >= 2")
    _check_total_dim(m**6, "masking initialization")
    dim = m**6
    u = np.zeros((dim, dim), dtype=complex)
    def idx(t):
        out = 0
        for x in t:
            out = out * m + x
        return out
    for a in range(m):
        for b in range(m):
            for p in range(m):
                for q in range(m):
                    for s in range(m):
                        for t in range(m):
                            src = idx((a, b, p, q, s, t))
                            dst = idx((q, s, b, (a + t) % m, p, t))
                            u[dst, src] = 1.0
    pair = np.zeros(m * m, dtype=complex)
    pair[np.arange(m) * m + np.arange(m)] = 1 / np.sqrt(m)
    pair_rho = np.outer(pair, pair.conj())
    # intermediate layout (A1, A2, B2, B1); the pair couples A2 and B2
    inter = kron_all([np.eye(m) / m, pair_rho, np.eye(m) / m])
    return GeneralizedCatalysis(
        unitary=UnitaryOperator(u, [m] * 6),
        intermediate=DensityOperator(inter, [m] * 4),
        n_a1=2,
        n_a2=2,
    )


# ---------------------------------------------------------------------------
# double random unitary operations


def commuting_defect(u_list: Sequence[np.ndarray], v_list: Sequence[np.ndarray]):
    """Largest commutator norm and its index pair across the two families."""
    worst, pair = 0.0, (0, 0)
    for x, ux in enumerate(u_list):
        for y, vy in enumerate(v_list):
            nrm = float(np.linalg.norm(ux @ vy - vy @ ux))
            if nrm > worst:
                worst, pair = nrm, (x, y)
    return worst, pair


def double_random(
    d: int, u_list: Sequence[np.ndarray], v_list: Sequence[np.ndarray]
) -> CatalysisInstance:
    """Two consecutive uniform random unitary operations from one maximally
    mixed d-level catalyst: the first controlled on the computational basis,
    the second on the Fourier basis.  The families must commute pairwise."""
    if len(u_list) != d or len(v_list) != d:
        raise ValueError(f"need exactly {d} unitaries in each family")
    u_list = [np.asarray(u, dtype=complex) for u in u_list]
    v_list = [np.asarray(v, dtype=complex) for v in v_list]
    worst, pair = commuting_defect(u_list, v_list)
    if worst > 1e-9:
        raise ValueError(
            f"families do not commute: [U_{pair[0]}, V_{pair[1]}] has norm {worst:.3e}"
        )
    da = u_list[0].shape[0]
    _check_total_dim(da * d, "double-random construction")
    f = fourier_matrix(d)
    stage1 = np.zeros((da * d, da * d), dtype=complex)
    stage2 = np.zeros((da * d, da * d), dtype=complex)
    for x in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[x, x] = 1.0
        stage1 += np.kron(u_list[x], e)
        ftil = np.outer(f[:, x], f[:, x].conj())
        stage2 += np.kron(v_list[x], ftil)
    return canonical_form(
        UnitaryOperator(stage2 @ stage1, [da, d]), maximally_mixed([d])
    )


def double_random_stage_one(d: int, u_list: Sequence[np.ndarray]) -> UnitaryOperator:
    """First stage alone (computational-basis control), for inspecting the
    intermediate marginal."""
    da = u_list[0].shape[0]
    m = np.zeros((da * d, da * d), dtype=complex)
    for x in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[x, x] = 1.0
        m += np.kron(np.asarray(u_list[x], dtype=complex), e)
    return UnitaryOperator(m, [da, d])


def fourier_conditional_matrix(d: int) -> np.ndarray:
    """Pr(Y=y | X=x) = |F_yx|^2 for the Fourier-basis second stage."""
    return np.abs(fourier_matrix(d)) ** 2


# ---------------------------------------------------------------------------
# shared-catalyst dephasing of a d^2-level system


def multiparty_unitary(d: int) -> UnitaryOperator:
    """Controlled displacement operators: |i><i| ⊗ W_i with {W_i} the d^2
    orthonormal unitaries X^a Z^b.  Dephases d^2-level inputs using a d-level
    maximally mixed catalyst."""
    if d < 2:
        raise ValueError("need d >= 2")
    _check_total_dim(d**3, "multiparty unitary")
    ws = weyl_set(d)
    u = np.zeros((d**3, d**3), dtype=complex)
    for i, w in enumerate(ws):
        e = np.zeros((d * d, d * d), dtype=complex)
        e[i, i] = 1.0
        u += np.kron(e, w)
    return UnitaryOperator(u, [d * d, d])


def multiparty_instance(d: int) -> CatalysisInstance:
    return canonical_form(multiparty_unitary(d), maximally_mixed([d]))


# ---------------------------------------------------------------------------
# conservation-law catalysts


@dataclass(frozen=True)
class AngularMomentumCatalyst:
    sigma: DensityOperator
    s_cat: float  # log2[(l+1)(2l+1)(2l+3)/3] at l = l_max


def angular_momentum_catalyst(l_max: int) -> AngularMomentumCatalyst:
    """Optimal catalyst when superpositions across angular momentum sectors
    are forbidden: sector l (size 2l+1) weighted 3(2l+1) / ((l+1)(2l+1)(2l+3))
    per state, evaluated at l = l_max."""
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    r = DegeneracyVector([2 * l + 1 for l in range(l_max + 1)])
    sigma = conserved_optimal_catalyst(r)
    s_cat = float(np.log2((l_max + 1) * (2 * l_max + 1) * (2 * l_max + 3) / 3))
    return AngularMomentumCatalyst(sigma=sigma, s_cat=s_cat)


def thermal_levels(r, e_inf: float) -> list[float]:
    """Energy levels E_i = E_inf - log2 r_i; the Gibbs state at beta = ln 2
    over these levels, with degeneracy r_i, has the optimal-catalyst weights."""
    r = _as_degeneracy(r)
    return [float(e_inf - np.log2(ri)) for ri in r.r]


def gibbs_populations(r, e_inf: float, beta: float = math.log(2.0)) -> np.ndarray:
    """Per-state populations of the thermal state over ``thermal_levels``."""
    r = _as_degeneracy(r)
    energies = thermal_levels(r, e_inf)
    weights = np.concatenate(
        [np.full(ri, math.exp(-beta * e)) for ri, e in zip(r.r, energies)]
    )
    return weights / weights.sum()
