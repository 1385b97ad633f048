"""Certification and execution of randomness catalysis.

A bipartite unitary can drive a catalysis (return the ancilla's state exactly,
for every input) precisely when its partial transpose over the system side is
again unitary.  This module certifies that property, checks compatibility of a
given catalyst, rotates the unitary into the canonical catalyst-preserving
form, executes the induced channel, decomposes it into uniform sub-catalyses,
keeps the mutual-information ledger of every transition, and builds the
correlation recovery unitary.

A certified :class:`CatalysisInstance` is immutable and may be shared across
threads; the only module-level mutable state is the ledger log, guarded by a
lock.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import hilbert
from .entropy import mutual_information_matrix, von_neumann
from .hilbert import (
    GROUP_TOL,
    TOL_STATE,
    TOL_UNITARY,
    DensityOperator,
    UnitaryOperator,
    dagger,
    eigh_desc,
    embed_operator,
    haar_state,
    maximally_mixed,
    permute_subsystems,
    ptrace_matrix,
    ptranspose_matrix,
    purify,
    random_density,
    trace_distance,
    unitarity_defect,
)

LEDGER_TOL = 1e-8
COMPAT_ENTROPY_TOL = 1e-8  # bits


class CertificationError(Exception):
    """A unitary/catalyst pair failed one of the catalysis checks."""


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class CatalysisVerdict:
    verdict: bool
    defect: float


def is_catalysis_unitary(u: UnitaryOperator, cut: Sequence[int] = (0,)) -> CatalysisVerdict:
    """Test whether the partial transpose of ``u`` over the subsystems in
    ``cut`` is unitary; the defect is the Frobenius norm of (U^T)†U^T - 1."""
    cut = u.layout.check_indices(cut)
    if len(cut) >= len(u.layout.dims):
        raise ValueError("cut must leave at least one subsystem untransposed")
    pt = ptranspose_matrix(u.matrix, u.layout.dims, cut)
    defect = unitarity_defect(pt)
    return CatalysisVerdict(verdict=defect <= TOL_UNITARY, defect=defect)


def party_swap(u: UnitaryOperator, a_count: int) -> UnitaryOperator:
    """Exchange the roles of the two parties: returns the same interaction
    with layout B + A (equals F U F when the two sides have equal dims)."""
    n = len(u.layout.dims)
    perm = list(range(a_count, n)) + list(range(a_count))
    m = permute_subsystems(u.matrix, u.layout.dims, perm)
    return UnitaryOperator(m, [u.layout.dims[p] for p in perm])


@dataclass(frozen=True)
class CompatibilityVerdict:
    verdict: bool
    entropy_gap: float


def _split_dims(u: UnitaryOperator, a_count: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    dims = u.layout.dims
    if not 1 <= a_count < len(dims):
        raise ValueError(f"a_count {a_count} invalid for layout {dims}")
    return dims[:a_count], dims[a_count:]


def _catalysis_output(u_matrix, a_dim, b_dim, rho_matrix, sigma_matrix) -> np.ndarray:
    """B marginal of U (rho ⊗ sigma) U†."""
    full = u_matrix @ np.kron(rho_matrix, sigma_matrix) @ dagger(u_matrix)
    return ptrace_matrix(full, [a_dim, b_dim], [1])


def check_compatibility(
    u: UnitaryOperator, sigma: DensityOperator, a_count: int = 1
) -> CompatibilityVerdict:
    """A catalyst is compatible with a catalysis unitary iff its entropy is
    preserved for the maximally mixed input.  Raises if ``u`` is not a
    catalysis unitary to begin with."""
    a_dims, b_dims = _split_dims(u, a_count)
    if sigma.dim != int(np.prod(b_dims)):
        raise ValueError("catalyst dimension does not match the B side of u")
    tv = is_catalysis_unitary(u, cut=range(a_count))
    if not tv.verdict:
        raise CertificationError(
            f"not a catalysis unitary: partial-transpose defect {tv.defect:.3e}"
        )
    da = int(np.prod(a_dims))
    out = _catalysis_output(u.matrix, da, sigma.dim, np.eye(da) / da, sigma.matrix)
    gap = von_neumann(DensityOperator(out, b_dims)) - von_neumann(sigma)
    return CompatibilityVerdict(verdict=abs(gap) <= COMPAT_ENTROPY_TOL, entropy_gap=gap)


# ---------------------------------------------------------------------------
# exhaustive verification and the canonicalizing rotation


def _sample_inputs(da: int, n_samples: int, seed) -> list[np.ndarray]:
    """Haar pure states, the maximally mixed state, computational basis states
    and a few random mixed states; spanning sets certify the linear condition."""
    rng = hilbert._rng(seed)
    states: list[np.ndarray] = [np.eye(da) / da]
    for i in range(da):
        e = np.zeros((da, da), dtype=complex)
        e[i, i] = 1.0
        states.append(e)
    for _ in range(n_samples):
        v = haar_state(da, rng).amplitudes
        states.append(np.outer(v, v.conj()))
    for _ in range(max(1, n_samples // 4)):
        states.append(random_density([da], max(1, da // 2), rng).matrix)
    return states


def _group_spectrum(vals: np.ndarray, group_tol: float) -> list[list[int]]:
    """Group indices of a descending spectrum by relative gap (zeros included)."""
    scale = max(abs(vals[0]), 1.0) if vals.size else 1.0
    groups = [[0]]
    for i in range(1, len(vals)):
        if vals[groups[-1][-1]] - vals[i] < group_tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    uu, _, vv = np.linalg.svd(m)
    return uu @ vv


def _matching_unitary(sigma_m: np.ndarray, xi_m: np.ndarray, group_tol: float) -> np.ndarray:
    """Unitary V with V sigma V† = xi, built by matching eigenspaces of equal
    eigenvalue and fixing each block by the polar factor closest to identity."""
    sv, svec = eigh_desc(sigma_m)
    xv, xvec = eigh_desc(xi_m)
    if np.max(np.abs(sv - xv)) > 1e-7:
        raise CertificationError(
            "output spectrum differs from the catalyst spectrum; no canonicalizing V"
        )
    groups = _group_spectrum(sv, group_tol)
    v = np.zeros_like(sigma_m)
    for g in groups:
        b = svec[:, g]
        c = xvec[:, g]
        q = _polar_unitary(dagger(c) @ b)
        v += c @ q @ dagger(b)
    return v


@dataclass(frozen=True)
class ExhaustiveReport:
    max_deviation: float
    implied_v: UnitaryOperator | None  # None when the spectra cannot be matched


def verify_catalysis_exhaustive(
    u: UnitaryOperator,
    sigma: DensityOperator,
    n_samples: int = 64,
    seed: int = 0,
    a_count: int = 1,
    group_tol: float = GROUP_TOL,
) -> ExhaustiveReport:
    """Sample inputs and measure how far the B-side output strays from the
    maximally-mixed-input output; a true catalysis gives zero.  Also returns
    the unitary mapping the catalyst onto that common output."""
    a_dims, b_dims = _split_dims(u, a_count)
    da = int(np.prod(a_dims))
    db = int(np.prod(b_dims))
    if sigma.dim != db:
        raise ValueError("catalyst dimension does not match the B side of u")
    ref = _catalysis_output(u.matrix, da, db, np.eye(da) / da, sigma.matrix)
    dev = 0.0
    for rho in _sample_inputs(da, n_samples, seed):
        out = _catalysis_output(u.matrix, da, db, rho, sigma.matrix)
        dev = max(dev, trace_distance(out, ref))
    try:
        v = UnitaryOperator(_matching_unitary(sigma.matrix, ref, group_tol), b_dims)
    except CertificationError:
        v = None
    return ExhaustiveReport(max_deviation=dev, implied_v=v)


# ---------------------------------------------------------------------------
# certified instances


@dataclass(frozen=True)
class CatalysisInstance:
    """A certified pair (U, sigma) with its canonicalizing rotation V on the
    catalyst side: (1 ⊗ V†) U preserves sigma exactly."""

    unitary: UnitaryOperator
    sigma: DensityOperator
    a_count: int
    canonical_v: UnitaryOperator
    defect: float
    entropy_gap: float
    max_deviation: float
    seed: int
    classical: bool = False
    decomposition: tuple = ()

    @property
    def a_dims(self) -> tuple[int, ...]:
        return self.unitary.layout.dims[: self.a_count]

    @property
    def b_dims(self) -> tuple[int, ...]:
        return self.unitary.layout.dims[self.a_count :]

    @property
    def a_dim(self) -> int:
        return int(np.prod(self.a_dims))

    @property
    def b_dim(self) -> int:
        return int(np.prod(self.b_dims))

    def canonical_unitary(self) -> UnitaryOperator:
        da = self.a_dim
        m = np.kron(np.eye(da), dagger(self.canonical_v.matrix)) @ self.unitary.matrix
        return UnitaryOperator(m, self.unitary.layout)

    def to_bundle(self, unitary_file: str, sigma_file: str, timestamp: str = "") -> dict:
        return {
            "unitary_file": unitary_file,
            "sigma_file": sigma_file,
            "layout": {"a_dims": list(self.a_dims), "b_dims": list(self.b_dims)},
            "certification": {
                "defect": self.defect,
                "entropy_gap": self.entropy_gap,
                "max_deviation": self.max_deviation,
                "timestamp": timestamp,
                "seed": self.seed,
            },
        }


def canonical_form(
    u: UnitaryOperator,
    sigma: DensityOperator,
    a_count: int = 1,
    n_samples: int = 16,
    seed: int = 7,
    classical: bool = False,
    group_tol: float = GROUP_TOL,
) -> CatalysisInstance:
    """Certify (u, sigma) and return the instance carrying the rotation V that
    makes the catalyst exactly preserved."""
    tv = is_catalysis_unitary(u, cut=range(a_count))
    if not tv.verdict:
        raise CertificationError(
            f"not a catalysis unitary: partial-transpose defect {tv.defect:.3e}"
        )
    comp = check_compatibility(u, sigma, a_count)
    if not comp.verdict:
        raise CertificationError(
            f"catalyst incompatible: entropy gap {comp.entropy_gap:.3e} bits"
        )
    rep = verify_catalysis_exhaustive(u, sigma, n_samples, seed, a_count, group_tol)
    if rep.max_deviation > TOL_STATE:
        raise CertificationError(
            f"output depends on the input: max deviation {rep.max_deviation:.3e}"
        )
    if rep.implied_v is None:
        raise CertificationError("output spectrum does not match the catalyst")
    inst = CatalysisInstance(
        unitary=u,
        sigma=sigma,
        a_count=a_count,
        canonical_v=rep.implied_v,
        defect=tv.defect,
        entropy_gap=comp.entropy_gap,
        max_deviation=rep.max_deviation,
        seed=seed,
        classical=classical,
    )
    # postcondition: the canonical unitary preserves sigma itself
    uc = inst.canonical_unitary()
    for rho in _sample_inputs(inst.a_dim, 4, seed + 1):
        out = _catalysis_output(uc.matrix, inst.a_dim, inst.b_dim, rho, sigma.matrix)
        if trace_distance(out, sigma.matrix) > TOL_STATE:
            raise CertificationError("canonical form failed to preserve the catalyst")
    return inst


def implement_channel(inst: CatalysisInstance, rho: DensityOperator) -> DensityOperator:
    """Apply the induced channel: Tr_B U (rho ⊗ sigma) U†."""
    if rho.dim != inst.a_dim:
        raise ValueError(f"input dimension {rho.dim} != system dimension {inst.a_dim}")
    full = inst.unitary.matrix @ np.kron(rho.matrix, inst.sigma.matrix) @ dagger(
        inst.unitary.matrix
    )
    out = ptrace_matrix(full, [inst.a_dim, inst.b_dim], [0])
    return DensityOperator(out, rho.layout)


# ---------------------------------------------------------------------------
# Kraus form


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    kraus: tuple[np.ndarray, ...]
    dim_in: int
    dim_out: int

    def __init__(self, kraus, dim_in=None, dim_out=None):
        ops = tuple(np.asarray(k, dtype=complex) for k in kraus)
        if not ops:
            raise ValueError("at least one Kraus operator required")
        dim_out_, dim_in_ = ops[0].shape
        dim_in = dim_in_ if dim_in is None else int(dim_in)
        dim_out = dim_out_ if dim_out is None else int(dim_out)
        comp = sum(dagger(k) @ k for k in ops)
        if np.linalg.norm(comp - np.eye(dim_in)) > 1e-7:
            raise ValueError("Kraus operators do not satisfy completeness")
        object.__setattr__(self, "kraus", tuple(hilbert._freeze(k) for k in ops))
        object.__setattr__(self, "dim_in", dim_in)
        object.__setattr__(self, "dim_out", dim_out)

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def apply(self, rho: DensityOperator) -> DensityOperator:
        return DensityOperator(self.apply_matrix(rho.matrix), [self.dim_out])

    def extended_apply_matrix(self, rho: np.ndarray, ref_dim: int) -> np.ndarray:
        """(I ⊗ Phi)(rho) for rho on reference ⊗ input."""
        eye = np.eye(ref_dim)
        return sum(
            np.kron(eye, k) @ rho @ dagger(np.kron(eye, k)) for k in self.kraus
        )

    def choi(self) -> np.ndarray:
        """J = sum_ij |i><j| ⊗ Phi(|i><j|), reference factor first."""
        d = self.dim_in
        j = np.zeros((d * self.dim_out, d * self.dim_out), dtype=complex)
        for k in self.kraus:
            vec = k.reshape(-1, order="F")  # sum_i |i> ⊗ K|i>
            j += np.outer(vec, vec.conj())
        return j


def channel_from_unitary(u: np.ndarray) -> KrausChannel:
    return KrausChannel([u])


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel([np.eye(d)])


def dephasing_channel(d: int) -> KrausChannel:
    """Kill all off-diagonal elements in the computational basis."""
    ks = []
    for i in range(d):
        k = np.zeros((d, d), dtype=complex)
        k[i, i] = 1.0
        ks.append(k)
    return KrausChannel(ks)


def erasure_channel(d: int) -> KrausChannel:
    """Unital erasure rho -> 1/d."""
    ks = [np.zeros((d, d), dtype=complex) for _ in range(d * d)]
    for i in range(d):
        for j in range(d):
            ks[i * d + j][i, j] = 1 / np.sqrt(d)
    return KrausChannel(ks)


def weyl_twirl_channel(d: int) -> KrausChannel:
    """Uniform mixture of all d^2 discrete displacement unitaries; completely
    depolarizing."""
    return KrausChannel([w / d for w in hilbert.weyl_set(d)])


def initialization_channel(d: int) -> KrausChannel:
    """Send every input to |0><0|."""
    ks = []
    for i in range(d):
        k = np.zeros((d, d), dtype=complex)
        k[0, i] = 1.0
        ks.append(k)
    return KrausChannel(ks)


def random_unitary_channel(probs: Sequence[float], unitaries: Sequence[np.ndarray]) -> KrausChannel:
    p = np.asarray(probs, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9 or p.min() < 0:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    return KrausChannel([np.sqrt(w) * np.asarray(u) for w, u in zip(p, unitaries) if w > 0])


def random_channel(d: int, kraus_rank: int, seed) -> KrausChannel:
    """Haar-random Stinespring isometry cut into Kraus blocks."""
    big = hilbert.haar_unitary_matrix(d * kraus_rank, seed)
    v = big[:, :d]
    return KrausChannel([v[i * d : (i + 1) * d, :] for i in range(kraus_rank)])


def channel_to_kraus(inst: CatalysisInstance, tol: float = 1e-12) -> KrausChannel:
    """Minimal Kraus form of the induced channel, from the eigendecomposition
    of its Choi matrix (weighted <b|U|catalyst-eigenvector> blocks collapse to
    the Choi rank)."""
    da, db = inst.a_dim, inst.b_dim
    svals, svecs = eigh_desc(inst.sigma.matrix)
    raw = []
    um = inst.unitary.matrix.reshape(da, db, da, db)
    for k in range(db):
        if svals[k] <= tol:
            continue
        chi = svecs[:, k]
        blk = np.tensordot(um, chi, axes=([3], [0]))  # (a_out, b_out, a_in)
        for b in range(db):
            raw.append(np.sqrt(svals[k]) * blk[:, b, :])
    choi = np.zeros((da * da, da * da), dtype=complex)
    for k in raw:
        vec = k.reshape(-1)
        choi += np.outer(vec, vec.conj())
    vals, vecs = eigh_desc(choi)
    ks = []
    for i in range(len(vals)):
        if vals[i] <= 1e-10:
            continue
        ks.append(np.sqrt(vals[i]) * vecs[:, i].reshape(da, da))
    return KrausChannel(ks)


# ---------------------------------------------------------------------------
# sub-catalysis decomposition


def decompose_subcatalyses(
    inst: CatalysisInstance,
    projectors: Sequence[np.ndarray] | None = None,
    group_tol: float = GROUP_TOL,
) -> tuple[tuple[float, CatalysisInstance], ...]:
    """Split a catalysis along the catalyst's eigenspace projectors (or a
    finer orthogonal family) into sub-catalyses with uniform catalysts.

    Each block of the canonical unitary must commute with 1 ⊗ Pi; the blocks
    are unitary on their supports and the weights lambda_i r_i sum to one.
    """
    uc = inst.canonical_unitary().matrix
    da, db = inst.a_dim, inst.b_dim
    sig = inst.sigma.matrix
    if projectors is None:
        dec = hilbert.eigenspace_decompose(inst.sigma, group_tol)
        projectors = dec.projectors
    out = []
    eye_a = np.eye(da)
    for idx, pi in enumerate(projectors):
        pi = np.asarray(pi, dtype=complex)
        big = np.kron(eye_a, pi)
        if np.linalg.norm(uc @ big - big @ uc) > 1e-7:
            raise CertificationError(
                f"unitary does not commute with catalyst eigenspace {idx}; "
                "the pair is not a compatible catalysis at this refinement"
            )
        weight = float(np.trace(pi @ sig).real)
        vals, vecs = eigh_desc(pi)
        r = int(round(np.trace(pi).real))
        basis = vecs[:, :r]  # isometry onto supp(Pi)
        emb = np.kron(eye_a, basis)
        sub_u = dagger(emb) @ uc @ emb
        if unitarity_defect(sub_u) > TOL_UNITARY:
            raise CertificationError(f"restricted block {idx} is not unitary")
        sub = canonical_form(
            UnitaryOperator(sub_u, list(inst.a_dims) + [r]),
            maximally_mixed([r]),
            a_count=inst.a_count,
            n_samples=4,
            seed=inst.seed + idx + 1,
            classical=inst.classical,
        )
        out.append((weight, sub))
    total = sum(w for w, _ in out)
    if abs(total - 1.0) > 1e-7:
        raise CertificationError(f"sub-catalysis weights sum to {total}, not 1")
    return tuple(out)


def classical_catalysis(
    probs: Sequence[float], unitaries: Sequence[np.ndarray], seed: int = 11
) -> CatalysisInstance:
    """Random unitary operation as a catalysis: U = sum_x U_x ⊗ |x><x| with the
    diagonal catalyst diag(p)."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size != len(unitaries):
        raise ValueError("need one unitary per probability")
    if abs(p.sum() - 1.0) > 1e-9 or p.min() < 0:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    mats = [np.asarray(u, dtype=complex) for u in unitaries]
    da = mats[0].shape[0]
    db = p.size
    u = np.zeros((da * db, da * db), dtype=complex)
    for x, ux in enumerate(mats):
        e = np.zeros((db, db))
        e[x, x] = 1.0
        u += np.kron(ux, e)
    sigma = DensityOperator(np.diag(p.astype(complex)), [db])
    inst = canonical_form(UnitaryOperator(u, [da, db]), sigma, seed=seed, classical=True)
    # the natural refinement: every catalyst basis state is preserved alone
    basis_projs = []
    for x in range(db):
        e = np.zeros((db, db), dtype=complex)
        e[x, x] = 1.0
        basis_projs.append(e)
    dec = decompose_subcatalyses(inst, projectors=basis_projs)
    return replace(inst, decomposition=dec)


# ---------------------------------------------------------------------------
# the mutual-information ledger


@dataclass(frozen=True)
class LedgerRecord:
    """Before/after mutual information with the catalyst and the entropies of
    the system-side transition; the residual checks the balance identity
    I_after - I_before = S_out - S_in."""

    i_before: float
    i_after: float
    s_in: float
    s_out: float
    residual: float

    @property
    def delta_i(self) -> float:
        return self.i_after - self.i_before

    def to_json_dict(self) -> dict:
        return {
            "I_before": self.i_before,
            "I_after": self.i_after,
            "S_in": self.s_in,
            "S_out": self.s_out,
            "residual": self.residual,
        }


_LEDGER_LOCK = threading.Lock()
_LEDGER_LOG: list[LedgerRecord] = []


def ledger_log() -> tuple[LedgerRecord, ...]:
    with _LEDGER_LOCK:
        return tuple(_LEDGER_LOG)


def reset_ledger_log() -> None:
    with _LEDGER_LOCK:
        _LEDGER_LOG.clear()


def ledger(
    u: UnitaryOperator,
    rho: DensityOperator,
    intermediate: DensityOperator,
    n_a1: int,
    n_a2: int,
) -> LedgerRecord:
    """Execute one catalytic transition and record its information balance.

    ``u`` acts on A1 ⊗ A2 ⊗ B in layout order: the first ``n_a1`` subsystems
    are the fresh input (state ``rho``), the next ``n_a2`` carry the stored
    correlations with the catalyst (``intermediate`` lives on A2 ⊗ B), and the
    rest is the catalyst itself, whose marginal must come back unchanged.
    """
    dims = u.layout.dims
    n = len(dims)
    if not (0 <= n_a1 and 0 <= n_a2 and n_a1 + n_a2 < n):
        raise ValueError("invalid subsystem split")
    a1 = list(range(n_a1))
    a2 = list(range(n_a1, n_a1 + n_a2))
    b = list(range(n_a1 + n_a2, n))
    if rho.dim != int(np.prod([dims[i] for i in a1], dtype=int)):
        raise ValueError("input state does not match the A1 dimensions")
    if intermediate.dim != int(np.prod([dims[i] for i in a2 + b], dtype=int)):
        raise ValueError("intermediate does not match the A2 ⊗ B dimensions")

    full_in = np.kron(rho.matrix, intermediate.matrix)
    tau = u.matrix @ full_in @ dagger(u.matrix)

    int_dims = [dims[i] for i in a2 + b]
    sigma_b = ptrace_matrix(intermediate.matrix, int_dims, range(n_a2, len(int_dims)))
    tau_b = ptrace_matrix(tau, dims, b)
    if trace_distance(tau_b, sigma_b) > TOL_STATE:
        raise CertificationError(
            "catalyst altered: the transition is not a catalysis "
            f"(deviation {trace_distance(tau_b, sigma_b):.3e})"
        )

    i_before = (
        mutual_information_matrix(intermediate.matrix, int_dims, list(range(n_a2)),
                                  list(range(n_a2, len(int_dims))))
        if n_a2
        else 0.0
    )
    i_after = mutual_information_matrix(tau, dims, a1 + a2, b)
    sigma_a2 = (
        ptrace_matrix(intermediate.matrix, int_dims, range(n_a2)) if n_a2 else None
    )
    s_in = von_neumann(rho)
    if sigma_a2 is not None:
        s_in += von_neumann(DensityOperator(sigma_a2, [dims[i] for i in a2]))
    tau_a = ptrace_matrix(tau, dims, a1 + a2)
    s_out = von_neumann(DensityOperator(tau_a, [dims[i] for i in a1 + a2]))

    residual = abs((i_after - i_before) - (s_out - s_in))
    rec = LedgerRecord(i_before=i_before, i_after=i_after, s_in=s_in, s_out=s_out,
                       residual=residual)
    with _LEDGER_LOCK:
        _LEDGER_LOG.append(rec)
    return rec


def ledger_for_instance(inst: CatalysisInstance, rho: DensityOperator) -> LedgerRecord:
    """Ledger of a fresh-catalyst use of a certified instance."""
    return ledger(inst.canonical_unitary(), rho, inst.sigma, inst.a_count, 0)


# ---------------------------------------------------------------------------
# entropy cost bound


@dataclass(frozen=True)
class CostBoundReport:
    lhs: float
    rhs: float
    ok: bool


def cost_bound_check(
    inst: CatalysisInstance,
    n_samples: int = 16,
    seed: int = 3,
    classical: bool | None = None,
) -> CostBoundReport:
    """The catalyst entropy must dominate half the maximal global entropy
    variance of the induced channel (the full variance for a classical
    catalyst)."""
    if classical is None:
        classical = inst.classical
    chan = channel_to_kraus(inst)
    da = inst.a_dim
    rng = hilbert._rng(seed)
    best = 0.0
    gamma = hilbert.canonical_operators(da).max_entangled
    candidates = [gamma.density().matrix, np.eye(da * da) / (da * da)]
    for _ in range(n_samples):
        v = haar_state(da * da, rng).amplitudes
        candidates.append(np.outer(v, v.conj()))
    for rho in candidates:
        out = chan.extended_apply_matrix(rho, da)
        prod = abs(
            von_neumann(DensityOperator(out, [da, da]))
            - von_neumann(DensityOperator(rho, [da, da]))
        )
        best = max(best, prod)
    factor = 1.0 if classical else 0.5
    lhs = von_neumann(inst.sigma)
    rhs = factor * best
    return CostBoundReport(lhs=lhs, rhs=rhs, ok=lhs >= rhs - 1e-7)


# ---------------------------------------------------------------------------
# correlation recovery


def recovery_unitary(inst: CatalysisInstance) -> UnitaryOperator:
    """Partial transpose of the canonical unitary over the catalyst side,
    acting on system ⊗ purifier: it reproduces the catalysis evolution on
    A ⊗ C, so hidden correlations can always be undone from the purifier."""
    if np.linalg.matrix_rank(inst.sigma.matrix, tol=1e-10) < inst.b_dim:
        raise CertificationError(
            "recovery requires a full-support catalyst (purifier padding by "
            "zero eigenvalues is rejected)"
        )
    uc = inst.canonical_unitary()
    b_cut = range(inst.a_count, len(uc.layout.dims))
    m = ptranspose_matrix(uc.matrix, uc.layout.dims, b_cut)
    return UnitaryOperator(m, uc.layout.dims)


def recovery_defect(inst: CatalysisInstance, n_samples: int = 8, seed: int = 5) -> float:
    """Max trace distance between evolving kappa ⊗ purification with U on the
    system-catalyst cut and with the recovery unitary on the system-purifier
    cut."""
    rec = recovery_unitary(inst)
    uc = inst.canonical_unitary()
    da, db = inst.a_dim, inst.b_dim
    psi = purify(inst.sigma)
    sigma_bc = np.outer(psi.amplitudes, psi.amplitudes.conj())
    rng = hilbert._rng(seed)
    full_dims = [da, db, db]  # A, B, C
    u_ab = embed_operator(uc.matrix, full_dims, [0, 1])
    u_ac = embed_operator(rec.matrix, full_dims, [0, 2])
    worst = 0.0
    for _ in range(n_samples):
        v = haar_state(da, rng).amplitudes
        kappa = np.outer(v, v.conj())
        start = np.kron(kappa, sigma_bc)
        lhs = u_ab @ start @ dagger(u_ab)
        rhs = u_ac @ start @ dagger(u_ac)
        worst = max(worst, trace_distance(lhs, rhs))
    return worst
