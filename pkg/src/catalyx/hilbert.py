"""Dense multipartite linear algebra: tensor bookkeeping, partial trace and
transpose, spectral analysis, purification, canonical operators and seeded
random sampling.

All values are immutable after construction and every operation is a pure
function, so everything here is safe to call concurrently.  Randomness enters
only through explicit seeds.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Numerical tolerances used across the package.  Double precision leaves at
# least six digits of headroom at total dimension <= ~100.
TOL_UNITARY = 1e-9     # Frobenius norm of U†U - 1
TOL_HERM = 1e-9        # Frobenius norm of M - M†
TOL_PSD = 1e-10        # eigenvalue floor; smaller magnitudes count as zero
TOL_STATE = 1e-9       # trace distance between states
TOL_NORM = 1e-10       # trace / vector-norm deviation
GROUP_TOL = 1e-8       # relative gap below which eigenvalues merge


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def unitarity_defect(m: np.ndarray) -> float:
    """Frobenius norm of m†m - 1."""
    d = m.shape[0]
    return float(np.linalg.norm(dagger(m) @ m - np.eye(d)))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered subsystem dimensions (with optional labels) tagging an operator."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    def __init__(self, dims: Iterable[int], labels: Iterable[str] | None = None):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {dims}")
        labels = tuple(labels) if labels is not None else None
        if labels is not None and len(labels) != len(dims):
            raise ValueError("labels must match dims in length")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)

    def check_indices(self, indices: Sequence[int]) -> tuple[int, ...]:
        idx = tuple(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate subsystem indices: {idx}")
        for i in idx:
            if not 0 <= i < len(self.dims):
                raise ValueError(f"subsystem index {i} out of range for {self.dims}")
        return idx

    def select(self, indices: Sequence[int]) -> "SubsystemLayout":
        idx = self.check_indices(indices)
        labels = tuple(self.labels[i] for i in idx) if self.labels else None
        return SubsystemLayout([self.dims[i] for i in idx], labels)

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        labels = None
        if self.labels is not None and other.labels is not None:
            labels = self.labels + other.labels
        return SubsystemLayout(self.dims + other.dims, labels)


def _as_layout(layout) -> SubsystemLayout:
    if isinstance(layout, SubsystemLayout):
        return layout
    return SubsystemLayout(layout)


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state with a subsystem layout."""

    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __init__(self, amplitudes, layout):
        layout = _as_layout(layout)
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != layout.total_dim:
            raise ValueError(
                f"amplitude length {amps.shape[0]} != layout dimension {layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 100 * TOL_NORM:
            raise ValueError(f"state vector norm {norm} too far from 1")
        object.__setattr__(self, "amplitudes", _freeze(amps / norm))
        object.__setattr__(self, "layout", layout)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.layout)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, PSD, trace-one matrix with a subsystem layout."""

    matrix: np.ndarray
    layout: SubsystemLayout

    def __init__(self, matrix, layout):
        layout = _as_layout(layout)
        m = np.asarray(matrix, dtype=complex)
        d = layout.total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match layout dim {d}")
        if np.linalg.norm(m - dagger(m)) > TOL_HERM:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > 100 * TOL_NORM:
            raise ValueError(f"density matrix trace {np.trace(m)} != 1")
        lo = float(np.linalg.eigvalsh(m).min())
        if lo < -10 * TOL_PSD:
            raise ValueError(f"density matrix has negative eigenvalue {lo}")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "layout", layout)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending, clipped at zero."""
        vals = np.linalg.eigvalsh(self.matrix)[::-1]
        return np.clip(vals, 0.0, None)


@dataclass(frozen=True)
class UnitaryOperator:
    """Unitary matrix with a subsystem layout."""

    matrix: np.ndarray
    layout: SubsystemLayout

    def __init__(self, matrix, layout):
        layout = _as_layout(layout)
        m = np.asarray(matrix, dtype=complex)
        d = layout.total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match layout dim {d}")
        defect = unitarity_defect(m)
        if defect > TOL_UNITARY:
            raise ValueError(f"matrix is not unitary: defect {defect}")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "layout", layout)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenspaceDecomposition:
    """Distinct eigenvalues with their eigenspace projectors and multiplicities.

    ``eigenspace_decompose`` always produces strictly descending eigenvalues;
    decompositions imposed by a conservation law may repeat an eigenvalue
    across orthogonal blocks, so only non-increasing order is enforced here.
    """

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]
    multiplicities: tuple[int, ...]

    def __init__(self, eigenvalues, projectors, multiplicities=None):
        vals = tuple(float(v) for v in eigenvalues)
        projs = tuple(_freeze(np.asarray(p, dtype=complex)) for p in projectors)
        if multiplicities is None:
            multiplicities = [np.trace(p).real for p in projs]
        mult = []
        for r in multiplicities:
            rounded = int(round(float(r)))
            if abs(float(r) - rounded) > 1e-6 or rounded < 1:
                raise ValueError(f"projector trace {r} is not a positive integer")
            mult.append(rounded)
        if not (len(vals) == len(projs) == len(mult)):
            raise ValueError("eigenvalues, projectors, multiplicities length mismatch")
        if any(vals[i] < vals[i + 1] - 1e-12 for i in range(len(vals) - 1)):
            raise ValueError("eigenvalues must be non-increasing")
        for i, p in enumerate(projs):
            if np.linalg.norm(p - dagger(p)) > TOL_HERM:
                raise ValueError(f"projector {i} not Hermitian")
            if np.linalg.norm(p @ p - p) > 1e-7:
                raise ValueError(f"projector {i} not idempotent")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.linalg.norm(projs[i] @ projs[j]) > 1e-7:
                    raise ValueError(f"projectors {i},{j} not orthogonal")
        total = sum(v * r for v, r in zip(vals, mult))
        if abs(total - 1.0) > 1e-7:
            raise ValueError(f"sum of eigenvalue*multiplicity = {total} != 1")
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "multiplicities", tuple(mult))

    @property
    def rank(self) -> int:
        return sum(self.multiplicities)

    def reconstruct(self) -> np.ndarray:
        return sum(v * p for v, p in zip(self.eigenvalues, self.projectors))

    def support_projector(self) -> np.ndarray:
        return sum(self.projectors)


# ---------------------------------------------------------------------------
# tensor structure


def tensor(a, b):
    """Kronecker product of two states or two operators; layouts concatenate."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), a.layout.concat(b.layout))
    if isinstance(a, StateVector) or isinstance(b, StateVector):
        raise TypeError("cannot tensor a state with an operator")
    kinds = (DensityOperator, UnitaryOperator)
    if not (isinstance(a, kinds) and isinstance(b, kinds)):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    m = np.kron(a.matrix, b.matrix)
    layout = a.layout.concat(b.layout)
    if isinstance(a, UnitaryOperator) and isinstance(b, UnitaryOperator):
        return UnitaryOperator(m, layout)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(m, layout)
    raise TypeError("cannot tensor a density operator with a unitary")


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def ptrace_matrix(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a raw matrix, keeping subsystems ``keep`` in layout order."""
    dims = [int(d) for d in dims]
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < n:
            raise ValueError(f"subsystem index {k} out of range")
    drop = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    for offset, i in enumerate(drop):
        ax = i - offset
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(dk, dk)


def partial_trace(op: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Marginal of ``op`` on the subsystems in ``keep`` (original order kept)."""
    keep = sorted(op.layout.check_indices(keep))
    m = ptrace_matrix(op.matrix, op.layout.dims, keep)
    return DensityOperator(m, op.layout.select(keep))


def ptranspose_matrix(m: np.ndarray, dims: Sequence[int], subsystems: Sequence[int]) -> np.ndarray:
    """Transpose applied only on the index pairs of the chosen subsystems."""
    dims = [int(d) for d in dims]
    n = len(dims)
    subsystems = sorted(set(int(s) for s in subsystems))
    for s in subsystems:
        if not 0 <= s < n:
            raise ValueError(f"subsystem index {s} out of range")
    t = m.reshape(dims + dims)
    perm = list(range(2 * n))
    for s in subsystems:
        perm[s], perm[n + s] = perm[n + s], perm[s]
    d = int(np.prod(dims))
    return t.transpose(perm).reshape(d, d)


def partial_transpose(op, subsystems: Sequence[int]) -> np.ndarray:
    """Partial transpose of a tagged operator; the result is a raw matrix
    since it is in general neither unitary nor PSD."""
    if isinstance(op, (DensityOperator, UnitaryOperator)):
        op.layout.check_indices(subsystems)
        return ptranspose_matrix(op.matrix, op.layout.dims, subsystems)
    raise TypeError(f"cannot partial-transpose {type(op).__name__}")


def embed_operator(op: np.ndarray, full_dims: Sequence[int], positions: Sequence[int]) -> np.ndarray:
    """Embed ``op`` acting on the subsystems at ``positions`` into the full space."""
    full_dims = [int(d) for d in full_dims]
    n = len(full_dims)
    positions = [int(p) for p in positions]
    if len(set(positions)) != len(positions):
        raise ValueError("duplicate positions")
    op_dims = [full_dims[p] for p in positions]
    if op.shape[0] != int(np.prod(op_dims)):
        raise ValueError("operator does not match the dimensions at positions")
    rest = [i for i in range(n) if i not in positions]
    rest_dim = int(np.prod([full_dims[i] for i in rest])) if rest else 1
    big = np.kron(op, np.eye(rest_dim, dtype=complex))
    # big is ordered [positions..., rest...]; permute back to layout order
    order = positions + rest
    inv = np.argsort(order)
    dims_in_order = [full_dims[i] for i in order]
    t = big.reshape(dims_in_order + dims_in_order)
    perm = list(inv) + [n + i for i in inv]
    d = int(np.prod(full_dims))
    return t.transpose(perm).reshape(d, d)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of an operator so factor ``perm[k]`` moves to slot ``k``."""
    dims = [int(d) for d in dims]
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"invalid permutation {perm}")
    t = m.reshape(dims + dims)
    axes = perm + [n + p for p in perm]
    d = int(np.prod(dims))
    return t.transpose(axes).reshape(d, d)


# ---------------------------------------------------------------------------
# spectral analysis


def eigh_desc(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with eigenvalues sorted descending."""
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def eigenspace_decompose(
    op: DensityOperator, group_tol: float = GROUP_TOL, zero_tol: float = TOL_PSD
) -> EigenspaceDecomposition:
    """Group the spectrum of ``op`` into eigenspaces.

    Adjacent eigenvalues closer than ``group_tol * max(lambda)`` merge into one
    eigenspace; eigenvalues below ``zero_tol`` are dropped.  Floating-point
    spectra of structurally degenerate states need this deliberate grouping.
    """
    vals, vecs = eigh_desc(op.matrix)
    keep = vals > zero_tol
    vals, vecs = vals[keep], vecs[:, keep]
    if vals.size == 0:
        raise ValueError("state has no support above the zero tolerance")
    gap = group_tol * vals[0]
    groups: list[list[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[groups[-1][-1]] - vals[i] < gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues, projectors = [], []
    for g in groups:
        eigenvalues.append(float(np.mean(vals[g])))
        block = vecs[:, g]
        projectors.append(block @ dagger(block))
    return EigenspaceDecomposition(eigenvalues, projectors)


def purify(sigma: DensityOperator) -> StateVector:
    """Canonical purification (sqrt(sigma) ⊗ 1)|Γ⟩ on B ⊗ C with C a copy of B."""
    d = sigma.dim
    vals, vecs = eigh_desc(sigma.matrix)
    vals = np.clip(vals, 0.0, None)
    root = vecs @ np.diag(np.sqrt(vals)) @ dagger(vecs)
    # (root ⊗ 1) |Γ⟩ has amplitudes root[b, c] at basis index b*d + c
    amps = root.reshape(-1)
    amps = amps / np.linalg.norm(amps)
    layout = SubsystemLayout([d, d], None)
    return StateVector(amps, layout)


def trace_distance(a: DensityOperator | np.ndarray, b: DensityOperator | np.ndarray) -> float:
    """Half the trace norm of the difference."""
    ma = a.matrix if isinstance(a, DensityOperator) else np.asarray(a)
    mb = b.matrix if isinstance(b, DensityOperator) else np.asarray(b)
    vals = np.linalg.eigvalsh(ma - mb)
    return float(0.5 * np.abs(vals).sum())


# ---------------------------------------------------------------------------
# canonical operators


def basis_state(d: int, i: int, layout=None) -> StateVector:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return StateVector(v, layout if layout is not None else [d])


def plus_state(d: int) -> StateVector:
    """Uniform superposition (1/sqrt(d)) sum_i |i⟩."""
    return StateVector(np.full(d, 1 / np.sqrt(d), dtype=complex), [d])


def maximally_mixed(dims) -> DensityOperator:
    layout = _as_layout(dims)
    d = layout.total_dim
    return DensityOperator(np.eye(d) / d, layout)


def clock_matrix(d: int) -> np.ndarray:
    omega = np.exp(2j * np.pi / d)
    return np.diag(omega ** np.arange(d))


def shift_matrix(d: int) -> np.ndarray:
    x = np.zeros((d, d), dtype=complex)
    for k in range(d):
        x[(k + 1) % d, k] = 1.0
    return x


def weyl_matrix(d: int, a: int, b: int) -> np.ndarray:
    """X^a Z^b; the d^2 of them are orthogonal: Tr(W†W') = d δ."""
    return np.linalg.matrix_power(shift_matrix(d), a % d) @ np.linalg.matrix_power(
        clock_matrix(d), b % d
    )


def weyl_set(d: int) -> list[np.ndarray]:
    return [weyl_matrix(d, a, b) for a in range(d) for b in range(d)]


def swap_matrix(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            f[j * d + i, i * d + j] = 1.0
    return f


def fourier_matrix(d: int) -> np.ndarray:
    n, m = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.exp(2j * np.pi * n * m / d) / np.sqrt(d)


@dataclass(frozen=True)
class CanonicalOperators:
    clock: UnitaryOperator
    shift: UnitaryOperator
    swap: UnitaryOperator
    max_entangled: StateVector
    fourier: UnitaryOperator


def canonical_operators(d: int) -> CanonicalOperators:
    """Clock Z, shift X, swap F, maximally entangled state and Fourier matrix."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    gamma = np.zeros(d * d, dtype=complex)
    gamma[np.arange(d) * d + np.arange(d)] = 1 / np.sqrt(d)
    return CanonicalOperators(
        clock=UnitaryOperator(clock_matrix(d), [d]),
        shift=UnitaryOperator(shift_matrix(d), [d]),
        swap=UnitaryOperator(swap_matrix(d), [d, d]),
        max_entangled=StateVector(gamma, [d, d]),
        fourier=UnitaryOperator(fourier_matrix(d), [d]),
    )


# ---------------------------------------------------------------------------
# seeded sampling


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary_matrix(d: int, seed) -> np.ndarray:
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r)
    ph = ph / np.abs(ph)
    return q * ph


def haar_unitary(d: int, seed, layout=None) -> UnitaryOperator:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    triangular factor's diagonal phases fixed.  Deterministic per seed."""
    return UnitaryOperator(haar_unitary_matrix(d, seed), layout if layout is not None else [d])


def haar_state(d: int, seed, layout=None) -> StateVector:
    rng = _rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(v / np.linalg.norm(v), layout if layout is not None else [d])


def random_density(dims, rank: int, seed, equal_weights: bool = False) -> DensityOperator:
    """Random density operator of the given rank: Haar orthonormal vectors
    combined with uniform-simplex (or equal) weights."""
    layout = _as_layout(dims)
    d = layout.total_dim
    if not 1 <= rank <= d:
        raise ValueError(f"rank {rank} out of range for dimension {d}")
    rng = _rng(seed)
    u = haar_unitary_matrix(d, rng)
    vecs = u[:, :rank]
    if equal_weights:
        w = np.full(rank, 1.0 / rank)
    else:
        w = rng.dirichlet(np.ones(rank))
    m = (vecs * w) @ dagger(vecs)
    return DensityOperator(m, layout)


# ---------------------------------------------------------------------------
# JSON interchange

_OPERATOR_KEYS = {"dims", "re", "im"}
_STATE_KEYS = {"dims", "amps_re", "amps_im"}


def operator_to_payload(op) -> dict:
    m = op.matrix if isinstance(op, (DensityOperator, UnitaryOperator)) else np.asarray(op)
    return {
        "dims": list(op.layout.dims) if hasattr(op, "layout") else [m.shape[0]],
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def payload_to_matrix(payload: dict) -> tuple[np.ndarray, SubsystemLayout]:
    if not _OPERATOR_KEYS.issubset(payload):
        raise ValueError(f"operator payload must contain keys {sorted(_OPERATOR_KEYS)}")
    layout = SubsystemLayout(payload["dims"])
    re = np.asarray(payload["re"], dtype=float)
    im = np.asarray(payload["im"], dtype=float)
    if re.shape != im.shape:
        raise ValueError("re and im blocks have different shapes")
    if re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ValueError(f"operator payload is not square: shape {re.shape}")
    if re.shape[0] != layout.total_dim:
        raise ValueError(
            f"matrix side {re.shape[0]} does not match dims product {layout.total_dim}"
        )
    return re + 1j * im, layout


def state_to_payload(state: StateVector) -> dict:
    return {
        "dims": list(state.layout.dims),
        "amps_re": state.amplitudes.real.tolist(),
        "amps_im": state.amplitudes.imag.tolist(),
    }


def payload_to_state(payload: dict) -> StateVector:
    if not _STATE_KEYS.issubset(payload):
        raise ValueError(f"state payload must contain keys {sorted(_STATE_KEYS)}")
    layout = SubsystemLayout(payload["dims"])
    re = np.asarray(payload["amps_re"], dtype=float)
    im = np.asarray(payload["amps_im"], dtype=float)
    if re.shape != im.shape or re.ndim != 1:
        raise ValueError("state payload amplitudes malformed")
    if re.shape[0] != layout.total_dim:
        raise ValueError("amplitude length does not match dims product")
    return StateVector(re + 1j * im, layout)


def save_json(path: str, payload: dict) -> None:
    """Atomic JSON write (temp file + rename)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
