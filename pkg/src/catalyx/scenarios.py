"""End-to-end protocol experiments: multi-party refuelling, depletion of a
randomness source, absorption bounds, the 4-partite conservation identity and
free-randomness accounting for classically correlated intermediates.

Every step that touches a catalyst goes through :func:`catalyx.catalysis.ledger`,
so the information-balance identity is enforced on each transition.  Scenarios
take explicit seeds and echo them in the trace for reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import hilbert
from .catalysis import KrausChannel, LedgerRecord, ledger
from .constructions import initialization_classical, multiparty_unitary
from .entropy import mutual_information_matrix, von_neumann
from .hilbert import (
    DensityOperator,
    UnitaryOperator,
    clock_matrix,
    dagger,
    embed_operator,
    haar_state,
    maximally_mixed,
    plus_state,
    ptrace_matrix,
    purify,
    random_density,
    shift_matrix,
    trace_distance,
)


REFUEL_DIM_CAP = 512


@dataclass(frozen=True)
class ScenarioStep:
    actor: str
    operation: str
    ledger: LedgerRecord | None
    marginals: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "actor": self.actor,
            "operation": self.operation,
            "ledger": self.ledger.to_json_dict() if self.ledger else None,
            "marginals": dict(self.marginals),
        }


@dataclass(frozen=True)
class ScenarioTrace:
    name: str
    steps: tuple[ScenarioStep, ...]
    seed: int
    config: dict
    notices: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "config": dict(self.config),
            "notices": list(self.notices),
            "steps": [s.to_json_dict() for s in self.steps],
        }

    def csv_rows(self) -> list[list[str]]:
        keys = sorted({k for s in self.steps for k in s.marginals})
        header = ["actor", "operation", "delta_S", "delta_I", "residual"] + keys
        rows = [header]
        for s in self.steps:
            if s.ledger is not None:
                ds = f"{s.ledger.s_out - s.ledger.s_in:.12g}"
                di = f"{s.ledger.delta_i:.12g}"
                res = f"{s.ledger.residual:.12g}"
            else:
                ds = di = res = ""
            rows.append(
                [s.actor, s.operation, ds, di, res]
                + [f"{s.marginals[k]:.12g}" if k in s.marginals else "" for k in keys]
            )
        return rows

    def reading(self, operation: str, key: str) -> float:
        for s in reversed(self.steps):
            if s.operation == operation and key in s.marginals:
                return s.marginals[key]
        raise KeyError(f"no reading {key!r} for operation {operation!r}")


def _evolve(u: np.ndarray, rho: np.ndarray, inter: np.ndarray) -> np.ndarray:
    full = np.kron(rho, inter)
    return u @ full @ dagger(u)


# ---------------------------------------------------------------------------
# multi-party refuelling


def multiparty_refuel(
    d: int, rounds: int, seed: int = 0, classical: bool = False
) -> ScenarioTrace:
    """Agents A and B alternate turns dephasing a fresh unbiased input with one
    shared maximally mixed d-level catalyst.

    With the quantum construction each turn fully depletes the catalyst for
    the acting agent while exactly refuelling it for the idle one.  With
    ``classical=True`` both agents instead use the catalyst through a fixed
    basis (d-level inputs, clock-power controls); the joint map then fails to
    factorize into independent dephasings.
    """
    if d < 2 or rounds < 1:
        raise ValueError("need d >= 2 and rounds >= 1")
    reg_dim = d if classical else d * d
    notices: list[str] = []
    max_rounds = rounds
    # fresh registers accumulate, so the joint state grows exponentially;
    # cap the materialized dimension at two rounds per agent for d = 2
    while reg_dim**max_rounds * d > REFUEL_DIM_CAP:
        max_rounds -= 1
    if max_rounds < rounds:
        notices.append(
            f"trace truncated to {max_rounds} rounds: total dimension cap {REFUEL_DIM_CAP}"
        )

    if classical:
        z = clock_matrix(d)
        w = np.zeros((d * d, d * d), dtype=complex)
        for k in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[k, k] = 1.0
            w += np.kron(np.linalg.matrix_power(z, k), e)
        turn_u = UnitaryOperator(w, [d, d])
    else:
        turn_u = multiparty_unitary(d)

    inter = maximally_mixed([d]).matrix
    inter_dims: list[int] = [d]
    reg_turn: list[int] = []  # turn number of each register in layout order
    steps: list[ScenarioStep] = []
    fresh = plus_state(reg_dim).density()

    for turn in range(1, max_rounds + 1):
        actor = "A" if turn % 2 == 1 else "B"
        full_dims = [reg_dim] + inter_dims
        u_full = embed_operator(turn_u.matrix, full_dims, [0, len(full_dims) - 1])
        u_full = UnitaryOperator(u_full, full_dims)
        inter_rho = DensityOperator(inter, inter_dims)
        rec = ledger(u_full, fresh, inter_rho, 1, len(inter_dims) - 1)
        inter = _evolve(u_full.matrix, fresh.matrix, inter)
        inter_dims = full_dims
        reg_turn = [turn] + reg_turn

        a_regs = [i for i, t in enumerate(reg_turn) if t % 2 == 1]
        b_regs = [i for i, t in enumerate(reg_turn) if t % 2 == 0]
        c_idx = len(inter_dims) - 1
        marg = {
            "S(C)": von_neumann(
                DensityOperator(ptrace_matrix(inter, inter_dims, [c_idx]), [d])
            ),
            "I(A:C)": mutual_information_matrix(inter, inter_dims, a_regs, [c_idx])
            if a_regs
            else 0.0,
        }
        if b_regs:
            marg["I(B:C)"] = mutual_information_matrix(inter, inter_dims, b_regs, [c_idx])
        tau_ac = ptrace_matrix(inter, inter_dims, a_regs + [c_idx]) if a_regs else None
        if tau_ac is not None:
            dim_ac = tau_ac.shape[0]
            marg["D(tau_AC, mm)"] = trace_distance(tau_ac, np.eye(dim_ac) / dim_ac)
        steps.append(ScenarioStep(actor, f"turn{turn}", rec, marg))

    if classical and max_rounds >= 2:
        # deviation of the joint two-turn output from the ideal product of
        # independent dephasings (which maps |+> ⊗ |+> to 1/d ⊗ 1/d)
        joint = ptrace_matrix(inter, inter_dims, [0, 1])
        ideal = np.eye(reg_dim * reg_dim) / (reg_dim * reg_dim)
        steps.append(
            ScenarioStep(
                "B",
                "joint-check",
                None,
                {"D(joint, product)": trace_distance(joint, ideal)},
            )
        )

    return ScenarioTrace(
        name="multiparty_refuel",
        steps=tuple(steps),
        seed=seed,
        config={"d": d, "rounds": rounds, "classical": classical},
        notices=tuple(notices),
    )


# ---------------------------------------------------------------------------
# 4-partite conservation identity


@dataclass(frozen=True)
class ConservationReport:
    max_residual: float
    max_inequality_violation: float
    samples: int


def conservation_law_check(
    seed: int = 0, n_samples: int = 100, dims: Sequence[int] = (2, 2, 2, 2)
) -> ConservationReport:
    """For Haar random 4-partite pure states on W, X, Y, Z check the identity
    2 S(Y) = I(X:Y) + I(Y:WZ) and the weaker 2 S(Y) >= I(X:Y) + I(Y:Z)."""
    dims = [int(x) for x in dims]
    if len(dims) != 4 or any(x > 3 for x in dims):
        raise ValueError("need four factors of dimension <= 3")
    rng = hilbert._rng(seed)
    total = int(np.prod(dims))
    worst_res = 0.0
    worst_ineq = 0.0
    w_i, x_i, y_i, z_i = 0, 1, 2, 3
    for _ in range(n_samples):
        v = haar_state(total, rng).amplitudes
        rho = np.outer(v, v.conj())
        s_y = von_neumann(
            DensityOperator(ptrace_matrix(rho, dims, [y_i]), [dims[y_i]])
        )
        i_xy = mutual_information_matrix(rho, dims, [x_i], [y_i])
        i_ywz = mutual_information_matrix(rho, dims, [y_i], [w_i, z_i])
        i_yz = mutual_information_matrix(rho, dims, [y_i], [z_i])
        worst_res = max(worst_res, abs(2 * s_y - i_xy - i_ywz))
        worst_ineq = max(worst_ineq, i_xy + i_yz - 2 * s_y)
    return ConservationReport(
        max_residual=worst_res, max_inequality_violation=worst_ineq, samples=n_samples
    )


# ---------------------------------------------------------------------------
# depletion of a randomness source


def depletion_demo(d: int, seed: int = 0, identity_maps: bool = False) -> ScenarioTrace:
    """Deplete a maximally mixed d-level catalyst with one full-production
    dephasing of a fresh d^2-level unbiased input, then attempt the same map a
    second time with the now-correlated intermediate.

    The joint output's mutual information I(A1:A2) is lower bounded by
    2 S^G - S_cat = 2 log2 d, certifying that the tensor-product map was not
    implemented (a product output would need I = 0).  With
    ``identity_maps=True`` the bound is non-positive and nothing obstructs.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    reg = d * d
    if identity_maps:
        w = UnitaryOperator(np.eye(reg * d), [reg, d])
        production = 0.0
    else:
        w = multiparty_unitary(d)
        production = 2 * math.log2(d)  # dephasing of a d^2-level unbiased input
    s_cat = 2 * math.log2(d)
    bound = 2 * production - s_cat

    fresh = plus_state(reg).density()
    steps = []
    inter = maximally_mixed([d]).matrix
    rec1 = ledger(w, fresh, maximally_mixed([d]), 1, 0)
    inter = _evolve(w.matrix, fresh.matrix, inter)
    steps.append(
        ScenarioStep("A", "use1", rec1, {"delta_I": rec1.delta_i, "S_cat": s_cat})
    )

    full_dims = [reg, reg, d]
    u2 = embed_operator(w.matrix, full_dims, [0, 2])
    rec2 = ledger(
        UnitaryOperator(u2, full_dims), fresh, DensityOperator(inter, [reg, d]), 1, 1
    )
    out = _evolve(u2, fresh.matrix, inter)
    i_a1a2 = mutual_information_matrix(out, full_dims, [0], [1])
    steps.append(
        ScenarioStep("A", "use2", rec2, {"I(A1:A2)": i_a1a2, "bound": bound})
    )
    return ScenarioTrace(
        name="depletion_demo",
        steps=tuple(steps),
        seed=seed,
        config={"d": d, "identity_maps": identity_maps},
    )


# ---------------------------------------------------------------------------
# absorption bound


@dataclass(frozen=True)
class AbsorptionReport:
    max_local_decrease: float
    min_global_increase_at_max: float
    ok: bool


def absorption_check(
    channel: KrausChannel, n_samples: int = 32, seed: int = 0
) -> AbsorptionReport:
    """Locate the sampled state whose entropy the channel decreases the most
    and check the purified (global) entropy increase dominates that decrease."""
    d = channel.dim_in
    rng = hilbert._rng(seed)
    candidates = [maximally_mixed([d])]
    for i in range(n_samples):
        rank = 1 + int(rng.integers(d))
        candidates.append(random_density([d], rank, rng))
    best_dec, best_gamma = -np.inf, candidates[0]
    for gamma in candidates:
        dec = von_neumann(gamma) - von_neumann(
            DensityOperator(channel.apply_matrix(gamma.matrix), [channel.dim_out])
        )
        if dec > best_dec:
            best_dec, best_gamma = dec, gamma
    psi = purify(best_gamma)
    rho_ab = np.outer(psi.amplitudes, psi.amplitudes.conj())
    # purification layout is (system, mirror); the channel acts on the system
    out = sum(
        np.kron(k, np.eye(d)) @ rho_ab @ dagger(np.kron(k, np.eye(d)))
        for k in channel.kraus
    )
    inc = von_neumann(DensityOperator(out, [channel.dim_out, d]))
    return AbsorptionReport(
        max_local_decrease=best_dec,
        min_global_increase_at_max=inc,
        ok=inc >= best_dec - 1e-7,
    )


# ---------------------------------------------------------------------------
# free randomness of a classically correlated intermediate


def free_randomness(intermediate: DensityOperator, n_a2: int) -> float:
    """2 S(B) - I(A2:B) for an intermediate on A2 ⊗ B in layout order."""
    dims = intermediate.layout.dims
    b = list(range(n_a2, len(dims)))
    s_b = von_neumann(
        DensityOperator(
            ptrace_matrix(intermediate.matrix, dims, b), [dims[i] for i in b]
        )
    )
    i_ab = (
        mutual_information_matrix(intermediate.matrix, dims, list(range(n_a2)), b)
        if n_a2
        else 0.0
    )
    return 2 * s_b - i_ab


@dataclass(frozen=True)
class FreeRandomnessReport:
    free_bits: float
    erasure_deviation: float
    ledger_record: LedgerRecord


def cq_free_randomness(d: int, seed: int = 0) -> FreeRandomnessReport:
    """A randomness source fully known to its user still works.

    The intermediate (1/d) sum |i><i| ⊗ |i><i| keeps 2 S(B) - I(A2:B) = log2 d
    bits of free randomness.  Spending it: dephase the input with a clock
    power controlled on B, then mask with a shift power controlled on the
    memory A2.  Acting on the unbiased input this produces the maximally
    mixed state exactly while preserving the whole intermediate.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    inter = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        inter[i * d + i, i * d + i] = 1.0 / d
    intermediate = DensityOperator(inter, [d, d])
    free = free_randomness(intermediate, 1)

    z, x = clock_matrix(d), shift_matrix(d)
    dims = [d, d, d]  # input, memory A2, source B
    stage1 = np.zeros((d * d, d * d), dtype=complex)
    stage2 = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        stage1 += np.kron(np.linalg.matrix_power(z, k), e)
        stage2 += np.kron(np.linalg.matrix_power(x, k), e)
    u = embed_operator(stage2, dims, [0, 1]) @ embed_operator(stage1, dims, [0, 2])
    u = UnitaryOperator(u, dims)

    rho = plus_state(d).density()
    rec = ledger(u, rho, intermediate, 1, 1)
    out_full = _evolve(u.matrix, rho.matrix, inter)
    out = ptrace_matrix(out_full, dims, [0])
    deviation = trace_distance(out, np.eye(d) / d)
    return FreeRandomnessReport(
        free_bits=free, erasure_deviation=deviation, ledger_record=rec
    )


# ---------------------------------------------------------------------------
# initialization end-to-end


def initialization_scenario(d: int, seed: int = 0) -> ScenarioTrace:
    """Run the classical-intermediate initialization end to end: pure input
    (memory-catalyst correlation survives), maximally mixed input (entropy and
    intermediate correlation both drop by log2 d) and entangled input (both
    rise by log2 d)."""
    gen = initialization_classical(d)
    u, inter = gen.unitary, gen.intermediate
    dims = list(u.layout.dims)
    steps = []

    # catalyst marginal of the intermediate
    sigma_b = ptrace_matrix(inter.matrix, inter.layout.dims, [1])
    i_before = mutual_information_matrix(inter.matrix, inter.layout.dims, [0], [1])
    steps.append(
        ScenarioStep(
            "setup",
            "intermediate",
            None,
            {
                "I(A':B)": i_before,
                "D(sigma_B, mm)": trace_distance(sigma_b, np.eye(d) / d),
            },
        )
    )

    rho_pure = hilbert.basis_state(d, 1).density()
    rec = ledger(u, rho_pure, inter, 1, 1)
    out = _evolve(u.matrix, rho_pure.matrix, inter.matrix)
    marg = {
        "I(A':B)": mutual_information_matrix(out, dims, [1], [2]),
        "D(out_A, |0><0|)": trace_distance(
            ptrace_matrix(out, dims, [0]), hilbert.basis_state(d, 0).density().matrix
        ),
    }
    steps.append(ScenarioStep("A", "pure-input", rec, marg))

    rho_mm = maximally_mixed([d])
    rec = ledger(u, rho_mm, inter, 1, 1)
    out = _evolve(u.matrix, rho_mm.matrix, inter.matrix)
    marg = {
        "delta_I": rec.delta_i,
        "D(out_A, |0><0|)": trace_distance(
            ptrace_matrix(out, dims, [0]), hilbert.basis_state(d, 0).density().matrix
        ),
    }
    steps.append(ScenarioStep("A", "mixed-input", rec, marg))

    # reference-extended run with a maximally entangled input
    gamma = hilbert.canonical_operators(d).max_entangled
    full_dims = [d] + dims
    u_ext = UnitaryOperator(embed_operator(u.matrix, full_dims, [1, 2, 3]), full_dims)
    rec = ledger(u_ext, gamma.density(), inter, 2, 1)
    steps.append(ScenarioStep("A", "entangled-input", rec, {"delta_I": rec.delta_i}))

    return ScenarioTrace(
        name="initialization_scenario",
        steps=tuple(steps),
        seed=seed,
        config={"d": d},
    )
