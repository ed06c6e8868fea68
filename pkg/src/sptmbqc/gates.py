"""Logical unitary gates from small-angle measurement bases.

The per-step channel is computed exactly from the full virtual-space evolution
(measure one site in a tilted basis, reverse the byproduct, add all outcome
paths, condition the junk with an oblivious wire), never from the first-order
formula; the first-order rotation law is a test target.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import (
    Channel,
    FixedPoint,
    NuMatrix,
    default_wire_length,
    fixed_point,
    junk_channel,
    unvec,
    vec,
)
from .errors import ClosureTooSmall, MaxDimExceeded, SymmetryConditionViolated, ValidationError
from .model import PhasePoint, check_byproduct_symmetry, weyl_symmetry_data

DALPHA_SOFT_CAP = 0.2


# ---------------------------------------------------------------------------
# program data types

@dataclass(frozen=True)
class GateStep:
    """One small-angle measurement step, repeated `repeats` times.

    `wire_n` is the oblivious-wire length following each step; None picks the
    model default (30 correlation lengths, floor 20).
    """

    pair: tuple[int, int]
    dalpha: float
    beta: float = 0.0
    wire_n: int | None = None
    repeats: int = 1

    def __post_init__(self):
        i, j = self.pair
        if not 0 <= i < j:
            raise ValidationError(f"gate pair must satisfy 0 <= i < j, got {self.pair}")
        if abs(self.dalpha) > DALPHA_SOFT_CAP:
            warnings.warn(f"|dalpha| = {abs(self.dalpha):.3f} exceeds the small-angle cap {DALPHA_SOFT_CAP}")


@dataclass(frozen=True)
class MeasureStep:
    """Accumulated weak measurement of the pair observable C = C_i^-1 C_j."""

    pair: tuple[int, int]
    alpha: float
    n_m: int
    wire_n: int | None = None


@dataclass(frozen=True)
class InitStep:
    """Measure, then rotate the obtained eigenstate onto the target one."""

    pair: tuple[int, int]
    target_index: int
    n_m: int
    budget: float = 1e-2
    wire_n: int | None = None


@dataclass(frozen=True)
class WireStep:
    """A block of oblivious wire sites."""

    n: int


ProgramStep = GateStep | MeasureStep | InitStep | WireStep


@dataclass(frozen=True)
class GateProgram:
    steps: tuple[ProgramStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def site_budget(self, point: PhasePoint) -> int:
        """Number of physical sites the program consumes."""
        total = 0
        for s in self.steps:
            wire = s.wire_n if getattr(s, "wire_n", None) is not None else default_wire_length(point)
            if isinstance(s, GateStep):
                total += s.repeats * (1 + wire)
            elif isinstance(s, (MeasureStep, InitStep)):
                total += s.n_m * (1 + wire)
            else:
                total += s.n
        return total

    def to_json(self) -> dict:
        steps = []
        for s in self.steps:
            if isinstance(s, GateStep):
                steps.append({"kind": "rotate", "pair": list(s.pair), "dalpha": s.dalpha,
                              "beta": s.beta, "n": s.repeats, "wire_n": s.wire_n})
            elif isinstance(s, MeasureStep):
                steps.append({"kind": "measure", "pair": list(s.pair), "alpha": s.alpha,
                              "n_m": s.n_m, "wire_n": s.wire_n})
            elif isinstance(s, InitStep):
                steps.append({"kind": "init", "pair": list(s.pair), "target_index": s.target_index,
                              "n_m": s.n_m, "budget": s.budget, "wire_n": s.wire_n})
            elif isinstance(s, WireStep):
                steps.append({"kind": "wire", "n": s.n})
        return {"steps": steps}

    @classmethod
    def from_json(cls, doc: dict) -> "GateProgram":
        steps = []
        for s in doc["steps"]:
            kind = s["kind"]
            if kind == "rotate":
                steps.append(GateStep(tuple(s["pair"]), s["dalpha"], s.get("beta", 0.0),
                                      s.get("wire_n"), s.get("n", 1)))
            elif kind == "measure":
                steps.append(MeasureStep(tuple(s["pair"]), s["alpha"], s["n_m"], s.get("wire_n")))
            elif kind == "init":
                steps.append(InitStep(tuple(s["pair"]), s["target_index"], s["n_m"],
                                      s.get("budget", 1e-2), s.get("wire_n")))
            elif kind == "wire":
                steps.append(WireStep(s["n"]))
            else:
                raise ValidationError(f"unknown program step kind {kind!r}")
        return cls(tuple(steps))


# ---------------------------------------------------------------------------
# generator set and Lie closure

def pair_operator(point: PhasePoint, pair: tuple[int, int]) -> np.ndarray:
    """C = C_i^-1 C_j for the selected basis pair."""
    i, j = pair
    return point.C[i].conj().T @ point.C[j]


def generator_set(point: PhasePoint) -> list[np.ndarray]:
    """Hermitian combinations (C + C^dag)/2 and (C - C^dag)/2i for all pairs i < j."""
    gens = []
    for i in range(point.d):
        for j in range(i + 1, point.d):
            c = pair_operator(point, (i, j))
            gens.append((c + c.conj().T) / 2)
            gens.append((c - c.conj().T) / 2j)
    return gens


@dataclass(frozen=True)
class LieClosure:
    basis: tuple[np.ndarray, ...]
    dim: int


def lie_closure(gens, tol: float = 1e-10, max_dim: int | None = None, traceless: bool = False) -> LieClosure:
    """Close the real span of Hermitian generators under the commutator [.,.]/i.

    Gram-Schmidt runs over the real vector space of Hermitian matrices with the
    Hilbert-Schmidt inner product Tr(AB).
    """
    dim = gens[0].shape[0]
    if max_dim is None:
        max_dim = dim * dim

    def to_vec(h):
        return np.concatenate([h.real.reshape(-1), h.imag.reshape(-1)])

    basis_mats: list[np.ndarray] = []
    basis_vecs: list[np.ndarray] = []

    def try_add(h):
        if traceless:
            h = h - np.trace(h) / dim * np.eye(dim)
        v = to_vec(h)
        norm0 = np.linalg.norm(v)
        if norm0 < tol:
            return False
        for bv in basis_vecs:
            v = v - np.dot(bv, v) * bv
        if np.linalg.norm(v) <= tol * max(1.0, norm0):
            return False
        v = v / np.linalg.norm(v)
        half = dim * dim
        m = (v[:half] + 1j * v[half:]).reshape(dim, dim)
        basis_mats.append((m + m.conj().T) / 2)
        basis_vecs.append(v)
        if len(basis_mats) > max_dim:
            raise MaxDimExceeded(f"Lie closure exceeded max_dim={max_dim}")
        return True

    for g in gens:
        try_add(np.asarray(g, dtype=complex))
    frontier = list(range(len(basis_mats)))
    while frontier:
        new_frontier = []
        n_old = len(basis_mats)
        for a in frontier:
            for b in range(len(basis_mats)):
                comm = (basis_mats[a] @ basis_mats[b] - basis_mats[b] @ basis_mats[a]) / 1j
                if try_add(comm):
                    new_frontier.append(len(basis_mats) - 1)
        # commutators among newly added elements are covered in the next sweep
        frontier = new_frontier if len(basis_mats) > n_old else []
    return LieClosure(tuple(basis_mats), len(basis_mats))


# ---------------------------------------------------------------------------
# logical channels

@dataclass(frozen=True)
class LogicalChannel:
    """Superoperator on the logical space, row-major vectorization."""

    superop: np.ndarray
    D: int

    def apply(self, sigma: np.ndarray) -> np.ndarray:
        return unvec(self.superop @ vec(sigma))

    def compose(self, other: "LogicalChannel") -> "LogicalChannel":
        """self after other."""
        return LogicalChannel(self.superop @ other.superop, self.D)

    def power(self, n: int) -> "LogicalChannel":
        return LogicalChannel(np.linalg.matrix_power(self.superop, n), self.D)


def identity_channel(D: int) -> LogicalChannel:
    return LogicalChannel(np.eye(D * D, dtype=complex), D)


def unitary_channel(U: np.ndarray) -> LogicalChannel:
    return LogicalChannel(np.kron(U, U.conj()), U.shape[0])


def channel_distance(a: LogicalChannel, b: LogicalChannel) -> float:
    """Frobenius distance between superoperators, normalized by the logical dimension."""
    return float(np.linalg.norm(a.superop - b.superop) / a.D)


def choi_matrix(ch: LogicalChannel) -> np.ndarray:
    D = ch.D
    s4 = ch.superop.reshape(D, D, D, D)
    return s4.transpose(2, 0, 3, 1).reshape(D * D, D * D)


def choi_min_eigenvalue(ch: LogicalChannel) -> float:
    j = choi_matrix(ch)
    return float(np.linalg.eigvalsh((j + j.conj().T) / 2)[0])


def trace_preservation_defect(ch: LogicalChannel) -> float:
    D = ch.D
    s4 = ch.superop.reshape(D, D, D, D)
    tp = np.einsum("aacd->cd", s4)
    return float(np.max(np.abs(tp - np.eye(D))))


def choi_fidelity(a: LogicalChannel, b: LogicalChannel) -> float:
    """Uhlmann fidelity of the normalized Choi states."""
    ja = choi_matrix(a) / a.D
    jb = choi_matrix(b) / b.D
    wa, va = np.linalg.eigh((ja + ja.conj().T) / 2)
    sq = va @ np.diag(np.sqrt(np.clip(wa, 0, None))) @ va.conj().T
    inner = sq @ ((jb + jb.conj().T) / 2) @ sq
    wi = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.sum(np.sqrt(np.clip(wi, 0, None))) ** 2)


def validate_channel(ch: LogicalChannel, tp_tol: float = 1e-10, cp_tol: float = 1e-10) -> None:
    tp = trace_preservation_defect(ch)
    if tp > tp_tol:
        raise ValidationError(f"channel is not trace preserving: defect {tp:.3e}")
    cmin = choi_min_eigenvalue(ch)
    if cmin < -cp_tol:
        raise ValidationError(f"channel is not completely positive: Choi min eigenvalue {cmin:.3e}")


# ---------------------------------------------------------------------------
# exact step channels

def basis_matrix(d: int, pair: tuple[int, int], alpha: float, beta: float) -> np.ndarray:
    """Unitary whose columns are the tilted measurement basis vectors.

    Column i: cos(a)|i> + e^{i b} sin(a)|j>;  column j: sin(a)|i> - e^{i b} cos(a)|j>;
    remaining columns stay in the wire basis.
    """
    i, j = pair
    if not 0 <= i < j < d:
        raise ValidationError(f"pair {pair} is not an index pair with 0 <= i < j <= {d - 1}")
    u = np.eye(d, dtype=complex)
    ca, sa, ph = np.cos(alpha), np.sin(alpha), np.exp(1j * beta)
    u[i, i] = ca
    u[j, i] = ph * sa
    u[i, j] = sa
    u[j, j] = -ph * ca
    return u


def step_virtual_ops(point: PhasePoint, pair: tuple[int, int], alpha: float, beta: float) -> list[np.ndarray]:
    """Byproduct-corrected virtual action for each outcome of one tilted-basis site.

    Outcome k is labeled by the wire-basis index its basis vector is dominated
    by; the correction applied is C_k^-1 on the logical factor.
    """
    u = basis_matrix(point.d, pair, alpha, beta)
    tensors = point.site_tensors()
    ident_j = np.eye(point.Dj)
    ops = []
    for k in range(point.d):
        m = sum(np.conj(u[i, k]) * tensors[i] for i in range(point.d) if u[i, k] != 0)
        ops.append(np.kron(point.C[k].conj().T, ident_j) @ m)
    return ops


def wire_superop(point: PhasePoint) -> np.ndarray:
    """Superoperator of one oblivious-wire site on the full bond space: I (x) L."""
    ident = np.eye(point.D)
    return sum(np.kron(np.kron(ident, b), np.kron(ident, b).conj()) for b in point.B)


def step_virtual_superop(
    point: PhasePoint,
    pair: tuple[int, int],
    alpha: float,
    beta: float,
    wire_n: int,
    paths: str = "all",
) -> np.ndarray:
    """Bond-space superoperator of (outcome path sum) followed by wire_n wire sites."""
    ops = step_virtual_ops(point, pair, alpha, beta)
    if paths == "all":
        selected = range(point.d)
    elif paths == "pair":
        selected = pair
    else:
        raise ValueError("paths must be 'all' or 'pair'")
    v = sum(np.kron(ops[k], ops[k].conj()) for k in selected)
    return np.linalg.matrix_power(wire_superop(point), wire_n) @ v


def _logical_from_virtual(S: np.ndarray, D: int, Dj: int, rho_fix: np.ndarray) -> LogicalChannel:
    T = np.empty((D * D, D * D), dtype=complex)
    for c in range(D):
        for dd in range(D):
            e = np.zeros((D, D), dtype=complex)
            e[c, dd] = 1.0
            out = unvec(S @ vec(np.kron(e, rho_fix)))
            sigma = out.reshape(D, Dj, D, Dj).trace(axis1=1, axis2=3)
            T[:, c * D + dd] = sigma.reshape(-1)
    out_tr = np.einsum("aacd->cd", T.reshape(D, D, D, D))
    scale = np.trace(out_tr).real / D
    return LogicalChannel(T / scale, D)


def step_channel(
    point: PhasePoint,
    nu: NuMatrix,
    pair: tuple[int, int],
    alpha: float,
    beta: float,
    wire_n: int | None = None,
    variant: str = "deterministic",
    fix: FixedPoint | None = None,
) -> LogicalChannel:
    """Exact logical channel of one tilted-basis step on a fixed-point junk input."""
    if fix is None:
        fix = fixed_point(junk_channel(point))
    if wire_n is None:
        wire_n = default_wire_length(point)
    paths = "all" if variant == "deterministic" else "pair"
    S = step_virtual_superop(point, pair, alpha, beta, wire_n, paths)
    return _logical_from_virtual(S, point.D, point.Dj, fix.rho)


def rotation_step_channel(
    point: PhasePoint,
    nu: NuMatrix,
    step: GateStep,
    variant: str = "deterministic",
    fix: FixedPoint | None = None,
) -> LogicalChannel:
    """One small-angle gate step; the basis angle is arctan(dalpha) so the
    unnormalized first-order basis vectors |i> + dalpha e^{i beta}|j> are reproduced exactly."""
    return step_channel(
        point, nu, step.pair, np.arctan(step.dalpha), step.beta,
        wire_n=step.wire_n, variant=variant, fix=fix,
    )


def pair_off_diagonal(nu: NuMatrix, pair: tuple[int, int]) -> complex:
    """nu_ji, the coupling that sets the rotation speed and phase for this pair."""
    i, j = pair
    return complex(nu.nu[j, i])


def rotation_generator(nu: NuMatrix, C: np.ndarray, pair: tuple[int, int], beta: float,
                       variant: str = "deterministic") -> np.ndarray:
    """Hermitian generator |nu_ji| (e^{-i(beta+delta)} C - h.c.)/i of the realized rotation."""
    off = pair_off_diagonal(nu, pair)
    delta = -np.angle(off) if abs(off) > 0 else 0.0
    m = abs(off) * np.exp(-1j * (beta + delta)) * C
    h = (m - m.conj().T) / 1j
    if variant == "heralded":
        i, j = pair
        h = h / (nu.nu[i, i].real + nu.nu[j, j].real)
    return h


def rotation_target_unitary(point: PhasePoint, nu: NuMatrix, pair: tuple[int, int],
                            alpha: float, beta: float, variant: str = "deterministic") -> np.ndarray:
    h = rotation_generator(nu, pair_operator(point, pair), pair, beta, variant)
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.exp(1j * alpha * w)) @ v.conj().T


@dataclass(frozen=True)
class FiniteRotation:
    channel: LogicalChannel
    target: np.ndarray
    distance: float
    choi_fid: float


def finite_rotation(
    point: PhasePoint,
    nu: NuMatrix,
    pair: tuple[int, int],
    alpha: float,
    beta: float,
    N: int,
    wire_n: int | None = None,
    variant: str = "deterministic",
    fix: FixedPoint | None = None,
) -> FiniteRotation:
    """Finite-angle rotation as N small steps of dalpha = alpha/N, with its distance to the target."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    if fix is None:
        fix = fixed_point(junk_channel(point))
    step = step_channel(point, nu, pair, np.arctan(alpha / N), beta, wire_n=wire_n,
                        variant=variant, fix=fix)
    chan = step.power(N)
    target = rotation_target_unitary(point, nu, pair, alpha, beta, variant)
    tgt_chan = unitary_channel(target)
    return FiniteRotation(
        channel=chan,
        target=target,
        distance=channel_distance(chan, tgt_chan),
        choi_fid=choi_fidelity(chan, tgt_chan),
    )


# ---------------------------------------------------------------------------
# eigenphase utilities (shared with measurement and trajectory modules)

def eigenphase_groups(C: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, list[np.ndarray]]:
    """Distinct eigenphases of a unitary and the projectors onto their eigenspaces."""
    T, Q = scipy.linalg.schur(np.asarray(C, dtype=complex), output="complex")
    phis = np.angle(np.diag(T))
    groups: list[list[int]] = []
    reps: list[float] = []
    for idx, phi in enumerate(phis):
        placed = False
        for g, rep in enumerate(reps):
            diff = np.angle(np.exp(1j * (phi - rep)))
            if abs(diff) < tol:
                groups[g].append(idx)
                placed = True
                break
        if not placed:
            groups.append([idx])
            reps.append(phi)
    order = np.argsort(reps)
    out_phis = np.array([reps[g] for g in order])
    projectors = []
    for g in order:
        cols = Q[:, groups[g]]
        projectors.append(cols @ cols.conj().T)
    return out_phis, projectors


# ---------------------------------------------------------------------------
# composition

def nonselective_measurement_channel(point, nu, step: MeasureStep, fix=None) -> LogicalChannel:
    """Path sum over all outcomes of the full accumulated weak measurement block."""
    n_real = step.n_m // 2
    n_imag = step.n_m - n_real
    real = step_channel(point, nu, step.pair, step.alpha, 0.0, wire_n=step.wire_n, fix=fix)
    imag = step_channel(point, nu, step.pair, step.alpha, np.pi / 2, wire_n=step.wire_n, fix=fix)
    return imag.power(n_imag).compose(real.power(n_real))


def init_channel(point: PhasePoint, step: InitStep) -> LogicalChannel:
    """Idealized init block: projective pair measurement plus the exact corrective unitary.

    The sampled protocol (measurement module) uses the compiled corrections; at
    channel level the large-n_m limit is represented by projectors.
    """
    C = pair_operator(point, step.pair)
    phis, projectors = eigenphase_groups(C)
    if step.target_index >= len(phis):
        raise ValidationError(f"target_index {step.target_index} out of range for {len(phis)} eigenphases")
    if point.D != 2 or len(phis) != 2:
        raise ClosureTooSmall("idealized init currently requires a qubit logical space with two eigenphases")
    sup = np.zeros((point.D ** 2, point.D ** 2), dtype=complex)
    t = step.target_index
    for i, p in enumerate(projectors):
        if i == t:
            corr = np.eye(point.D, dtype=complex)
        else:
            # rank-one projectors for D=2: the correction swaps the two eigenstates
            vt = _principal_vector(projectors[t])
            vi = _principal_vector(projectors[i])
            corr = np.outer(vt, vi.conj()) + np.outer(vi, vt.conj())
        k = corr @ p
        sup += np.kron(k, k.conj())
    return LogicalChannel(sup, point.D)


def _principal_vector(projector: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(projector)
    return v[:, -1]


def compose_program(
    point: PhasePoint,
    nu: NuMatrix,
    program: GateProgram,
    fix: FixedPoint | None = None,
    variant: str = "deterministic",
) -> LogicalChannel:
    """Sequential step channels; valid because byproducts propagate through adapted bases.

    Raises SymmetryConditionViolated when the byproduct operators are not
    (phases times) elements of the Heisenberg-Weyl representation, which is the
    condition that makes the basis rewriting possible.
    """
    report = check_byproduct_symmetry(point, weyl_symmetry_data(point.D))
    if not report.passed:
        bad = [m.index for m in report.matches if m.group_element is None]
        raise SymmetryConditionViolated(f"byproduct operators {bad} are not in the projective representation")
    if fix is None:
        fix = fixed_point(junk_channel(point))
    total = identity_channel(point.D)
    for step in program.steps:
        if isinstance(step, GateStep):
            ch = rotation_step_channel(point, nu, step, variant=variant, fix=fix)
            if step.repeats > 1:
                ch = ch.power(step.repeats)
        elif isinstance(step, MeasureStep):
            ch = nonselective_measurement_channel(point, nu, step, fix=fix)
        elif isinstance(step, InitStep):
            ch = init_channel(point, step)
        elif isinstance(step, WireStep):
            ch = identity_channel(point.D)  # wire acts as identity on the logical factor
        else:
            raise ValidationError(f"unknown step type {type(step).__name__}")
        total = ch.compose(total)
    return total


# ---------------------------------------------------------------------------
# SU(2) compilation

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_AXIS_VEC = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}


@dataclass(frozen=True)
class PauliAxis:
    pair: tuple[int, int]
    key: str
    gamma: float  # C = e^{i gamma} sigma_key
    weight: float  # |nu_ji|
    delta: float


def available_axes(point: PhasePoint, nu: NuMatrix) -> dict[str, PauliAxis]:
    """Best realizable Pauli rotation axis per direction, weighted by |nu_ji|."""
    axes: dict[str, PauliAxis] = {}
    for i in range(point.d):
        for j in range(i + 1, point.d):
            c = pair_operator(point, (i, j))
            if abs(np.trace(c)) > 1e-10:
                continue
            coeffs = {k: np.trace(p @ c) / 2 for k, p in _PAULI.items()}
            mags = {k: abs(v) for k, v in coeffs.items()}
            key = max(mags, key=mags.get)
            rest = sum(m for k, m in mags.items() if k != key)
            if mags[key] < 1 - 1e-10 or rest > 1e-10:
                continue
            off = pair_off_diagonal(nu, (i, j))
            if abs(off) < 1e-12:
                continue
            axis = PauliAxis(pair=(i, j), key=key, gamma=float(np.angle(coeffs[key])),
                             weight=abs(off), delta=float(-np.angle(off)))
            if key not in axes or axis.weight > axes[key].weight:
                axes[key] = axis
    return axes


def _su2_normalize(U: np.ndarray) -> np.ndarray:
    det = np.linalg.det(U)
    return U / np.sqrt(det)


def _su2_quaternion(U: np.ndarray) -> np.ndarray:
    u = _su2_normalize(U)
    w = np.trace(u) / 2
    comps = [1j * np.trace(p @ u) / 2 for p in (_PAULI["x"], _PAULI["y"], _PAULI["z"])]
    q = np.array([w.real, comps[0].real, comps[1].real, comps[2].real])
    return q / np.linalg.norm(q)


def _su2_to_so3(U: np.ndarray) -> np.ndarray:
    u = _su2_normalize(U)
    keys = ("x", "y", "z")
    r = np.empty((3, 3))
    for a, ka in enumerate(keys):
        for b, kb in enumerate(keys):
            r[a, b] = 0.5 * np.trace(_PAULI[ka] @ u @ _PAULI[kb] @ u.conj().T).real
    return r


def _pauli_rotation(key: str, theta: float) -> np.ndarray:
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * _PAULI[key]


def _euler_angles(target: np.ndarray, k1: str, k2: str) -> tuple[float, float, float]:
    """Angles (a, b, c) with target ~ R_{k1}(a) R_{k2}(b) R_{k1}(c) up to global phase."""
    e1, e2 = _AXIS_VEC[k1], _AXIS_VEC[k2]
    e3 = np.cross(e1, e2)
    m = np.stack([-e3, e2, e1])  # maps e1 -> z, e2 -> y, det +1
    r = m @ _su2_to_so3(target) @ m.T
    sb = np.hypot(r[0, 2], r[1, 2])
    b = np.arctan2(sb, r[2, 2])
    if sb > 1e-12:
        a = np.arctan2(r[1, 2], r[0, 2])
        c = np.arctan2(r[2, 1], -r[2, 0])
    else:
        a = np.arctan2(r[1, 0], r[0, 0]) if r[2, 2] > 0 else np.arctan2(-r[1, 0], -r[0, 0])
        c = 0.0
        if r[2, 2] < 0:
            b = np.pi
    return float(a), float(b), float(c)


@dataclass(frozen=True)
class CompiledRotation:
    program: GateProgram
    predicted_sites: int
    predicted_error: float


def compile_su2(
    target: np.ndarray,
    point: PhasePoint,
    nu: NuMatrix,
    error_budget: float,
) -> CompiledRotation:
    """Euler-style decomposition of a 2x2 special unitary into realizable finite rotations."""
    if point.D != 2:
        raise ClosureTooSmall("compile_su2 requires a qubit logical space")
    closure = lie_closure(generator_set(point), traceless=True)
    if closure.dim < 3:
        raise ClosureTooSmall(f"realizable algebra has dimension {closure.dim} < 3")
    axes = available_axes(point, nu)
    if len(axes) < 2:
        raise ClosureTooSmall("fewer than two non-commuting Pauli axes available")

    q = _su2_quaternion(target)
    if abs(q[0]) > 1 - 1e-12:
        return CompiledRotation(GateProgram(()), 0, 0.0)

    ranked = sorted(axes.values(), key=lambda ax: -ax.weight)
    rotations: list[tuple[PauliAxis, float]] = []
    vec_part = q[1:]
    vnorm = np.linalg.norm(vec_part)
    aligned = None
    for ax in ranked:
        if abs(abs(np.dot(vec_part / vnorm, _AXIS_VEC[ax.key])) - 1) < 1e-12:
            aligned = ax
            break
    if aligned is not None:
        theta = 2 * np.arctan2(vnorm, q[0])
        if np.dot(vec_part, _AXIS_VEC[aligned.key]) < 0:
            theta = -theta
        rotations.append((aligned, theta))
    else:
        ax1, ax2 = ranked[0], ranked[1]
        a, b, c = _euler_angles(target, ax1.key, ax2.key)
        rotations = [(ax1, c), (ax2, b), (ax1, a)]  # applied left to right in program order

    steps = []
    sites = 0
    predicted_error = 0.0
    wire = default_wire_length(point)
    n_rot = max(1, len([1 for _, th in rotations if abs(th) > 1e-12]))
    for ax, theta in rotations:
        theta = float(np.angle(np.exp(1j * theta)))
        if abs(theta) < 1e-12:
            continue
        alpha_tot = -theta / (4 * ax.weight)
        beta = ax.gamma - ax.delta - np.pi / 2
        per_budget = error_budget / n_rot
        n_steps = max(1, int(np.ceil(abs(alpha_tot) / 0.19)), int(np.ceil(30 * alpha_tot ** 2 / per_budget)))
        steps.append(GateStep(pair=ax.pair, dalpha=alpha_tot / n_steps, beta=beta, repeats=n_steps))
        sites += n_steps * (1 + wire)
        predicted_error += 10 * alpha_tot ** 2 / n_steps
    return CompiledRotation(GateProgram(tuple(steps)), sites, predicted_error)


# ---------------------------------------------------------------------------
# interaction picture

def controlled_byproduct(point: PhasePoint) -> np.ndarray:
    """Lambda(C) = sum_i |i><i| (x) C_i, physical control, logical target."""
    d, D = point.d, point.D
    lam = np.zeros((d * D, d * D), dtype=complex)
    for i in range(d):
        lam[i * D:(i + 1) * D, i * D:(i + 1) * D] = point.C[i]
    return lam


def interaction_step(nu: NuMatrix, sigma: np.ndarray, U: np.ndarray, point: PhasePoint) -> np.ndarray:
    """One gate by coupling an ancilla prepared in the state nu to the logical system.

    Evaluates Tr_P[ G (nu (x) sigma) G^dag ] with G = Lambda(C)^dag (U (x) I) Lambda(C).
    """
    lam = controlled_byproduct(point)
    g = lam.conj().T @ np.kron(U, np.eye(point.D)) @ lam
    full = g @ np.kron(nu.nu, sigma) @ g.conj().T
    return full.reshape(point.d, point.D, point.d, point.D).trace(axis1=0, axis2=2)


def step_interaction_unitary(point: PhasePoint, step: GateStep) -> np.ndarray:
    """Ancilla unitary reproducing the gate step: the measurement-to-wire basis change."""
    return basis_matrix(point.d, step.pair, np.arctan(step.dalpha), step.beta).conj().T
