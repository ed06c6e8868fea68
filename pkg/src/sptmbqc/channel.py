"""Transfer-channel machinery on the junk and virtual spaces.

Vectorization is row-major throughout: vec(rho) = rho.reshape(-1), so the
superoperator of rho -> sum_k K_k rho K_k^dag is sum_k kron(K_k, conj(K_k)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLeadingEigenvalue,
    NonPositiveFixedPoint,
    ValidationError,
)
from .model import PhasePoint

DEGENERACY_TOL = 1e-12
NU_TOL = 1e-10
WIRE_FLOOR = 20
WIRE_XI_FACTOR = 30.0


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(v.size)))
    return v.reshape(dim, dim)


@dataclass(frozen=True)
class Channel:
    """Completely positive map given by a Kraus family, with cached superoperator."""

    kraus: tuple[np.ndarray, ...]
    superop: np.ndarray

    @classmethod
    def from_kraus(cls, kraus) -> "Channel":
        mats = tuple(np.asarray(k, dtype=complex) for k in kraus)
        dim = mats[0].shape[0]
        if any(k.shape != (dim, dim) for k in mats):
            raise ValidationError("all Kraus operators must be square and of equal dimension")
        superop = sum(np.kron(k, k.conj()) for k in mats)
        return cls(kraus=mats, superop=superop)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def adjoint(self) -> "Channel":
        return Channel.from_kraus([k.conj().T for k in self.kraus])


def junk_channel(point: PhasePoint) -> Channel:
    """L(rho) = sum_i B_i rho B_i^dag on the junk space."""
    return Channel.from_kraus(point.B)


def reverse_junk_channel(point: PhasePoint) -> Channel:
    """Lbar(rho) = sum_i B_i^dag rho B_i (the adjoint of the junk channel)."""
    return Channel.from_kraus([b.conj().T for b in point.B])


def full_transfer_channel(point: PhasePoint) -> Channel:
    """E(tau) = sum_i A_i tau A_i^dag on the whole bond space."""
    return Channel.from_kraus(point.site_tensors())


def reverse_full_channel(point: PhasePoint) -> Channel:
    """Fbar(tau) = sum_i A_i^dag tau A_i, the right-to-left transfer map."""
    return Channel.from_kraus([a.conj().T for a in point.site_tensors()])


@dataclass(frozen=True)
class ChannelSpectrum:
    eigenvalues: np.ndarray  # sorted by decreasing magnitude
    correlation_length: float


def spectrum(ch: Channel, degeneracy_tol: float = DEGENERACY_TOL) -> ChannelSpectrum:
    """Full superoperator spectrum; raises if the top eigenvalue is degenerate in magnitude."""
    w = np.linalg.eigvals(ch.superop)
    w = w[np.argsort(-np.abs(w))]
    if abs(w[0]) < degeneracy_tol:
        raise DegenerateLeadingEigenvalue("channel has no nonzero eigenvalue")
    if len(w) > 1 and abs(w[0]) - abs(w[1]) < degeneracy_tol:
        raise DegenerateLeadingEigenvalue(
            f"|lambda_0| - |lambda_1| = {abs(w[0]) - abs(w[1]):.3e} < {degeneracy_tol}"
        )
    xi = 0.0
    if len(w) > 1 and 0.0 < abs(w[1]) < 1.0:
        xi = -1.0 / np.log(abs(w[1]) / abs(w[0]))
    return ChannelSpectrum(eigenvalues=w, correlation_length=float(xi))


def correlation_length(point: PhasePoint) -> float:
    return spectrum(junk_channel(point)).correlation_length


def default_wire_length(point: PhasePoint) -> int:
    """Wire length after which the junk system is taken to be at its fixed point."""
    xi = correlation_length(point)
    return max(WIRE_FLOOR, int(np.ceil(WIRE_XI_FACTOR * xi)))


def _hermitian_from_eigvec(v: np.ndarray) -> np.ndarray:
    m = unvec(v)
    tr = np.trace(m)
    if abs(tr) > 1e-14:
        m = m * (tr.conjugate() / abs(tr))
    h = (m + m.conj().T) / 2
    return h


@dataclass(frozen=True)
class FixedPoint:
    """Right fixed point rho (PSD, trace one) and left fixed functional ell, <ell, rho> = 1."""

    rho: np.ndarray
    ell: np.ndarray
    eigenvalue: float


def fixed_point(ch: Channel, tol: float = 1e-12) -> FixedPoint:
    """Leading eigenoperators of a channel with non-degenerate top eigenvalue.

    rho is canonicalized to positive semidefinite with unit trace; ell is the
    Hermitian fixed point of the adjoint channel scaled so Tr(ell rho) = 1, so
    that lim L^n(X) = Tr(ell X) rho.
    """
    sp = spectrum(ch)  # raises DegenerateLeadingEigenvalue when appropriate
    lam0 = sp.eigenvalues[0]
    w, vecs = np.linalg.eig(ch.superop)
    idx = int(np.argmax(np.abs(w)))
    rho = _hermitian_from_eigvec(vecs[:, idx])
    eigs = np.linalg.eigvalsh(rho)
    scale = max(abs(eigs[0]), abs(eigs[-1]))
    if eigs[0] < -NU_TOL * scale and eigs[-1] > NU_TOL * scale:
        raise NonPositiveFixedPoint(
            f"fixed-point eigenvalues span [{eigs[0]:.3e}, {eigs[-1]:.3e}]; neither sign is PSD"
        )
    if np.trace(rho).real < 0:
        rho = -rho
    rho = rho / np.trace(rho).real

    wl, vl = np.linalg.eig(ch.superop.conj().T)
    idxl = int(np.argmax(np.abs(wl)))
    ell = _hermitian_from_eigvec(vl[:, idxl])
    overlap = np.trace(ell @ rho)
    if abs(overlap) < 1e-14:
        raise NonPositiveFixedPoint("left and right fixed points are orthogonal")
    ell = ell / overlap.real

    residual = np.linalg.norm(ch.apply(rho) - lam0 * rho)
    if residual > tol:
        raise ValidationError(f"fixed-point residual {residual:.3e} exceeds {tol}")
    return FixedPoint(rho=rho, ell=ell, eigenvalue=float(abs(lam0)))


@dataclass(frozen=True)
class NuMatrix:
    """Hermitian, trace-one, PSD matrix nu_ij with lim L^n(B_i rho_fix B_j^dag) = nu_ij rho_fix.

    delta is the phase convention nu_10 = |nu_10| exp(-i delta).
    """

    nu: np.ndarray
    delta: float

    def __post_init__(self):
        a = np.array(self.nu, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "nu", a)

    @property
    def d(self) -> int:
        return self.nu.shape[0]


def nu_matrix(point: PhasePoint, fix: FixedPoint | None = None) -> NuMatrix:
    """nu_ij = <ell, B_i rho_fix B_j^dag> from the spectral fixed-point pair."""
    if fix is None:
        fix = fixed_point(junk_channel(point))
    d = point.d
    nu = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            nu[i, j] = np.trace(fix.ell @ point.B[i] @ fix.rho @ point.B[j].conj().T)
    herm_dev = np.linalg.norm(nu - nu.conj().T)
    trace_dev = abs(np.trace(nu) - 1.0)
    min_eig = float(np.linalg.eigvalsh((nu + nu.conj().T) / 2)[0])
    if herm_dev > NU_TOL or trace_dev > NU_TOL or min_eig < -NU_TOL:
        raise ValidationError(
            f"nu-matrix invariants violated: hermiticity {herm_dev:.3e}, trace {trace_dev:.3e}, min eig {min_eig:.3e}"
        )
    delta = float(-np.angle(nu[1, 0])) if d >= 2 and abs(nu[1, 0]) > 1e-15 else 0.0
    return NuMatrix(nu=nu, delta=delta)


def nu_iteration_deviation(point: PhasePoint, nu: NuMatrix, fix: FixedPoint | None = None, n: int | None = None) -> float:
    """Max entrywise norm of L^n(B_i rho_fix B_j^dag) - nu_ij rho_fix (gauge cross-check)."""
    if fix is None:
        fix = fixed_point(junk_channel(point))
    if n is None:
        n = default_wire_length(point)
    ch = junk_channel(point)
    powered = np.linalg.matrix_power(ch.superop, n)
    worst = 0.0
    for i in range(point.d):
        for j in range(point.d):
            x = point.B[i] @ fix.rho @ point.B[j].conj().T
            iterated = unvec(powered @ vec(x))
            worst = max(worst, float(np.max(np.abs(iterated - nu.nu[i, j] * fix.rho))))
    return worst


@dataclass(frozen=True)
class VirtualState:
    """Density operator on the logical (x) junk bond space."""

    rho: np.ndarray
    D: int
    Dj: int

    def __post_init__(self):
        a = np.array(self.rho, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "rho", a)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.D, self.Dj)

    def validate(self, tol: float = 1e-12, psd_tol: float = 1e-10) -> "VirtualState":
        if self.rho.shape != (self.D * self.Dj, self.D * self.Dj):
            raise ValidationError(f"state shape {self.rho.shape} does not match dims {self.dims}")
        if np.linalg.norm(self.rho - self.rho.conj().T) > tol:
            raise ValidationError("virtual state is not Hermitian")
        tr = np.trace(self.rho)
        if abs(tr.imag) > tol or tr.real <= 0:
            raise ValidationError(f"virtual state trace {tr} is not real and positive")
        if np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2)[0] < -psd_tol * tr.real:
            raise ValidationError("virtual state has a significantly negative eigenvalue")
        return self

    def normalized(self) -> "VirtualState":
        return VirtualState(self.rho / np.trace(self.rho).real, self.D, self.Dj)

    def logical_state(self) -> np.ndarray:
        return self.rho.reshape(self.D, self.Dj, self.D, self.Dj).trace(axis1=1, axis2=3)

    def junk_state(self) -> np.ndarray:
        return self.rho.reshape(self.D, self.Dj, self.D, self.Dj).trace(axis1=0, axis2=2)

    @classmethod
    def from_boundary_vector(cls, L: np.ndarray, D: int, Dj: int) -> "VirtualState":
        L = np.asarray(L, dtype=complex).reshape(-1)
        L = L / np.linalg.norm(L)
        return cls(np.outer(L, L.conj()), D, Dj)

    @classmethod
    def product(cls, sigma: np.ndarray, rho_junk: np.ndarray) -> "VirtualState":
        return cls(np.kron(sigma, rho_junk), sigma.shape[0], rho_junk.shape[0])


def random_left_boundary(point: PhasePoint, rng: np.random.Generator) -> np.ndarray:
    """Generic (entangled) pure boundary vector on the bond space."""
    v = rng.standard_normal(point.Db) + 1j * rng.standard_normal(point.Db)
    return v / np.linalg.norm(v)


def oblivious_wire(state: VirtualState, point: PhasePoint, n: int) -> VirtualState:
    """Apply identity (x) L^n and renormalize to unit trace (exact finite-n map)."""
    if n == 0:
        return state.normalized()
    D, Dj = state.D, state.Dj
    powered = np.linalg.matrix_power(junk_channel(point).superop, n)
    blocks = state.rho.reshape(D, Dj, D, Dj).transpose(0, 2, 1, 3).reshape(D * D, Dj * Dj)
    blocks = blocks @ powered.T
    rho = blocks.reshape(D, D, Dj, Dj).transpose(0, 2, 1, 3).reshape(D * Dj, D * Dj)
    return VirtualState(rho / np.trace(rho).real, D, Dj)


@dataclass(frozen=True)
class FactorizationResult:
    sigma: np.ndarray
    rho_junk: np.ndarray
    residual: float


def factorization_check(state: VirtualState) -> FactorizationResult:
    """Best rank-one operator-Schmidt factor sigma (x) rho across the logical/junk cut.

    residual is the ratio of the second to the first operator-Schmidt value;
    rho is returned with unit trace and PSD orientation, sigma carries the scale.
    """
    D, Dj = state.D, state.Dj
    m = state.rho.reshape(D, Dj, D, Dj).transpose(0, 2, 1, 3).reshape(D * D, Dj * Dj)
    u, s, vh = np.linalg.svd(m)
    residual = float(s[1] / s[0]) if len(s) > 1 and s[0] > 0 else 0.0
    sigma = s[0] * u[:, 0].reshape(D, D)
    rho_j = vh[0, :].reshape(Dj, Dj)
    tr = np.trace(rho_j)
    if abs(tr) > 1e-14:
        sigma = sigma * tr
        rho_j = rho_j / tr
    sigma = (sigma + sigma.conj().T) / 2
    rho_j = (rho_j + rho_j.conj().T) / 2
    return FactorizationResult(sigma=sigma, rho_junk=rho_j, residual=residual)


def nu_export(point: PhasePoint) -> dict:
    """JSON-ready {"nu": [[re, im], ...], "delta": float, "xi": float}."""
    nu = nu_matrix(point)
    xi = correlation_length(point)
    return {
        "nu": [[[float(v.real), float(v.imag)] for v in row] for row in nu.nu],
        "delta": nu.delta,
        "xi": xi,
    }
