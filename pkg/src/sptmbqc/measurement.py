"""Projective measurement of logical observables via accumulated weak measurements.

A tilted basis at finite angle alpha reweights the eigencomponents of the pair
observable C = C_i^-1 C_j by filter functions; accumulating the filters over
many sites concentrates the state on one eigenphase, at the Born-rule rate.

Phase conventions: with nu_ji = |nu_ji| exp(-i delta), the outcome-i filter is
f_i = nu_ii cos^2(a) + nu_jj sin^2(a) + |nu_ji| sin(2a) cos(phi - delta - beta),
so the count-based estimator returns cos(phi - delta - beta); the beta = 0 and
beta = pi/2 sequences therefore estimate cos(phi - delta) and sin(phi - delta),
and phi_hat = arg(cos_est + i sin_est) + delta.  (Validated against the dense
oracle; see tests.)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import gates
from .channel import (
    FixedPoint,
    NuMatrix,
    VirtualState,
    default_wire_length,
    fixed_point,
    junk_channel,
    nu_matrix,
    unvec,
    vec,
)
from .errors import ClosureTooSmall, ValidationError, ZeroOffDiagonal
from .model import PhasePoint

OUT_OF_RANGE_SLACK = 0.05


class BasisVariant(enum.Enum):
    REAL = "real"        # beta = 0, estimates cos(phi - delta)
    IMAG = "imag"        # beta = pi/2, estimates sin(phi - delta)
    GENERAL = "general"  # explicit beta


@dataclass(frozen=True)
class MeasurementBasis:
    pair: tuple[int, int]
    alpha: float
    variant: BasisVariant = BasisVariant.REAL
    beta: float = 0.0

    @property
    def effective_beta(self) -> float:
        if self.variant is BasisVariant.REAL:
            return 0.0
        if self.variant is BasisVariant.IMAG:
            return np.pi / 2
        return self.beta

    def matrix(self, d: int) -> np.ndarray:
        return gates.basis_matrix(d, self.pair, self.alpha, self.effective_beta)


@dataclass(frozen=True)
class PairFilter:
    """The three numbers that drive one pair's filter functions."""

    nu_ii: float
    nu_jj: float
    nu_ji: complex
    rest: float = 0.0  # total weight of outcomes outside the pair

    @classmethod
    def from_nu(cls, nu: NuMatrix, pair: tuple[int, int]) -> "PairFilter":
        i, j = pair
        rest = float(sum(nu.nu[k, k].real for k in range(nu.d) if k not in pair))
        return cls(nu_ii=float(nu.nu[i, i].real), nu_jj=float(nu.nu[j, j].real),
                   nu_ji=complex(nu.nu[j, i]), rest=rest)

    @property
    def delta(self) -> float:
        return float(-np.angle(self.nu_ji)) if abs(self.nu_ji) > 0 else 0.0


def _pair_filter(nu, pair) -> PairFilter:
    if isinstance(nu, PairFilter):
        return nu
    return PairFilter.from_nu(nu, pair)


def filter_values(params: PairFilter, alpha: float, beta: float, phi) -> tuple[np.ndarray, np.ndarray]:
    """(f_0, f_1) evaluated at eigenphase(s) phi."""
    phi = np.asarray(phi, dtype=float)
    ca2, sa2 = np.cos(alpha) ** 2, np.sin(alpha) ** 2
    cross = abs(params.nu_ji) * np.sin(2 * alpha) * np.cos(phi - params.delta - beta)
    f0 = params.nu_ii * ca2 + params.nu_jj * sa2 + cross
    f1 = params.nu_ii * sa2 + params.nu_jj * ca2 - cross
    return f0, f1


def filter_function(nu, basis: MeasurementBasis, outcome: int, phi: float) -> float:
    """Diagonal filter value f_outcome(phi, phi) for one weak measurement."""
    params = _pair_filter(nu, basis.pair)
    if outcome == basis.pair[0]:
        return float(filter_values(params, basis.alpha, basis.effective_beta, phi)[0])
    if outcome == basis.pair[1]:
        return float(filter_values(params, basis.alpha, basis.effective_beta, phi)[1])
    if isinstance(nu, PairFilter):
        raise ValidationError("outcomes outside the pair need the full nu matrix")
    return float(nu.nu[outcome, outcome].real)


def accumulated_filter(nu, alpha: float, N0: int, N1: int, phi_grid,
                       pair: tuple[int, int] = (0, 1), beta: float = 0.0) -> np.ndarray:
    """Max-normalized F(phi) = f_0^N0 f_1^N1 on the grid."""
    if N0 < 0 or N1 < 0:
        raise ValidationError("N0 and N1 must be non-negative")
    params = _pair_filter(nu, pair)
    f0, f1 = filter_values(params, alpha, beta, np.asarray(phi_grid))
    curve = f0 ** N0 * f1 ** N1
    peak = np.max(np.abs(curve))
    return curve / peak if peak > 0 else np.ones_like(curve)


def filter_peak_width(curve: np.ndarray, phi_grid: np.ndarray) -> float:
    """Full width at half maximum of a max-normalized curve, by grid crossing."""
    above = curve >= 0.5
    if not np.any(above):
        return 0.0
    return float(np.sum(above) * (phi_grid[1] - phi_grid[0]))


def mcos_estimate(params: PairFilter, alpha: float, N0: int, N1: int) -> float:
    """Count-based estimate of cos(phi - delta - beta) from pair-outcome frequencies."""
    total = N0 + N1
    if total == 0:
        return np.nan
    s2, c2 = np.sin(alpha) ** 2, np.cos(alpha) ** 2
    s2a = np.sin(2 * alpha)
    num = s2 * (N0 * params.nu_ii - N1 * params.nu_jj) + c2 * (N0 * params.nu_jj - N1 * params.nu_ii)
    return float(num / (s2a * total * abs(params.nu_ji)))


def wrap_angle(x: float) -> float:
    """Wrap to (-pi, pi]."""
    w = float((x + np.pi) % (2 * np.pi) - np.pi)
    return np.pi if w == -np.pi else w


# ---------------------------------------------------------------------------
# full virtual-space weak measurement

@dataclass
class WeakStepEngine:
    """Cached per-outcome virtual operators and wire power for repeated steps."""

    point: PhasePoint
    ops: list[np.ndarray]
    wire_power: np.ndarray

    @classmethod
    def build(cls, point: PhasePoint, basis: MeasurementBasis, wire_n: int | None = None) -> "WeakStepEngine":
        if wire_n is None:
            wire_n = default_wire_length(point)
        ops = gates.step_virtual_ops(point, basis.pair, basis.alpha, basis.effective_beta)
        wire_power = np.linalg.matrix_power(gates.wire_superop(point), wire_n)
        return cls(point=point, ops=ops, wire_power=wire_power)

    def outcome_states(self, state: VirtualState) -> list[np.ndarray]:
        """Unnormalized post-step virtual states, one per outcome (wire applied)."""
        out = []
        for op in self.ops:
            raw = op @ state.rho @ op.conj().T
            out.append(unvec(self.wire_power @ vec(raw)))
        return out


def weak_measure_step(
    state: VirtualState,
    point: PhasePoint,
    nu: NuMatrix,
    basis: MeasurementBasis,
    rng: np.random.Generator,
    engine: WeakStepEngine | None = None,
) -> tuple[int, VirtualState]:
    """Sample one weak-measurement outcome from the exact per-outcome channel traces."""
    if engine is None:
        engine = WeakStepEngine.build(point, basis)
    outs = engine.outcome_states(state)
    probs = np.array([max(np.trace(o).real, 0.0) for o in outs])
    probs = probs / probs.sum()
    k = int(np.searchsorted(np.cumsum(probs), rng.random()))
    k = min(k, point.d - 1)
    rho = outs[k] / np.trace(outs[k]).real
    return k, VirtualState(rho, state.D, state.Dj)


@dataclass
class MeasurementResult:
    counts: tuple[int, int, int]                  # (N_0, N_1, N_rest) over all steps
    counts_real: tuple[int, int]
    counts_imag: tuple[int, int]
    cos_estimate: float
    sin_estimate: float
    phi_hat: float
    matched_eigenphase: float
    matched_index: int
    out_of_range: bool
    post_state: VirtualState | None
    n_m: int


def interpret_counts(params: PairFilter, alpha: float, counts_real, counts_imag, eigenphases) -> dict:
    cos_est = mcos_estimate(params, alpha, *counts_real)
    sin_est = mcos_estimate(params, alpha, *counts_imag)
    out_of_range = bool(
        np.isnan(cos_est) or np.isnan(sin_est)
        or abs(cos_est) > 1 + OUT_OF_RANGE_SLACK or abs(sin_est) > 1 + OUT_OF_RANGE_SLACK
    )
    if np.isnan(cos_est) or np.isnan(sin_est):
        phi_hat = np.nan
        matched = 0
    else:
        phi_hat = wrap_angle(np.arctan2(sin_est, cos_est) + params.delta)
        matched = int(np.argmin(np.abs(np.angle(np.exp(1j * (np.asarray(eigenphases) - phi_hat))))))
    return {
        "cos_estimate": float(np.clip(cos_est, -1 - OUT_OF_RANGE_SLACK, 1 + OUT_OF_RANGE_SLACK))
        if not np.isnan(cos_est) else np.nan,
        "sin_estimate": float(np.clip(sin_est, -1 - OUT_OF_RANGE_SLACK, 1 + OUT_OF_RANGE_SLACK))
        if not np.isnan(sin_est) else np.nan,
        "phi_hat": phi_hat,
        "matched_index": matched,
        "out_of_range": out_of_range,
    }


def measure_observable(
    state,
    point: PhasePoint,
    nu: NuMatrix,
    pair: tuple[int, int],
    n_m: int,
    alpha: float,
    rng: np.random.Generator,
    wire_n: int | None = None,
    fix: FixedPoint | None = None,
) -> MeasurementResult:
    """Accumulated weak measurement: n_m/2 steps at beta=0, n_m/2 at beta=pi/2.

    `state` may be a logical density matrix (tensored with the junk fixed point)
    or a VirtualState.
    """
    if n_m < 2:
        raise ValidationError("n_m must be >= 2")
    if fix is None:
        fix = fixed_point(junk_channel(point))
    if isinstance(state, VirtualState):
        virt = state
    else:
        virt = VirtualState.product(np.asarray(state, dtype=complex), fix.rho)
    params = PairFilter.from_nu(nu, pair)
    eigenphases, _ = gates.eigenphase_groups(gates.pair_operator(point, pair))

    halves = [
        (BasisVariant.REAL, n_m // 2),
        (BasisVariant.IMAG, n_m - n_m // 2),
    ]
    seg_counts = []
    rest = 0
    for variant, steps in halves:
        basis = MeasurementBasis(pair=pair, alpha=alpha, variant=variant)
        engine = WeakStepEngine.build(point, basis, wire_n)
        n0 = n1 = 0
        for _ in range(steps):
            k, virt = weak_measure_step(virt, point, nu, basis, rng, engine)
            if k == pair[0]:
                n0 += 1
            elif k == pair[1]:
                n1 += 1
            else:
                rest += 1
        seg_counts.append((n0, n1))
    interp = interpret_counts(params, alpha, seg_counts[0], seg_counts[1], eigenphases)
    n0_tot = seg_counts[0][0] + seg_counts[1][0]
    n1_tot = seg_counts[0][1] + seg_counts[1][1]
    return MeasurementResult(
        counts=(n0_tot, n1_tot, rest),
        counts_real=seg_counts[0],
        counts_imag=seg_counts[1],
        matched_eigenphase=float(eigenphases[interp["matched_index"]]),
        post_state=virt,
        n_m=n_m,
        **interp,
    )


def measure_observable_tuned(
    state,
    point: PhasePoint,
    nu: NuMatrix,
    pair: tuple[int, int],
    n_m: int,
    alpha: float,
    rng: np.random.Generator,
    coarse_fraction: float = 0.1,
    wire_n: int | None = None,
    fix: FixedPoint | None = None,
) -> MeasurementResult:
    """Two-phase estimator: a coarse phase estimate, then a tuned-beta sequence.

    The first coarse_fraction of the steps runs the standard two-basis
    protocol; the remainder measures at beta* = phi_coarse - delta - pi/2,
    where the count estimator has maximal phase sensitivity.  The final angle
    is beta* + delta + arccos(m), with the arccos branch fixed by the coarse
    estimate.
    """
    if fix is None:
        fix = fixed_point(junk_channel(point))
    n_coarse = max(int(np.ceil(coarse_fraction * n_m)), 4)
    n_fine = n_m - n_coarse
    coarse = measure_observable(state, point, nu, pair, n_coarse, alpha, rng,
                                wire_n=wire_n, fix=fix)
    if np.isnan(coarse.phi_hat) or n_fine < 1:
        return coarse
    params = PairFilter.from_nu(nu, pair)
    eigenphases, _ = gates.eigenphase_groups(gates.pair_operator(point, pair))
    beta_star = coarse.phi_hat - params.delta - np.pi / 2
    basis = MeasurementBasis(pair=pair, alpha=alpha, variant=BasisVariant.GENERAL, beta=beta_star)
    engine = WeakStepEngine.build(point, basis, wire_n)
    virt = coarse.post_state
    n0 = n1 = rest = 0
    for _ in range(n_fine):
        k, virt = weak_measure_step(virt, point, nu, basis, rng, engine)
        if k == pair[0]:
            n0 += 1
        elif k == pair[1]:
            n1 += 1
        else:
            rest += 1
    m_est = mcos_estimate(params, alpha, n0, n1)
    out_of_range = bool(np.isnan(m_est) or abs(m_est) > 1 + OUT_OF_RANGE_SLACK)
    if np.isnan(m_est):
        return coarse
    x = np.arccos(np.clip(m_est, -1.0, 1.0))
    candidates = [wrap_angle(beta_star + params.delta + x),
                  wrap_angle(beta_star + params.delta - x)]
    phi_hat = min(candidates, key=lambda p: abs(np.angle(np.exp(1j * (p - coarse.phi_hat)))))
    matched = int(np.argmin(np.abs(np.angle(np.exp(1j * (eigenphases - phi_hat))))))
    return MeasurementResult(
        counts=(coarse.counts[0] + n0, coarse.counts[1] + n1, coarse.counts[2] + rest),
        counts_real=coarse.counts_real,
        counts_imag=coarse.counts_imag,
        cos_estimate=coarse.cos_estimate,
        sin_estimate=coarse.sin_estimate,
        phi_hat=phi_hat,
        matched_eigenphase=float(eigenphases[matched]),
        matched_index=matched,
        out_of_range=out_of_range or coarse.out_of_range,
        post_state=virt,
        n_m=n_m,
    )


# ---------------------------------------------------------------------------
# diagonal filter dynamics (vectorized over trials)
#
# In the eigenbasis of C the diagonal populations close on themselves under
# weak measurement (the off-diagonals never feed back into outcome statistics),
# so Born sampling reduces to multiplying populations by filter values.  This
# is exact in the fixed-point regime and is cross-checked against the full
# virtual-space sampler in the tests.

def filter_trajectories(
    params: PairFilter,
    eigenphases: np.ndarray,
    populations: np.ndarray,
    schedule: list[tuple[int, float]],
    trials: int,
    alpha: float,
    rng: np.random.Generator,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Sample weak-measurement records for many trials at once.

    schedule is a list of (steps, beta) segments.  Returns per-segment count
    arrays of shape (trials, 2) and the final populations (trials, m).
    """
    pops = np.tile(np.asarray(populations, dtype=float), (trials, 1))
    pops /= pops.sum(axis=1, keepdims=True)
    seg_counts = []
    for steps, beta in schedule:
        f0, f1 = filter_values(params, alpha, beta, eigenphases)
        counts = np.zeros((trials, 2), dtype=np.int64)
        for _ in range(steps):
            w0 = pops @ f0
            w1 = pops @ f1
            total = w0 + w1 + params.rest
            p0 = w0 / total
            p1 = w1 / total
            r = rng.random(trials)
            take0 = r < p0
            take1 = (~take0) & (r < p0 + p1)
            counts[take0, 0] += 1
            counts[take1, 1] += 1
            pops[take0] *= f0
            pops[take1] *= f1
            pops /= pops.sum(axis=1, keepdims=True)
        seg_counts.append(counts)
    return seg_counts, pops


@dataclass
class BornReport:
    eigenphases: np.ndarray
    frequencies: np.ndarray
    born_reference: np.ndarray
    binomial_sigma: np.ndarray
    trials: int


def born_statistics(
    sigma: np.ndarray,
    point: PhasePoint,
    nu: NuMatrix,
    pair: tuple[int, int],
    trials: int,
    n_m: int,
    rng: np.random.Generator,
    alpha: float = np.pi / 4,
    method: str = "filter",
    fix: FixedPoint | None = None,
) -> BornReport:
    """Empirical distribution of measurement outcomes over fresh copies of sigma."""
    C = gates.pair_operator(point, pair)
    eigenphases, projectors = gates.eigenphase_groups(C)
    born = np.array([np.trace(p @ sigma).real for p in projectors])
    params = PairFilter.from_nu(nu, pair)
    if method == "filter":
        pops = np.array([max(b, 0.0) for b in born])
        schedule = [(n_m // 2, 0.0), (n_m - n_m // 2, np.pi / 2)]
        seg_counts, _ = filter_trajectories(params, eigenphases, pops, schedule, trials, alpha, rng)
        matched = np.empty(trials, dtype=int)
        for t in range(trials):
            interp = interpret_counts(params, alpha, tuple(seg_counts[0][t]), tuple(seg_counts[1][t]), eigenphases)
            matched[t] = interp["matched_index"]
    elif method == "virtual":
        if fix is None:
            fix = fixed_point(junk_channel(point))
        matched = np.empty(trials, dtype=int)
        for t in range(trials):
            res = measure_observable(sigma, point, nu, pair, n_m, alpha, rng, fix=fix)
            matched[t] = res.matched_index
    else:
        raise ValueError("method must be 'filter' or 'virtual'")
    freqs = np.bincount(matched, minlength=len(eigenphases)) / trials
    sig = np.sqrt(np.clip(born * (1 - born), 0, None) / trials)
    return BornReport(eigenphases=eigenphases, frequencies=freqs, born_reference=born,
                      binomial_sigma=sig, trials=trials)


# ---------------------------------------------------------------------------
# initialization

@dataclass
class InitializationResult:
    state: np.ndarray
    measured_index: int
    target_index: int
    fidelity: float
    correction: gates.GateProgram


def initialize(
    state,
    point: PhasePoint,
    nu: NuMatrix,
    pair: tuple[int, int],
    target_index: int,
    rng: np.random.Generator,
    n_m: int = 3200,
    budget: float = 5e-3,
    alpha: float = np.pi / 4,
    fix: FixedPoint | None = None,
) -> InitializationResult:
    """Measure the pair observable, then rotate the obtained eigenstate onto the target."""
    if fix is None:
        fix = fixed_point(junk_channel(point))
    C = gates.pair_operator(point, pair)
    eigenphases, projectors = gates.eigenphase_groups(C)
    if target_index >= len(eigenphases):
        raise ValidationError(f"target_index {target_index} out of range")
    result = measure_observable(state, point, nu, pair, n_m, alpha, rng, fix=fix)
    sigma = result.post_state.logical_state()
    sigma = sigma / np.trace(sigma).real
    i = result.matched_index
    if i == target_index:
        program = gates.GateProgram(())
    else:
        if point.D != 2:
            raise ClosureTooSmall("compiled corrections are only available for qubit logical spaces")
        vt = _principal(projectors[target_index])
        vi = _principal(projectors[i])
        correction = np.outer(vt, vi.conj()) + np.outer(vi, vt.conj())
        compiled = gates.compile_su2(correction, point, nu, budget)
        program = compiled.program
        sigma = gates.compose_program(point, nu, program, fix=fix).apply(sigma)
    fid = float(np.trace(projectors[target_index] @ sigma).real)
    return InitializationResult(state=sigma, measured_index=i, target_index=target_index,
                                fidelity=fid, correction=program)


def _principal(projector: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(projector)
    return v[:, -1]


# ---------------------------------------------------------------------------
# measurement cost and the nu self-test

def measurement_cost(nu, Delta: float, epsilon: float, pair: tuple[int, int] = (0, 1)) -> int:
    """Steps for eigenphase resolution epsilon*Delta: ceil of (nu_ii+nu_jj) / ((4 eps Delta)^2 |nu_ji|^2)."""
    if Delta <= 0 or epsilon <= 0:
        raise ValidationError("Delta and epsilon must be positive")
    params = _pair_filter(nu, pair)
    if abs(params.nu_ji) < 1e-12:
        raise ZeroOffDiagonal(f"|nu_{pair[1]}{pair[0]}| < 1e-12; this fine-tuned point cannot be measured")
    value = (params.nu_ii + params.nu_jj) / ((4 * epsilon * Delta) ** 2 * abs(params.nu_ji) ** 2)
    return int(np.ceil(value))


@dataclass
class NuEstimate:
    diag: np.ndarray
    diag_sigma: np.ndarray
    abs_nu10: float
    abs_nu10_sigma: float
    delta_mod_pi: float
    diag_truth: np.ndarray
    abs_nu10_truth: float
    betas: np.ndarray
    flip_probabilities: np.ndarray


def estimate_nu(
    point: PhasePoint,
    samples: int,
    rng: np.random.Generator,
    alpha_probe: float = 3.0,
    n_probe: int = 40000,
    betas=(0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4),
    fix: FixedPoint | None = None,
) -> NuEstimate:
    """Self-test of the nu matrix from measurement statistics alone.

    Diagonals come from wire-basis outcome frequencies (each step is an
    independent categorical draw with probabilities nu_kk).  |nu_10| and the
    phase (mod pi) come from rotation-angle fits: rotations about the
    pair-(0,1) axis at several beta values change the populations of the
    complementary observable by sin^2(2 alpha |nu_10| sin(beta + delta)).
    Born draws use the exact channel probabilities.
    """
    if fix is None:
        fix = fixed_point(junk_channel(point))
    nu_true = nu_matrix(point, fix)
    d = point.d
    p_diag = np.array([np.trace(fix.ell @ b @ fix.rho @ b.conj().T).real for b in point.B])
    p_diag = np.clip(p_diag, 0, None)
    p_diag /= p_diag.sum()
    n_diag = max(samples // 2, 1)
    counts = rng.multinomial(n_diag, p_diag)
    diag_est = counts / n_diag
    diag_sigma = np.sqrt(np.clip(diag_est * (1 - diag_est), 0, None) / n_diag)

    # complementary axis: an available Pauli direction that anticommutes with pair (0,1)
    axes = gates.available_axes(point, nu_true)
    c_meas = gates.pair_operator(point, (0, 1))
    probe_axis = None
    for ax in axes.values():
        cand = gates.pair_operator(point, ax.pair)
        if np.linalg.norm(cand @ c_meas + c_meas @ cand) < 1e-8:
            probe_axis = ax
            break
    if probe_axis is None:
        raise ClosureTooSmall("no anticommuting probe axis available for the off-diagonal self-test")
    _, projectors = gates.eigenphase_groups(gates.pair_operator(point, probe_axis.pair))
    ref = _principal(projectors[0])
    sigma_ref = np.outer(ref, ref.conj())

    betas = np.asarray(betas, dtype=float)
    per_beta = max((samples - n_diag) // len(betas), 100)
    flips = np.empty(len(betas))
    for b_idx, beta in enumerate(betas):
        fr = gates.finite_rotation(point, nu_true, (0, 1), alpha_probe, beta, n_probe, fix=fix)
        sigma_rot = fr.channel.apply(sigma_ref)
        p_flip = float(np.clip(1.0 - np.trace(projectors[0] @ sigma_rot).real, 0, 1))
        flips[b_idx] = rng.binomial(per_beta, p_flip) / per_beta

    def model_fn(params):
        a, psi = params
        return np.sin(a * np.sin(betas + psi)) ** 2 - flips

    best = None
    for psi0 in np.linspace(-np.pi, np.pi, 9):
        res = scipy.optimize.least_squares(model_fn, x0=[2 * alpha_probe * 0.2, psi0])
        if best is None or res.cost < best.cost:
            best = res
    a_hat = abs(best.x[0])
    abs_nu10 = a_hat / (2 * alpha_probe)
    # rough 1-sigma from the fit jacobian and binomial noise
    sig_p = np.sqrt(np.maximum(flips * (1 - flips), 1e-9) / per_beta)
    jac = best.jac
    try:
        cov = np.linalg.inv(jac.T @ jac) * np.mean(sig_p ** 2)
        a_sigma = float(np.sqrt(abs(cov[0, 0])))
    except np.linalg.LinAlgError:
        a_sigma = np.nan
    return NuEstimate(
        diag=diag_est,
        diag_sigma=diag_sigma,
        abs_nu10=float(abs_nu10),
        abs_nu10_sigma=float(a_sigma / (2 * alpha_probe)),
        delta_mod_pi=float(best.x[1] % np.pi),
        diag_truth=np.array([nu_true.nu[k, k].real for k in range(d)]),
        abs_nu10_truth=float(abs(nu_true.nu[1, 0])),
        betas=betas,
        flip_probabilities=flips,
    )
