"""Dense state-vector simulator of the physical chain, for cross-validation.

Everything the channel and trajectory engines compute on the bond space is
recomputed here by explicit amplitude enumeration on the d^n-dimensional
physical Hilbert space (times the bond space for the state with a physical
right boundary).  Flat string indices put site 1 in the most significant
digit.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from . import gates
from .channel import reverse_full_channel, unvec, vec
from .errors import SizeCapExceeded, ValidationError
from .model import PhasePoint

DEFAULT_CAP = 1 << 18
HARD_CAP = 1 << 26


class OracleMode(enum.Enum):
    PHI = "phi"              # <R| contracted: amplitudes over strings only
    PHI_TILDE = "phi_tilde"  # physical right boundary: one bond-space vector per string


@dataclass
class DenseResource:
    point: PhasePoint
    n: int
    mode: OracleMode
    L: np.ndarray
    R: np.ndarray | None
    amps: np.ndarray     # shape (d,)*n (+ (Db,) in PHI_TILDE mode), unit norm
    kappa: float         # normalization constant applied


def build_state_vector(
    point: PhasePoint,
    n: int,
    mode: OracleMode = OracleMode.PHI_TILDE,
    L: np.ndarray | None = None,
    R: np.ndarray | None = None,
    cap: int = DEFAULT_CAP,
) -> DenseResource:
    """Explicit amplitudes A[i_n]...A[i_1]|L> (contracted with <R| in PHI mode)."""
    d, Db = point.d, point.Db
    count = d ** n * (Db if mode is OracleMode.PHI_TILDE else 1)
    if count > HARD_CAP:
        raise SizeCapExceeded(f"{count} amplitudes exceed the hard cap {HARD_CAP}")
    if count > cap:
        raise SizeCapExceeded(f"{count} amplitudes exceed the configured cap {cap}")
    if L is None:
        L = np.zeros(Db, dtype=complex)
        L[0] = 1.0
    L = np.asarray(L, dtype=complex).reshape(Db)
    tensors = np.stack(point.site_tensors())
    amps = L.copy()
    for _ in range(n):
        amps = np.einsum("...b,iab->...ia", amps, tensors)
    if mode is OracleMode.PHI:
        if R is None:
            raise ValidationError("PHI mode needs a right boundary vector")
        R = np.asarray(R, dtype=complex).reshape(Db)
        amps = amps @ R.conj()
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValidationError("resource state has zero norm")
    return DenseResource(point=point, n=n, mode=mode, L=L, R=R,
                         amps=amps / norm, kappa=1.0 / norm)


def _apply_site_basis(amps: np.ndarray, U: np.ndarray, axis: int) -> np.ndarray:
    """Rotate one site's amplitudes into the measurement basis (coefficients <b_k|i>)."""
    out = np.tensordot(amps, U.conj(), axes=(axis, 0))
    return np.moveaxis(out, -1, axis)


def byproduct_products(point: PhasePoint, n: int) -> np.ndarray:
    """Sigma(s) = C_{s_n} ... C_{s_1} for every string, flat order (site 1 most significant)."""
    d, D = point.d, point.D
    sig = np.eye(D, dtype=complex)[None, :, :]
    for _ in range(n):
        sig = np.stack([np.einsum("ab,sbc->sac", point.C[s], sig) for s in range(d)], axis=1)
        sig = sig.reshape(-1, D, D)
    return sig


def junk_products(point: PhasePoint, n: int) -> np.ndarray:
    """prod_k B_{s_k} in the same flat order."""
    d, Dj = point.d, point.Dj
    prod = np.eye(Dj, dtype=complex)[None, :, :]
    for _ in range(n):
        prod = np.stack([np.einsum("ab,sbc->sac", point.B[s], prod) for s in range(d)], axis=1)
        prod = prod.reshape(-1, Dj, Dj)
    return prod


@dataclass
class OracleResult:
    q: np.ndarray                       # joint outcome-string distribution, shape (d^n,)
    boundary_states: np.ndarray | None  # reversed, unnormalized rows (d^n, Db); PHI_TILDE only
    joint: np.ndarray | None            # q_A(s, o) when a boundary observable is given
    observable_eigenvalues: np.ndarray | None
    samples: np.ndarray | None          # sampled (string, outcome) pairs


def simulate_measurements(
    resource: DenseResource,
    site_bases: list[np.ndarray | None],
    reverse_byproduct: bool = False,
    boundary_observable: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    samples: int = 0,
) -> OracleResult:
    """Exact joint outcome distribution (and per-record boundary data) by enumeration.

    site_bases holds one d x d basis-column unitary per site (None = wire
    basis).  With reverse_byproduct the record-dependent Sigma(s)^-1 is applied
    to the logical factor of the boundary system; the boundary observable is a
    Hermitian operator on the logical space, measured as P_o (x) I_junk.
    """
    point, n = resource.point, resource.n
    if len(site_bases) != n:
        raise ValidationError(f"expected {n} site bases, got {len(site_bases)}")
    amps = resource.amps
    for k, U in enumerate(site_bases):
        if U is not None:
            amps = _apply_site_basis(amps, np.asarray(U, dtype=complex), k)
    if resource.mode is OracleMode.PHI:
        q = np.abs(amps.reshape(-1)) ** 2
        return OracleResult(q=q, boundary_states=None, joint=None,
                            observable_eigenvalues=None,
                            samples=_sample_strings(q, rng, samples))
    rows = amps.reshape(-1, point.Db)
    q = np.einsum("sb,sb->s", rows, rows.conj()).real
    if reverse_byproduct:
        sig = byproduct_products(point, n)
        rows6 = rows.reshape(-1, point.D, point.Dj)
        rows = np.einsum("sba,sbj->saj", sig.conj(), rows6).reshape(-1, point.Db)
    joint = None
    eigvals = None
    if boundary_observable is not None:
        obs = np.asarray(boundary_observable, dtype=complex)
        w, v = np.linalg.eigh(obs)
        groups: list[list[int]] = [[0]]
        for i in range(1, len(w)):
            if abs(w[i] - w[groups[-1][0]]) < 1e-10:
                groups[-1].append(i)
            else:
                groups.append([i])
        eigvals = np.array([w[g[0]] for g in groups])
        joint = np.empty((rows.shape[0], len(groups)))
        rows6 = rows.reshape(-1, point.D, point.Dj)
        for o, g in enumerate(groups):
            p = v[:, g] @ v[:, g].conj().T
            proj_rows = np.einsum("ab,sbj->saj", p, rows6)
            joint[:, o] = np.einsum("saj,saj->s", proj_rows, proj_rows.conj()).real
    smp = None
    if samples > 0:
        if rng is None:
            raise ValidationError("sampling requires an rng")
        strs = rng.choice(len(q), size=samples, p=q / q.sum())
        if joint is not None:
            outs = np.empty(samples, dtype=int)
            for i, s in enumerate(strs):
                p = np.clip(joint[s], 0, None)
                outs[i] = rng.choice(joint.shape[1], p=p / p.sum())
            smp = np.stack([strs, outs], axis=1)
        else:
            smp = strs[:, None]
    return OracleResult(q=q, boundary_states=rows, joint=joint,
                        observable_eigenvalues=eigvals, samples=smp)


def _sample_strings(q, rng, samples):
    if samples <= 0:
        return None
    if rng is None:
        raise ValidationError("sampling requires an rng")
    return rng.choice(len(q), size=samples, p=q / q.sum())[:, None]


def marginal_over_tail(q_full: np.ndarray, d: int, n: int, measured: int) -> np.ndarray:
    """Marginal of the leading `measured` sites when the trailing sites are traced out."""
    return q_full.reshape(d ** measured, -1).sum(axis=1)


# ---------------------------------------------------------------------------
# conformance scenarios: the same physics through the dense and bond-space engines

def _wire_bases(n: int) -> list[None]:
    return [None] * n


def _channel_wire_state(point: PhasePoint, L: np.ndarray, n: int) -> np.ndarray:
    """I (x) L^n applied to |L><L| via per-site corrected actions (bond-space path)."""
    tau = np.outer(L, L.conj())
    ident = np.eye(point.D)
    for _ in range(n):
        tau = sum(np.kron(ident, b) @ tau @ np.kron(ident, b).conj().T for b in point.B)
    return tau / np.trace(tau).real


def scenario_wire(point: PhasePoint, n: int, l: np.ndarray, j: np.ndarray) -> dict:
    """Procedures I/II/III on an n-site wire with a product boundary, both engines."""
    L = np.kron(l, j)
    res = build_state_vector(point, n, OracleMode.PHI_TILDE, L=L)
    plain = simulate_measurements(res, _wire_bases(n))
    rev = simulate_measurements(res, _wire_bases(n), reverse_byproduct=True)

    # Procedure III: path-summed boundary state equals I (x) L^n (|L><L|)
    rows = rev.boundary_states
    tau_oracle = rows.T @ rows.conj()
    tau_oracle /= np.trace(tau_oracle).real
    tau_chan = _channel_wire_state(point, L, n)
    dev_p3 = float(np.max(np.abs(tau_oracle - tau_chan)))

    # Procedure II: per-record reversed logical state is record-independent
    rows6 = rev.boundary_states.reshape(-1, point.D, point.Dj)
    logicals = np.einsum("saj,sbj->sab", rows6, rows6.conj())
    logicals = logicals / np.einsum("saa->s", logicals)[:, None, None]
    dev_p2 = float(np.max(np.abs(logicals - logicals[0])))

    # Procedure I marginal against the product-boundary junk-norm formula
    jp = junk_products(point, n)
    q_formula = np.einsum("sab,b,sac,c->s", jp, j, jp.conj(), j.conj()).real
    q_formula = q_formula / q_formula.sum()
    dev_q = float(np.max(np.abs(plain.q / plain.q.sum() - q_formula)))
    return {"procedure_iii_state": dev_p3, "procedure_ii_invariance": dev_p2,
            "wire_marginal_formula": dev_q}


def scenario_gate_step(point: PhasePoint, n: int, L: np.ndarray, pair, dalpha: float, beta: float) -> dict:
    """One tilted site + (n-1)-site wire with reversal, path-summed, both engines."""
    res = build_state_vector(point, n, OracleMode.PHI_TILDE, L=L)
    bases = [gates.basis_matrix(point.d, pair, np.arctan(dalpha), beta)] + [None] * (n - 1)
    rev = simulate_measurements(res, bases, reverse_byproduct=True)
    rows = rev.boundary_states
    tau_oracle = rows.T @ rows.conj()
    tau_oracle /= np.trace(tau_oracle).real

    ops = gates.step_virtual_ops(point, pair, np.arctan(dalpha), beta)
    tau0 = np.outer(L, L.conj())
    x = sum(op @ tau0 @ op.conj().T for op in ops)
    wire = np.linalg.matrix_power(gates.wire_superop(point), n - 1)
    tau_chan = unvec(wire @ vec(x))
    tau_chan /= np.trace(tau_chan).real
    return {"gate_step_state": float(np.max(np.abs(tau_oracle - tau_chan)))}


def scenario_weak_step(point: PhasePoint, n: int, L: np.ndarray, pair, alpha: float, beta: float) -> dict:
    """Per-outcome probabilities and post states of one finite-angle site, both engines."""
    res = build_state_vector(point, n, OracleMode.PHI_TILDE, L=L)
    bases = [gates.basis_matrix(point.d, pair, alpha, beta)] + [None] * (n - 1)
    rev = simulate_measurements(res, bases, reverse_byproduct=True)
    d = point.d
    q_k = rev.q.reshape(d, -1).sum(axis=1)
    rows = rev.boundary_states.reshape(d, -1, point.Db)

    ops = gates.step_virtual_ops(point, pair, alpha, beta)
    tau0 = np.outer(L, L.conj())
    wire = np.linalg.matrix_power(gates.wire_superop(point), n - 1)
    dev_p = 0.0
    dev_state = 0.0
    p_chan = np.empty(d)
    for k in range(d):
        xk = unvec(wire @ vec(ops[k] @ tau0 @ ops[k].conj().T))
        p_chan[k] = np.trace(xk).real
        tau_k = rows[k].T @ rows[k].conj()
        if np.trace(tau_k).real > 1e-14:
            dev_state = max(dev_state, float(np.max(np.abs(
                tau_k / np.trace(tau_k).real - xk / np.trace(xk).real))))
    dev_p = float(np.max(np.abs(q_k / q_k.sum() - p_chan / p_chan.sum())))
    return {"weak_step_probs": dev_p, "weak_step_states": dev_state}


def scenario_appendix_a(point: PhasePoint, n: int, l: np.ndarray, j: np.ndarray,
                        observable: np.ndarray, rng: np.random.Generator,
                        samples: int = 10_000) -> dict:
    """Joint law q_A(s, o) = q(s) p_A(o|s) with p_A independent of s, plus sampling."""
    L = np.kron(l, j)
    res = build_state_vector(point, n, OracleMode.PHI_TILDE, L=L)
    out = simulate_measurements(res, _wire_bases(n), reverse_byproduct=True,
                                boundary_observable=observable, rng=rng, samples=samples)
    cond = out.joint / out.q[:, None]
    dev_cond = float(np.max(np.abs(cond - cond[0])))
    w, v = np.linalg.eigh(observable)
    p_born = np.empty(out.joint.shape[1])
    groups = _eig_groups(w)
    for o, g in enumerate(groups):
        p = v[:, g] @ v[:, g].conj().T
        p_born[o] = (l.conj() @ p @ l).real
    dev_born = float(np.max(np.abs(cond[0] - p_born)))
    counts = np.bincount(out.samples[:, 1], minlength=len(p_born))
    freq = counts / samples
    sig = np.sqrt(np.clip(p_born * (1 - p_born), 1e-12, None) / samples)
    sampled_z = float(np.max(np.abs(freq - p_born) / sig))
    return {"appendix_a_conditional": dev_cond, "appendix_a_born": dev_born,
            "appendix_a_sampled_z": sampled_z}


def _eig_groups(w, tol=1e-10):
    groups = [[0]]
    for i in range(1, len(w)):
        if abs(w[i] - w[groups[-1][0]]) < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def scenario_runway(point: PhasePoint, measured: int, runway: int, L: np.ndarray,
                    R: np.ndarray) -> dict:
    """Wire marginal with a traced runway and <R| boundary vs reverse-weight bond computation."""
    n = measured + runway
    res = build_state_vector(point, n, OracleMode.PHI, L=L, R=R)
    out = simulate_measurements(res, _wire_bases(n))
    q_oracle = marginal_over_tail(out.q, point.d, n, measured)
    q_oracle /= q_oracle.sum()

    fbar = reverse_full_channel(point)
    w = np.outer(R, np.asarray(R).conj())
    for _ in range(runway):
        w = fbar.apply(w)
    tensors = point.site_tensors()
    q_chan = np.empty(point.d ** measured)
    for flat, s in enumerate(itertools.product(range(point.d), repeat=measured)):
        m = np.eye(point.Db, dtype=complex)
        for sk in s:
            m = tensors[sk] @ m
        vL = m @ L
        q_chan[flat] = (vL.conj() @ w @ vL).real
    q_chan /= q_chan.sum()
    return {"runway_marginal": float(np.max(np.abs(q_oracle - q_chan)))}


def scenario_norm(point: PhasePoint, n: int, L: np.ndarray) -> dict:
    """Dense norm vs transfer-matrix norm of the same state."""
    d, Db = point.d, point.Db
    tensors = np.stack(point.site_tensors())
    amps = np.asarray(L, dtype=complex)
    for _ in range(n):
        amps = np.einsum("...b,iab->...ia", amps, tensors)
    dense = np.linalg.norm(amps) ** 2
    tau = np.outer(L, np.asarray(L).conj())
    for _ in range(n):
        tau = sum(a @ tau @ a.conj().T for a in point.site_tensors())
    transfer = np.trace(tau).real
    return {"norm_agreement": float(abs(dense - transfer) / transfer)}


@dataclass
class ConformanceReport:
    deviations: dict
    max_deviation: float
    sampled_z: float


def conformance_suite(point: PhasePoint, n: int, rng: np.random.Generator,
                      samples: int = 10_000) -> ConformanceReport:
    """Run every oracle-vs-engine scenario on one model; collect worst deviations.

    Statistical checks (z-scores) are reported separately from exact ones.
    """
    Db = point.Db
    l = rng.standard_normal(point.D) + 1j * rng.standard_normal(point.D)
    l /= np.linalg.norm(l)
    j = rng.standard_normal(point.Dj) + 1j * rng.standard_normal(point.Dj)
    j /= np.linalg.norm(j)
    L_prod = np.kron(l, j)
    R = rng.standard_normal(Db) + 1j * rng.standard_normal(Db)
    R /= np.linalg.norm(R)

    devs = {}
    devs.update(scenario_wire(point, n, l, j))
    devs.update(scenario_gate_step(point, n, L_prod, (0, 1), 0.05, np.pi / 2))
    devs.update(scenario_weak_step(point, n, L_prod, (0, 1), 0.7, 0.3))
    obs = gates.pair_operator(point, (0, 1))
    obs = (obs + obs.conj().T) / 2
    devs.update(scenario_appendix_a(point, n, l, j, obs, rng, samples))
    devs.update(scenario_runway(point, min(n, 3), n - min(n, 3), L_prod, R))
    devs.update(scenario_norm(point, n, L_prod))
    z = devs.pop("appendix_a_sampled_z")
    return ConformanceReport(deviations=devs,
                             max_deviation=float(max(devs.values())),
                             sampled_z=z)
