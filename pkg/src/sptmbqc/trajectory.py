"""Monte Carlo simulation of individual runs on the bond space.

Trajectories are sampled site by site with exact conditional probabilities:
the weight of the unmeasured remainder of the chain is the reverse transfer
map Fbar applied to the boundary operator (the identity when the right
boundary is a physical system, |R><R| propagated through a traced runway for
standard open boundaries).  Byproducts are tracked explicitly; gate and
measurement sites use byproduct-adapted bases, so in the corrected frame the
per-outcome actions are record-independent and only the boundary weight feels
the accumulated byproduct.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import gates, measurement
from .channel import (
    VirtualState,
    default_wire_length,
    fixed_point,
    junk_channel,
    nu_matrix,
    reverse_full_channel,
    reverse_junk_channel,
)
from .errors import DegenerateLeadingEigenvalue, ValidationError
from .model import PhasePoint, check_byproduct_symmetry, weyl_symmetry_data


class Procedure(enum.Enum):
    PROCEDURE_I = "I"      # outcomes kept, byproduct left on the boundary
    PROCEDURE_II = "II"    # outcomes kept, byproduct reversed
    PROCEDURE_III = "III"  # byproduct reversed, outcomes then discarded


class BoundaryMode(enum.Enum):
    PHI_TILDE = "phi_tilde"    # physical right-boundary system, active reversal possible
    PHI_RUNWAY = "phi_runway"  # standard <R| boundary behind a traced runway


@dataclass(frozen=True)
class RunConfig:
    point: PhasePoint
    program: gates.GateProgram
    procedure: Procedure = Procedure.PROCEDURE_II
    boundary: BoundaryMode = BoundaryMode.PHI_TILDE
    runway_n: int = 0
    trials: int = 1
    seed: int = 0
    left_boundary: np.ndarray | None = None
    right_boundary: np.ndarray | None = None

    def __post_init__(self):
        if self.runway_n < 0:
            raise ValidationError("runway_n must be >= 0")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")


@dataclass
class TrajectoryRecord:
    outcomes: tuple[int, ...] | None
    outcome_counts: np.ndarray
    byproduct: np.ndarray | None
    boundary_outcome: float | None
    procedure: Procedure
    boundary: BoundaryMode
    final_state: VirtualState
    measure_counts: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)


@dataclass(frozen=True)
class _Site:
    ops: tuple[np.ndarray, ...]   # byproduct-corrected per-outcome virtual actions
    kind: str                     # "wire" | "gate" | "measure"
    adapted: bool                 # byproduct grows on the right (adapted basis) or left (wire)
    segment: int | None = None
    half: int | None = None       # 0: beta=0 block, 1: beta=pi/2 block
    pair: tuple[int, int] | None = None


def _wire_ops(point: PhasePoint) -> tuple[np.ndarray, ...]:
    ident = np.eye(point.D)
    return tuple(np.kron(ident, b) for b in point.B)


def expand_sites(point: PhasePoint, program: gates.GateProgram) -> tuple[list[_Site], list]:
    """Per-site instruction list and the measurement-segment steps."""
    wire = _Site(ops=_wire_ops(point), kind="wire", adapted=False)
    sites: list[_Site] = []
    segments = []
    for step in program.steps:
        if isinstance(step, gates.WireStep):
            sites.extend([wire] * step.n)
        elif isinstance(step, gates.GateStep):
            wn = step.wire_n if step.wire_n is not None else default_wire_length(point)
            ops = tuple(gates.step_virtual_ops(point, step.pair, np.arctan(step.dalpha), step.beta))
            one = [_Site(ops=ops, kind="gate", adapted=True, pair=step.pair)] + [wire] * wn
            sites.extend(one * step.repeats)
        elif isinstance(step, gates.MeasureStep):
            wn = step.wire_n if step.wire_n is not None else default_wire_length(point)
            seg = len(segments)
            segments.append(step)
            for half, (beta, n_steps) in enumerate(
                ((0.0, step.n_m // 2), (np.pi / 2, step.n_m - step.n_m // 2))
            ):
                ops = tuple(gates.step_virtual_ops(point, step.pair, step.alpha, beta))
                block = [_Site(ops=ops, kind="measure", adapted=True, segment=seg, half=half,
                               pair=step.pair)] + [wire] * wn
                sites.extend(block * n_steps)
        elif isinstance(step, gates.InitStep):
            raise ValidationError("init steps are not supported in trajectory sampling; "
                                  "use measurement.initialize")
        else:
            raise ValidationError(f"unknown step type {type(step).__name__}")
    return sites, segments


def _left_density(point: PhasePoint, left) -> np.ndarray:
    """Initial bond-space density matrix from a vector, a density matrix, or None."""
    if left is None:
        left = _default_left(point)
    left = np.asarray(left, dtype=complex)
    if left.ndim == 1:
        left = np.outer(left, left.conj())
    return left / np.trace(left).real


class TrajectoryEngine:
    """Precomputed site plan, future weights, and interpretation data for one config."""

    def __init__(self, config: RunConfig):
        self.config = config
        point = config.point
        self.point = point
        self.sites, self.segments = expand_sites(point, config.program)
        self.left = _left_density(point, config.left_boundary)
        fbar = reverse_full_channel(point)
        if config.boundary is BoundaryMode.PHI_TILDE:
            base = np.eye(point.Db, dtype=complex)
        else:
            if config.right_boundary is None:
                raise ValidationError("PHI_RUNWAY mode needs a right boundary vector")
            r = np.asarray(config.right_boundary, dtype=complex).reshape(-1)
            base = np.outer(r, r.conj())
            for _ in range(config.runway_n):
                base = fbar.apply(base)
        n = len(self.sites)
        self.weights: list[np.ndarray] = [None] * (n + 1)
        self.weights[n] = base
        for t in range(n - 1, -1, -1):
            self.weights[t] = fbar.apply(self.weights[t + 1])
        # per-site outcome matrices N_s with p(s) = Tr(tau N_s), precomputable
        # when the weight has an identity logical factor (PHI_TILDE)
        self.tilde = config.boundary is BoundaryMode.PHI_TILDE
        self.prob_mats: list[np.ndarray] | None = None
        if self.tilde:
            self.prob_mats = []
            for t, site in enumerate(self.sites):
                w = self.weights[t + 1]
                self.prob_mats.append(np.stack([op.conj().T @ w @ op for op in site.ops]))
        if self.segments:
            nu = nu_matrix(point, fixed_point(junk_channel(point)))
            self._interp = []
            for step in self.segments:
                phis, _ = gates.eigenphase_groups(gates.pair_operator(point, step.pair))
                self._interp.append((measurement.PairFilter.from_nu(nu, step.pair), step.alpha, phis))
        self._ident_j = np.eye(point.Dj)

    def sample(self, rng: np.random.Generator) -> TrajectoryRecord:
        config, point = self.config, self.point
        tau = self.left.copy()
        byprod = np.eye(point.D, dtype=complex)
        outcomes = []
        counts = np.zeros(point.d, dtype=np.int64)
        seg_counts = [[[0, 0], [0, 0]] for _ in self.segments]

        for t, site in enumerate(self.sites):
            n_out = len(site.ops)
            probs = np.empty(n_out)
            if self.tilde:
                mats = self.prob_mats[t]
                probs = np.einsum("kab,ba->k", mats, tau).real
            else:
                w = self.weights[t + 1]
                for s, op in enumerate(site.ops):
                    g = byprod @ point.C[s] if site.adapted else point.C[s] @ byprod
                    gw = np.kron(g, self._ident_j)
                    n_mat = op.conj().T @ gw.conj().T @ w @ gw @ op
                    probs[s] = np.einsum("ab,ba->", n_mat, tau).real
            probs = np.clip(probs, 0.0, None)
            probs /= probs.sum()
            s = int(np.searchsorted(np.cumsum(probs), rng.random()))
            s = min(s, n_out - 1)
            op = site.ops[s]
            tau = op @ tau @ op.conj().T
            tau = tau / np.trace(tau).real
            byprod = (byprod @ point.C[s]) if site.adapted else (point.C[s] @ byprod)
            outcomes.append(s)
            counts[s] += 1
            if site.kind == "measure":
                if s == site.pair[0]:
                    seg_counts[site.segment][site.half][0] += 1
                elif s == site.pair[1]:
                    seg_counts[site.segment][site.half][1] += 1

        boundary_outcome = None
        measure_counts = [(tuple(c[0]), tuple(c[1])) for c in seg_counts]
        if self.segments:
            params, alpha, phis = self._interp[-1]
            interp = measurement.interpret_counts(params, alpha, measure_counts[-1][0],
                                            measure_counts[-1][1], phis)
            boundary_outcome = float(phis[interp["matched_index"]])

        if config.procedure is Procedure.PROCEDURE_I:
            g = np.kron(byprod, self._ident_j)
            final = VirtualState(g @ tau @ g.conj().T, point.D, point.Dj)
        else:
            final = VirtualState(tau, point.D, point.Dj)

        erase = config.procedure is Procedure.PROCEDURE_III
        return TrajectoryRecord(
            outcomes=None if erase else tuple(outcomes),
            outcome_counts=counts,
            byproduct=None if erase else byprod,
            boundary_outcome=boundary_outcome,
            procedure=config.procedure,
            boundary=config.boundary,
            final_state=final,
            measure_counts=measure_counts,
        )


def _default_left(point: PhasePoint) -> np.ndarray:
    v = np.zeros(point.Db, dtype=complex)
    v[0] = 1.0
    return v


def sample_run(config: RunConfig, rng: np.random.Generator | None = None) -> TrajectoryRecord:
    """One sampled run; identical records under identical seeds."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return TrajectoryEngine(config).sample(rng)


def byproduct_from_outcomes(point: PhasePoint, outcomes) -> np.ndarray:
    """Recompute prod_k C_{s_k} (site order, latest factor leftmost) for wire runs."""
    g = np.eye(point.D, dtype=complex)
    for s in outcomes:
        g = point.C[s] @ g
    return g


@dataclass
class PathSumResult:
    state: VirtualState
    n_paths: int
    stderr: float


def add_paths(config: RunConfig, exact: bool = False, max_strings: int = 1 << 16) -> PathSumResult:
    """Path sum of corrected trajectories: Monte Carlo average, or exact enumeration.

    Per-trial streams are spawned from (seed, trial index), so the estimate is
    independent of execution order.
    """
    point = config.point
    if exact:
        sites, _ = expand_sites(point, config.program)
        if point.d ** len(sites) > max_strings:
            raise ValidationError(f"exact enumeration over {point.d}^{len(sites)} strings exceeds the cap")
        left = config.left_boundary if config.left_boundary is not None else _default_left(point)
        left = np.asarray(left, dtype=complex)
        if left.ndim != 1:
            raise ValidationError("exact enumeration needs a pure left boundary vector")
        vecs = left.reshape(1, -1)
        for site in sites:
            vecs = np.concatenate([vecs @ op.T for op in site.ops], axis=0)
        rho = vecs.T @ vecs.conj()
        return PathSumResult(state=VirtualState(rho / np.trace(rho).real, point.D, point.Dj),
                             n_paths=vecs.shape[0], stderr=0.0)
    engine = TrajectoryEngine(config)
    acc = np.zeros((point.Db, point.Db), dtype=complex)
    acc2 = 0.0
    for t in range(config.trials):
        rec = engine.sample(np.random.default_rng((config.seed, t)))
        acc += rec.final_state.rho
        acc2 += np.linalg.norm(rec.final_state.rho) ** 2
    mean = acc / config.trials
    var = max(acc2 / config.trials - np.linalg.norm(mean) ** 2, 0.0)
    stderr = float(np.sqrt(var / config.trials))
    return PathSumResult(state=VirtualState(mean / np.trace(mean).real, point.D, point.Dj),
                         n_paths=config.trials, stderr=stderr)


# ---------------------------------------------------------------------------
# boundary reversion (active correction vs traced runway)

def _byproduct_labels(point: PhasePoint):
    sym = weyl_symmetry_data(point.D)
    report = check_byproduct_symmetry(point, sym)
    if not report.passed:
        raise ValidationError("byproduct operators are not Weyl elements; label tracking unavailable")
    return [m.group_element for m in report.matches], sym


@dataclass
class BoundaryReport:
    runway_n: int
    p_tilde: np.ndarray
    p_runway: np.ndarray
    tv_exact: float
    tv_sampled: float | None
    trials: int


def boundary_equivalence(
    point: PhasePoint,
    program: gates.GateProgram,
    runway_n: int,
    trials: int = 0,
    left_boundary: np.ndarray | None = None,
    right_boundary: np.ndarray | None = None,
    seed: int = 0,
) -> BoundaryReport:
    """Compare final-measurement statistics under active reversal vs a traced runway.

    The program must end in a MeasureStep.  The channel-exact branch evolves
    byproduct-resolved states through the program body and takes the ideal
    projective limit of the final measurement, so the two boundary treatments
    differ only through the weight operator Fbar^runway(|R><R|) conjugated by
    the accumulated byproduct.  The sampled branch runs the full protocol,
    weak-measurement block included.
    """
    if not program.steps or not isinstance(program.steps[-1], gates.MeasureStep):
        raise ValidationError("program must end in a logical measurement")
    final = program.steps[-1]
    body = gates.GateProgram(program.steps[:-1])
    labels, sym = _byproduct_labels(point)
    D = point.D
    sites, _ = expand_sites(point, body)
    left = _left_density(point, left_boundary)
    states: dict[tuple, np.ndarray] = {(0, 0): left}
    for site in sites:
        new: dict[tuple, np.ndarray] = {}
        for g, tau in states.items():
            for s, op in enumerate(site.ops):
                a, b = labels[s]
                key = ((g[0] + a) % D, (g[1] + b) % D)
                x = op @ tau @ op.conj().T
                if key in new:
                    new[key] += x
                else:
                    new[key] = x
        states = new

    phis, projectors = gates.eigenphase_groups(gates.pair_operator(point, final.pair))
    ident_j = np.eye(point.Dj)
    fbar = reverse_full_channel(point)
    if right_boundary is None:
        right_boundary = _default_left(point)
    r = np.asarray(right_boundary, dtype=complex).reshape(-1)
    w_run = np.outer(r, r.conj())
    for _ in range(runway_n):
        w_run = fbar.apply(w_run)

    p_tilde = np.zeros(len(phis))
    p_run = np.zeros(len(phis))
    for i, proj in enumerate(projectors):
        pw = np.kron(proj, ident_j)
        for g, tau in states.items():
            vg = np.kron(sym.V[g], ident_j)
            cut = pw @ tau @ pw.conj().T
            p_tilde[i] += np.trace(cut).real
            p_run[i] += np.trace(cut @ vg.conj().T @ w_run @ vg).real
    p_tilde /= p_tilde.sum()
    p_run /= p_run.sum()
    tv_exact = 0.5 * float(np.sum(np.abs(p_tilde - p_run)))

    tv_sampled = None
    if trials > 0:
        freqs = {}
        for m_idx, mode in enumerate(BoundaryMode):
            cfg = RunConfig(point=point, program=program, procedure=Procedure.PROCEDURE_II,
                            boundary=mode, runway_n=runway_n, trials=trials, seed=seed,
                            left_boundary=left, right_boundary=right_boundary)
            engine = TrajectoryEngine(cfg)
            hist = np.zeros(len(phis))
            for t in range(trials):
                rec = engine.sample(np.random.default_rng((seed, m_idx, t)))
                idx = int(np.argmin(np.abs(np.angle(np.exp(1j * (phis - rec.boundary_outcome))))))
                hist[idx] += 1
            freqs[mode] = hist / trials
        tv_sampled = 0.5 * float(np.sum(np.abs(freqs[BoundaryMode.PHI_TILDE]
                                               - freqs[BoundaryMode.PHI_RUNWAY])))

    return BoundaryReport(runway_n=runway_n, p_tilde=p_tilde, p_runway=p_run,
                          tv_exact=tv_exact, tv_sampled=tv_sampled, trials=trials)


@dataclass
class ReverseFixedPoint:
    operator: np.ndarray
    eigenvalue: float
    junk_fixed: np.ndarray
    junk_eigenvalue: float
    logical_deviation: float
    eigenvalue_gap: float
    forward_overlap: float


def completely_oblivious_fixed_point(point: PhasePoint) -> ReverseFixedPoint:
    """Top eigenoperator of Fbar = sum_s [A_s^dag], checked against I/D (x) junk fixed point."""
    fbar = reverse_full_channel(point)
    fix_full = fixed_point(fbar)  # raises DegenerateLeadingEigenvalue when degenerate
    fix_junk = fixed_point(reverse_junk_channel(point))
    tau = fix_full.rho
    logical = tau.reshape(point.D, point.Dj, point.D, point.Dj).trace(axis1=1, axis2=3)
    logical_dev = float(np.max(np.abs(logical - np.eye(point.D) / point.D)))
    gap = abs(fix_full.eigenvalue - fix_junk.eigenvalue)
    forward = fixed_point(junk_channel(point))
    overlap = float(np.trace(forward.rho @ fix_junk.rho).real)
    if overlap <= 1e-10:
        raise DegenerateLeadingEigenvalue(
            f"forward/reverse junk fixed points are orthogonal (overlap {overlap:.3e})"
        )
    return ReverseFixedPoint(
        operator=tau,
        eigenvalue=fix_full.eigenvalue,
        junk_fixed=fix_junk.rho,
        junk_eigenvalue=fix_junk.eigenvalue,
        logical_deviation=logical_dev,
        eigenvalue_gap=gap,
        forward_overlap=overlap,
    )


def record_to_json(record: TrajectoryRecord) -> dict:
    """JSON-ready view of one trajectory record (one line of a JSONL log)."""
    byprod = None
    if record.byproduct is not None:
        byprod = [[[float(v.real), float(v.imag)] for v in row] for row in record.byproduct]
    return {
        "outcomes": list(record.outcomes) if record.outcomes is not None else None,
        "outcome_counts": [int(c) for c in record.outcome_counts],
        "byproduct": byprod,
        "boundary_outcome": record.boundary_outcome,
        "procedure": record.procedure.value,
        "boundary": record.boundary.value,
        "measure_counts": [[list(r), list(i)] for r, i in record.measure_counts],
    }


def write_records_jsonl(records, path) -> None:
    """One JSON record per line."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec)) + "\n")


def procedure_kraus_family(point: PhasePoint, n: int) -> list[np.ndarray]:
    """Explicit physical-space Kraus family P_s = |s><s| (x) Sigma(s)^-1 for an n-site block."""
    d = point.d
    ops = []
    for s in itertools.product(range(d), repeat=n):
        proj = np.zeros((d ** n, d ** n), dtype=complex)
        idx = 0
        for sk in s:  # site 1 is the most significant digit
            idx = idx * d + sk
        proj[idx, idx] = 1.0
        sigma = byproduct_from_outcomes(point, s)
        ops.append(np.kron(proj, np.kron(sigma.conj().T, np.eye(point.Dj))))
    return ops
