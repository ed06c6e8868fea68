import numpy as np
import pytest

from sptmbqc import channel, gates, measurement as meas, trajectory as traj
from sptmbqc.errors import ValidationError
from conftest import random_state


def wire_program(n):
    return gates.GateProgram((gates.WireStep(n),))


def test_cluster_wire_uniform_outcomes(cluster2):
    cfg = traj.RunConfig(point=cluster2, program=wire_program(5),
                         procedure=traj.Procedure.PROCEDURE_I)
    engine = traj.TrajectoryEngine(cfg)
    counts = np.zeros(4)
    trials = 3000
    for t in range(trials):
        counts += engine.sample(np.random.default_rng((0, t))).outcome_counts
    freqs = counts / counts.sum()
    assert np.all(np.abs(freqs - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / (5 * trials)))


def test_sample_run_deterministic(perturbed):
    cfg = traj.RunConfig(point=perturbed, program=wire_program(8), seed=42,
                         procedure=traj.Procedure.PROCEDURE_I)
    a = traj.sample_run(cfg)
    b = traj.sample_run(cfg)
    assert a.outcomes == b.outcomes
    np.testing.assert_array_equal(a.final_state.rho, b.final_state.rho)


def test_byproduct_bookkeeping(perturbed):
    cfg = traj.RunConfig(point=perturbed, program=wire_program(10), seed=5,
                         procedure=traj.Procedure.PROCEDURE_I)
    rec = traj.sample_run(cfg)
    np.testing.assert_allclose(
        rec.byproduct, traj.byproduct_from_outcomes(perturbed, rec.outcomes), atol=1e-12)


def test_procedure_ii_logical_invariance(perturbed):
    l = np.array([0.6, 0.8j])
    j = np.array([1.0, 0.4 - 0.3j])
    j = j / np.linalg.norm(j)
    cfg = traj.RunConfig(point=perturbed, program=wire_program(6),
                         procedure=traj.Procedure.PROCEDURE_II, left_boundary=np.kron(l, j))
    engine = traj.TrajectoryEngine(cfg)
    logicals = [engine.sample(np.random.default_rng((1, t))).final_state.logical_state()
                for t in range(10)]
    for x in logicals:
        np.testing.assert_allclose(x, logicals[0], atol=1e-12)


def test_procedure_iii_erases_record(perturbed):
    cfg = traj.RunConfig(point=perturbed, program=wire_program(6),
                         procedure=traj.Procedure.PROCEDURE_III, seed=1)
    rec = traj.sample_run(cfg)
    assert rec.outcomes is None
    assert rec.byproduct is None
    assert rec.outcome_counts.sum() == 6


def test_exact_path_sum_equals_oblivious_wire(perturbed):
    rng = np.random.default_rng(2)
    L = random_state(4, rng)
    cfg = traj.RunConfig(point=perturbed, program=wire_program(4), left_boundary=L)
    ps = traj.add_paths(cfg, exact=True)
    expected = channel.oblivious_wire(
        channel.VirtualState.from_boundary_vector(L, 2, 2), perturbed, 4)
    assert ps.n_paths == 4 ** 4
    assert np.max(np.abs(ps.state.rho - expected.rho)) < 1e-14


def test_exact_path_sum_cluster(cluster2):
    rng = np.random.default_rng(3)
    L = random_state(2, rng)
    cfg = traj.RunConfig(point=cluster2, program=wire_program(4), left_boundary=L)
    ps = traj.add_paths(cfg, exact=True)
    expected = channel.oblivious_wire(
        channel.VirtualState.from_boundary_vector(L, 2, 1), cluster2, 4)
    assert np.max(np.abs(ps.state.rho - expected.rho)) < 1e-14


def test_sampled_add_paths_matches_channel(perturbed):
    rng = np.random.default_rng(4)
    L = random_state(4, rng)
    cfg = traj.RunConfig(point=perturbed, program=wire_program(4), left_boundary=L,
                         trials=3000, seed=11)
    ps = traj.add_paths(cfg)
    expected = channel.oblivious_wire(
        channel.VirtualState.from_boundary_vector(L, 2, 2), perturbed, 4)
    # entrywise agreement at the Monte Carlo scale
    assert np.max(np.abs(ps.state.rho - expected.rho)) < 5 * ps.stderr


def test_sampled_convergence_rate(perturbed):
    rng = np.random.default_rng(5)
    L = random_state(4, rng)
    expected = channel.oblivious_wire(
        channel.VirtualState.from_boundary_vector(L, 2, 2), perturbed, 3).rho

    def mean_err(trials, rep):
        cfg = traj.RunConfig(point=perturbed, program=wire_program(3), left_boundary=L,
                             trials=trials, seed=1000 * rep + trials)
        ps = traj.add_paths(cfg)
        return np.linalg.norm(ps.state.rho - expected)

    reps = 10
    e1 = np.mean([mean_err(150, r) for r in range(reps)])
    e4 = np.mean([mean_err(600, r) for r in range(reps)])
    assert 1.0 <= e1 / e4 <= 4.0  # half the error, within a factor two


def test_kraus_completeness(perturbed, cluster2):
    for point, n in ((perturbed, 2), (cluster2, 3)):
        fam = traj.procedure_kraus_family(point, n)
        total = sum(p.conj().T @ p for p in fam)
        assert np.max(np.abs(total - np.eye(total.shape[0]))) < 1e-12


def test_boundary_equivalence_converged_runway(perturbed, perturbed_fix):
    rng = np.random.default_rng(6)
    sig = np.array([[0.8, 0.3 - 0.1j], [0.3 + 0.1j, 0.2]])
    sig /= np.trace(sig).real
    left = np.kron(sig, perturbed_fix.rho)
    right = random_state(4, rng)
    program = gates.GateProgram((
        gates.GateStep((0, 1), 0.05, 0.4),
        gates.MeasureStep((0, 2), np.pi / 4, 20),
    ))
    xi_bar = channel.spectrum(channel.reverse_junk_channel(perturbed)).correlation_length
    runway = max(20, int(np.ceil(30 * xi_bar)))
    rep = traj.boundary_equivalence(perturbed, program, runway_n=runway,
                                    left_boundary=left, right_boundary=right)
    assert rep.tv_exact <= 1e-8


def test_boundary_equivalence_monotone(perturbed, perturbed_fix):
    rng = np.random.default_rng(7)
    sig = np.array([[0.9, 0.2], [0.2, 0.1]])
    sig = sig / np.trace(sig)
    left = np.kron(sig, perturbed_fix.rho)
    right = random_state(4, rng)
    program = gates.GateProgram((gates.MeasureStep((0, 2), np.pi / 4, 2, wire_n=0),))
    xi_bar = channel.spectrum(channel.reverse_junk_channel(perturbed)).correlation_length
    runways = [0, int(np.ceil(xi_bar)), int(np.ceil(5 * xi_bar)), int(np.ceil(30 * xi_bar))]
    tvs = [traj.boundary_equivalence(perturbed, program, runway_n=r, left_boundary=left,
                                     right_boundary=right).tv_exact for r in runways]
    assert tvs[0] > 1e-3  # boundary not yet decoupled at runway zero
    # strictly decreasing until the machine floor
    assert all(tvs[i] > tvs[i + 1] or tvs[i + 1] < 1e-14 for i in range(len(tvs) - 1))


def test_boundary_equivalence_sampled(perturbed, perturbed_fix):
    rng = np.random.default_rng(8)
    sig = np.eye(2) / 2
    left = np.kron(sig, perturbed_fix.rho)
    right = random_state(4, rng)
    program = gates.GateProgram((gates.MeasureStep((0, 2), np.pi / 4, 30, wire_n=25),))
    rep = traj.boundary_equivalence(perturbed, program, runway_n=40, trials=60,
                                    left_boundary=left, right_boundary=right, seed=9)
    assert rep.tv_sampled is not None
    # two 60-trial empirical distributions of a (0.5, 0.5) law
    assert rep.tv_sampled <= 4 * np.sqrt(0.5 / 60)


def test_boundary_requires_final_measurement(perturbed):
    with pytest.raises(ValidationError):
        traj.boundary_equivalence(perturbed, wire_program(3), runway_n=5)


def test_completely_oblivious_fixed_point(perturbed):
    rfp = traj.completely_oblivious_fixed_point(perturbed)
    assert rfp.logical_deviation < 1e-10
    assert rfp.eigenvalue_gap < 1e-12
    assert rfp.forward_overlap > 1e-10


def test_completely_oblivious_cluster(cluster2):
    rfp = traj.completely_oblivious_fixed_point(cluster2)
    assert rfp.eigenvalue == pytest.approx(1.0, abs=1e-12)
    assert rfp.logical_deviation < 1e-12


def test_init_step_rejected_in_sampling(perturbed):
    program = gates.GateProgram((gates.InitStep((0, 1), 0, 100),))
    cfg = traj.RunConfig(point=perturbed, program=program)
    with pytest.raises(ValidationError):
        traj.sample_run(cfg)


def test_measure_step_seed_stream_contract(cluster2, cluster2_nu):
    # on the cluster point with no interleaved wire, the trajectory engine and
    # the measurement module consume one uniform per weak step and compute
    # identical probabilities, so identical seeds give identical outcomes
    n_m = 60
    program = gates.GateProgram((gates.MeasureStep((0, 1), np.pi / 4, n_m, wire_n=0),))
    cfg = traj.RunConfig(point=cluster2, program=program, seed=0)
    rec = traj.sample_run(cfg, np.random.default_rng(77))

    rng = np.random.default_rng(77)
    fix = channel.fixed_point(channel.junk_channel(cluster2))
    state = channel.VirtualState.product(np.eye(2) / 2, fix.rho)
    outcomes = []
    for half, beta_variant in ((n_m // 2, meas.BasisVariant.REAL),
                               (n_m - n_m // 2, meas.BasisVariant.IMAG)):
        basis = meas.MeasurementBasis((0, 1), np.pi / 4, beta_variant)
        engine = meas.WeakStepEngine.build(cluster2, basis, wire_n=0)
        for _ in range(half):
            k, state = meas.weak_measure_step(state, cluster2, cluster2_nu, basis, rng, engine)
            outcomes.append(k)
    assert tuple(outcomes) == rec.outcomes


def test_compose_program_matches_sampled_trajectories(perturbed, perturbed_nu, perturbed_fix):
    # channel-level composition agrees with the Monte Carlo path sum
    program = gates.GateProgram((
        gates.GateStep((0, 1), 0.15, 0.8, wire_n=45),
        gates.GateStep((0, 2), 0.1, 1.9, wire_n=45),
    ))
    rng = np.random.default_rng(14)
    v = random_state(2, rng)
    sigma0 = np.outer(v, v.conj())
    expected = gates.compose_program(perturbed, perturbed_nu, program, fix=perturbed_fix).apply(sigma0)
    cfg = traj.RunConfig(point=perturbed, program=program, seed=15,
                         left_boundary=np.kron(sigma0, perturbed_fix.rho), trials=800)
    ps = traj.add_paths(cfg)
    dev = np.max(np.abs(ps.state.logical_state() - expected))
    assert dev < 5 * max(ps.stderr, 1e-3)


def test_jsonl_log_roundtrip(tmp_path, perturbed):
    cfg = traj.RunConfig(point=perturbed, program=wire_program(5), seed=3,
                         procedure=traj.Procedure.PROCEDURE_I)
    engine = traj.TrajectoryEngine(cfg)
    records = [engine.sample(np.random.default_rng((3, t))) for t in range(4)]
    path = tmp_path / "log.jsonl"
    traj.write_records_jsonl(records, path)
    import json
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    first = json.loads(lines[0])
    assert first["outcomes"] == list(records[0].outcomes)
    assert first["procedure"] == "I"
