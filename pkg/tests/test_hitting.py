import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwlab import graphs, hitting, spectral, walk
from qwlab.errors import IndeterminateError, ThresholdUnreachableError

from conftest import random_unitary


def edge_spec():
    g = graphs.build_edge_graph()
    op = walk.evolution_operator(g, walk.grover_coin(1))
    return hitting.measured_walk(op, hitting.basis_state(g, 0, 1), final_vertices=[1])


def hypercube_spec(n, coin_kind="grover", start="symmetric"):
    g = graphs.build_hypercube(n)
    coin = walk.grover_coin(n) if coin_kind == "grover" else walk.dft_coin(n)
    op = walk.evolution_operator(g, coin)
    psi = hitting.symmetric_state(g, 0) if start == "symmetric" else hitting.basis_state(g, 0, 1)
    return hitting.measured_walk(op, psi, final_vertices=[2 ** n - 1])


def cycle4_deterministic_spec():
    # the two-dimensional uniform-coin reflection is a bit flip, so this
    # walk hops deterministically around the cycle
    g = graphs.build_cycle(4)
    op = walk.evolution_operator(g, walk.grover_coin(2))
    return hitting.measured_walk(op, hitting.basis_state(g, 0, 1), final_vertices=[2])


class TestSpecValidation:
    def test_unnormalized_start_rejected(self):
        g = graphs.build_edge_graph()
        op = walk.evolution_operator(g, walk.grover_coin(1))
        with pytest.raises(ValueError, match="normalized"):
            hitting.measured_walk(op, np.array([1.0, 1.0]), final_vertices=[1])

    def test_bad_trace_rejected(self):
        g = graphs.build_edge_graph()
        op = walk.evolution_operator(g, walk.grover_coin(1))
        with pytest.raises(ValueError, match="trace"):
            hitting.measured_walk(op, np.eye(2, dtype=complex), final_vertices=[1])

    def test_non_psd_rejected(self):
        g = graphs.build_edge_graph()
        op = walk.evolution_operator(g, walk.grover_coin(1))
        rho = np.array([[1.5, 0.0], [0.0, -0.5]], dtype=complex)
        with pytest.raises(ValueError, match="positive"):
            hitting.measured_walk(op, rho, final_vertices=[1])

    def test_needs_final(self):
        g = graphs.build_edge_graph()
        op = walk.evolution_operator(g, walk.grover_coin(1))
        with pytest.raises(ValueError, match="final"):
            hitting.measured_walk(op, hitting.basis_state(g, 0, 1))


class TestFirstHitDistribution:
    def test_single_edge_hits_immediately(self):
        dist = hitting.first_hit_distribution(edge_spec(), 5)
        assert dist[0] == pytest.approx(1.0, abs=1e-15)
        assert np.all(dist[1:] == 0.0)

    def test_partial_sums_monotone(self):
        dist = hitting.first_hit_distribution(hypercube_spec(3), 120)
        sums = np.cumsum(dist)
        assert np.all(np.diff(sums) >= -1e-15)
        assert sums[-1] <= 1 + 1e-9

    @pytest.mark.parametrize("start", ["symmetric", "basis"])
    def test_trace_conservation_pure(self, start):
        spec = hypercube_spec(3, start=start)
        u = spec.walk.matrix
        fin = spec.final_array
        psi = spec.psi0.copy()
        total = 0.0
        for _ in range(60):
            phi = u @ psi
            total += float(np.real(np.vdot(phi[fin], phi[fin])))
            phi[fin] = 0.0
            psi = phi
            assert abs(np.vdot(psi, psi).real + total - 1.0) < 1e-9

    def test_trace_conservation_mixed(self):
        g = graphs.build_cycle(6)
        op = walk.evolution_operator(g, walk.dft_coin(2))
        rho = np.diag([0.5, 0.0, 0.25, 0.0, 0.25, 0.0] + [0.0] * 6).astype(complex)
        spec = hitting.measured_walk(op, rho, final_vertices=[3])
        dist = hitting.first_hit_distribution(spec, 80)
        u, fin = op.matrix, spec.final_array
        sig = rho.copy()
        mass = 0.0
        for t in range(80):
            sig = u @ sig @ u.conj().T
            mass += float(np.real(np.sum(sig[fin, fin])))
            sig[fin, :] = 0.0
            sig[:, fin] = 0.0
            assert abs(np.trace(sig).real + mass - 1.0) < 1e-9
        assert mass == pytest.approx(dist.sum(), abs=1e-12)


class TestSeries:
    def test_single_edge(self):
        for eps in (0.5, 1e-3, 1e-9):
            res = hitting.hitting_time_series(edge_spec(), eps)
            assert res.value == pytest.approx(1.0, abs=1e-15)
            assert res.method == "series"
            assert res.truncation == 1

    def test_epsilon_domain(self):
        with pytest.raises(ValueError):
            hitting.hitting_time_series(edge_spec(), 0.0)

    def test_stall_reports_infinite_with_escape(self):
        spec = hypercube_spec(3, start="basis")
        res = hitting.hitting_time_series(spec, 1e-8)
        assert not res.is_finite
        rep = spectral.infinite_hitting_projector(spec.walk.matrix, spec.final_array)
        esc = spectral.escape_probability(rep, spec.psi0)
        assert res.escape_probability == pytest.approx(esc, abs=2e-3)

    def test_step_cap_raises_indeterminate(self):
        with pytest.raises(IndeterminateError):
            hitting.hitting_time_series(hypercube_spec(3, start="basis"), 1e-8, step_cap=40)

    @pytest.mark.parametrize(
        "spec_builder",
        [
            lambda: hypercube_spec(3),
            lambda: hypercube_spec(3, start="basis"),
            lambda: hypercube_spec(3, coin_kind="dft"),
            lambda: hypercube_spec(2, coin_kind="dft", start="basis"),
        ],
        ids=["cube3-sym", "cube3-trapped", "cube3-dft", "cube2-dft-basis"],
    )
    def test_arrival_plus_escape_mass_is_unity(self, spec_builder):
        spec = spec_builder()
        res = hitting.hitting_time_series(spec, 1e-6)
        rep = spectral.infinite_hitting_projector(spec.walk.matrix, spec.final_array)
        escape = spectral.escape_probability(rep, spec.psi0)
        assert res.arrival_mass + escape == pytest.approx(1.0, abs=2e-3)


class TestConcurrent:
    def test_single_edge(self):
        assert hitting.concurrent_hitting_time(edge_spec(), 0.5) == 1

    def test_monotone_in_threshold(self):
        spec = hypercube_spec(3)
        taus = [hitting.concurrent_hitting_time(spec, p) for p in (0.2, 0.5, 0.9)]
        assert taus == sorted(taus)

    def test_unreachable_threshold(self):
        spec = hypercube_spec(3, start="basis")  # escape mass 0.4
        with pytest.raises(ThresholdUnreachableError) as err:
            hitting.concurrent_hitting_time(spec, 0.7)
        assert err.value.arrival_mass < 0.7


class TestOneShot:
    def test_zero_steps_when_already_there(self):
        g = graphs.build_edge_graph()
        op = walk.evolution_operator(g, walk.grover_coin(1))
        psi = hitting.basis_state(g, 0, 1)
        assert hitting.one_shot_hitting_time(op, psi, psi, 1.0, 10) == 0

    def test_single_edge_full_transfer(self):
        g = graphs.build_edge_graph()
        op = walk.evolution_operator(g, walk.grover_coin(1))
        start = hitting.basis_state(g, 0, 1)
        final = hitting.basis_state(g, 1, 1)
        assert hitting.one_shot_hitting_time(op, start, final, 1.0, 10) == 1

    def test_matches_matrix_power_oracle(self):
        g = graphs.build_cycle(4)
        op = walk.evolution_operator(g, walk.grover_coin(2))
        start = hitting.basis_state(g, 0, 1)
        final = hitting.basis_state(g, 0, 1)
        probs = []
        psi = start
        for t in range(9):
            oracle_amp = np.vdot(final, np.linalg.matrix_power(op.matrix, t) @ start)
            assert abs(np.vdot(final, psi) - oracle_amp) < 1e-12
            probs.append(abs(np.vdot(final, psi)) ** 2)
            psi = op.matrix @ psi
        first = next(t for t in range(1, 9) if probs[t] >= 0.99)
        assert hitting.one_shot_hitting_time(op, start, final, 0.99, 10) in (0, first)

    def test_not_reached_is_none(self):
        g = graphs.build_cycle(6)
        op = walk.evolution_operator(g, walk.dft_coin(2))
        start = hitting.basis_state(g, 0, 1)
        final = hitting.basis_state(g, 3, 1)
        assert hitting.one_shot_hitting_time(op, start, final, 0.999999, 3) is None


class TestVectorize:
    def test_row_stacking_order(self):
        m = np.arange(9).reshape(3, 3)
        assert np.array_equal(hitting.vectorize(m), np.arange(9))

    def test_identity_two(self):
        assert np.array_equal(hitting.vectorize(np.eye(2)), np.array([1.0, 0.0, 0.0, 1.0]))

    def test_devectorize_inverse(self, rng):
        m = rng.standard_normal((4, 4))
        assert np.array_equal(hitting.devectorize(hitting.vectorize(m)), m)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            hitting.vectorize(np.ones((2, 3)))
        with pytest.raises(ValueError):
            hitting.devectorize(np.ones(5))

    def test_distribution_csv_columns(self):
        body = hitting.distribution_csv(hitting.first_hit_distribution(edge_spec(), 3))
        lines = body.strip().splitlines()
        assert lines[0] == "t,p_t,cumulative"
        assert lines[1].split(",") == ["1", "1", "1"]
        assert len(lines) == 4

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_kronecker_identity(self, seed):
        r = np.random.default_rng(seed)
        a = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
        b = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
        rho = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
        lhs = hitting.vectorize(a @ rho @ b)
        rhs = np.kron(a, b.T) @ hitting.vectorize(rho)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_conjugation_identity(self, rng):
        a = random_unitary(3, rng)
        rho = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        lhs = hitting.vectorize(a @ rho @ a.conj().T)
        rhs = np.kron(a, a.conj()) @ hitting.vectorize(rho)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestClosedForm:
    def test_single_edge_exact(self):
        res = hitting.hitting_time_closed_form(edge_spec())
        assert res.method == "closed_form"
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_cycle(self):
        spec = cycle4_deterministic_spec()
        dist = hitting.first_hit_distribution(spec, 4)
        assert dist[1] == pytest.approx(1.0, abs=1e-14)
        res = hitting.hitting_time_closed_form(spec)
        assert res.value == pytest.approx(2.0, abs=1e-12)

    def test_pseudo_inverse_matches_series(self):
        spec = hypercube_spec(3)
        closed = hitting.hitting_time_closed_form(spec)
        assert closed.method == "pseudo_inverse"
        series = hitting.hitting_time_series(spec, 1e-8)
        assert abs(series.value - closed.value) / closed.value < 1e-4

    def test_infinite_escape_matches_projector(self):
        spec = hypercube_spec(3, start="basis")
        res = hitting.hitting_time_closed_form(spec)
        assert not res.is_finite
        rep = spectral.infinite_hitting_projector(spec.walk.matrix, spec.final_array)
        assert res.escape_probability == pytest.approx(
            spectral.escape_probability(rep, spec.psi0), abs=1e-10
        )

    def test_dimension_guard(self):
        with pytest.raises(ValueError, match="guard"):
            hitting.hitting_time_closed_form(hypercube_spec(3), dim_guard=16)

    def test_values_at_least_one_without_final_support(self):
        for spec in (edge_spec(), hypercube_spec(2), hypercube_spec(3)):
            res = hitting.hitting_time_closed_form(spec)
            if res.is_finite:
                assert res.value >= 1.0 - 1e-9

    def test_singularity_probe(self):
        smin, smax, singular = hitting.superoperator_singularity(hypercube_spec(3))
        assert singular and smin <= 1e-9 * smax
        smin, smax, singular = hitting.superoperator_singularity(cycle4_deterministic_spec())
        assert not singular and smin > 1e-6 * smax


class TestClassicalRecursion:
    def test_one_dimension(self):
        assert hitting.classical_hypercube_hitting(1) == 1.0

    def test_three_dimensions_exact(self):
        assert hitting.classical_hypercube_hitting(3) == 10.0

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8])
    def test_against_linear_system(self, n):
        # first-passage times by Hamming weight solve a tridiagonal system
        a = np.zeros((n, n))
        b = np.ones(n)
        for x in range(n):
            a[x, x] = 1.0
            if x + 1 < n:
                a[x, x + 1] = -(n - x) / n
            if x - 1 >= 0:
                a[x, x - 1] = -x / n
        tau = np.linalg.solve(a, b)
        assert hitting.classical_hypercube_hitting(n) == pytest.approx(tau[0], rel=1e-12)

    def test_exponential_growth(self):
        value = hitting.classical_hypercube_hitting(20)
        assert 2 ** 20 / 4 <= value <= 2 ** 20 * 4


class TestMonteCarlo:
    def test_single_edge_exact(self):
        est = hitting.classical_hitting_monte_carlo(graphs.build_edge_graph(), 0, 1, 500, seed=3)
        assert est.mean == 1.0
        assert est.stderr == 0.0

    def test_matches_recursion_within_three_stderr(self):
        g = graphs.build_hypercube(3)
        est = hitting.classical_hitting_monte_carlo(g, 0, 7, 100_000, seed=42)
        assert abs(est.mean - 10.0) <= 3 * est.stderr

    def test_deterministic_given_seed(self):
        g = graphs.build_hypercube(3)
        a = hitting.classical_hitting_monte_carlo(g, 0, 7, 2000, seed=11)
        b = hitting.classical_hitting_monte_carlo(g, 0, 7, 2000, seed=11)
        assert a == b

    def test_distorted_hypercube_is_finite(self):
        g = graphs.build_distorted_hypercube(3)
        est = hitting.classical_hitting_monte_carlo(g, 0, 7, 20_000, seed=5)
        assert est.mean > 1.0
        assert est.stderr > 0.0

    def test_generator_recorded(self):
        est = hitting.classical_hitting_monte_carlo(graphs.build_edge_graph(), 0, 1, 10, seed=1)
        assert est.generator == "PCG64"
        assert est.seed == 1
