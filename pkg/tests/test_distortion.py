import math

import numpy as np
import pytest

import conftest
from rusamp import distortion, qcore

BALANCED = complex(1.0 / math.sqrt(2.0))


def _config(trials=1, seed=0, alpha=BALANCED, beta=BALANCED, **kw):
    return distortion.DistortionConfig(
        alpha=alpha,
        beta=beta,
        psi0=qcore.basis_state(1),
        psi1=qcore.basis_state(1),
        trials=trials,
        seed=seed,
        **kw,
    )


class TestBuildDistorter:
    def test_single_ancilla_exact_rotation(self):
        d = distortion.build_distorter(np.array([0.36, 0.64]), seed=0)
        np.testing.assert_allclose(
            d.mat, np.array([[0.6, -0.8], [0.8, 0.6]]), atol=1e-12
        )

    def test_larger_register_first_column(self):
        gammas = np.array([0.4, 0.3, 0.2, 0.1])
        d = distortion.build_distorter(gammas, seed=3)
        np.testing.assert_allclose(d.mat[:, 0], np.sqrt(gammas), atol=1e-12)
        np.testing.assert_allclose(d.mat @ d.mat.conj().T, np.eye(4), atol=1e-10)

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            distortion.build_distorter(np.array([0.5, 0.6]), seed=0)
        with pytest.raises(ValueError):
            distortion.build_distorter(np.array([-0.1, 1.1]), seed=0)
        with pytest.raises(ValueError):
            distortion.build_distorter(np.array([0.2, 0.3, 0.5]), seed=0)


class TestBuildConditional:
    def test_control_blocks(self):
        base = conftest.make_circuit(0.3, m=1)
        gammas = np.array([0.5, 0.5])
        cc = distortion.build_conditional(base, gammas, seed=1)
        b = cc.b_matrix.mat
        idle = np.kron(cc.distorter.mat, np.eye(2))
        np.testing.assert_allclose(b[0::2, 0::2], idle, atol=1e-12)
        np.testing.assert_allclose(b[1::2, 1::2], base.a_matrix.mat, atol=1e-12)
        np.testing.assert_allclose(b[0::2, 1::2], 0.0, atol=1e-15)
        np.testing.assert_allclose(b[1::2, 0::2], 0.0, atol=1e-15)

    def test_undistorted_idle_is_identity(self):
        base = conftest.make_circuit(0.3, m=2)
        cc = distortion.build_conditional(base)
        b = cc.b_matrix.mat
        np.testing.assert_allclose(b[0::2, 0::2], np.eye(8), atol=1e-15)
        assert cc.distorter is None
        np.testing.assert_allclose(
            cc.effective_gammas(), np.array([1.0, 0.0, 0.0, 0.0])
        )

    def test_weight_length_checked(self):
        base = conftest.make_circuit(0.3, m=2)
        with pytest.raises(ValueError):
            distortion.build_conditional(base, np.array([0.5, 0.5]))


class TestClosedForms:
    def test_single_shot_spots(self):
        assert distortion.single_shot_overlap(0.25) == pytest.approx(0.9, abs=1e-12)
        assert distortion.single_shot_overlap(0.0) == pytest.approx(0.5)
        assert distortion.single_shot_overlap(1.0) == pytest.approx(1.0)

    def test_m1_matches_general_form(self):
        rng = qcore.rng_stream(14)
        for _ in range(50):
            g0, l0 = rng.uniform(0.0, 1.0, size=2)
            a = math.sqrt(rng.uniform(0.0, 1.0))
            b = math.sqrt(1.0 - a * a)
            general = distortion.average_fidelity_closed(
                a, b, np.array([g0, 1.0 - g0]), np.array([l0, 1.0 - l0])
            )
            reduced = distortion.average_fidelity_m1(a, b, g0, l0)
            assert general == pytest.approx(reduced, abs=1e-14)

    def test_matched_weights_are_distortion_free(self):
        rng = qcore.rng_stream(15)
        for _ in range(20):
            weights = rng.random(4)
            weights /= weights.sum()
            got = distortion.average_fidelity_closed(
                BALANCED, BALANCED, weights, weights
            )
            assert got == pytest.approx(1.0, abs=1e-12)

    def test_blocked_branch_leaves_diagonal(self):
        # gamma_0 lambda_0 = 0: the branches never share a success outcome
        a = math.sqrt(0.3)
        b = math.sqrt(0.7)
        got = distortion.average_fidelity_m1(a, b, 0.0, 0.6)
        assert got == pytest.approx(0.3**2 + 0.7**2, abs=1e-14)

    def test_balanced_spot_value(self):
        assert distortion.average_fidelity_m1(
            BALANCED, BALANCED, 1.0, 0.25
        ) == pytest.approx(0.75, abs=1e-14)

    def test_trivial_control_is_exact(self):
        assert distortion.average_fidelity_m1(1.0, 0.0, 0.3, 0.7) == pytest.approx(1.0)
        assert distortion.average_fidelity_m1(0.0, 1.0, 0.3, 0.7) == pytest.approx(1.0)


class TestConfigValidation:
    def test_unnormalized_control(self):
        with pytest.raises(ValueError):
            _config(alpha=1.0, beta=0.5)

    def test_trial_count(self):
        with pytest.raises(ValueError):
            _config(trials=0)


class TestSimulate:
    def test_immediate_success_overlap(self):
        # undistorted circuit, first attempt succeeds: the surviving state
        # has exactly the single-shot overlap with the ideal one
        base = conftest.make_circuit(0.25, m=1)
        cc = distortion.build_conditional(base)
        cfg = _config(trials=1, seed=0)
        ideal = distortion.ideal_conditional_state(cc, cfg)
        rng = qcore.rng_stream(8)
        seen = 0
        while seen < 20:
            record, final = distortion.simulate_conditional_rus(cc, cfg, rng)
            if record.attempts > 1:
                continue
            seen += 1
            assert qcore.fidelity(final, ideal) == pytest.approx(0.9, abs=1e-12)

    def test_sequence_weights_predict_each_run(self):
        # every outcome sequence fixes the final overlap exactly
        rng = qcore.rng_stream(9)
        base = conftest.make_circuit(0.25, m=2, rng=rng)
        gammas = np.array([0.3, 0.4, 0.2, 0.1])
        cc = distortion.build_conditional(base, gammas, seed=2)
        cfg = _config(trials=1, seed=0)
        ideal = distortion.ideal_conditional_state(cc, cfg)
        lambdas = base.spec.lambdas
        for _ in range(200):
            record, final = distortion.simulate_conditional_rus(cc, cfg, rng)
            g = math.sqrt(np.prod(gammas[list(record.outcomes)]))
            l = math.sqrt(np.prod(lambdas[list(record.outcomes)]))
            predicted = (0.5 * g + 0.5 * l) ** 2 / (0.5 * g * g + 0.5 * l * l)
            assert qcore.fidelity(final, ideal) == pytest.approx(
                predicted, abs=1e-12
            )

    def test_sequence_frequency(self):
        base = conftest.make_circuit(0.25, m=1)
        cc = distortion.build_conditional(base, np.array([0.5, 0.5]))
        cfg = _config(trials=1, seed=0)
        rng = qcore.rng_stream(10)
        n = 10_000
        hits = 0
        for _ in range(n):
            record, _ = distortion.simulate_conditional_rus(cc, cfg, rng)
            if record.outcomes == (1, 0):
                hits += 1
        # p = |alpha|^2 gamma_1 gamma_0 + |beta|^2 lambda_1 lambda_0
        p = 0.5 * (0.5 * 0.5) + 0.5 * (0.75 * 0.25)
        sigma = math.sqrt(p * (1.0 - p) / n)
        assert abs(hits / n - p) < 4.0 * sigma

    def test_branch_phase_stays_zero(self):
        base = conftest.make_circuit(0.4, m=1, trivial_recoveries=True)
        cc = distortion.build_conditional(base, np.array([0.6, 0.4]))
        cfg = _config(trials=1, seed=0)
        rng = qcore.rng_stream(11)
        for _ in range(20):
            _, final = distortion.simulate_conditional_rus(cc, cfg, rng)
            assert abs(distortion.control_branch_phase(final, cc, cfg)) < 1e-9


class TestMonteCarlo:
    def test_matches_closed_form_m1(self):
        base = conftest.make_circuit(0.25, m=1)
        cc = distortion.build_conditional(base)
        est = distortion.monte_carlo_fidelity(cc, _config(trials=20_000, seed=21))
        assert est.trials == 20_000
        assert est.exhausted == 0
        assert abs(est.mean - 0.75) < 4.0 * est.std_error

    def test_matches_closed_form_m2(self):
        rng = qcore.rng_stream(22)
        base = conftest.make_circuit(0.35, m=2, rng=rng)
        gammas = np.array([0.45, 0.25, 0.2, 0.1])
        cc = distortion.build_conditional(base, gammas, seed=4)
        closed = distortion.average_fidelity_closed(
            BALANCED, BALANCED, gammas, base.spec.lambdas
        )
        est = distortion.monte_carlo_fidelity(cc, _config(trials=20_000, seed=23))
        assert abs(est.mean - closed) < 4.0 * est.std_error

    def test_agrees_with_per_run_simulator(self):
        base = conftest.make_circuit(0.3, m=1)
        gammas = np.array([0.7, 0.3])
        cc = distortion.build_conditional(base, gammas)
        cfg = _config(trials=5_000, seed=31)
        batch = distortion.monte_carlo_fidelity(cc, cfg)
        ideal = distortion.ideal_conditional_state(cc, cfg)
        rng = qcore.rng_stream(32)
        fids = np.array(
            [
                qcore.fidelity(
                    distortion.simulate_conditional_rus(cc, cfg, rng)[1], ideal
                )
                for _ in range(5_000)
            ]
        )
        joint_sigma = math.sqrt(batch.std_error**2 + fids.var() / fids.size)
        assert abs(batch.mean - fids.mean()) < 4.0 * joint_sigma

    def test_exhaustion_is_counted(self):
        base = conftest.make_circuit(0.2, m=1)
        # misaligned weights keep many runs failing past the cap
        cc = distortion.build_conditional(base, np.array([0.2, 0.8]))
        cfg = _config(trials=2_000, seed=41, max_attempts=1)
        est = distortion.monte_carlo_fidelity(cc, cfg)
        assert est.exhausted > 0
        assert est.trials + est.exhausted == 2_000
        # per-attempt success probability 0.5 gamma_0 + 0.5 lambda_0 = 0.2
        assert est.exhausted == pytest.approx(2_000 * 0.8, abs=4 * math.sqrt(2000 * 0.16))

    def test_deterministic_for_fixed_seed(self):
        base = conftest.make_circuit(0.3, m=1)
        cc = distortion.build_conditional(base, np.array([0.5, 0.5]))
        a = distortion.monte_carlo_fidelity(cc, _config(trials=500, seed=5))
        b = distortion.monte_carlo_fidelity(cc, _config(trials=500, seed=5))
        assert a.mean == b.mean and a.std_error == b.std_error


class TestFigureData:
    def test_left_panel_closed_form(self):
        rows = distortion.figure1_data("left", seed=0)
        assert len(rows) == 200
        curves = {r.curve_id for r in rows}
        assert curves == {"gamma_one", "gamma_over", "gamma_under", "gamma_matched"}
        for r in rows:
            assert r.std == 0.0 and r.n_samples == 1
        matched = [r for r in rows if r.curve_id == "gamma_matched"]
        assert all(abs(r.mean - 1.0) < 1e-12 for r in matched)
        ones = {r.x: r.mean for r in rows if r.curve_id == "gamma_one"}
        over = {r.x: r.mean for r in rows if r.curve_id == "gamma_over"}
        for x, value in over.items():
            if x >= 1.0 / 1.3:
                assert value == ones[x]
        # degradation ordering at small lambda0
        under = {r.x: r.mean for r in rows if r.curve_id == "gamma_under"}
        x0 = min(ones)
        assert under[x0] < 1.0 and ones[x0] < 1.0

    def test_left_panel_values_recompute(self):
        rows = distortion.figure1_data("left", seed=0)
        for r in rows:
            gamma0 = {
                "gamma_one": 1.0,
                "gamma_over": min(1.0, 1.3 * r.x),
                "gamma_under": 0.7 * r.x,
                "gamma_matched": r.x,
            }[r.curve_id]
            expect = distortion.average_fidelity_m1(BALANCED, BALANCED, gamma0, r.x)
            assert r.mean == pytest.approx(expect, abs=1e-14)

    def test_right_panel_shape_and_determinism(self):
        rows = distortion.figure1_data("right", seed=7)
        again = distortion.figure1_data("right", seed=7)
        assert rows == again
        assert len(rows) == 200
        for r in rows:
            assert r.n_samples == distortion.DRAWS_PER_POINT
            assert 0.4 < r.mean <= 1.0 + 1e-12
            assert r.seed == 7
        shifted = distortion.figure1_data("right", seed=8)
        assert shifted != rows

    def test_rejects_unknown_panel(self):
        with pytest.raises(ValueError):
            distortion.figure1_data("middle", seed=0)

    def test_figure3_limits(self):
        rows = distortion.figure3_data(seed=3)
        assert len(rows) == 150
        xs = sorted({r.x for r in rows})
        assert xs[0] == pytest.approx(1e-6)
        assert xs[-1] == pytest.approx(1e-1)
        # undistorted curve: all mass on the success outcome, no spread
        # beyond summation rounding
        ones = [r for r in rows if r.curve_id == "gamma_one"]
        assert all(r.std < 1e-12 for r in ones)
        smallest = min(ones, key=lambda r: r.x)
        assert smallest.mean == pytest.approx(0.5 + 0.5 * math.sqrt(1.0 - 1e-6), abs=1e-12)
        under = min(
            (r for r in rows if r.curve_id == "gamma_under"), key=lambda r: r.x
        )
        assert under.mean == pytest.approx(0.5 + 0.5 * math.sqrt(0.7), abs=1e-3)
