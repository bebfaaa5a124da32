import numpy as np
import pytest

from ile import chain, fock, multimode, protocol
from ile.errors import SolverError
from oracles import two_mode_conditional, two_mode_metrics


def params_for(n, eta=0.1, omega=0.05, delta=0.97):
    return protocol.PhysicalParams(eta=eta, omega=omega, delta=delta, n_ions=n)


def one_cycle_plan(weights, t=80.0, alpha=0j, **kw):
    params = params_for(len(weights), **kw)
    return protocol.ProtocolPlan(
        params=params, alpha=alpha, cycles=(protocol.Cycle(duration=t, weights=weights),)
    )


class TestCycleDisplacements:
    def test_com_column_equals_single_mode_formula(self, mode_tables):
        for n in (1, 2, 3):
            params = params_for(n)
            entry = multimode.cycle_displacements(mode_tables[n], params, 100.0, integrated=False)
            ref = protocol.beta_of(params, 100.0)
            assert np.max(np.abs(entry.betas[:, 0] - ref)) <= 1e-14 * abs(ref)

    def test_two_ion_stretch_magnitude(self, mode_tables):
        params = params_for(2, eta=0.1, omega=0.02, delta=0.99)
        entry = multimode.cycle_displacements(mode_tables[2], params, 100.0, integrated=False)
        expect = 0.2 * np.sqrt(2.0 / np.sqrt(3.0)) * (1.0 / np.sqrt(2.0))
        assert np.allclose(np.abs(entry.betas[:, 1]), expect, atol=1e-12)

    def test_integrated_suppression_factor(self, mode_tables):
        params = params_for(2, eta=0.1, omega=0.02, delta=0.99)
        end = multimode.cycle_displacements(mode_tables[2], params, 100.0, integrated=False)
        mid = multimode.cycle_displacements(mode_tables[2], params, 100.0, integrated=True)
        detune = np.sqrt(3.0) - 0.99
        expect = abs(np.exp(1j * detune * 100.0) - 1.0) / (detune * 100.0)
        ratio = abs(mid.betas[0, 1]) / abs(end.betas[0, 1])
        assert ratio == pytest.approx(expect, abs=1e-12)
        assert ratio < 0.03  # far-detuned spectator drive averages out

    def test_variants_agree_at_zero_detuning(self, mode_tables):
        params = params_for(1, delta=1.0)
        end = multimode.cycle_displacements(mode_tables[1], params, 0.5, integrated=False)
        mid = multimode.cycle_displacements(mode_tables[1], params, 0.5, integrated=True)
        # COM detuning vanishes at delta = 1, windows coincide there
        assert abs(end.betas[0, 0] - mid.betas[0, 0]) <= 1e-12 * abs(end.betas[0, 0])


class TestConditionalExact:
    def test_zero_displacement_is_pure_internal_projection(self, mode_tables):
        plan = one_cycle_plan([0.4j, -0.3])
        zeros = multimode.DisplacementPlanEntry(np.zeros((2, 2), dtype=complex))
        ms, p = multimode.run_conditional_exact(plan, mode_tables[2], False, betas=zeros)
        assert ms.n_terms == 1
        assert np.allclose(ms.labels, 0.0)
        expect = 1.0 / ((1 + 0.16) * (1 + 0.09))
        assert p == pytest.approx(expect, rel=1e-12)

    def test_single_ion_matches_com_only_protocol(self, mode_tables):
        plan = protocol.ProtocolPlan(
            params=params_for(1, eta=0.1, omega=0.02, delta=0.99),
            alpha=0.2 + 0.1j,
            cycles=(
                protocol.Cycle(duration=60.0, weights=[0.4 - 0.3j]),
                protocol.Cycle(duration=60.0, weights=[0.2j]),
            ),
        )
        ms, p = multimode.run_conditional_exact(plan, mode_tables[1], False)
        res = protocol.run_ideal(plan)
        assert abs(p - res.p_exact) <= 1e-10
        # COM fidelity between the multimode state and the line state is 1
        fact = multimode.run_conditional_factorized(plan, mode_tables[1], False)
        rep = multimode.leakage_report(ms, res.state, fact)
        assert rep.com_fidelity_vs_ideal >= 1 - 1e-10
        assert rep.factorization_gap <= 1e-12  # one mode: factorization is exact

    def test_spectators_zeroed_reduce_to_protocol(self, mode_tables):
        plan = one_cycle_plan([0.3 + 0.2j, -0.4j], alpha=0.3)
        entry = multimode.cycle_displacements(mode_tables[2], plan.params, 80.0, False)
        masked = entry.betas.copy()
        masked[:, 1:] = 0
        ms, p = multimode.run_conditional_exact(
            plan, mode_tables[2], False, betas=multimode.DisplacementPlanEntry(masked)
        )
        assert abs(p - protocol.success_probability_exact(plan)[0]) <= 1e-10

    def test_term_cap(self, mode_tables):
        plan = one_cycle_plan([0.3 + 0.2j, -0.4j])
        with pytest.raises(SolverError, match="term"):
            multimode.run_conditional_exact(plan, mode_tables[2], False, max_terms=2)

    def test_pruning_reports_dropped_weight(self, mode_tables):
        # one nearly annihilated branch: its term is tiny and prunable
        plan = one_cycle_plan([1.0 - 1e-8, 0.3])
        full, p_full = multimode.run_conditional_exact(plan, mode_tables[2], False)
        assert full.pruned_weight == 0.0
        lean, p_lean = multimode.run_conditional_exact(
            plan, mode_tables[2], False, prune=1e-6
        )
        assert lean.n_terms < full.n_terms
        assert 0 < lean.pruned_weight < 1e-6
        # the probability can shift by at most ~2 ||psi|| x (dropped weight)
        assert abs(p_lean - p_full) <= 10 * lean.pruned_weight

    def test_mode_count_validated(self, mode_tables):
        plan = one_cycle_plan([0.1, 0.2])
        with pytest.raises(ValueError):
            multimode.run_conditional_exact(plan, mode_tables[3], False)


class TestAgainstFockOracle:
    def test_two_ion_one_cycle_metrics(self, mode_tables):
        weights = [0.3 + 0.2j, -0.4j]
        plan = one_cycle_plan(weights, alpha=0.3)
        entry = multimode.cycle_displacements(mode_tables[2], plan.params, 80.0, False)
        assert np.max(np.abs(entry.betas)) * 2 + abs(plan.alpha) <= 1.5  # oracle regime

        ms, p = multimode.run_conditional_exact(plan, mode_tables[2], False)
        assert ms.n_terms == 4  # stretch-mode labels keep all spin branches distinct
        fact = multimode.run_conditional_factorized(plan, mode_tables[2], False)
        ideal = protocol.run_ideal(plan).state
        rep = multimode.leakage_report(ms, ideal, fact)

        cutoff = 24
        psi = two_mode_conditional(np.asarray(weights), entry.betas, plan.alpha, cutoff)
        oracle = two_mode_metrics(psi, protocol.to_fock(ideal, cutoff).amps)

        assert abs(p - oracle["p_exact"]) <= 1e-6
        assert abs(rep.per_mode_mean_phonon[0] - oracle["mean_phonon"][0]) <= 1e-6
        assert abs(rep.per_mode_mean_phonon[1] - oracle["mean_phonon"][1]) <= 1e-6
        assert abs(rep.com_fidelity_vs_ideal - oracle["com_fidelity"]) <= 1e-6
        assert abs(rep.com_purity - oracle["com_purity"]) <= 1e-6

    def test_energy_bookkeeping(self, mode_tables):
        weights = [0.5, -0.2 + 0.2j]
        plan = one_cycle_plan(weights, alpha=0.2j)
        entry = multimode.cycle_displacements(mode_tables[2], plan.params, 80.0, False)
        ms, _ = multimode.run_conditional_exact(plan, mode_tables[2], False)
        total_gram = sum(ms.mean_phonon(l) for l in range(2))
        psi = two_mode_conditional(np.asarray(weights), entry.betas, plan.alpha, 24)
        oracle = two_mode_metrics(psi, np.eye(25)[0])
        total_fock = sum(oracle["mean_phonon"])
        assert abs(total_gram - total_fock) <= 1e-6

    def test_factorization_gap_against_fock(self, mode_tables):
        weights = [0.3 + 0.2j, -0.4j]
        plan = one_cycle_plan(weights, alpha=0.3)
        entry = multimode.cycle_displacements(mode_tables[2], plan.params, 80.0, False)
        ms, p = multimode.run_conditional_exact(plan, mode_tables[2], False)
        fact = multimode.run_conditional_factorized(plan, mode_tables[2], False)
        ideal = protocol.run_ideal(plan).state
        rep = multimode.leakage_report(ms, ideal, fact)
        assert rep.factorization_gap > 1e-4  # genuinely nonzero here

        cutoff = 24
        psi = two_mode_conditional(np.asarray(weights), entry.betas, plan.alpha, cutoff).reshape(-1)
        psi_f = np.zeros((cutoff + 1) ** 2, dtype=complex)
        for c, row in zip(fact.coeffs, fact.labels):
            psi_f += c * np.kron(
                fock.coherent_fock(row[0], cutoff).amps,
                fock.coherent_fock(row[1], cutoff).amps,
            )
        fid = abs(np.vdot(psi_f, psi)) ** 2 / (
            np.vdot(psi_f, psi_f).real * np.vdot(psi, psi).real
        )
        assert abs(rep.factorization_gap - (1 - fid)) <= 1e-6


class TestFactorized:
    def test_single_coherent_term_mean_phonon(self):
        ms = multimode.MultimodeSuperposition(
            coeffs=np.array([0.7j]), labels=np.array([[0.3 + 0.4j, -0.2j]])
        )
        assert ms.mean_phonon(0) == pytest.approx(0.25, abs=1e-12)
        assert ms.mean_phonon(1) == pytest.approx(0.04, abs=1e-12)

    def test_exact_when_spectators_off(self, mode_tables):
        plan = one_cycle_plan([0.2, -0.6j], alpha=0.4)
        entry = multimode.cycle_displacements(mode_tables[2], plan.params, 80.0, False)
        masked = entry.betas.copy()
        masked[:, 1:] = 0
        masked_entry = multimode.DisplacementPlanEntry(masked)
        ms, _ = multimode.run_conditional_exact(plan, mode_tables[2], False, betas=masked_entry)
        fact = multimode.run_conditional_factorized(plan, mode_tables[2], False, betas=masked_entry)
        ideal = protocol.run_ideal(plan).state
        rep = multimode.leakage_report(ms, ideal, fact)
        assert rep.factorization_gap <= 1e-12
        assert np.max(rep.per_mode_mean_phonon[1:]) <= 1e-14
        assert rep.com_purity >= 1 - 1e-12

    def test_generic_gap_positive(self, mode_tables):
        plan = one_cycle_plan([0.3 + 0.2j, -0.4j])
        ms, _ = multimode.run_conditional_exact(plan, mode_tables[2], False)
        fact = multimode.run_conditional_factorized(plan, mode_tables[2], False)
        ideal = protocol.run_ideal(plan).state
        rep = multimode.leakage_report(ms, ideal, fact)
        assert 0 < rep.factorization_gap < 1


class TestLeakageAnalysis:
    def test_isolation_at_unit_detuning_window(self, mode_tables):
        # delta tuned so close to the COM sideband that a full window is one
        # radian of COM phase; spectators then average out in the integrated
        # picture and the COM preparation survives almost untouched.
        for n in (2, 3):
            params = params_for(n, eta=0.05, omega=0.01, delta=0.999)
            plan = protocol.ProtocolPlan(
                params=params,
                alpha=0j,
                cycles=(protocol.Cycle(duration=1000.0, weights=[0.0] * n),),
            )
            rep, p = multimode.analyze_plan(plan, mode_tables[n], integrated=True)
            assert rep.com_fidelity_vs_ideal >= 1 - 1e-10
            assert np.max(rep.per_mode_mean_phonon[1:]) <= 1e-10
            assert rep.com_purity >= 1 - 1e-10

    def test_endpoint_variant_reports_more_leakage(self, mode_tables):
        params = params_for(2, eta=0.05, omega=0.01, delta=0.999)
        plan = protocol.ProtocolPlan(
            params=params,
            alpha=0j,
            cycles=(protocol.Cycle(duration=1000.0, weights=[0.0, 0.0]),),
        )
        rep_mid, _ = multimode.analyze_plan(plan, mode_tables[2], integrated=True)
        rep_end, _ = multimode.analyze_plan(plan, mode_tables[2], integrated=False)
        assert rep_end.per_mode_mean_phonon[1] > 100 * rep_mid.per_mode_mean_phonon[1]

    def test_mismatched_inputs_rejected(self, mode_tables):
        plan = one_cycle_plan([0.1, 0.2])
        ms, _ = multimode.run_conditional_exact(plan, mode_tables[2], False)
        fact3 = multimode.MultimodeSuperposition(
            coeffs=np.array([1.0 + 0j]), labels=np.zeros((1, 3), dtype=complex)
        )
        ideal = protocol.run_ideal(plan).state
        with pytest.raises(ValueError):
            multimode.leakage_report(ms, ideal, fact3)
