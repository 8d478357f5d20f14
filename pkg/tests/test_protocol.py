import math

import numpy as np
import pytest
from scipy.stats import chisquare

from triwell import (
    AuxiliaryPrep,
    CoherentSpec,
    CrossSpeciesParams,
    FockCutoff,
    FrequencyConditionViolated,
    HamiltonianTerm,
    JosephsonParams,
    KerrParams,
    ProtocolConfig,
    SuperpositionSpec,
    build_protocol_state,
    correct_and_score,
    fidelity,
    measure_bell,
    oracle_evolve,
    prepare_cat_superposition,
    reference_state,
    run_protocol,
    substream,
    tensor,
)
from triwell.fock import StateVector, coherent_amplitudes
from triwell.protocol import CORRECTIONS_FOR_BRANCH, BellMeasurement


def four_branch_state(a_w, b_w, gamma, alpha, beta, cutoff):
    """Direct construction of the post-collision tripartite state."""
    d = cutoff.dim

    def coh(x):
        return coherent_amplitudes(x, d)

    def kron3(x, y, z):
        return np.kron(np.kron(x, y), z)

    amps = 0.5 * (
        -1j * kron3(coh(gamma), coh(alpha), a_w * coh(beta) - b_w * coh(-beta))
        + kron3(coh(gamma), coh(-alpha), a_w * coh(-beta) + b_w * coh(beta))
        + 1j * kron3(coh(-gamma), coh(alpha), a_w * coh(-beta) - b_w * coh(beta))
        + kron3(coh(-gamma), coh(-alpha), a_w * coh(beta) + b_w * coh(-beta))
    )
    return StateVector(3, cutoff, amps / np.linalg.norm(amps))


def branch_state(branch, a_w, b_w, beta, cutoff):
    """Mode-3 conditional for each branch, up to normalization."""
    d = cutoff.dim
    forms = {
        0: a_w * coherent_amplitudes(beta, d) + b_w * coherent_amplitudes(-beta, d),
        1: a_w * coherent_amplitudes(beta, d) - b_w * coherent_amplitudes(-beta, d),
        2: a_w * coherent_amplitudes(-beta, d) + b_w * coherent_amplitudes(beta, d),
        3: a_w * coherent_amplitudes(-beta, d) - b_w * coherent_amplitudes(beta, d),
    }
    amps = forms[branch]
    return StateVector(1, cutoff, amps / np.linalg.norm(amps))


def make_config(**overrides):
    base = dict(
        target=SuperpositionSpec(1.0, 1.0, 2.0),
        alpha=CoherentSpec(2.0),
        beta=CoherentSpec(2.0j),
        kerr=KerrParams(1.0, 1.0),
        josephson=JosephsonParams(1000.0),
        cross_species=CrossSpeciesParams(0.5),
        cutoff=FockCutoff(26),
        trials=1,
        seed=0,
    )
    base.update(overrides)
    return ProtocolConfig(**base)


class TestProtocolState:
    def test_single_branch_target(self):
        config = make_config(target=SuperpositionSpec(1.0, 0.0, 2.0),
                             beta=CoherentSpec(2.0))
        state = build_protocol_state(config)
        direct = four_branch_state(1.0, 0.0, 2.0, 2.0, 2.0, config.cutoff)
        assert fidelity(state, direct) >= 1 - 1e-7

    def test_generic_superposition(self):
        config = make_config(target=SuperpositionSpec(0.6, 0.8j, 2.0))
        state = build_protocol_state(config)
        direct = four_branch_state(0.6, 0.8j, 2.0, 2.0, 2.0j, config.cutoff)
        assert fidelity(state, direct) >= 1 - 1e-7

    def test_frequency_condition(self):
        with pytest.raises(FrequencyConditionViolated):
            build_protocol_state(make_config(kerr=KerrParams(2.0, 1.0)))

    def test_oracle_equivalence_small(self):
        # staged pipeline vs dense evolution at reduced amplitudes
        cutoff = FockCutoff(9)
        kp = KerrParams(1.0, 1.0)
        config = make_config(target=SuperpositionSpec(0.7, 0.7, 0.5),
                             alpha=CoherentSpec(0.5), beta=CoherentSpec(0.5j),
                             cutoff=cutoff)
        state = build_protocol_state(config)
        t = math.pi / (2 * kp.kappa)
        target = prepare_cat_superposition(config.target, cutoff)
        chan0 = tensor(prepare_cat_superposition(SuperpositionSpec(1, 0, 0.5), cutoff),
                       prepare_cat_superposition(SuperpositionSpec(1, 0, 0.5j), cutoff))

        def stage_terms(i, j):
            return [
                HamiltonianTerm("number", (i,), kp.e0_over_hbar),
                HamiltonianTerm("number", (j,), kp.e0_over_hbar),
                HamiltonianTerm("kerr", (i,), kp.kappa),
                HamiltonianTerm("kerr", (j,), kp.kappa),
                HamiltonianTerm("cross_kerr", (i, j), 2 * kp.kappa),
            ]

        ref = tensor(target, oracle_evolve(chan0, stage_terms(0, 1), t))
        ref = oracle_evolve(ref, stage_terms(0, 1), t)
        assert np.abs(state.amplitudes - ref.amplitudes).max() < 1e-9


class TestBellMeasurement:
    def test_branch_encoding_invariant(self):
        config = make_config(trials=32)
        state = build_protocol_state(config)
        bell = BellMeasurement(state, config)
        for trial in range(32):
            outcome, _ = bell.sample(substream(1, trial))
            assert outcome.branch == 2 * outcome.bit_target + outcome.bit_mode2

    def test_equiprobable_branches(self):
        config = make_config()
        state = build_protocol_state(config)
        bell = BellMeasurement(state, config)
        counts = [0, 0, 0, 0]
        trials = 10_000
        for trial in range(trials):
            outcome, _ = bell.sample(substream(2, trial))
            counts[outcome.branch] += 1
        assert chisquare(counts).pvalue > 0.001

    @pytest.mark.parametrize("branch", [0, 1, 2, 3])
    def test_conditionals_match_the_branch_forms(self, branch):
        config = make_config(target=SuperpositionSpec(0.6, 0.8, 2.0))
        state = build_protocol_state(config)
        bell = BellMeasurement(state, config)
        seen = False
        for trial in range(200):
            outcome, mode3 = bell.sample(substream(3, trial))
            if outcome.branch != branch:
                continue
            seen = True
            ref = branch_state(branch, 0.6, 0.8, 2.0j, config.cutoff)
            assert fidelity(mode3, ref) >= 0.99
            break
        assert seen

    def test_homodyne_agrees_with_ideal_on_matched_seeds(self):
        kwargs = dict(
            target=SuperpositionSpec(1.0, 1.0, 2.5),
            alpha=CoherentSpec(2.5), beta=CoherentSpec(2.5j),
            kerr=KerrParams(1.0, 1.0), josephson=JosephsonParams(20000.0),
            cutoff=FockCutoff(32), trials=400, seed=17,
        )
        ideal = run_protocol(make_config(measurement_backend="ideal", **kwargs))
        homo = run_protocol(make_config(measurement_backend="homodyne", **kwargs))
        matches = np.mean([
            a.outcome.branch == b.outcome.branch
            for a, b in zip(ideal.records, homo.records)
        ])
        assert matches >= 0.98

    def test_homodyne_mode3_posterior_matches_branch_form(self):
        config = make_config(
            target=SuperpositionSpec(0.6, 0.8, 2.5), alpha=CoherentSpec(2.5),
            beta=CoherentSpec(2.5j), josephson=JosephsonParams(20000.0),
            cutoff=FockCutoff(32), measurement_backend="homodyne",
        )
        state = build_protocol_state(config)
        bell = BellMeasurement(state, config)
        checked = set()
        for trial in range(300):
            outcome, mode3 = bell.sample(substream(29, trial))
            if outcome.branch in checked:
                continue
            ref = branch_state(outcome.branch, 0.6, 0.8, 2.5j, config.cutoff)
            assert fidelity(mode3, ref) >= 0.99
            checked.add(outcome.branch)
            if len(checked) == 4:
                break
        assert len(checked) == 4

    def test_vacuum_target_builds_as_product(self):
        # gamma = 0 target: mode 1 stays vacuum and factors out of the state
        config = make_config(target=SuperpositionSpec(1.0, 0.0, 0.0))
        state = build_protocol_state(config)
        dist = np.abs(state.tensor_view()) ** 2
        mode0_marginal = dist.sum(axis=(1, 2))
        assert mode0_marginal[0] == pytest.approx(1.0, abs=1e-12)

    def test_measure_bell_entry_point(self):
        config = make_config()
        state = build_protocol_state(config)
        outcome, mode3 = measure_bell(state, config, substream(5))
        assert mode3.modes == 1
        assert outcome.branch in (0, 1, 2, 3)


class TestCorrectAndScore:
    def seen_branches(self, config, seeds=400):
        state = build_protocol_state(config)
        bell = BellMeasurement(state, config)
        out = {}
        for trial in range(seeds):
            rng = substream(config.seed, trial)
            outcome, mode3 = bell.sample(rng)
            if outcome.branch not in out:
                out[outcome.branch] = correct_and_score(mode3, outcome, config, rng)
            if len(out) == 4:
                break
        return out

    def test_branch_zero_needs_nothing(self):
        config = make_config()
        records = self.seen_branches(config)
        rec = records[0]
        assert rec.corrections_applied == ()
        assert rec.corrected and rec.fidelity >= 0.99

    def test_parity_branch_corrects(self):
        config = make_config()  # vacuum auxiliary: always even
        rec = self.seen_branches(config)[2]
        assert rec.corrections_applied == ("parity",)
        assert rec.corrected and rec.fidelity >= 0.98
        assert rec.outcome.aux_m == 0

    def test_correction_table_frozen(self):
        assert CORRECTIONS_FOR_BRANCH == {
            0: (), 1: ("displacement",), 2: ("parity",),
            3: ("displacement", "parity"),
        }
        config = make_config()
        records = self.seen_branches(config)
        for branch, rec in records.items():
            assert rec.corrections_applied == CORRECTIONS_FOR_BRANCH[branch]

    def test_p_d_zero_never_corrects_displacement_branches(self):
        config = make_config(p_d=0.0, trials=300)
        result = run_protocol(config)
        for rec in result.records:
            if rec.outcome.branch in (1, 3):
                assert not rec.corrected
                assert "displacement" not in rec.corrections_applied
            elif rec.outcome.branch in (0, 2):
                assert rec.corrected

    def test_real_beta_fails_displacement_branches(self):
        config = make_config(beta=CoherentSpec(2.0), trials=200)
        result = run_protocol(config)
        branches = {rec.outcome.branch for rec in result.records}
        assert {1, 3} & branches
        for rec in result.records:
            if rec.outcome.branch in (1, 3):
                assert not rec.corrected and rec.p_d_success is False


class TestRunProtocol:
    def test_seed_determinism(self):
        config = make_config(trials=64, p_d=0.6, aux=AuxiliaryPrep("coherent", 2.0))
        first = run_protocol(config)
        second = run_protocol(config)
        assert first.records == second.records
        assert first.summary == second.summary

    def test_success_rate_tracks_total_efficiency(self):
        trials = 4000
        config = make_config(trials=trials, p_d=0.5,
                             aux=AuxiliaryPrep("coherent", 2.0), seed=23)
        result = run_protocol(config)
        p_even = (1 + math.exp(-4.0)) / 2
        expected = (1 + p_even + 0.5 + 0.5 * p_even) / 4
        sigma = math.sqrt(expected * (1 - expected) / trials)
        assert abs(result.summary["success_rate"] - expected) <= 3 * sigma

    def test_reference_is_the_channel_amplitude(self):
        config = make_config(target=SuperpositionSpec(0.6, 0.8, 2.0))
        ref = reference_state(config)
        direct = prepare_cat_superposition(SuperpositionSpec(0.6, 0.8, 2.0j),
                                           config.cutoff)
        assert fidelity(ref, direct) == pytest.approx(1.0, abs=1e-12)

    def test_summary_shape(self):
        result = run_protocol(make_config(trials=16))
        assert set(result.summary) == {"trials", "branch_histogram", "success_rate",
                                       "mean_fidelity"}
        assert sum(result.summary["branch_histogram"]) == 16

    def test_config_validation(self):
        with pytest.raises(ValueError):
            make_config(trials=0)
        with pytest.raises(ValueError):
            make_config(measurement_backend="tomography")
        with pytest.raises(ValueError):
            make_config(p_d=1.5)
