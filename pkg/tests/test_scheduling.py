"""Scheduling rules: message legality, exhaustive oracle sweep, costs."""

import itertools

import numpy as np
import pytest

from tomcollab.core import TerminalKind
from tomcollab.rng import make_rng
from tomcollab.scheduling import (
    Inform,
    Propose,
    Reject,
    SchedScenario,
    SchedulingGame,
    SchedulingSpec,
    action_space,
    all_schedules,
    consistent_schedule_mask,
    generate_schedule,
    index_schedule,
    legal_informs,
    load_scenarios,
    reset,
    save_scenarios,
    schedule_index,
    step,
)

from .oracles import scheduling_oracle_step

A_SCHED = (0, 0, 1, 1, 1, 0, 1, 1)
B_SCHED = (1, 0, 1, 1, 1, 1, 1, 1)
SPEC8 = SchedulingSpec(D=8)


def make_scenario(a, b):
    return SchedScenario((tuple(a), tuple(b)))


class TestLegality:
    def test_legal_informs_worked_example(self):
        got = set(legal_informs(A_SCHED))
        assert got == {(2, 2), (3, 3), (4, 4), (2, 3), (3, 4), (2, 4), (6, 6), (7, 7), (6, 7)}

    def test_all_free_schedule_has_no_informs(self):
        assert legal_informs((0, 0, 0)) == []

    def test_all_occupied_triangle_count(self):
        assert len(legal_informs((1, 1, 1))) == 3 * 4 // 2

    def test_action_space_counts(self):
        assert len(action_space(8)) == 36 + 8 + 1
        assert len(action_space(1)) == 3

    def test_action_space_canonical_order(self):
        acts = action_space(3)
        assert acts == action_space(3)  # stable
        assert acts[:3] == (Inform(0, 0), Inform(0, 1), Inform(0, 2))
        assert acts[-4:] == (Propose(0), Propose(1), Propose(2), Reject())


class TestStepRules:
    def test_propose_common_free_slot_succeeds(self):
        scenario = make_scenario(A_SCHED, B_SCHED)
        out = step(SPEC8, reset(SPEC8, scenario), scenario, Propose(1))
        assert out.kind is TerminalKind.SUCCESS
        assert out.rewards == (1.0, 1.0)

    def test_reject_with_common_slot_fails(self):
        scenario = make_scenario(A_SCHED, B_SCHED)
        out = step(SPEC8, reset(SPEC8, scenario), scenario, Reject())
        assert out.kind is TerminalKind.FAILURE
        assert out.rewards == (-2.0, -2.0)

    def test_inform_with_free_slot_is_wrong_message(self):
        # slots 0 and 1 are free for the sender, so (0..2) is untruthful
        scenario = make_scenario(A_SCHED, B_SCHED)
        out = step(SPEC8, reset(SPEC8, scenario), scenario, Inform(0, 2))
        assert out.kind is TerminalKind.FAILURE
        assert out.reason == "untruthful_inform"
        assert out.rewards == (-2.0, -2.0)  # the failing message costs nothing

    def test_costs_charged_to_sender_only(self):
        scenario = make_scenario(A_SCHED, B_SCHED)
        state = reset(SPEC8, scenario)
        out = step(SPEC8, state, scenario, Inform(2, 4))  # A informs
        assert not out.terminal and out.rewards == (0.0, 0.0)
        assert out.next_state.costs == (-0.1, 0.0)
        out2 = step(SPEC8, out.next_state, scenario, Inform(0, 0))  # B informs
        assert out2.next_state.costs == (-0.1, -0.1)
        out3 = step(SPEC8, out2.next_state, scenario, Propose(1))  # A proposes
        assert out3.kind is TerminalKind.SUCCESS
        assert out3.rewards == (1.0 - 0.1, 1.0 - 0.1)

    def test_terminal_reward_includes_own_costs_only(self):
        scenario = make_scenario((1, 1, 0, 0), (1, 0, 0, 1))
        spec = SchedulingSpec(D=4)
        state = reset(spec, scenario)
        out = step(spec, state, scenario, Inform(0, 1))  # A pays 0.1
        out = step(spec, out.next_state, scenario, Propose(3))  # B proposes occupied
        assert out.kind is TerminalKind.FAILURE
        assert out.rewards == (-2.0 - 0.1, -2.0)

    def test_step_cap_forces_failure(self):
        spec = SchedulingSpec(D=4, step_cap=3)
        scenario = make_scenario((1, 1, 0, 0), (1, 1, 0, 0))
        state = reset(spec, scenario)
        out = step(spec, state, scenario, Inform(0, 0))
        out = step(spec, out.next_state, scenario, Inform(0, 0))
        out = step(spec, out.next_state, scenario, Inform(0, 0))
        assert out.kind is TerminalKind.FAILURE
        assert out.reason == "step_cap"
        # the capping message was legal, so it still cost its sender
        assert out.rewards == (-2.0 - 0.2, -2.0 - 0.1)

    def test_malformed_actions_raise(self):
        scenario = make_scenario(A_SCHED, B_SCHED)
        state = reset(SPEC8, scenario)
        with pytest.raises(ValueError):
            step(SPEC8, state, scenario, Propose(8))
        with pytest.raises(ValueError):
            step(SPEC8, state, scenario, Inform(3, 2))


class TestOracleEquivalence:
    def test_every_pair_every_single_action(self):
        for D in (1, 2, 3, 4):
            spec = SchedulingSpec(D=D)
            acts = action_space(D)
            for ai, bi in itertools.product(range(1 << D), repeat=2):
                a, b = index_schedule(ai, D), index_schedule(bi, D)
                scenario = make_scenario(a, b)
                state = reset(spec, scenario)
                for act_obj in acts:
                    if isinstance(act_obj, Inform):
                        oracle_act = ("inform", act_obj.start, act_obj.end)
                    elif isinstance(act_obj, Propose):
                        oracle_act = ("propose", act_obj.slot)
                    else:
                        oracle_act = ("reject",)
                    kind, cost = scheduling_oracle_step(a, b, 0, oracle_act, [])
                    out = step(spec, state, scenario, act_obj)
                    if kind == "running":
                        assert not out.terminal
                        assert out.next_state.costs == (-0.1, 0.0)
                    else:
                        assert out.kind.value == kind

    def test_random_multistep_return_accounting(self):
        # total returns must equal the outcome reward plus each side's costs
        rng = make_rng(3)
        spec = SchedulingSpec(D=4)
        acts = action_space(4)
        for _ in range(500):
            scenario = make_scenario(
                generate_schedule(rng, 4, 0.5), generate_schedule(rng, 4, 0.5)
            )
            state = reset(spec, scenario)
            totals = np.zeros(2)
            informs = [0, 0]
            while True:
                a = acts[rng.integers(len(acts))]
                out = step(spec, state, scenario, a)
                totals += out.rewards
                if not out.terminal and isinstance(a, Inform):
                    informs[state.turn] += 1
                if out.terminal:
                    base = 1.0 if out.kind is TerminalKind.SUCCESS else -2.0
                    expect = np.array(
                        [base - 0.1 * informs[0], base - 0.1 * informs[1]]
                    )
                    np.testing.assert_allclose(totals, expect, atol=1e-12)
                    break
                state = out.next_state


class TestGeneration:
    def test_bernoulli_slot_rate(self):
        rng = make_rng(4)
        samples = np.array([generate_schedule(rng, 8, 0.5) for _ in range(100_000)])
        assert np.abs(samples.mean(axis=0) - 0.5).max() < 0.02

    def test_p_limit_all_free(self):
        rng = make_rng(5)
        assert all(
            generate_schedule(rng, 8, 1e-12) == (0,) * 8 for _ in range(1000)
        )

    def test_seeded_reproducible(self):
        assert generate_schedule(make_rng(6), 8, 0.5) == generate_schedule(make_rng(6), 8, 0.5)


class TestMaskAndIndexing:
    def test_index_round_trip(self):
        for D in (1, 3, 5):
            for w in range(1 << D):
                assert schedule_index(index_schedule(w, D)) == w

    def test_index_is_big_endian_slot_string(self):
        assert index_schedule(0b011, 3) == (0, 1, 1)
        assert all_schedules(2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_empty_history_keeps_everything(self):
        np.testing.assert_array_equal(consistent_schedule_mask([], 3), np.ones(8))

    def test_single_inform_keeps_quarter(self):
        mask = consistent_schedule_mask([(2, 3)], 4)
        assert mask.sum() == 4  # 2^(D-2) schedules have slots 2 and 3 occupied
        bits = all_schedules(4)
        for w in range(16):
            assert mask[w] == (bits[w, 2] == 1 and bits[w, 3] == 1)

    def test_all_occupied_always_survives(self):
        intervals = [(0, 1), (3, 3), (1, 2)]
        mask = consistent_schedule_mask(intervals, 4)
        assert mask[schedule_index((1, 1, 1, 1))] == 1

    def test_inform_masks_match_actions(self):
        game = SchedulingGame(SchedulingSpec(D=3))
        for idx, act_obj in enumerate(game.actions):
            mask = game.inform_mask(idx)
            if isinstance(act_obj, Inform):
                np.testing.assert_array_equal(
                    mask, consistent_schedule_mask([tuple(act_obj)], 3)
                )
            else:
                assert mask is None


class TestScenarioFiles:
    def test_round_trip(self, tmp_path):
        rng = make_rng(7)
        spec = SchedulingSpec(D=4)
        scenarios = [
            make_scenario(generate_schedule(rng, 4, 0.5), generate_schedule(rng, 4, 0.5))
            for _ in range(10)
        ]
        path = tmp_path / "scen.json"
        save_scenarios(path, spec, scenarios)
        assert load_scenarios(path, spec) == scenarios

    def test_d_mismatch_rejected(self, tmp_path):
        spec = SchedulingSpec(D=4)
        path = tmp_path / "scen.json"
        save_scenarios(path, spec, [make_scenario((0, 1, 0, 1), (1, 1, 0, 0))])
        with pytest.raises(ValueError):
            load_scenarios(path, SchedulingSpec(D=5))


def test_codec_dimensions_consistent():
    game = SchedulingGame(SchedulingSpec(D=3))
    scenario = make_scenario((0, 1, 1), (1, 0, 0))
    state = game.reset(scenario)
    out = game.step(state, scenario, 1)  # Inform(0, 1) is untruthful here -> terminal
    assert out.terminal
    pub = game.encode_public(scenario, state)
    assert pub.shape == (game.public_dim(),)
    for agent in (0, 1):
        own = game.private_index(scenario, agent)
        bob = game.bob_init(agent)
        assert game.q_row(agent, pub, own, 5, bob).shape == (game.q_dim(agent),)
        assert game.q_rows(agent, pub, own, bob).shape == (8, game.q_dim(agent))
        assert game.pi_rows(agent, pub).shape == (8, game.pi_dim(agent))
        assert game.f_row(agent, pub, bob, 0).shape == (game.f_dim(agent),)


def test_public_encoding_tracks_informed_slots():
    game = SchedulingGame(SchedulingSpec(D=4))
    scenario = make_scenario((1, 1, 0, 0), (0, 1, 1, 0))
    state = game.reset(scenario)
    out = game.step(state, scenario, 1)  # A: Inform(0, 1)
    state = out.next_state
    out = game.step(state, scenario, game.actions.index(Inform(1, 2)))  # B
    enc = game.encode_public(scenario, out.next_state)
    np.testing.assert_array_equal(enc[:4], [1, 1, 0, 0])  # A informed 0-1
    np.testing.assert_array_equal(enc[4:8], [0, 1, 1, 0])  # B informed 1-2
    assert enc[8] == pytest.approx(2 / 20)
