"""Hand-evaluated reward cases for every reward function and variant."""

import pytest
from helpers import make_aircraft, make_world

from dogfight.config import ScenarioConfig
from dogfight.rewards import (
    assess_commander_action,
    commander_event_reward,
    escape_base_reward,
    favorable_situation,
    fight_base_reward,
    option_terminated,
    reward_commander,
    reward_escape,
    reward_fight,
    reward_kill_term,
    reward_standard,
)
from dogfight.simcore import CannonKill, OutOfBounds, RocketKill, TEAM_AGENT, TEAM_OPPONENT


def kill(shooter, victim, ata_deg=180.0, cannon_left=200, rockets_left=5):
    return CannonKill(shooter=shooter, victim=victim, victim_ata_deg=ata_deg,
                      shooter_cannon_left=cannon_left, shooter_rockets_left=rockets_left)


def standard_world():
    return make_world([
        make_aircraft(0, "AC1", TEAM_AGENT, pos=(10, 10)),
        make_aircraft(1, "AC2", TEAM_AGENT, pos=(12, 10)),
        make_aircraft(2, "AC1", TEAM_OPPONENT, pos=(20, 20)),
        make_aircraft(3, "AC2", TEAM_OPPONENT, pos=(22, 20)),
    ])


class TestKillTerm:
    def test_full_ammo_tail_shot(self):
        assert reward_kill_term(1.0, 205, 205) == pytest.approx(1.0)

    def test_all_ammo_spent(self):
        assert reward_kill_term(1.0, 0, 205) == pytest.approx(2.0)

    def test_head_on_full_ammo(self):
        assert reward_kill_term(0.0, 205, 205) == pytest.approx(0.0)

    def test_zero_allocation_drops_ammo_term(self):
        assert reward_kill_term(0.5, 0, 0) == pytest.approx(0.5)


class TestFightReward:
    def test_lone_boundary_exit(self):
        world = standard_world()
        assert reward_fight(world, [OutOfBounds(aircraft=0)], 0) == -5.0

    def test_two_kills_then_boundary_net_negative(self):
        world = standard_world()
        events = [kill(0, 2), kill(0, 3), OutOfBounds(aircraft=0)]
        assert reward_fight(world, events, 0) == pytest.approx(2.0 - 5.0)

    def test_destroyed_by_opponent(self):
        world = standard_world()
        assert reward_fight(world, [kill(2, 0)], 0) == -2.0

    def test_friendly_kill_punishes_shooter_only_in_base(self):
        world = standard_world()
        events = [kill(0, 1)]
        assert reward_fight(world, events, 0) == -2.0
        assert reward_fight(world, events, 1) == 0.0

    def test_fripun_also_punishes_victim(self):
        world = standard_world()
        events = [kill(0, 1)]
        assert reward_fight(world, events, 1, variant="fripun") == -2.0
        assert reward_fight(world, events, 0, variant="fripun") == -2.0

    def test_shfrac_combination(self):
        # own base 1.0 (tail kill at full ammo), teammate base 2.0
        world = standard_world()
        events = [kill(0, 2, ata_deg=180.0),
                  kill(1, 3, ata_deg=180.0, cannon_left=0, rockets_left=0)]
        assert fight_base_reward(world, events, 0) == pytest.approx(1.0)
        assert fight_base_reward(world, events, 1) == pytest.approx(2.0)
        assert reward_fight(world, events, 0, variant="shfrac", rho=0.5) == pytest.approx(2.0)

    def test_kill_reward_uses_event_snapshot(self):
        world = standard_world()
        # half the ammo spent at the kill instant: 1.0 + 0.5
        events = [kill(0, 2, ata_deg=180.0, cannon_left=100, rockets_left=None or 2)]
        # c_max = 205, c_rem = 102
        assert reward_fight(world, events, 0) == pytest.approx(1.0 + 103 / 205)


class TestEscapeReward:
    def test_quiet_step_is_zero(self):
        world = standard_world()
        assert reward_escape(world, [], 0) == 0.0

    def test_base_never_positive(self):
        world = standard_world()
        events = [kill(0, 2)]  # escape agents are not rewarded for kills
        assert reward_escape(world, events, 0) == 0.0

    def test_dist_penalty_when_close(self):
        world = standard_world()
        world.get(2).pos = world.get(0).pos + type(world.get(0).pos)(5, 0)
        assert reward_escape(world, [], 0, variant="dist") == pytest.approx(-0.1)

    def test_dist_bonus_when_far(self):
        world = standard_world()
        # opponents ~14+ km away
        world.get(2).pos = type(world.get(0).pos)(24.5, 17)
        world.get(3).pos = type(world.get(0).pos)(25, 20)
        assert reward_escape(world, [], 0, variant="dist") == pytest.approx(0.1)

    def test_dist_speed_needs_both_conditions(self):
        world = standard_world()
        world.get(2).pos = type(world.get(0).pos)(24.5, 17)
        world.get(3).pos = type(world.get(0).pos)(25, 20)
        world.get(0).speed = 650.0
        assert reward_escape(world, [], 0, variant="dist_speed") == pytest.approx(0.1)
        world.get(0).speed = 500.0
        assert reward_escape(world, [], 0, variant="dist_speed") == 0.0

    def test_non_positive_over_events(self):
        world = standard_world()
        events = [kill(2, 0), OutOfBounds(aircraft=0)]
        assert escape_base_reward(world, events, 0) == -7.0


class TestStandardReward:
    def test_distance_bonus(self):
        world = standard_world()
        world.get(2).pos = type(world.get(0).pos)(24.5, 17)
        world.get(3).pos = type(world.get(0).pos)(25, 20)
        assert reward_standard(world, [], 0) == pytest.approx(0.1)

    def test_no_proximity_penalty(self):
        world = standard_world()
        world.get(2).pos = world.get(0).pos + type(world.get(0).pos)(5, 0)
        assert reward_standard(world, [], 0) == 0.0

    def test_kill_term(self):
        world = standard_world()
        world.get(2).pos = type(world.get(0).pos)(14, 14)  # inside 13 km
        assert reward_standard(world, [kill(0, 2)], 0) == pytest.approx(1.0)


class TestFavorableSituation:
    def _world(self, gap_km, ata_deg):
        import math
        # agent at origin-ish heading north; opponent placed so the agent's
        # ATA equals ata_deg exactly
        dx = gap_km * math.sin(math.radians(ata_deg))
        dy = gap_km * math.cos(math.radians(ata_deg))
        return make_world([
            make_aircraft(0, "AC1", TEAM_AGENT, pos=(15, 15), heading=0.0),
            make_aircraft(1, "AC2", TEAM_OPPONENT, pos=(15 + dx, 15 + dy)),
        ])

    def test_close_and_aligned(self):
        assert favorable_situation(self._world(4.0, 10.0), 0, 1)

    def test_misaligned(self):
        assert not favorable_situation(self._world(4.0, 20.0), 0, 1)

    def test_too_far(self):
        assert not favorable_situation(self._world(6.0, 0.0), 0, 1)


class TestCommanderReward:
    def _favorable_world(self):
        return make_world([
            make_aircraft(0, "AC1", TEAM_AGENT, pos=(15, 15), heading=0.0),
            make_aircraft(1, "AC2", TEAM_AGENT, pos=(10, 10)),
            make_aircraft(2, "AC2", TEAM_OPPONENT, pos=(15, 19), heading=0.0),
            make_aircraft(3, "AC1", TEAM_OPPONENT, pos=(25, 25)),
        ])

    def test_attack_match_bonus(self):
        world = self._favorable_world()
        assert assess_commander_action(world, 0, 1, [2, 3]) == pytest.approx(0.1)

    def test_selecting_dead_opponent(self):
        world = self._favorable_world()
        world.get(3).alive = False
        assert assess_commander_action(world, 0, 2, [2, 3]) == pytest.approx(-0.1)

    def test_default_case_zero(self):
        world = self._favorable_world()
        assert assess_commander_action(world, 0, 2, [2, 3]) == 0.0

    def test_justified_escape(self):
        # opponent 4 km behind the agent, pointing at it; agent points away
        world = make_world([
            make_aircraft(0, "AC1", TEAM_AGENT, pos=(15, 15), heading=0.0),
            make_aircraft(2, "AC2", TEAM_OPPONENT, pos=(15, 11), heading=0.0),
        ])
        assert assess_commander_action(world, 0, 0, [2]) == pytest.approx(0.1)

    def test_unjustified_escape(self):
        world = self._favorable_world()
        assert assess_commander_action(world, 0, 0, [2, 3]) == 0.0

    def test_event_terms(self):
        world = self._favorable_world()
        events = [kill(0, 2), kill(3, 1), OutOfBounds(aircraft=0)]
        assert commander_event_reward(world, events, 0) == pytest.approx(1.0 - 2.0)
        assert commander_event_reward(world, events, 1) == pytest.approx(-1.0)

    def test_friendly_kill_term_omitted(self):
        world = self._favorable_world()
        assert commander_event_reward(world, [kill(0, 1)], 0) == 0.0

    def test_total_option_reward(self):
        world = self._favorable_world()
        total = reward_commander(world, 0, 1, [2, 3], [kill(0, 2)])
        assert total == pytest.approx(1.0 + 0.1)
        no_assess = reward_commander(world, 0, 1, [2, 3], [kill(0, 2)], assess=False)
        assert no_assess == pytest.approx(1.0)


class TestOptionTermination:
    def _calm_world(self):
        return make_world([
            make_aircraft(0, "AC1", TEAM_AGENT, pos=(15, 15)),
            make_aircraft(2, "AC2", TEAM_OPPONENT, pos=(15, 24), heading=180.0),
        ])

    def test_horizon(self):
        world = self._calm_world()
        assert option_terminated(world, 0, 10, [])
        assert not option_terminated(world, 0, 3, [])

    def test_destruction_event(self):
        world = self._calm_world()
        assert option_terminated(world, 0, 3, [kill(0, 2)])

    def test_boundary_proximity(self):
        world = self._calm_world()
        world.get(0).pos = type(world.get(0).pos)(4.0, 15.0)
        assert option_terminated(world, 0, 3, [])

    def test_favorable_pair_triggers(self):
        world = self._calm_world()
        world.get(2).pos = type(world.get(0).pos)(15.0, 19.0)
        world.get(2).heading = 180.0
        # agent heading north at opponent 4 km ahead -> favorable for agent
        assert option_terminated(world, 0, 3, [])


def test_option_horizon_configurable():
    scenario = ScenarioConfig(option_horizon=4)
    world = make_world([
        make_aircraft(0, "AC1", TEAM_AGENT, pos=(15, 15)),
        make_aircraft(2, "AC2", TEAM_OPPONENT, pos=(15, 24), heading=180.0),
    ])
    assert option_terminated(world, 0, 4, [], scenario)
    assert not option_terminated(world, 0, 3, [], scenario)
