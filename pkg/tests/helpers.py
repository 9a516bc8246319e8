"""Shared builders for environment-level tests."""

import numpy as np

from dogfight.geometry import Vec2
from dogfight.simcore import (
    AircraftState,
    SimConfig,
    TEAM_AGENT,
    World,
    make_spec,
)


def make_aircraft(aid, type_id="AC1", team=TEAM_AGENT, pos=(15.0, 15.0),
                  heading=0.0, speed=None, cannon=200, rockets=None):
    spec = make_spec(type_id)
    if rockets is None:
        rockets = 5 if spec.has_rockets else 0
    return AircraftState(
        id=aid, team=team, spec=spec, pos=Vec2(*pos),
        heading=heading, target_heading=heading,
        speed=speed if speed is not None else spec.min_speed,
        cannon_ammo=cannon, rockets=rockets,
    )


def make_world(aircraft, map_size=30.0, seed=0, cfg=None):
    return World(aircraft=aircraft, map_size=map_size,
                 rng=np.random.default_rng(seed),
                 cfg=cfg or SimConfig())
