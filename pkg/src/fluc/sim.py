"""Deterministic stand-in for a SITL autopilot.

Point-mass kinematics on a fixed tick: cruise and climb speeds act on
independent axes, commands go through a MAVLink-style ack/nack check
against the flight-phase graph, and telemetry is sampled at 1 Hz.
"""

from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import language, planner
from .geodesy import EnuPoint, GeoPoint, enu_from_geo, geo_from_enu, euclid3_m
from .language import ValidatedMission, bound_args
from .planner import Obstacle, route_around, optimize_order
from .supply import GroundUser, RadioModel, supply_waypoints

DEFAULT_CRUISE_SPEED = 10.0
DEFAULT_CLIMB_SPEED = 2.5
DEFAULT_ACCEPTANCE_RADIUS = 2.0
DEFAULT_PLACE_ALT = 20.0
SIM_DT = 0.1
TRACE_SAMPLE_PERIOD = 1.0


class Phase(str, enum.Enum):
    DISARMED = "Disarmed"
    ARMED = "Armed"
    TAKING_OFF = "TakingOff"
    EN_ROUTE = "EnRoute"
    RETURNING = "Returning"
    LANDING = "Landing"
    LANDED = "Landed"


class ItemKind(str, enum.Enum):
    TAKEOFF = "Takeoff"
    WAYPOINT = "Waypoint"
    RETURN_TO_LAUNCH = "ReturnToLaunch"
    LAND = "Land"


class NonPositiveDt(ValueError):
    pass


class CompileError(ValueError):
    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class SimTimeout(RuntimeError):
    """run_until hit its simulated-time budget; carries the partial trace."""

    def __init__(self, trace):
        self.trace = trace
        super().__init__("simulation timeout")


@dataclass(frozen=True)
class MissionItem:
    kind: ItemKind
    target: EnuPoint
    acceptance_radius: float = DEFAULT_ACCEPTANCE_RADIUS

    def __post_init__(self):
        if not (self.acceptance_radius > 0):
            raise ValueError(f"acceptance radius must be positive, got {self.acceptance_radius}")


@dataclass(frozen=True)
class TraceSample:
    t: float
    east: float
    north: float
    up: float
    lat: float
    lon: float
    alt: float
    phase: str

    def to_json_dict(self):
        return {"t": self.t, "east": self.east, "north": self.north, "up": self.up,
                "lat": self.lat, "lon": self.lon, "alt": self.alt, "phase": self.phase}


def trace_to_jsonl(trace) -> str:
    return "\n".join(json.dumps(s.to_json_dict()) for s in trace) + "\n"


def trace_from_jsonl(text: str):
    samples = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        samples.append(TraceSample(**d))
    return samples


# ---------------------------------------------------------------------------
# Mission compilation
# ---------------------------------------------------------------------------

@dataclass
class CompileDeps:
    """Resolvers the compiler needs for the non-geometric primitives."""

    resolve_place: Optional[Callable[[str], GeoPoint]] = None
    radio: RadioModel = field(default_factory=RadioModel)
    place_alt: float = DEFAULT_PLACE_ALT
    obstacle_margin: float = planner.DEFAULT_MARGIN_M


def compile_mission(mission: ValidatedMission, home: GeoPoint,
                    deps: Optional[CompileDeps] = None):
    """Lower a validated script to autopilot mission items in the local frame.

    A virtual position is tracked so relative moves chain; obstacles
    registered with set_obstacle re-route every subsequent leg.
    """
    deps = deps or CompileDeps()
    items = []
    obstacles = []
    pos = EnuPoint(0.0, 0.0, 0.0)

    def add_waypoint(target: EnuPoint, line: int):
        nonlocal pos
        if obstacles:
            try:
                leg = route_around(pos, target, obstacles, deps.obstacle_margin)
            except planner.Unroutable as e:
                raise CompileError(str(e), line) from e
            for p in leg[1:]:
                items.append(MissionItem(kind=ItemKind.WAYPOINT, target=p))
        else:
            items.append(MissionItem(kind=ItemKind.WAYPOINT, target=target))
        pos = target

    for call in mission.calls:
        bound = bound_args(call)
        if call.name == "takeoff":
            pos = EnuPoint(pos.east, pos.north, bound["alt"])
            items.append(MissionItem(kind=ItemKind.TAKEOFF, target=pos))
        elif call.name == "go_to_real_world_coords":
            try:
                target = enu_from_geo(home, GeoPoint(bound["lat"], bound["lon"], bound["alt"]))
            except Exception as e:
                raise CompileError(str(e), call.line) from e
            add_waypoint(target, call.line)
        elif call.name == "move_relative":
            add_waypoint(EnuPoint(pos.east + bound["d_east"],
                                  pos.north + bound["d_north"],
                                  pos.up + bound["d_up"]), call.line)
        elif call.name == "go_to_place":
            if deps.resolve_place is None:
                raise CompileError("no place resolver configured", call.line)
            try:
                place = deps.resolve_place(bound["name"])
            except Exception as e:
                raise CompileError(f"could not resolve {bound['name']!r}: {e}", call.line) from e
            enu = enu_from_geo(home, place)
            add_waypoint(EnuPoint(enu.east, enu.north, deps.place_alt), call.line)
        elif call.name == "fly_waypoints":
            flat = bound["points_list"]
            wps = [EnuPoint(*flat[i:i + 3]) for i in range(0, len(flat), 3)]
            if bound["optimize_flag"] == 1.0:
                wps = list(optimize_order(pos, wps).points)
            for wp in wps:
                add_waypoint(wp, call.line)
        elif call.name == "set_obstacle":
            obstacles.append(Obstacle(center_east=bound["cx"], center_north=bound["cy"],
                                      radius=bound["radius"], height=bound["height"]))
        elif call.name == "upload_and_start_supply_mission":
            gus = [GroundUser(x=x, y=y, z=z, traffic=t)
                   for x, y, z, t in zip(bound["x"], bound["y"], bound["z"], bound["traffic"])]
            try:
                wps = supply_waypoints(gus, pos, deps.radio)
            except Exception as e:
                raise CompileError(str(e), call.line) from e
            for wp in wps:
                add_waypoint(wp, call.line)
        elif call.name == "set_return":
            items.append(MissionItem(kind=ItemKind.RETURN_TO_LAUNCH,
                                     target=EnuPoint(0.0, 0.0, pos.up)))
            pos = EnuPoint(0.0, 0.0, 0.0)
        elif call.name == "land":
            items.append(MissionItem(kind=ItemKind.LAND,
                                     target=EnuPoint(pos.east, pos.north, 0.0)))
            pos = EnuPoint(pos.east, pos.north, 0.0)
        else:
            raise CompileError(f"unsupported primitive {call.name!r}", call.line)
    return items


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Arm:
    pass


@dataclass(frozen=True)
class UploadMission:
    items: tuple


@dataclass(frozen=True)
class StartMission:
    pass


@dataclass(frozen=True)
class Abort:
    pass


@dataclass(frozen=True)
class Ack:
    ok: bool = True
    reason: str = ""


def Nack(reason: str) -> Ack:
    return Ack(ok=False, reason=reason)


# Allowed phase transitions; anything else is an invariant violation.
PHASE_GRAPH = {
    Phase.DISARMED: {Phase.ARMED},
    Phase.ARMED: {Phase.TAKING_OFF},
    Phase.TAKING_OFF: {Phase.EN_ROUTE, Phase.RETURNING, Phase.LANDING},
    Phase.EN_ROUTE: {Phase.EN_ROUTE, Phase.RETURNING, Phase.LANDING},
    Phase.RETURNING: {Phase.LANDING},
    Phase.LANDING: {Phase.LANDED},
    Phase.LANDED: set(),
}


class Vehicle:
    """One simulated vehicle; owned by a single stepping loop."""

    def __init__(self, home: GeoPoint,
                 cruise_speed: float = DEFAULT_CRUISE_SPEED,
                 climb_speed: float = DEFAULT_CLIMB_SPEED):
        self.home = home
        self.cruise_speed = cruise_speed
        self.climb_speed = climb_speed
        self.phase = Phase.DISARMED
        self.position = EnuPoint(0.0, 0.0, 0.0)
        self.sim_time = 0.0
        self.battery_proxy = 0.0  # meters flown
        self.mission: list = []
        self.item_index = -1
        self.mission_complete = False
        self._lock = threading.Lock()

    # -- commands ----------------------------------------------------------

    def command(self, cmd) -> Ack:
        with self._lock:
            return self._command(cmd)

    def _command(self, cmd) -> Ack:
        if isinstance(cmd, Arm):
            if self.phase is not Phase.DISARMED:
                return Nack(f"cannot arm while {self.phase.value}")
            self.phase = Phase.ARMED
            return Ack()
        if isinstance(cmd, UploadMission):
            if self.phase in (Phase.EN_ROUTE, Phase.TAKING_OFF, Phase.RETURNING, Phase.LANDING):
                return Nack(f"cannot upload while {self.phase.value}")
            if not cmd.items:
                return Nack("empty mission")
            self.mission = list(cmd.items)
            self.item_index = -1
            self.mission_complete = False
            return Ack()
        if isinstance(cmd, StartMission):
            if self.phase is not Phase.ARMED:
                return Nack(f"cannot start while {self.phase.value}")
            if not self.mission:
                return Nack("no mission")
            self.item_index = 0
            first = self.mission[0]
            self.phase = Phase.TAKING_OFF if first.kind is ItemKind.TAKEOFF else Phase.EN_ROUTE
            return Ack()
        if isinstance(cmd, Abort):
            if self.phase in (Phase.TAKING_OFF, Phase.EN_ROUTE):
                self.phase = Phase.RETURNING
                self.item_index = -1
                return Ack()
            return Nack(f"cannot abort while {self.phase.value}")
        return Nack(f"unknown command {cmd!r}")

    # -- kinematics --------------------------------------------------------

    def _active_target(self) -> Optional[EnuPoint]:
        if self.phase is Phase.RETURNING:
            return EnuPoint(0.0, 0.0, self.position.up)
        if self.phase is Phase.LANDING:
            return EnuPoint(self.position.east, self.position.north, 0.0)
        if 0 <= self.item_index < len(self.mission):
            return self.mission[self.item_index].target
        return None

    def step(self, dt: float):
        if not (0 < dt <= 1.0):
            raise NonPositiveDt(f"dt must be in (0, 1], got {dt}")
        with self._lock:
            self._step(dt)
        return self.state()

    def _step(self, dt: float):
        self.sim_time += dt
        target = self._active_target()
        if target is None:
            return

        p = self.position
        de, dn, du = target.east - p.east, target.north - p.north, target.up - p.up
        vertical_first = self.phase is Phase.TAKING_OFF
        horiz = math.hypot(de, dn)

        move_e = move_n = move_u = 0.0
        if not (vertical_first and abs(du) > 1e-9):
            if horiz > 0:
                reach = min(self.cruise_speed * dt, horiz)
                move_e = de / horiz * reach
                move_n = dn / horiz * reach
        if du != 0.0:
            move_u = math.copysign(min(self.climb_speed * dt, abs(du)), du)

        new = EnuPoint(p.east + move_e, p.north + move_n, max(0.0, p.up + move_u))
        self.battery_proxy += euclid3_m(p, new)
        self.position = new

        if euclid3_m(new, target) <= self._acceptance():
            self._complete_item()

    def _acceptance(self) -> float:
        if self.phase in (Phase.RETURNING, Phase.LANDING):
            return DEFAULT_ACCEPTANCE_RADIUS if self.phase is Phase.RETURNING else 0.5
        if 0 <= self.item_index < len(self.mission):
            return self.mission[self.item_index].acceptance_radius
        return DEFAULT_ACCEPTANCE_RADIUS

    def _complete_item(self):
        if self.phase is Phase.RETURNING:
            self.phase = Phase.LANDING
            return
        if self.phase is Phase.LANDING:
            self.phase = Phase.LANDED
            self.position = EnuPoint(self.position.east, self.position.north, 0.0)
            self.mission_complete = True
            return

        item = self.mission[self.item_index]
        if item.kind is ItemKind.RETURN_TO_LAUNCH:
            self.phase = Phase.LANDING
            self.item_index = len(self.mission)
            return
        if item.kind is ItemKind.LAND:
            self.phase = Phase.LANDING
            return

        if self.item_index + 1 < len(self.mission):
            self.item_index += 1
            nxt = self.mission[self.item_index]
            if nxt.kind is ItemKind.RETURN_TO_LAUNCH:
                self.phase = Phase.RETURNING
                self.item_index = len(self.mission)
            elif nxt.kind is ItemKind.LAND:
                self.phase = Phase.LANDING
                self.item_index = len(self.mission)
            else:
                self.phase = Phase.EN_ROUTE
        else:
            # Last item, no RTL: hover in place at the final index.
            self.phase = Phase.EN_ROUTE
            self.mission_complete = True

    # -- observation -------------------------------------------------------

    def state(self) -> TraceSample:
        geo = geo_from_enu(self.home, self.position)
        return TraceSample(t=round(self.sim_time, 6),
                           east=self.position.east, north=self.position.north,
                           up=self.position.up,
                           lat=geo.lat, lon=geo.lon, alt=geo.alt,
                           phase=self.phase.value)


def run_until(vehicle: Vehicle, predicate, sim_timeout: float,
              on_sample=None):
    """Step at a fixed 0.1 s tick until `predicate(vehicle)` holds.

    Returns the 1 Hz-sampled trace; raises :class:`SimTimeout` (carrying
    the partial trace) when simulated time runs out first.
    """
    if not (sim_timeout > 0):
        raise ValueError(f"sim timeout must be positive, got {sim_timeout}")
    trace = [vehicle.state()]
    if on_sample:
        on_sample(trace[0])
    next_sample = vehicle.sim_time + TRACE_SAMPLE_PERIOD
    deadline = vehicle.sim_time + sim_timeout
    while not predicate(vehicle):
        if vehicle.sim_time >= deadline:
            raise SimTimeout(trace)
        vehicle.step(SIM_DT)
        if vehicle.sim_time >= next_sample - 1e-9:
            sample = vehicle.state()
            trace.append(sample)
            next_sample += TRACE_SAMPLE_PERIOD
            if on_sample:
                on_sample(sample)
    final = vehicle.state()
    if final.t > trace[-1].t:
        trace.append(final)
        if on_sample:
            on_sample(final)
    return trace
