from typing import Dict, List, Literal, Optional, Tuple
from hashlib import md5
import logging

import numpy as np
from pydantic import BaseModel, validator, root_validator

from relaycov.domain.model import NavGraph, Position, Rectangle, GraphValidationError, build_grid_graph
from relaycov.domain.simulation import (
    TargetSpec, RoundSettings, MasterPolicy, NodeCountPolicy, WaypointPolicy
)

logger = logging.getLogger(__name__)

EventScript = Dict[int, List[Tuple[str, int, Optional[int]]]]


class ScenarioError(Exception):
    """ A scenario that parses but cannot run on its graph; loc names the offending field. """

    def __init__(self, message, loc=()):
        super().__init__(message)
        self.message = message
        self.loc = tuple(loc)

    def __reduce__(self):
        return self.__class__, (self.message, self.loc)


class MapSpec(BaseModel):
    width: float
    height: float
    spacing: float
    base_x: float
    base_y: float

    class Config:
        extra = 'forbid'

    @validator('width', 'height', 'spacing')
    def extent_positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator('base_x', 'base_y')
    def base_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be non-negative")
        return v


class RectangleSpec(BaseModel):
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    class Config:
        extra = 'forbid'

    @root_validator(skip_on_failure=True)
    def corners_ordered(cls, values):
        if values["x_min"] > values["x_max"] or values["y_min"] > values["y_max"]:
            raise ValueError("corners out of order")
        return values

    def to_rectangle(self) -> Rectangle:
        return Rectangle(x_min=self.x_min, y_min=self.y_min, x_max=self.x_max, y_max=self.y_max)


class RandomObstacleSpec(BaseModel):
    count: int
    min_size: float
    max_size: float
    seed: Optional[int] = None
    max_attempts: int = 200

    class Config:
        extra = 'forbid'

    @validator('count')
    def count_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @validator('max_attempts')
    def attempts_positive(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @root_validator(skip_on_failure=True)
    def sizes_ordered(cls, values):
        if not 0 < values["min_size"] <= values["max_size"]:
            raise ValueError("need 0 < min_size <= max_size")
        return values


class TargetEntry(BaseModel):
    """ A target given either by node id or by a map position (snapped to the nearest node). """
    node: Optional[int] = None
    x: Optional[float] = None
    y: Optional[float] = None
    service_rounds: int = 1

    class Config:
        extra = 'forbid'

    @validator('service_rounds')
    def service_rounds_positive(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @root_validator(skip_on_failure=True)
    def node_or_position(cls, values):
        has_node = values["node"] is not None
        has_position = values["x"] is not None and values["y"] is not None
        if has_node == has_position:
            raise ValueError("give either node or both x and y")
        return values


class EventDirective(BaseModel):
    round: int
    action: Literal["remove", "detach", "reintegrate"]
    uav: int
    node: Optional[int] = None

    class Config:
        extra = 'forbid'

    @validator('round')
    def round_positive(cls, v):
        if v < 1:
            raise ValueError("rounds are numbered from 1")
        return v

    @validator('uav')
    def uav_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be non-negative")
        return v


class ScenarioConfig(BaseModel):
    map: MapSpec
    obstacles: List[RectangleSpec] = []
    random_obstacles: Optional[RandomObstacleSpec] = None
    targets: List[TargetEntry] = []
    fleet_size: int
    d_comm_max: float
    c_comm_max: float
    obstacle_weight: Optional[float] = None
    clutter_radius: Optional[float] = None
    betas: List[float]
    k: int = 1
    max_rounds: int
    seeds: List[int]
    window: int = 0
    events: List[EventDirective] = []
    waypoints: List[int] = []
    comm_range_factor: float = 1.0
    max_dual_ascent_iterations: Optional[int] = None
    audit_gap: bool = False

    class Config:
        extra = 'forbid'

    @validator('fleet_size', 'k', 'max_rounds')
    def at_least_one(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @validator('d_comm_max', 'c_comm_max')
    def positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator('obstacle_weight', 'clutter_radius')
    def optional_non_negative(cls, v):
        if v is not None and v < 0:
            raise ValueError("must be non-negative")
        return v

    @validator('betas')
    def betas_valid(cls, v):
        if not v:
            raise ValueError("at least one beta is required")
        if any(b < 0 for b in v):
            raise ValueError("betas must be non-negative")
        return v

    @validator('seeds')
    def seeds_non_empty(cls, v):
        if not v:
            raise ValueError("at least one seed is required")
        return v

    @validator('window')
    def window_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @validator('comm_range_factor')
    def factor_in_unit_interval(cls, v):
        if not 0 < v <= 1:
            raise ValueError("must lie in (0, 1]")
        return v

    @validator('max_dual_ascent_iterations')
    def iterations_positive(cls, v):
        if v is not None and v < 1:
            raise ValueError("must be at least 1")
        return v

    @root_validator(skip_on_failure=True)
    def consistent(cls, values):
        if values["obstacles"] and values["random_obstacles"] is not None:
            raise ValueError("give explicit obstacles or random_obstacles, not both")
        for event in values["events"]:
            if event.uav >= values["fleet_size"]:
                raise ValueError("event for UAV {} outside a fleet of {}".format(event.uav, values["fleet_size"]))
        return values

    def with_overrides(self, seeds: Optional[List[int]] = None, betas: Optional[List[float]] = None,
                       k: Optional[int] = None) -> "ScenarioConfig":
        data = self.dict()
        if seeds:
            data["seeds"] = list(seeds)
        if betas:
            data["betas"] = list(betas)
        if k is not None:
            data["k"] = k
        return ScenarioConfig(**data)


def layout_seed_for(config: ScenarioConfig, run_seed: int) -> Optional[int]:
    """ Seed that fixes the obstacle layout of a run; None for explicit layouts. """
    if config.random_obstacles is None:
        return None
    if config.random_obstacles.seed is not None:
        return config.random_obstacles.seed
    return run_seed


def layout_key(config: ScenarioConfig, layout_seed: Optional[int]) -> str:
    message = "{}|{}|{}|{}|{}|{}".format(config.map.json(), config.d_comm_max, config.c_comm_max,
                                         config.obstacle_weight, config.clutter_radius, config.fleet_size)
    message += "|{}".format([r.json() for r in config.obstacles])
    if config.random_obstacles is not None:
        message += "|{}|{}".format(config.random_obstacles.json(), layout_seed)
    return md5(message.encode('utf-8')).hexdigest()


def layout_acceptable(g: NavGraph, hop_budget: int) -> bool:
    """ Every obstacle-free node reachable from the base within hop_budget hops. """
    free = set(range(g.node_count)) - g.obstacle_nodes
    if g.reachable_nodes != free:
        return False
    return max(g.hop_distances.values()) <= hop_budget


def _grid_graph(config: ScenarioConfig, obstacles: List[Rectangle]) -> NavGraph:
    return build_grid_graph(
        width=config.map.width,
        height=config.map.height,
        spacing=config.map.spacing,
        base=Position(x=config.map.base_x, y=config.map.base_y),
        obstacles=obstacles,
        d_comm_max=config.d_comm_max,
        c_comm_max=config.c_comm_max,
        obstacle_weight=config.obstacle_weight,
        clutter_radius=config.clutter_radius,
    )


def random_rectangles(spec: RandomObstacleSpec, width: float, height: float,
                      rng: np.random.Generator) -> List[Rectangle]:
    rects = []
    for _ in range(spec.count):
        w = float(rng.uniform(spec.min_size, min(spec.max_size, width)))
        h = float(rng.uniform(spec.min_size, min(spec.max_size, height)))
        x = float(rng.uniform(0.0, max(width - w, 0.0)))
        y = float(rng.uniform(0.0, max(height - h, 0.0)))
        rects.append(Rectangle(x_min=round(x, 2), y_min=round(y, 2),
                               x_max=round(min(x + w, width), 2), y_max=round(min(y + h, height), 2)))
    return rects


def build_navgraph(config: ScenarioConfig, layout_seed: Optional[int] = None) -> NavGraph:
    if config.random_obstacles is None:
        g = _grid_graph(config, [r.to_rectangle() for r in config.obstacles])
        if not layout_acceptable(g, config.fleet_size):
            logger.warning("explicit obstacle layout leaves nodes unreachable or beyond %d hops; "
                           "they are excluded from coverage", config.fleet_size)
        return g

    spec = config.random_obstacles
    rng = np.random.default_rng(layout_seed)
    for attempt in range(spec.max_attempts):
        rects = random_rectangles(spec, config.map.width, config.map.height, rng)
        try:
            g = _grid_graph(config, rects)
        except GraphValidationError:
            continue
        if layout_acceptable(g, config.fleet_size):
            logger.debug("layout seed %s accepted after %d attempts", layout_seed, attempt + 1)
            return g
    raise GraphValidationError("No acceptable obstacle layout for seed {} after {} attempts.".format(
        layout_seed, spec.max_attempts))


def targets_for(config: ScenarioConfig, g: NavGraph) -> List[TargetSpec]:
    targets = []
    for index, entry in enumerate(config.targets):
        if entry.node is not None:
            node, loc = entry.node, ("targets", index, "node")
        else:
            node, loc = g.node_at(Position(x=entry.x, y=entry.y)), ("targets", index)
        if not 0 <= node < g.node_count:
            raise ScenarioError("node {} is not in the graph".format(node), loc)
        if node in g.obstacle_nodes:
            raise ScenarioError("node {} lies on an obstacle".format(node), loc)
        targets.append(TargetSpec(node=node, service_rounds=entry.service_rounds))
    return targets


def event_script(config: ScenarioConfig, g: Optional[NavGraph] = None) -> EventScript:
    """ Directives grouped by round. Replays the roster so a directive that
    cannot apply at its round is reported against its config entry. """
    script: EventScript = {}
    connected = set(range(config.fleet_size))
    departed = set()
    ordered = sorted(enumerate(config.events), key=lambda item: item[1].round)
    for index, event in ordered:
        script.setdefault(event.round, []).append((event.action, event.uav, event.node))
        if not connected:
            # the run halted earlier; nothing after it applies
            continue
        loc = ("events", index)
        if event.action == "remove":
            if event.uav in departed:
                raise ScenarioError("UAV {} already departed before round {}".format(event.uav, event.round), loc)
            connected.discard(event.uav)
            departed.add(event.uav)
        elif event.action == "detach":
            if event.uav not in connected:
                raise ScenarioError("UAV {} is not connected at round {}".format(event.uav, event.round), loc)
            connected.discard(event.uav)
        else:
            if event.uav in connected:
                raise ScenarioError("UAV {} is already part of the swarm at round {}".format(
                    event.uav, event.round), loc)
            if g is not None and event.node is not None and (
                    not 0 <= event.node < g.node_count or event.node in g.obstacle_nodes):
                raise ScenarioError("node {} is not a free graph node".format(event.node), loc + ("node",))
            connected.add(event.uav)
            departed.discard(event.uav)
    return script


def round_settings(config: ScenarioConfig) -> RoundSettings:
    return RoundSettings(comm_range_factor=config.comm_range_factor,
                         max_dual_ascent_iterations=config.max_dual_ascent_iterations,
                         audit_gap=config.audit_gap)


def master_policy(config: ScenarioConfig, g: Optional[NavGraph] = None) -> MasterPolicy:
    if not config.waypoints:
        return NodeCountPolicy()
    if g is not None:
        previous = g.base_node
        for index, node in enumerate(config.waypoints):
            loc = ("waypoints", index)
            if not 0 <= node < g.node_count or node in g.obstacle_nodes:
                raise ScenarioError("node {} is not a free graph node".format(node), loc)
            if node != previous and not g.has_edge(previous, node):
                raise ScenarioError("node {} is not a neighbour of node {}".format(node, previous), loc)
            previous = node
    return WaypointPolicy(config.waypoints)
