from typing import Deque, Dict, Iterable, List, Optional, Sequence, Set, Tuple
from collections import deque
from dataclasses import dataclass as std_dataclass, field
from enum import Enum
import abc
import logging

import numpy as np
from pydantic import validator
from pydantic.dataclasses import dataclass

from relaycov.domain.model import NavGraph
from relaycov.domain.relay import Chain, ChainSolution, dual_ascent_chain, chain_cost
from relaycov.domain.coverage import (
    VisitCounts, record_visit, rank_neighbors, node_count_step, comm_edge_cost, hybrid_edge_cost
)
from relaycov.domain.optimization import HopLimitedChainProblem
from relaycov.domain.metrics.records import RoundRecord

logger = logging.getLogger(__name__)


class SimulationError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class Role(str, Enum):
    MASTER = "master"
    CHAIN = "chain"
    DETACHED = "detached"
    DEPARTED = "departed"


@dataclass(frozen=True)
class TargetSpec:
    node: int
    service_rounds: int = 1

    @validator('service_rounds')
    def service_rounds_positive(cls, v):
        if v < 1:
            raise ValueError("service_rounds must be positive: {}".format(v))
        return v


@dataclass(frozen=True)
class RoundSettings:
    comm_range_factor: float = 1.0
    max_dual_ascent_iterations: Optional[int] = None
    audit_gap: bool = False

    @validator('comm_range_factor')
    def factor_in_unit_interval(cls, v):
        if not 0 < v <= 1:
            raise ValueError("comm_range_factor must lie in (0, 1]: {}".format(v))
        return v


@std_dataclass
class Uav:
    id: int
    node: int
    role: Role
    busy_rounds_remaining: int = 0
    queued_target: Optional[int] = None
    on_chain: bool = False
    just_arrived: bool = True

    @property
    def connected(self) -> bool:
        return self.role in (Role.MASTER, Role.CHAIN)

    @property
    def free(self) -> bool:
        """ Available for a chain position this round. """
        return self.role is Role.CHAIN and self.busy_rounds_remaining == 0 and self.queued_target is None


@std_dataclass
class SwarmState:
    uavs: List[Uav]
    master_target: int
    chain: Chain
    round: int = 0
    targets: Dict[int, TargetSpec] = field(default_factory=dict)
    serviced: Set[int] = field(default_factory=set)
    in_service: Optional[Tuple[int, int]] = None
    task_queue: Deque[Tuple[int, int]] = field(default_factory=deque)
    local_counts: Dict[int, VisitCounts] = field(default_factory=dict)
    halted: bool = False

    @classmethod
    def launch(cls, g: NavGraph, fleet_size: int, targets: Iterable[TargetSpec] = ()) -> "SwarmState":
        """ Whole fleet at the base, UAV 0 as master. """
        if fleet_size < 1:
            raise SimulationError("Fleet size must be at least 1.")
        uavs = [Uav(id=i, node=g.base_node, role=Role.MASTER if i == 0 else Role.CHAIN)
                for i in range(fleet_size)]
        target_map = {}
        for t in targets:
            if t.node in g.obstacle_nodes:
                raise SimulationError("Target on an obstacle node: {}".format(t.node))
            target_map[t.node] = t
        return cls(uavs=uavs, master_target=g.base_node, chain=Chain(nodes=(g.base_node,)), targets=target_map)

    def get(self, uav_id: int) -> Uav:
        for u in self.uavs:
            if u.id == uav_id:
                return u
        raise SimulationError("Unknown UAV: {}".format(uav_id))

    @property
    def master(self) -> Optional[Uav]:
        masters = [u for u in self.uavs if u.role is Role.MASTER]
        return masters[0] if masters else None

    @property
    def connected(self) -> List[Uav]:
        return [u for u in self.uavs if u.connected]

    @property
    def n_uav_available(self) -> int:
        return sum(1 for u in self.uavs if u.role is Role.CHAIN)

    @property
    def solver_budget(self) -> int:
        return sum(1 for u in self.uavs if u.free)

    def count_role(self, role: Role) -> int:
        return sum(1 for u in self.uavs if u.role is role)


class MasterPolicy(abc.ABC):
    @abc.abstractmethod
    def candidates(self, g: NavGraph, current: int, vc: VisitCounts, rng: np.random.Generator) -> List[int]:
        """ Moves to try in order; the master stays put when every one is vetoed. """
        raise NotImplementedError


class NodeCountPolicy(MasterPolicy):
    def candidates(self, g, current, vc, rng):
        if not g.neighbors[current]:
            return [current]
        return rank_neighbors(g, current, vc, rng) + [current]


class WaypointPolicy(MasterPolicy):
    """ Operator-scripted route, one hop per round; node count once it runs out. """

    def __init__(self, waypoints: Sequence[int]):
        self.waypoints = deque(waypoints)
        self.fallback = NodeCountPolicy()

    def candidates(self, g, current, vc, rng):
        while self.waypoints and self.waypoints[0] == current:
            self.waypoints.popleft()
        if not self.waypoints:
            return self.fallback.candidates(g, current, vc, rng)
        nxt = self.waypoints[0]
        if not g.has_edge(current, nxt):
            raise SimulationError("Waypoint {} is not a neighbour of {}".format(nxt, current))
        return [nxt, current]


def _nearest_chain_uav(g: NavGraph, swarm: SwarmState, node: int) -> Optional[Uav]:
    chain_uavs = [u for u in swarm.uavs if u.role is Role.CHAIN]
    if not chain_uavs:
        return None
    return min(chain_uavs, key=lambda u: (g.distance(u.node, node), u.id))


def _abandon_tasks(swarm: SwarmState, uav: Uav):
    if swarm.in_service is not None and swarm.in_service[0] == uav.id:
        logger.info("UAV %d left while servicing target %d; task abandoned", uav.id, swarm.in_service[1])
        swarm.in_service = None
    if uav.queued_target is not None:
        swarm.task_queue = deque(entry for entry in swarm.task_queue if entry[0] != uav.id)
    uav.busy_rounds_remaining = 0
    uav.queued_target = None
    uav.on_chain = False


def promote_master(swarm: SwarmState, uav_id: int) -> SwarmState:
    uav = swarm.get(uav_id)
    if uav.role is Role.MASTER:
        return swarm
    if uav.role is not Role.CHAIN:
        raise SimulationError("Cannot promote {} UAV {}".format(uav.role.value, uav_id))
    for u in swarm.uavs:
        if u.role is Role.MASTER:
            u.role = Role.CHAIN
    uav.role = Role.MASTER
    uav.on_chain = False
    if uav.queued_target is not None:
        swarm.task_queue = deque(entry for entry in swarm.task_queue if entry[0] != uav_id)
        uav.queued_target = None
    swarm.master_target = uav.node
    logger.info("round %d: UAV %d promoted to master", swarm.round, uav_id)
    return swarm


def _leave(g: NavGraph, swarm: SwarmState, uav: Uav, role: Role):
    was_master = uav.role is Role.MASTER
    _abandon_tasks(swarm, uav)
    uav.role = role
    if swarm.in_service is None and swarm.task_queue:
        next_id, next_target = swarm.task_queue.popleft()
        logger.info("round %d: UAV %d takes over the queued task at target %d", swarm.round, next_id, next_target)
        _start_task(swarm, swarm.get(next_id), next_target)
    elif was_master:
        successor = _nearest_chain_uav(g, swarm, uav.node)
        if successor is None:
            swarm.halted = True
            logger.warning("round %d: no connected UAV left, simulation halts", swarm.round)
        else:
            promote_master(swarm, successor.id)


def remove_uav(g: NavGraph, swarm: SwarmState, uav_id: int) -> SwarmState:
    uav = swarm.get(uav_id)
    if uav.role is Role.DEPARTED:
        raise SimulationError("UAV {} already departed".format(uav_id))
    swarm.local_counts.pop(uav_id, None)
    _leave(g, swarm, uav, Role.DEPARTED)
    logger.info("round %d: UAV %d removed, chain budget now %d", swarm.round, uav_id, swarm.n_uav_available)
    return swarm


def detach_uav(g: NavGraph, swarm: SwarmState, uav_id: int, vc: VisitCounts) -> SwarmState:
    """ The UAV loses contact and continues on node count over its own copy of the counts. """
    uav = swarm.get(uav_id)
    if not uav.connected:
        raise SimulationError("Cannot detach {} UAV {}".format(uav.role.value, uav_id))
    swarm.local_counts[uav_id] = vc.snapshot()
    _leave(g, swarm, uav, Role.DETACHED)
    logger.info("round %d: UAV %d detached", swarm.round, uav_id)
    return swarm


def reintegrate_uav(g: NavGraph, swarm: SwarmState, uav_id: int, node: int, vc: VisitCounts) -> SwarmState:
    uav = swarm.get(uav_id)
    if uav.role not in (Role.DEPARTED, Role.DETACHED):
        raise SimulationError("UAV {} is already part of the swarm".format(uav_id))
    if not 0 <= node < g.node_count or node in g.obstacle_nodes:
        raise SimulationError("Cannot reintegrate UAV {} at node {}".format(uav_id, node))
    local = swarm.local_counts.pop(uav_id, None)
    if local is not None:
        vc.merge_max(local)
    uav.role = Role.CHAIN
    uav.node = node
    uav.just_arrived = True
    logger.info("round %d: UAV %d reintegrated at node %d", swarm.round, uav_id, node)
    return swarm


def assign_chain_positions(g: NavGraph, chain: Chain, swarm: SwarmState) -> Dict[int, int]:
    """ Greedy nearest-first matching of free chain UAVs to the chain interior. """
    interior = chain.interior
    free = [u for u in swarm.uavs if u.free]
    if len(free) < len(interior):
        raise SimulationError("{} interior positions but only {} free chain UAVs".format(len(interior), len(free)))

    pairs = sorted((g.distance(u.node, pos), u.id, idx) for u in free for idx, pos in enumerate(interior))
    assignment: Dict[int, int] = {}
    taken = set()
    for _, uav_id, idx in pairs:
        if len(taken) == len(interior):
            break
        if uav_id in assignment or idx in taken:
            continue
        assignment[uav_id] = interior[idx]
        taken.add(idx)
    return assignment


def service_targets(swarm: SwarmState) -> List[str]:
    """ Advance the running secondary task, then start or queue new ones. """
    events = []
    if swarm.in_service is not None:
        uav_id, target = swarm.in_service
        uav = swarm.get(uav_id)
        uav.busy_rounds_remaining -= 1
        if uav.busy_rounds_remaining <= 0:
            uav.busy_rounds_remaining = 0
            swarm.serviced.add(target)
            swarm.in_service = None
            events.append("task_complete")
            logger.info("round %d: target %d serviced by UAV %d", swarm.round, target, uav_id)
            if swarm.task_queue:
                next_id, next_target = swarm.task_queue.popleft()
                events.extend(_start_task(swarm, swarm.get(next_id), next_target))

    pending = {t for _, t in swarm.task_queue}
    if swarm.in_service is not None:
        pending.add(swarm.in_service[1])
    for uav in sorted(swarm.connected, key=lambda u: u.id):
        node = uav.node
        if node not in swarm.targets or node in swarm.serviced or node in pending:
            continue
        if swarm.in_service is None:
            events.append("target_found")
            events.extend(_start_task(swarm, uav, node))
        else:
            uav.queued_target = node
            swarm.task_queue.append((uav.id, node))
            events.append("task_queued")
            logger.info("round %d: UAV %d queued at target %d", swarm.round, uav.id, node)
        pending.add(node)
    return events


def _start_task(swarm: SwarmState, uav: Uav, target: int) -> List[str]:
    events = []
    if uav.role is not Role.MASTER:
        promote_master(swarm, uav.id)
        events.append("promoted:{}".format(uav.id))
    uav.queued_target = None
    uav.busy_rounds_remaining = swarm.targets[target].service_rounds
    swarm.in_service = (uav.id, target)
    return events


def run_round(g: NavGraph, swarm: SwarmState, vc: VisitCounts, beta: float, rng: np.random.Generator,
              policy: Optional[MasterPolicy] = None,
              settings: Optional[RoundSettings] = None) -> Tuple[SwarmState, VisitCounts, RoundRecord]:
    """ One interleaved round: the master commits a move, the swarm forms the
    hybrid chain for it, every occupied node records one visit, targets are checked. """
    if not swarm.connected or swarm.master is None:
        raise SimulationError("The swarm has no connected UAV.")
    policy = policy or NodeCountPolicy()
    settings = settings or RoundSettings()

    swarm.round += 1
    vc.start_round()
    events: List[str] = []
    master = swarm.master

    max_distance = None
    if settings.comm_range_factor < 1.0:
        max_distance = settings.comm_range_factor * g.d_comm_max
    edge_cost = hybrid_edge_cost(g, vc, beta, max_distance)
    n_uav = swarm.solver_budget + 1

    if master.busy_rounds_remaining > 0:
        candidates = [master.node]
    else:
        candidates = policy.candidates(g, master.node, vc, rng)

    solution = None
    for candidate in candidates:
        result = dual_ascent_chain(g, candidate, n_uav, edge_cost,
                                   max_iterations=settings.max_dual_ascent_iterations)
        if isinstance(result, ChainSolution):
            solution = result
            break
        events.append("vetoed:{}".format(candidate))
        logger.debug("round %d: move to %d vetoed (%s)", swarm.round, candidate, result.reason.value)

    optimal_total = None
    if solution is None:
        events.append("stall")
        logger.warning("round %d: no valid chain for any master move, keeping the previous chain", swarm.round)
        chain = swarm.chain
    else:
        chain = solution.chain
        master.node = chain.target
        swarm.master_target = chain.target
        swarm.chain = chain
        assignment = assign_chain_positions(g, chain, swarm)
        for uav in swarm.uavs:
            uav.on_chain = uav.id in assignment
            if uav.on_chain:
                uav.node = assignment[uav.id]
        if settings.audit_gap:
            exact, _ = HopLimitedChainProblem(g, chain.target, edge_cost).solve({"n_uav": n_uav})
            optimal_total = chain_cost(g, exact, edge_cost)

    comm_total = chain_cost(g, chain, comm_edge_cost(g))
    hybrid_total = chain_cost(g, chain, hybrid_edge_cost(g, vc, beta))

    # standby UAVs off the chain hold position and only count the round they arrive
    occupied = set()
    for uav in swarm.connected:
        if uav.role is Role.MASTER or uav.on_chain or uav.just_arrived:
            occupied.add(uav.node)
        uav.just_arrived = False
    for node in sorted(occupied):
        record_visit(vc, node)

    for uav in swarm.uavs:
        if uav.role is Role.DETACHED:
            local = swarm.local_counts[uav.id]
            local.start_round()
            uav.node = node_count_step(g, uav.node, local, rng)
            record_visit(local, uav.node)

    events.extend(service_targets(swarm))

    record = RoundRecord(
        round=swarm.round,
        chain=chain.nodes,
        comm_cost=comm_total,
        total_cost=hybrid_total,
        occupied=tuple(sorted(occupied)),
        events=tuple(events),
        master=swarm.master.id,
        optimal_total_cost=optimal_total,
    )
    return swarm, vc, record


class Simulation:
    """ Drives rounds for one (beta, seed) pair until k-coverage, max_rounds, or a halt. """

    def __init__(self, g: NavGraph, fleet_size: int, beta: float, seed: int,
                 targets: Iterable[TargetSpec] = (), window: int = 0,
                 events: Optional[Dict[int, List[Tuple[str, int, Optional[int]]]]] = None,
                 policy: Optional[MasterPolicy] = None, settings: Optional[RoundSettings] = None):
        self.g = g
        self.beta = beta
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.swarm = SwarmState.launch(g, fleet_size, targets)
        self.vc = VisitCounts(g.node_count, window)
        self.events = events or {}
        self.policy = policy or NodeCountPolicy()
        self.settings = settings or RoundSettings()
        self.records: List[RoundRecord] = []
        self.fleet_size = fleet_size
        self._coverage = np.zeros(g.node_count, dtype=np.int64)
        self._goal = np.array(g.coverage_nodes, dtype=np.int64)

    def apply_events(self, round_no: int) -> List[str]:
        tags = []
        for action, uav_id, node in self.events.get(round_no, []):
            master_before = self.swarm.master
            if action == "remove":
                remove_uav(self.g, self.swarm, uav_id)
            elif action == "detach":
                detach_uav(self.g, self.swarm, uav_id, self.vc)
            elif action == "reintegrate":
                target_node = node
                if target_node is None:
                    uav = self.swarm.get(uav_id)
                    target_node = uav.node if uav.role is Role.DETACHED else self.g.base_node
                reintegrate_uav(self.g, self.swarm, uav_id, target_node, self.vc)
            else:
                raise SimulationError("Unknown event action: {}".format(action))
            tags.append("{}:{}".format({"remove": "removed", "detach": "detached",
                                        "reintegrate": "reintegrated"}[action], uav_id))
            master_after = self.swarm.master
            if master_after is not None and master_after is not master_before:
                tags.append("promoted:{}".format(master_after.id))
            if self.swarm.halted:
                tags.append("halted")
                break
        return tags

    def covered(self, k: int) -> bool:
        return bool(np.all(self._coverage[self._goal] >= k))

    def step(self) -> RoundRecord:
        round_no = self.swarm.round + 1
        tags = self.apply_events(round_no)
        if self.swarm.halted:
            self.swarm.round = round_no
            record = RoundRecord(round=round_no, chain=(), comm_cost=0.0, total_cost=0.0,
                                 occupied=(), events=tuple(tags), master=None)
        else:
            _, _, record = run_round(self.g, self.swarm, self.vc, self.beta, self.rng,
                                     self.policy, self.settings)
            if tags:
                record = record.with_events(tags)
            for node in record.occupied:
                self._coverage[node] += 1
        self.records.append(record)
        return record

    def run(self, k: int, max_rounds: int) -> List[RoundRecord]:
        logger.info("simulation start: beta=%s seed=%s fleet=%d k=%d", self.beta, self.seed, self.fleet_size, k)
        while self.swarm.round < max_rounds and not self.swarm.halted:
            self.step()
            if self.covered(k):
                logger.info("beta=%s seed=%s: %d-coverage after %d rounds", self.beta, self.seed, k,
                            self.swarm.round)
                break
        else:
            if not self.swarm.halted:
                logger.info("beta=%s seed=%s: no %d-coverage within %d rounds", self.beta, self.seed, k, max_rounds)
        return self.records
