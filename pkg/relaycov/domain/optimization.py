from typing import Dict, List, Optional, Tuple
import logging
import math

import pyomo.environ as pyo

from relaycov.domain.model import NavGraph
from relaycov.domain.relay import Chain, EdgeCost

logger = logging.getLogger(__name__)

MILP_SOLVERS = ("glpk", "cbc")


class OptimizationError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


def available_solver() -> Optional[str]:
    for name in MILP_SOLVERS:
        if pyo.SolverFactory(name).available(exception_flag=False):
            return name
    return None


class HopLimitedChainProblem:
    def __init__(self, g: NavGraph, target: int, edge_cost: EdgeCost):
        """ Exact minimum-cost base-to-target chain with a hop limit, as a unit-flow MILP.
               - N int: number of lattice nodes
               - arcs: directed edges with finite cost
               - c: cost of each arc under edge_cost
               - h int (solve-time parameter): hop limit, n_uav
           Edge costs are strictly positive, so an optimal flow carries no cycle.
        """
        if not 0 <= target < g.node_count:
            raise OptimizationError("Unknown target node: {}".format(target))

        self.g = g
        self.N = g.node_count
        self.source = g.base_node
        self.target = target
        self.arc_costs: Dict[Tuple[int, int], float] = {}
        for src, dst in g.sorted_edges:
            w = edge_cost(src, dst)
            if not math.isinf(w):
                self.arc_costs[(src, dst)] = w

        self.model = self.make_pyomo_model()

    def make_pyomo_model(self):
        def get_costs(mod, i, j):
            return self.arc_costs[(i, j)]

        def supply(i):
            if self.source == self.target:
                return 0
            if i == self.source:
                return 1
            if i == self.target:
                return -1
            return 0

        model = pyo.AbstractModel()

        model.I = pyo.RangeSet(0, self.N - 1)
        model.A = pyo.Set(dimen=2, initialize=sorted(self.arc_costs))
        model.c = pyo.Param(model.A, within=pyo.NonNegativeReals, initialize=get_costs)

        model.x = pyo.Var(model.A, domain=pyo.Binary, initialize=0)

        # hop limit, supplied per solve
        model.h = pyo.Param(within=pyo.NonNegativeIntegers)

        out_arcs = {i: [] for i in range(self.N)}
        in_arcs = {i: [] for i in range(self.N)}
        for src, dst in self.arc_costs:
            out_arcs[src].append((src, dst))
            in_arcs[dst].append((src, dst))

        def flow_balance(mod, i):
            if not out_arcs[i] and not in_arcs[i]:
                return pyo.Constraint.Skip
            out_flow = sum(mod.x[a] for a in out_arcs[i])
            in_flow = sum(mod.x[a] for a in in_arcs[i])
            return out_flow - in_flow == supply(i)

        def hop_limit(mod):
            return pyo.summation(mod.x) <= mod.h

        model.FlowBalance = pyo.Constraint(model.I, rule=flow_balance)
        model.HopLimit = pyo.Constraint(rule=hop_limit)

        def chain_cost(mod):
            return pyo.summation(mod.c, mod.x)

        model.Objective = pyo.Objective(rule=chain_cost, sense=pyo.minimize)

        return model

    def solve(self, params: Dict) -> Tuple[Chain, Dict]:
        if "n_uav" not in params:
            raise ValueError("Missing n_uav parameter for optimization.")
        if self.source == self.target:
            return Chain(nodes=(self.source,)), {"objective": 0.0, "hops": 0}

        if not any(src == self.source for src, _ in self.arc_costs) or \
                not any(dst == self.target for _, dst in self.arc_costs):
            raise OptimizationError("No chain to {} within {} hops.".format(self.target, params["n_uav"]))

        solver_name = params.get("solver") or available_solver()
        if solver_name is None:
            raise OptimizationError("No MILP solver available (tried {}).".format(", ".join(MILP_SOLVERS)))

        data = {
            None: {
                "h": {None: params["n_uav"]}
            }
        }
        instance = self.model.create_instance(data)

        solver = pyo.SolverFactory(solver_name)
        results = solver.solve(instance)

        metadata = {
            "solver": solver_name,
            "solver_status": str(results.solver.status),
            "termination_condition": str(results.solver.termination_condition),
        }
        if metadata["termination_condition"] != "optimal":
            raise OptimizationError("No chain to {} within {} hops.".format(self.target, params["n_uav"]))
        if metadata["solver_status"] != "ok":
            raise OptimizationError("Could not solve under given constraints.")

        chosen = {a for a in instance.A if round(pyo.value(instance.x[a]), 6) == 1}
        nodes = self._walk(chosen)
        metadata["objective"] = pyo.value(instance.Objective)
        metadata["hops"] = len(nodes) - 1
        logger.debug("exact chain to %d: %s (objective %.6f)", self.target, nodes, metadata["objective"])
        return Chain(nodes=tuple(nodes)), metadata

    def _walk(self, chosen) -> List[int]:
        successor = {src: dst for src, dst in chosen}
        nodes = [self.source]
        while nodes[-1] != self.target:
            nxt = successor.get(nodes[-1])
            if nxt is None or nxt in nodes:
                raise OptimizationError("Solver returned a broken chain: {}".format(sorted(chosen)))
            nodes.append(nxt)
        return nodes
