"""QAOA circuit construction, annealing-schedule initialization and training.

The cost layer for edge weight w at angle gamma is ZZPhase(u, v, gamma * w)
plus RZ(v, gamma * h_v) for nonzero linear terms; the mixer is RX(2 * beta)
on every qubit. Cost gates commute, so the edge order never changes the
sampled distribution.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .instances import MaxCutInstance, objective_vector
from .simulator import Circuit, _rx


@dataclass(frozen=True)
class QaoaParams:
    p: int
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("layer count must be >= 1")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != self.p or len(self.betas) != self.p:
            raise ValueError("angle lists must have length p")

    def to_json(self) -> str:
        return json.dumps({"p": self.p, "gammas": list(self.gammas),
                           "betas": list(self.betas)}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "QaoaParams":
        data = json.loads(text)
        return cls(p=data["p"], gammas=tuple(data["gammas"]),
                   betas=tuple(data["betas"]))


def init_schedule(p: int, dt: float = 0.75) -> QaoaParams:
    """Linear-ramp annealing initialization: gamma ramps up, beta down, with
    gamma_k + beta_k = dt at every layer."""
    if p < 1:
        raise ValueError("layer count must be >= 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    fracs = [(k - 0.5) / p for k in range(1, p + 1)]
    return QaoaParams(p=p, gammas=tuple(f * dt for f in fracs),
                      betas=tuple((1 - f) * dt for f in fracs))


def build_qaoa(inst: MaxCutInstance, params: QaoaParams,
               edge_order=None) -> Circuit:
    """p-layer QAOA circuit for the instance, ending in measure_all."""
    circuit = Circuit(inst.n)
    edges = list(inst.edges) if edge_order is None else [inst.edges[i] for i in edge_order]
    for q in range(inst.n):
        circuit.h(q)
    for k in range(params.p):
        gamma, beta = params.gammas[k], params.betas[k]
        for u, v, w in edges:
            circuit.zz(u, v, gamma * float(w))
        for v, h in enumerate(inst.linear):
            if h:
                circuit.rz(v, gamma * float(h))
        for q in range(inst.n):
            circuit.rx(q, 2 * beta)
    return circuit.measure_all()


def qaoa_expectation(inst: MaxCutInstance, params: QaoaParams,
                     _values: np.ndarray | None = None) -> float:
    """Exact objective expectation of the QAOA state, without building the
    gate list: the cost layer is diagonal and applied as one phase pass.

    Agrees with expectation_of_objective(build_qaoa(inst, params), inst) to
    numerical precision (asserted by tests).
    """
    values = objective_vector(inst) if _values is None else _values
    size = 1 << inst.n
    psi = np.full(size, 1 / np.sqrt(size), dtype=np.complex128)
    for gamma, beta in zip(params.gammas, params.betas):
        _kernels.apply_diag_phase(psi, values, gamma)
        rx = _rx(2 * beta)
        for q in range(inst.n):
            _kernels.apply_1q(psi, q, rx[0, 0], rx[0, 1], rx[1, 0], rx[1, 1])
    return float(_kernels.weighted_sum(psi, values))


def train(inst: MaxCutInstance, p: int = 2, dt: float = 0.75,
          budget: int = 500) -> QaoaParams:
    """Refine schedule-initialized parameters with Nelder-Mead simplex search
    (derivative-free), maximizing the exact noiseless expectation.

    Never returns parameters worse than the initialization; budget counts
    objective evaluations and 0 returns the initialization unchanged.
    """
    start = init_schedule(p, dt)
    if budget <= 0:
        return start
    values = objective_vector(inst)

    def neg(x: np.ndarray) -> float:
        params = QaoaParams(p=p, gammas=tuple(x[:p]), betas=tuple(x[p:]))
        return -qaoa_expectation(inst, params, _values=values)

    x0 = np.array(start.gammas + start.betas, dtype=np.float64)
    res = minimize(neg, x0, method="Nelder-Mead",
                   options={"maxfev": budget, "xatol": 1e-4, "fatol": 1e-10})
    trained = QaoaParams(p=p, gammas=tuple(res.x[:p]), betas=tuple(res.x[p:]))
    e_start = qaoa_expectation(inst, start, _values=values)
    e_trained = qaoa_expectation(inst, trained, _values=values)
    return trained if e_trained > e_start else start
