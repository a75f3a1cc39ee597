"""Wire cutting of two-layer QAOA circuits at a single separator vertex.

The separator qubit's wire is cut twice, once per layer, turning the circuit
into two independently executable fragments:

  fragment A (|A|+1 qubits): H on the separator, its layer-1 cost gates
    toward A, a mid-circuit measurement (first cut), then a reset to the
    second cut's preparation state, the layer-2 cost gates toward A, the
    final mixer and the final measurement. A-side qubits carry all their own
    gates here.
  fragment B (|B|+1 qubits): a fresh qubit prepared in the first cut's
    outcome-conditioned state, the separator's layer-1 cost gates toward B,
    its mixer, the layer-2 cost gates toward B, and the second cut's
    measurement. B-side qubits carry all their own gates here.

Two quasi-probability decompositions of the identity wire are used:
  - "mub" (first cut): measure in one of the three mutually unbiased bases
    and re-prepare the measured eigenstate (coefficient +2/3) or the flipped
    eigenstate (coefficient -1/3). One-norm 3.
  - "pauli" (second cut): two trace terms (measure Z, ignore the outcome,
    prepare Z0 or Z1, +1/2) and, per basis O in {X, Y, Z}, measure O and
    prepare O+ (+1/2) or O- (-1/2) with the shot sign additionally flipped
    by (-1)^outcome. One-norm 4.

Total sampling overhead kappa = 3 * 4 = 12. Terms are drawn proportionally
to |c|; the reconstruction weights every shot by kappa * sign / N, which is
an unbiased estimator of the uncut distribution. Only one-way communication
is needed: fragment B's construction consumes the first cut's term and
measured bit, never anything from fragment B flows back into fragment A.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instances import MaxCutInstance
from .qaoa import QaoaParams
from .separator import SeparatorDecomposition
from .simulator import (Circuit, NoiseModel, _run_ops, bit_matrix_from_indices,
                        exact_branches, index_to_bitstring, run_shot)

KAPPA = 12

MUB_NORM = 3
PAULI_NORM = 4


class CutPlanError(ValueError):
    pass


@dataclass(frozen=True)
class QpdTerm:
    scheme: str        # "mub" | "pauli"
    meas_basis: str    # X | Y | Z
    prep: str          # pauli: a fixed state label; mub: "same" | "flip"
    coeff: Fraction
    outcome_sign: bool  # multiply the shot sign by (-1)^measured bit

    @property
    def sign(self) -> int:
        return 1 if self.coeff > 0 else -1


def pauli_cut_terms() -> tuple[QpdTerm, ...]:
    """8-term decomposition rho = 1/2 [Tr(rho) I + sum_O Tr(O rho) O]."""
    half = Fraction(1, 2)
    terms = [
        QpdTerm("pauli", "Z", "Z0", half, False),
        QpdTerm("pauli", "Z", "Z1", half, False),
    ]
    for basis, plus, minus in (("X", "X+", "X-"), ("Y", "Y+", "Y-"), ("Z", "Z0", "Z1")):
        terms.append(QpdTerm("pauli", basis, plus, half, True))
        terms.append(QpdTerm("pauli", basis, minus, -half, True))
    return tuple(terms)


def mub_cut_terms() -> tuple[QpdTerm, ...]:
    """6-term decomposition Id = 2 * Phi_mub - Phi_flip over the X, Y, Z bases."""
    terms = [QpdTerm("mub", basis, "same", Fraction(2, 3), False)
             for basis in ("X", "Y", "Z")]
    terms += [QpdTerm("mub", basis, "flip", Fraction(-1, 3), False)
              for basis in ("X", "Y", "Z")]
    return tuple(terms)


_EIGENSTATES = {"X": ("X+", "X-"), "Y": ("Y+", "Y-"), "Z": ("Z0", "Z1")}


def eigenstate(basis: str, bit: int, flip: bool = False) -> str:
    """State label of the (basis, outcome bit) eigenstate, or its orthogonal
    complement when flip is set. Bit 0 is the +1 eigenstate."""
    return _EIGENSTATES[basis][bit ^ 1 if flip else bit]


class CutPlan:
    """Fragment layout for one cut run: separator qubit, side qubits, angles.

    Fragment-local qubit order is the sorted side qubits followed by the
    separator copy as the last local qubit.
    """

    def __init__(self, shrunk: MaxCutInstance, dec: SeparatorDecomposition,
                 params: QaoaParams):
        if len(dec.S) != 1:
            raise CutPlanError(f"cut plans need exactly one separator vertex, "
                               f"got |S| = {len(dec.S)}")
        if params.p != 2:
            raise CutPlanError("cut plans are defined for two-layer circuits")
        if any(shrunk.linear):
            raise CutPlanError("cut plans do not support linear terms")
        self.shrunk = shrunk
        self.params = params
        self.s = dec.S[0]
        self.a_qubits = tuple(sorted(dec.A))
        self.b_qubits = tuple(sorted(dec.B))
        self.kappa = KAPPA
        a_set, b_set = set(self.a_qubits), set(self.b_qubits)
        a_local = {v: i for i, v in enumerate(self.a_qubits)}
        b_local = {v: i for i, v in enumerate(self.b_qubits)}
        self.edges_a: list[tuple[int, int, float]] = []   # fragment-A locals
        self.edges_b: list[tuple[int, int, float]] = []
        self.edges_sa: list[tuple[int, float]] = []       # (A-local, w)
        self.edges_sb: list[tuple[int, float]] = []
        for u, v, w in shrunk.edges:
            if u in a_set and v in a_set:
                self.edges_a.append((a_local[u], a_local[v], float(w)))
            elif u in b_set and v in b_set:
                self.edges_b.append((b_local[u], b_local[v], float(w)))
            elif self.s in (u, v):
                other = v if u == self.s else u
                if other in a_set:
                    self.edges_sa.append((a_local[other], float(w)))
                else:
                    self.edges_sb.append((b_local[other], float(w)))
            else:
                raise CutPlanError(f"edge ({u}, {v}) joins the two sides; "
                                   "the decomposition is not a separator")
        if not self.edges_sa or not self.edges_sb:
            raise CutPlanError("degenerate separator: the separator vertex "
                               "needs neighbors on both sides")
        self._a_tables: dict | None = None
        self._b_tables: dict | None = None

    @property
    def num_a(self) -> int:
        return len(self.a_qubits)

    @property
    def num_b(self) -> int:
        return len(self.b_qubits)

    def digest(self) -> str:
        payload = json.dumps({
            "n": self.shrunk.n,
            "edges": [[u, v, str(w)] for u, v, w in self.shrunk.edges],
            "offset": str(self.shrunk.offset),
            "s": self.s, "A": list(self.a_qubits), "B": list(self.b_qubits),
            "gammas": list(self.params.gammas), "betas": list(self.params.betas),
            "kappa": self.kappa,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()

    def fragment_a_circuit(self, mub_basis: str, pauli_prep: str) -> Circuit:
        """Fragment A: separator segments 1 and 3 plus all A-side gates.

        The separator's local wire is measured in the first cut's basis
        (tag "m1"), reset to the second cut's preparation state, and its
        final bit is part of the fragment's final measurement.
        """
        g1, g2 = self.params.gammas
        b1, b2 = self.params.betas
        na = self.num_a
        s = na
        c = Circuit(na + 1)
        for q in range(na + 1):
            c.h(q)
        for u, v, w in self.edges_a:
            c.zz(u, v, g1 * w)
        for u, w in self.edges_sa:
            c.zz(s, u, g1 * w)
        c.measure(s, "m1", basis=mub_basis)
        for q in range(na):
            c.rx(q, 2 * b1)
        for u, v, w in self.edges_a:
            c.zz(u, v, g2 * w)
        c.reset_to(s, pauli_prep)
        for u, w in self.edges_sa:
            c.zz(s, u, g2 * w)
        for q in range(na + 1):
            c.rx(q, 2 * b2)
        return c.measure_all("xa")

    def fragment_b_circuit(self, prep_state: str, pauli_basis: str) -> Circuit:
        """Fragment B: separator segment 2 plus all B-side gates.

        Consumes only the first cut's term and measured bit (through
        `prep_state`); the separator copy is measured in the second cut's
        basis (tag "m2") and excluded from the reported bits.
        """
        g1, g2 = self.params.gammas
        b1, b2 = self.params.betas
        nb = self.num_b
        s = nb
        c = Circuit(nb + 1)
        c.reset_to(s, prep_state)
        for q in range(nb):
            c.h(q)
        for u, w in self.edges_sb:
            c.zz(s, u, g1 * w)
        for u, v, w in self.edges_b:
            c.zz(u, v, g1 * w)
        for q in range(nb + 1):
            c.rx(q, 2 * b1)
        for u, w in self.edges_sb:
            c.zz(s, u, g2 * w)
        for u, v, w in self.edges_b:
            c.zz(u, v, g2 * w)
        c.measure(s, "m2", basis=pauli_basis)
        for q in range(nb):
            c.rx(q, 2 * b2)
        return c.measure_all("xb")

    # exact branch tables, used by the noiseless sampler and the exact oracle
    def a_tables(self) -> dict[tuple[str, str], dict[int, tuple[float, np.ndarray]]]:
        if self._a_tables is None:
            tables = {}
            for term in mub_cut_terms()[:3]:
                for prep in RESET_LABELS:
                    branches = exact_branches(
                        self.fragment_a_circuit(term.meas_basis, prep))
                    tables[(term.meas_basis, prep)] = {
                        out["m1"]: (p, final) for out, p, final in branches}
            self._a_tables = tables
        return self._a_tables

    def b_tables(self) -> dict[tuple[str, str], dict[int, tuple[float, np.ndarray]]]:
        if self._b_tables is None:
            tables = {}
            for prep in RESET_LABELS:
                for basis in ("X", "Y", "Z"):
                    branches = exact_branches(
                        self.fragment_b_circuit(prep, basis))
                    tables[(prep, basis)] = {
                        out["m2"]: (p, final) for out, p, final in branches}
            self._b_tables = tables
        return self._b_tables


RESET_LABELS = ("Z0", "Z1", "X+", "X-", "Y+", "Y-")


def build_cut_plan(shrunk: MaxCutInstance, dec: SeparatorDecomposition,
                   params: QaoaParams) -> CutPlan:
    """Validate and build the two-fragment layout; kappa is always 12."""
    return CutPlan(shrunk, dec, params)


@dataclass
class SignedSampleSet:
    """Bitstring samples with +/-1 signs from a cut run (kappa = 12), or an
    ordinary sample set (kappa = 1, all signs +1)."""

    bits: np.ndarray    # (n_shots, n) uint8
    signs: np.ndarray   # (n_shots,) int8
    kappa: int
    seed: int = 0
    plan_digest: str = ""

    @property
    def n_shots(self) -> int:
        return self.bits.shape[0]

    @property
    def n_bits(self) -> int:
        return self.bits.shape[1]

    def iter_samples(self):
        for row, sign in zip(self.bits, self.signs):
            yield "".join(str(b) for b in row), int(sign)

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# kappa={self.kappa}\n")
            fh.write(f"# n_shots={self.n_shots}\n")
            fh.write(f"# n_bits={self.n_bits}\n")
            fh.write(f"# seed={self.seed}\n")
            fh.write(f"# plan_digest={self.plan_digest}\n")
            fh.write("bitstring,sign\n")
            for bitstring, sign in self.iter_samples():
                fh.write(f"{bitstring},{sign}\n")

    @classmethod
    def load_csv(cls, path) -> "SignedSampleSet":
        meta: dict[str, str] = {}
        rows: list[tuple[str, int]] = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key] = value
                    continue
                if line.startswith("bitstring"):
                    continue
                bitstring, _, sign = line.partition(",")
                rows.append((bitstring, int(sign)))
        bits = np.array([[int(c) for c in b] for b, _s in rows], dtype=np.uint8)
        signs = np.array([s for _b, s in rows], dtype=np.int8)
        return cls(bits=bits, signs=signs, kappa=int(meta.get("kappa", 1)),
                   seed=int(meta.get("seed", 0)),
                   plan_digest=meta.get("plan_digest", ""))


def _assemble(plan: CutPlan, a_indices: np.ndarray, b_indices: np.ndarray) -> np.ndarray:
    """Scatter fragment measurement outcomes into shrunk vertex order."""
    n = plan.shrunk.n
    out = np.zeros((a_indices.size, n), dtype=np.uint8)
    for local, q in enumerate(plan.a_qubits):
        out[:, q] = (a_indices >> local) & 1
    out[:, plan.s] = (a_indices >> plan.num_a) & 1
    for local, q in enumerate(plan.b_qubits):
        out[:, q] = (b_indices >> local) & 1
    return out


def sample_cut_shot(plan: CutPlan, noise: NoiseModel | None = None,
                    rng=0) -> tuple[str, int]:
    """One shot of the sequential cut protocol (reference implementation).

    Draws one term from each decomposition proportionally to |c|, runs
    fragment A, conditions fragment B's preparation on the first cut's
    recorded bit, and combines the outcome signs.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    mub = mub_cut_terms()
    pauli = pauli_cut_terms()
    mub_t = mub[rng.choice(6, p=[float(abs(t.coeff)) / MUB_NORM for t in mub])]
    pauli_t = pauli[rng.choice(8, p=[float(abs(t.coeff)) / PAULI_NORM for t in pauli])]

    shot_a = run_shot(plan.fragment_a_circuit(mub_t.meas_basis, pauli_t.prep),
                      noise, rng)
    m1 = shot_a.bits["m1"]
    xa = shot_a.bits["xa"]

    prep = eigenstate(mub_t.meas_basis, m1, flip=mub_t.prep == "flip")
    shot_b = run_shot(plan.fragment_b_circuit(prep, pauli_t.meas_basis),
                      noise, rng)
    m2 = shot_b.bits["m2"]
    xb = shot_b.bits["xb"]

    sign = mub_t.sign * pauli_t.sign
    if pauli_t.outcome_sign and m2 == 1:
        sign = -sign

    bits = ["0"] * plan.shrunk.n
    for local, q in enumerate(plan.a_qubits):
        bits[q] = xa[local]
    bits[plan.s] = xa[plan.num_a]
    for local, q in enumerate(plan.b_qubits):
        bits[q] = xb[local]
    return "".join(bits), sign


def sample_cut_shots(plan: CutPlan, n_shots: int,
                     noise: NoiseModel | None = None, seed: int = 0,
                     trajectory_reuse: int = 200) -> SignedSampleSet:
    """Sample n_shots signed bitstrings from the cut execution.

    Noiseless sampling draws every shot independently from the exact
    per-term fragment distributions. Noisy sampling reuses each stochastic
    trajectory for `trajectory_reuse` consecutive shots (one term pair, one
    set of Pauli insertions and mid-circuit outcomes per trajectory,
    independent readout flips per shot).
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if noise is None:
        bits, signs = _sample_noiseless(plan, n_shots, seed)
    else:
        bits, signs = _sample_noisy(plan, n_shots, noise, seed, trajectory_reuse)
    return SignedSampleSet(bits=bits, signs=signs, kappa=plan.kappa,
                           seed=seed, plan_digest=plan.digest())


def _sample_noiseless(plan: CutPlan, n_shots: int, seed: int):
    mub = mub_cut_terms()
    pauli = pauli_cut_terms()
    a_tab = plan.a_tables()
    b_tab = plan.b_tables()
    rng = np.random.default_rng([seed, 0])

    mub_idx = rng.choice(6, size=n_shots,
                         p=[float(abs(t.coeff)) / MUB_NORM for t in mub])
    pauli_idx = rng.choice(8, size=n_shots,
                           p=[float(abs(t.coeff)) / PAULI_NORM for t in pauli])

    # first cut outcome, per (basis, prep) group
    m1 = np.zeros(n_shots, dtype=np.int8)
    u = rng.random(n_shots)
    for j, mt in enumerate(mub):
        for k, pt in enumerate(pauli):
            sel = (mub_idx == j) & (pauli_idx == k)
            if not sel.any():
                continue
            branches = a_tab[(mt.meas_basis, pt.prep)]
            p1 = branches[1][0] if 1 in branches else 0.0
            p1 = p1 / (p1 + (branches[0][0] if 0 in branches else 0.0))
            m1[sel] = u[sel] < p1

    a_indices = np.zeros(n_shots, dtype=np.int64)
    b_indices = np.zeros(n_shots, dtype=np.int64)
    m2 = np.zeros(n_shots, dtype=np.int8)
    for j, mt in enumerate(mub):
        for k, pt in enumerate(pauli):
            for m1_val in (0, 1):
                sel = np.flatnonzero((mub_idx == j) & (pauli_idx == k) & (m1 == m1_val))
                if sel.size == 0:
                    continue
                _p, final_a = a_tab[(mt.meas_basis, pt.prep)][m1_val]
                a_indices[sel] = rng.choice(final_a.size, size=sel.size,
                                            p=final_a / final_a.sum())
                prep_b = eigenstate(mt.meas_basis, m1_val, flip=mt.prep == "flip")
                branches_b = b_tab[(prep_b, pt.meas_basis)]
                p1b = branches_b[1][0] if 1 in branches_b else 0.0
                p1b = p1b / (p1b + (branches_b[0][0] if 0 in branches_b else 0.0))
                m2_grp = (rng.random(sel.size) < p1b).astype(np.int8)
                m2[sel] = m2_grp
                for m2_val in (0, 1):
                    sub = sel[m2_grp == m2_val]
                    if sub.size == 0:
                        continue
                    _p2, final_b = branches_b[m2_val]
                    # marginalize the separator copy (the top local bit)
                    marg = final_b.reshape(2, -1).sum(axis=0)
                    b_indices[sub] = rng.choice(marg.size, size=sub.size,
                                                p=marg / marg.sum())

    mub_signs = np.array([t.sign for t in mub], dtype=np.int8)
    pauli_signs = np.array([t.sign for t in pauli], dtype=np.int8)
    flags = np.array([t.outcome_sign for t in pauli], dtype=bool)
    signs = mub_signs[mub_idx] * pauli_signs[pauli_idx]
    signs = np.where(flags[pauli_idx] & (m2 == 1), -signs, signs).astype(np.int8)
    return _assemble(plan, a_indices, b_indices), signs


def _sample_noisy(plan: CutPlan, n_shots: int, noise: NoiseModel, seed: int,
                  trajectory_reuse: int):
    mub = mub_cut_terms()
    pauli = pauli_cut_terms()
    p_mub = [float(abs(t.coeff)) / MUB_NORM for t in mub]
    p_pauli = [float(abs(t.coeff)) / PAULI_NORM for t in pauli]
    na, nb = plan.num_a, plan.num_b
    bits = np.empty((n_shots, plan.shrunk.n), dtype=np.uint8)
    signs = np.empty(n_shots, dtype=np.int8)
    done = 0
    traj = 0
    while done < n_shots:
        rng = np.random.default_rng([seed, traj])
        mub_t = mub[rng.choice(6, p=p_mub)]
        pauli_t = pauli[rng.choice(8, p=p_pauli)]
        k = min(trajectory_reuse, n_shots - done)

        rec_a, state_a = _run_ops(
            plan.fragment_a_circuit(mub_t.meas_basis, pauli_t.prep), noise, rng)
        probs_a = state_a.probs()
        probs_a /= probs_a.sum()
        idx_a = rng.choice(probs_a.size, size=k, p=probs_a)

        prep_b = eigenstate(mub_t.meas_basis, rec_a["m1"], flip=mub_t.prep == "flip")
        rec_b, state_b = _run_ops(
            plan.fragment_b_circuit(prep_b, pauli_t.meas_basis), noise, rng)
        probs_b = state_b.probs()
        probs_b /= probs_b.sum()
        idx_b = rng.choice(probs_b.size, size=k, p=probs_b)

        if noise.p_ro > 0.0:
            flips_a = (rng.random((k, na + 1)) < noise.p_ro)
            idx_a = idx_a ^ (flips_a.astype(np.int64) << np.arange(na + 1)).sum(axis=1)
            flips_b = (rng.random((k, nb + 1)) < noise.p_ro)
            idx_b = idx_b ^ (flips_b.astype(np.int64) << np.arange(nb + 1)).sum(axis=1)

        sign = mub_t.sign * pauli_t.sign
        if pauli_t.outcome_sign and rec_b["m2"] == 1:
            sign = -sign
        bits[done:done + k] = _assemble(plan, idx_a, idx_b)
        signs[done:done + k] = sign
        done += k
        traj += 1
    return bits, signs


def reconstruct_distribution(samples: SignedSampleSet) -> dict[str, float]:
    """Signed empirical reconstruction q(x) = (kappa / N) * sum_i sign_i [x_i = x].

    Unbiased for the uncut circuit's distribution; weights may be negative.
    """
    if samples.n_shots < 1:
        raise ValueError("need at least one sample")
    n = samples.n_bits
    idx = (samples.bits.astype(np.int64) << np.arange(n)).sum(axis=1)
    uniq, inv = np.unique(idx, return_inverse=True)
    sums = np.bincount(inv, weights=samples.signs.astype(np.float64))
    scale = samples.kappa / samples.n_shots
    return {index_to_bitstring(int(i), n): float(s * scale)
            for i, s in zip(uniq, sums)}


def exact_cut_distribution(plan: CutPlan) -> tuple[dict[str, float], dict[str, float]]:
    """Deterministic oracle: enumerate all term pairs and branch outcomes.

    Returns (signed, raw): the signed map equals the uncut circuit's exact
    distribution; the raw map is the unconditional probability that a shot
    emits each bitstring (signs ignored), which is bounded below by
    p_uncut(x) / kappa.
    """
    n = plan.shrunk.n
    if n > 12:
        raise CutPlanError("exact enumeration limited to 12 shrunk vertices")
    a_tab = plan.a_tables()
    b_tab = plan.b_tables()

    idx_a = np.zeros(1 << (plan.num_a + 1), dtype=np.int64)
    for ia in range(idx_a.size):
        v = 0
        for local, q in enumerate(plan.a_qubits):
            v |= ((ia >> local) & 1) << q
        v |= ((ia >> plan.num_a) & 1) << plan.s
        idx_a[ia] = v
    idx_b = np.zeros(1 << plan.num_b, dtype=np.int64)
    for ib in range(idx_b.size):
        v = 0
        for local, q in enumerate(plan.b_qubits):
            v |= ((ib >> local) & 1) << q
        idx_b[ib] = v

    # bit positions of the two fragments are disjoint, so this enumerates
    # each full index exactly once
    full = idx_a[:, None] | idx_b[None, :]
    signed = np.zeros(1 << n, dtype=np.float64)
    raw = np.zeros(1 << n, dtype=np.float64)
    for mt in mub_cut_terms():
        for pt in pauli_cut_terms():
            w_signed = float(mt.coeff * pt.coeff)
            w_raw = float(abs(mt.coeff) / MUB_NORM) * float(abs(pt.coeff) / PAULI_NORM)
            for m1, (p1, final_a) in a_tab[(mt.meas_basis, pt.prep)].items():
                prep_b = eigenstate(mt.meas_basis, m1, flip=mt.prep == "flip")
                for m2, (p2, final_b) in b_tab[(prep_b, pt.meas_basis)].items():
                    marg_b = final_b.reshape(2, -1).sum(axis=0)
                    joint = np.outer(final_a, marg_b) * (p1 * p2)
                    s2 = -1.0 if (pt.outcome_sign and m2 == 1) else 1.0
                    signed[full] += w_signed * s2 * joint
                    raw[full] += w_raw * joint
    signed_map = {index_to_bitstring(i, n): float(v) for i, v in enumerate(signed)}
    raw_map = {index_to_bitstring(i, n): float(v) for i, v in enumerate(raw)}
    return signed_map, raw_map
