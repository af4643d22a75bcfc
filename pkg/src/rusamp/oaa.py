"""Oblivious amplitude amplification protocols over repeat-until-success circuits.

All four protocols share one iterate shape,

    G(phi, varphi) = -A S_phi A^dag S_varphi,

where S_phi multiplies the all-zero ancilla block by e^{i phi} and acts as
the identity elsewhere.  Applied after A, the iterate preserves the
two-dimensional subspace spanned by the success state and its orthogonal
complement, which is what makes the composed operator another
repeat-until-success circuit:

* standard:       G(pi, pi)^j A amplifies sqrt(lambda0) = sin(theta) to
                  sin((2j+1) theta);
* deterministic:  one trailing G(phi, varphi) with solved phases rotates the
                  residual angle chi = pi/2 - (2j+1) theta away exactly;
* cube-law:       A_k = -A_{k-1} S A_{k-1}^dag S A_{k-1} with phase pi/3
                  cubes the failure probability at every level;
* fixed-point:    a Chebyshev phase schedule guarantees success >= 1 - delta
                  for every lambda0 above a length-dependent threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore, rus
from .qcore import StateVector, UnitaryMatrix
from .rus import RusCircuit

# Residual angles below this count as an exact pi/2 hit; the trailing
# generalized iterate is then skipped rather than solved near a 0/0.
CHI_SKIP_ATOL = 1e-9


def reflection(m: int, phi: float) -> UnitaryMatrix:
    """Phase e^{i phi} on the all-zero block of m ancillas, tensored with I."""
    if m < 1:
        raise ValueError("need at least one ancilla qubit")
    diag = np.ones(2 ** (m + 1), dtype=np.complex128)
    diag[:2] = np.exp(1j * phi)
    return UnitaryMatrix(np.diag(diag))


def _iterate_matrix(a: np.ndarray, m: int, phi: float, varphi: float) -> np.ndarray:
    """-A S_phi A^dag S_varphi as a dense matrix (S_varphi applied first)."""
    outer = reflection(m, phi).mat
    inner = reflection(m, varphi).mat
    return -(a @ outer @ a.conj().T @ inner)


def _compose(c: RusCircuit, phase_pairs: list[tuple[float, float]]) -> np.ndarray:
    """Iterates applied in list order after A; returns the composed matrix."""
    total = c.a_matrix.mat
    for phi, varphi in phase_pairs:
        total = _iterate_matrix(c.a_matrix.mat, c.spec.m, phi, varphi) @ total
    return total


@dataclass(frozen=True)
class StandardPlan:
    j: int
    theta: float


@dataclass(frozen=True)
class DeterministicPlan:
    """Iteration count and trailing phases; chi == 0 means the trailing
    generalized iterate is skipped entirely."""

    j: int
    chi: float
    phi: float
    varphi: float


@dataclass(frozen=True)
class Pi3Plan:
    k: int
    sign: int = 1

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError("recursion depth must be non-negative")
        if self.sign not in (1, -1):
            raise ValueError("sign selects the +pi/3 or -pi/3 reflection")


@dataclass(frozen=True)
class FixedPointPlan:
    """Chebyshev phase schedule of length L for failure tolerance delta.

    ``w`` is the amplification threshold: any circuit with lambda0 >= w ends
    with success probability at least 1 - delta.  The schedule is symmetric,
    varphis[i] == phis[L - 1 - i], by construction.
    """

    L: int
    delta: float
    gamma: float
    w: float
    phis: tuple[float, ...]
    varphis: tuple[float, ...]


def standard_oaa_state(c: RusCircuit, j: int, psi: StateVector) -> StateVector:
    """State after j standard iterates following A on ``|0^m>|psi>``."""
    if j < 0:
        raise ValueError("iteration count must be non-negative")
    total = _compose(c, [(math.pi, math.pi)] * j)
    joint = np.kron(qcore.basis_state(c.spec.m).amps, psi.amps)
    return StateVector(c.spec.m + 1, total @ joint)


def standard_compose(c: RusCircuit, j: int) -> RusCircuit:
    """The j-iterate standard protocol as a circuit in its own right."""
    if j < 0:
        raise ValueError("iteration count must be non-negative")
    total = UnitaryMatrix(_compose(c, [(math.pi, math.pi)] * j))
    return rus.circuit_from_matrix(total, c.spec.m, seed=c.spec.seed)


def _iteration_count(theta: float) -> int:
    # Largest j with (2j+1) theta <= pi/2; the epsilon guard keeps exact
    # boundary cases (e.g. lambda0 = 0.25) from rounding down.
    return max(int(math.floor((math.pi / (2.0 * theta) - 1.0) / 2.0 + 1e-9)), 0)


def plan_deterministic(lambda0: float) -> DeterministicPlan:
    """Solve the trailing phases that make the success probability exactly 1.

    The residual angle chi = pi/2 - (2j+1) theta obeys

        tan(chi) = e^{i varphi} sin(2 theta) / (-cos(2 theta) + i cot(phi/2)),

    solved on the branch with cot(phi/2) >= 0.
    """
    if not 0.0 < lambda0 <= 1.0:
        raise ValueError("success probability must lie in (0, 1]")
    theta = math.asin(math.sqrt(lambda0))
    j = _iteration_count(theta)
    chi = math.pi / 2.0 - (2 * j + 1) * theta
    if chi < CHI_SKIP_ATOL:
        return DeterministicPlan(j=j, chi=0.0, phi=0.0, varphi=0.0)
    sin2t = math.sin(2.0 * theta)
    cos2t = math.cos(2.0 * theta)
    tanchi = math.tan(chi)
    radicand = (sin2t / tanchi) ** 2 - cos2t**2
    # chi < 2 theta makes the radicand non-negative; clip rounding dust.
    radicand = max(radicand, 0.0)
    cot_half = math.sqrt(radicand)
    phi = 2.0 * math.atan2(1.0, cot_half)
    varphi = math.atan2(cot_half, -cos2t)
    residual = abs(
        tanchi - (np.exp(1j * varphi) * sin2t) / (-cos2t + 1j * cot_half)
    )
    if residual > 1e-9:
        raise ValueError(f"phase solution residual {residual} out of tolerance")
    return DeterministicPlan(j=j, chi=chi, phi=phi, varphi=varphi)


def apply_deterministic(
    c: RusCircuit, plan: DeterministicPlan, psi: StateVector
) -> StateVector:
    """Run the deterministic protocol; the result succeeds with probability 1."""
    theta_plan = (math.pi / 2.0 - plan.chi) / (2 * plan.j + 1)
    lambda_plan = math.sin(theta_plan) ** 2
    measured = rus.success_probability(c, qcore.basis_state(1))
    if abs(measured - lambda_plan) > 1e-9:
        raise ValueError(
            f"plan solved for lambda0={lambda_plan:.12g} but circuit has "
            f"lambda0={measured:.12g}"
        )
    pairs = [(math.pi, math.pi)] * plan.j
    if plan.chi != 0.0:
        pairs.append((plan.phi, plan.varphi))
    total = _compose(c, pairs)
    joint = np.kron(qcore.basis_state(c.spec.m).amps, psi.amps)
    return StateVector(c.spec.m + 1, total @ joint)


def pi3_compose(c: RusCircuit, plan: Pi3Plan) -> RusCircuit:
    """Level-k cube-law composition A_k = -A_{k-1} S A_{k-1}^dag S A_{k-1}."""
    phase = plan.sign * math.pi / 3.0
    refl = reflection(c.spec.m, phase).mat
    current = c.a_matrix.mat
    for _ in range(plan.k):
        current = -(current @ refl @ current.conj().T @ refl @ current)
    return rus.circuit_from_matrix(
        UnitaryMatrix(current), c.spec.m, seed=c.spec.seed
    )


def pi3_level_for(epsilon: float, delta: float) -> int:
    """Smallest recursion depth driving failure epsilon below delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("failure tolerance must lie in (0, 1)")
    if epsilon >= 1.0:
        raise ValueError("failure probability 1 cannot be amplified away")
    if epsilon <= delta:
        return 0
    # Failure after level k is epsilon**(3**k); compare in the log domain.
    k = 0
    while 3**k * math.log(epsilon) > math.log(delta):
        k += 1
    return k


def chebyshev_first_kind(order: float, x: float) -> float:
    """T_order(x) for real (possibly fractional) order on x >= -1."""
    if x < -1.0:
        raise ValueError("argument below -1 is outside the supported domain")
    if x <= 1.0:
        return math.cos(order * math.acos(x))
    return math.cosh(order * math.acosh(x))


def _threshold(L: int, delta: float) -> tuple[float, float]:
    gamma = 1.0 / chebyshev_first_kind(1.0 / (2 * L + 1), 1.0 / math.sqrt(delta))
    return gamma, 1.0 - gamma**2


def fp_length_for(w_bound: float, delta: float, max_length: int = 10**6) -> int:
    """Smallest schedule length whose threshold w falls at or below w_bound."""
    if not 0.0 < delta < 1.0:
        raise ValueError("failure tolerance must lie in (0, 1)")
    if not 0.0 < w_bound <= 1.0:
        raise ValueError("threshold bound must lie in (0, 1]")
    for L in range(1, max_length + 1):
        if _threshold(L, delta)[1] <= w_bound:
            return L
    raise RuntimeError(f"no schedule length up to {max_length} reaches the bound")


def fp_plan(L: int, delta: float) -> FixedPointPlan:
    """Chebyshev schedule: gamma^{-1} = T_{1/(2L+1)}(1/sqrt(delta))."""
    if L < 1:
        raise ValueError("schedule length must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("failure tolerance must lie in (0, 1)")
    gamma, w = _threshold(L, delta)
    spread = math.sqrt(1.0 - gamma**2)
    phis = tuple(
        -2.0 * math.atan2(1.0, math.tan(2.0 * math.pi * j / (2 * L + 1)) * spread)
        for j in range(1, L + 1)
    )
    return FixedPointPlan(
        L=L, delta=delta, gamma=gamma, w=w, phis=phis, varphis=phis[::-1]
    )


def fp_compose(c: RusCircuit, plan: FixedPointPlan) -> RusCircuit:
    """Apply the length-L fixed-point schedule after A.

    If the circuit's lambda0 is at least plan.w, the composed circuit's
    success probability is at least 1 - plan.delta.
    """
    pairs = list(zip(plan.phis, plan.varphis))
    total = UnitaryMatrix(_compose(c, pairs))
    return rus.circuit_from_matrix(total, c.spec.m, seed=c.spec.seed)


def plan_to_dict(plan) -> dict:
    if isinstance(plan, StandardPlan):
        return {"protocol": "standard", "j": plan.j, "theta": plan.theta}
    if isinstance(plan, DeterministicPlan):
        return {
            "protocol": "deterministic",
            "j": plan.j,
            "chi": plan.chi,
            "phi": plan.phi,
            "varphi": plan.varphi,
        }
    if isinstance(plan, Pi3Plan):
        return {"protocol": "pi3", "k": plan.k, "sign": plan.sign}
    if isinstance(plan, FixedPointPlan):
        return {
            "protocol": "fp",
            "L": plan.L,
            "delta": plan.delta,
            "gamma": plan.gamma,
            "w": plan.w,
            "phis": list(plan.phis),
            "varphis": list(plan.varphis),
        }
    raise TypeError(f"not a plan: {plan!r}")


def plan_from_dict(data: dict):
    kind = data["protocol"]
    if kind == "standard":
        return StandardPlan(j=int(data["j"]), theta=float(data["theta"]))
    if kind == "deterministic":
        return DeterministicPlan(
            j=int(data["j"]),
            chi=float(data["chi"]),
            phi=float(data["phi"]),
            varphi=float(data["varphi"]),
        )
    if kind == "pi3":
        return Pi3Plan(k=int(data["k"]), sign=int(data["sign"]))
    if kind == "fp":
        return FixedPointPlan(
            L=int(data["L"]),
            delta=float(data["delta"]),
            gamma=float(data["gamma"]),
            w=float(data["w"]),
            phis=tuple(data["phis"]),
            varphis=tuple(data["varphis"]),
        )
    raise ValueError(f"unknown protocol {kind!r}")
