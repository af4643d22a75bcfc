"""Amplitude distortion of conditionally controlled repeat-until-success gates.

When a repeat-until-success circuit is applied under a control qubit, the
control-|0> branch must idle while the control-|1> branch runs attempts.
Giving the idle branch an ancilla "distorter" with outcome weights gamma_i
makes each measurement outcome multiply the two branches by sqrt(gamma_i)
and sqrt(lambda_i) respectively, so the branch ratio random-walks until the
success outcome ends the run.  This module builds the controlled operators,
evaluates the resulting average fidelity in closed form, and estimates it
independently by direct stochastic simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore, rus
from .qcore import RngStream, StateVector, UnitaryMatrix
from .rus import MaxAttemptsExceeded, RunRecord, RusCircuit

_P0 = np.array([[1.0, 0.0], [0.0, 0.0]])
_P1 = np.array([[0.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class ConditionalCircuit:
    """Controlled operator: distorter (or identity) on control |0>, A on |1>.

    ``gammas`` is None for the undistorted variant, whose idle branch leaves
    the ancillas alone and therefore always yields the all-zero outcome.
    """

    base: RusCircuit
    gammas: np.ndarray | None
    distorter: UnitaryMatrix | None
    b_matrix: UnitaryMatrix

    def effective_gammas(self) -> np.ndarray:
        """Outcome weights seen by the control-|0> branch."""
        if self.gammas is not None:
            return self.gammas
        point = np.zeros(2**self.base.spec.m)
        point[0] = 1.0
        return point


@dataclass(frozen=True, eq=False)
class DistortionConfig:
    """Input superposition alpha |psi0>|0> + beta |psi1>|1> plus run controls."""

    alpha: complex
    beta: complex
    psi0: StateVector
    psi1: StateVector
    trials: int
    seed: int
    max_attempts: int = rus.DEFAULT_MAX_ATTEMPTS

    def __post_init__(self) -> None:
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0) > qcore.NORM_ATOL:
            raise ValueError("control amplitudes must be normalized")
        if self.psi0.num_qubits != 1 or self.psi1.num_qubits != 1:
            raise ValueError("branch states are single-qubit")
        if self.trials < 1:
            raise ValueError("need at least one trial")


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    std_error: float
    trials: int
    exhausted: int = 0


def build_distorter(gammas: np.ndarray, seed: int) -> UnitaryMatrix:
    """Ancilla unitary sending |0^m> to sum_i sqrt(gamma_i) |i>.

    For a single ancilla this is exactly the y-rotation with
    cos(pi/2 - theta') = sqrt(gamma_0); larger registers complete the first
    column with seeded random vectors.
    """
    gammas = np.asarray(gammas, dtype=float)
    dim = gammas.shape[0]
    if dim & (dim - 1) or dim < 2:
        raise ValueError("weight vector length must be a power of two, >= 2")
    if np.any(gammas < 0) or abs(gammas.sum() - 1.0) > qcore.NORM_ATOL:
        raise ValueError("weights must be non-negative and sum to 1")
    column = np.sqrt(gammas)
    if dim == 2:
        angle = math.pi / 2.0 - math.asin(column[0])
        mat = np.array(
            [
                [math.cos(angle), -math.sin(angle)],
                [math.sin(angle), math.cos(angle)],
            ]
        )
        return UnitaryMatrix(mat)
    return qcore.complete_isometry([column], dim, qcore.rng_stream(seed))


def build_conditional(
    base: RusCircuit, gammas: np.ndarray | None = None, seed: int = 0
) -> ConditionalCircuit:
    """Assemble the controlled operator on (ancillas, data, control)."""
    m = base.spec.m
    if gammas is None:
        idle = np.eye(2 ** (m + 1))
        distorter = None
    else:
        gammas = np.asarray(gammas, dtype=float)
        if gammas.shape != (2**m,):
            raise ValueError(f"expected {2**m} distorter weights")
        distorter = build_distorter(gammas, seed)
        idle = np.kron(distorter.mat, np.eye(2))
    b_matrix = UnitaryMatrix(np.kron(idle, _P0) + np.kron(base.a_matrix.mat, _P1))
    if gammas is not None:
        gammas = gammas.copy()
        gammas.setflags(write=False)
    return ConditionalCircuit(
        base=base, gammas=gammas, distorter=distorter, b_matrix=b_matrix
    )


def single_shot_overlap(lambda0: float) -> float:
    """Squared overlap after one immediately successful undistorted attempt,
    for the balanced input alpha = beta = 1/sqrt(2)."""
    if not 0.0 <= lambda0 <= 1.0:
        raise ValueError("success probability must lie in [0, 1]")
    return (1.0 + math.sqrt(lambda0)) ** 2 / (2.0 * (1.0 + lambda0))


def average_fidelity_closed(
    alpha: complex, beta: complex, gammas: np.ndarray, lambdas: np.ndarray
) -> float:
    """Sequence-averaged fidelity of the distorted conditional gate.

    Averaging the per-sequence overlaps over the outcome-sequence
    distribution telescopes into

        |alpha|^4 + 2 |alpha|^2 |beta|^2 sqrt(gamma_0 lambda_0) / Gamma
                  + |beta|^4,
        Gamma = 1 - sum_{i != 0} sqrt(gamma_i lambda_i).
    """
    gammas = np.asarray(gammas, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if gammas.shape != lambdas.shape:
        raise ValueError("weight vectors must have matching length")
    a2 = abs(alpha) ** 2
    b2 = abs(beta) ** 2
    if abs(a2 + b2 - 1.0) > qcore.NORM_ATOL:
        raise ValueError("control amplitudes must be normalized")
    cross = gammas[0] * lambdas[0]
    if cross == 0.0:
        # One branch can never reach the success outcome; only the diagonal
        # terms survive.
        return a2**2 + b2**2
    denom = 1.0 - float(np.sum(np.sqrt(gammas[1:] * lambdas[1:])))
    return a2**2 + 2.0 * a2 * b2 * math.sqrt(cross) / denom + b2**2


def average_fidelity_m1(
    alpha: complex, beta: complex, gamma0: float, lambda0: float
) -> float:
    """Single-ancilla reduction of the averaged fidelity."""
    a2 = abs(alpha) ** 2
    b2 = abs(beta) ** 2
    if abs(a2 + b2 - 1.0) > qcore.NORM_ATOL:
        raise ValueError("control amplitudes must be normalized")
    if gamma0 * lambda0 == 0.0:
        return a2**2 + b2**2
    denom = 1.0 - math.sqrt((1.0 - gamma0) * (1.0 - lambda0))
    return a2**2 + 2.0 * a2 * b2 * math.sqrt(gamma0 * lambda0) / denom + b2**2


def _initial_pair(cfg: DistortionConfig) -> np.ndarray:
    # (data, control) amplitudes, control least significant.
    amps = np.zeros(4, dtype=np.complex128)
    amps[0::2] = cfg.alpha * cfg.psi0.amps
    amps[1::2] = cfg.beta * cfg.psi1.amps
    return amps


def ideal_conditional_state(
    cc: ConditionalCircuit, cfg: DistortionConfig
) -> StateVector:
    """Distortion-free reference: the target applied on the control-|1> branch."""
    amps = np.zeros(4, dtype=np.complex128)
    amps[0::2] = cfg.alpha * cfg.psi0.amps
    amps[1::2] = cfg.beta * (cc.base.spec.target.mat @ cfg.psi1.amps)
    return StateVector(2, amps)


def control_branch_phase(state: StateVector, cc: ConditionalCircuit,
                         cfg: DistortionConfig) -> float:
    """Relative phase picked up by the control-|1> branch of a final state."""
    if state.num_qubits != 2:
        raise ValueError("expected a (data, control) state")
    reference = cc.base.spec.target.mat @ cfg.psi1.amps
    return float(np.angle(np.vdot(reference, state.amps[1::2])))


def _controlled_recovery(cc: ConditionalCircuit, outcome: int) -> np.ndarray:
    undo = cc.base.spec.recoveries[outcome - 1].mat.conj().T
    return np.kron(np.eye(2), _P0) + np.kron(undo, _P1)


def simulate_conditional_rus(
    cc: ConditionalCircuit, cfg: DistortionConfig, rng: RngStream
) -> tuple[RunRecord, StateVector]:
    """One stochastic run of the conditional loop on fresh ancillas per attempt.

    Failure outcomes apply the controlled recovery inverse; the run ends on
    the all-zero outcome and returns the surviving (data, control) state.
    """
    m = cc.base.spec.m
    ancilla = qcore.basis_state(m).amps
    current = StateVector(2, _initial_pair(cfg))
    outcomes: list[int] = []
    for _ in range(cfg.max_attempts):
        joint = StateVector(m + 2, cc.b_matrix.mat @ np.kron(ancilla, current.amps))
        outcome, collapsed, _ = qcore.measure_ancillas(joint, m, rng)
        outcomes.append(outcome)
        pair = collapsed.amps.reshape(2**m, 4)[outcome]
        if outcome == 0:
            final = StateVector(2, pair)
            return RunRecord(tuple(outcomes), len(outcomes), final), final
        current = StateVector(2, _controlled_recovery(cc, outcome) @ pair)
    raise MaxAttemptsExceeded(f"no success outcome within {cfg.max_attempts} attempts")


def monte_carlo_fidelity(
    cc: ConditionalCircuit, cfg: DistortionConfig
) -> FidelityEstimate:
    """Estimate the averaged fidelity by simulating ``cfg.trials`` runs.

    Trials are advanced as one batch (equivalent to independent runs with a
    shared draw order); runs that exhaust the attempt cap are excluded from
    the mean and reported in ``exhausted``.
    """
    m = cc.base.spec.m
    n_outcomes = 2**m
    bcols = cc.b_matrix.mat[:, :4]  # inputs restricted to the |0^m> block
    ideal = ideal_conditional_state(cc, cfg).amps
    recoveries = [_controlled_recovery(cc, i) for i in range(1, n_outcomes)]
    rng = qcore.rng_stream(cfg.seed)
    states = np.tile(_initial_pair(cfg)[:, None], (1, cfg.trials))
    fids = np.full(cfg.trials, np.nan)
    alive = np.arange(cfg.trials)
    for _ in range(cfg.max_attempts):
        if alive.size == 0:
            break
        blocks = (bcols @ states).reshape(n_outcomes, 4, alive.size)
        probs = np.sum(np.abs(blocks) ** 2, axis=1)
        cdf = np.cumsum(probs, axis=0)
        u = rng.random(alive.size) * cdf[-1]
        outcome = np.minimum((cdf <= u[None, :]).sum(axis=0), n_outcomes - 1)
        col = np.arange(alive.size)
        picked = blocks[outcome, :, col] / np.sqrt(probs[outcome, col])[:, None]
        done = outcome == 0
        if done.any():
            fids[alive[done]] = np.abs(picked[done] @ ideal.conj()) ** 2
        keep = ~done
        if not keep.any():
            alive = alive[:0]
            break
        survivors = picked[keep]
        failed_outcome = outcome[keep]
        for i in np.unique(failed_outcome):
            rows = failed_outcome == i
            survivors[rows] = survivors[rows] @ recoveries[i - 1].T
        states = survivors.T
        alive = alive[keep]
    finished = ~np.isnan(fids)
    count = int(finished.sum())
    if count == 0:
        return FidelityEstimate(math.nan, math.nan, 0, int(alive.size))
    sample = fids[finished]
    mean = float(sample.mean())
    std_error = float(sample.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    return FidelityEstimate(mean, std_error, count, int(alive.size))


@dataclass(frozen=True)
class FigureRow:
    x: float
    curve_id: str
    mean: float
    std: float
    n_samples: int
    seed: int


# Relative detuning used by the distorted-weight curves.
DETUNING = 0.3
GRID_POINTS = 50
DRAWS_PER_POINT = 1000
_BALANCED = complex(1.0 / math.sqrt(2.0))


def _gamma0_curves(detuning: float) -> dict:
    return {
        "gamma_one": lambda lam0: 1.0,
        "gamma_over": lambda lam0: min(1.0, lam0 * (1.0 + detuning)),
        "gamma_under": lambda lam0: lam0 * (1.0 - detuning),
        "gamma_matched": lambda lam0: lam0,
    }


def _random_split(rng: RngStream, slots: int, mass: float, draws: int) -> np.ndarray:
    """iid uniforms per draw, rescaled so each row sums to ``mass``."""
    raw = rng.random((draws, slots))
    if mass == 0.0:
        return np.zeros_like(raw)
    return raw * (mass / raw.sum(axis=1))[:, None]


def _sampled_fidelities(
    gamma0: float, lambda0: float, slots: int, rng: RngStream, draws: int
) -> np.ndarray:
    gamma_rest = _random_split(rng, slots, 1.0 - gamma0, draws)
    lambda_rest = _random_split(rng, slots, 1.0 - lambda0, draws)
    a2 = b2 = 0.5
    cross = gamma0 * lambda0
    if cross == 0.0:
        return np.full(draws, a2**2 + b2**2)
    denom = 1.0 - np.sum(np.sqrt(gamma_rest * lambda_rest), axis=1)
    return a2**2 + 2.0 * a2 * b2 * math.sqrt(cross) / denom + b2**2


def figure1_data(panel: str, seed: int) -> list[FigureRow]:
    """Averaged fidelity vs lambda0 for four gamma_0 relations.

    ``left``: single ancilla, fully closed form.  ``right``: four ancillas
    with the failure weights of both distributions drawn at random per point;
    rows carry the sample mean and standard deviation.
    """
    if panel not in ("left", "right"):
        raise ValueError("panel must be 'left' or 'right'")
    grid = np.linspace(0.02, 0.98, GRID_POINTS)
    curves = _gamma0_curves(DETUNING)
    rows: list[FigureRow] = []
    streams = qcore.substreams(seed, len(curves) * GRID_POINTS)
    for ci, (curve_id, gamma0_of) in enumerate(curves.items()):
        for pi, lam0 in enumerate(grid):
            lam0 = float(lam0)
            gamma0 = gamma0_of(lam0)
            if panel == "left":
                value = average_fidelity_m1(_BALANCED, _BALANCED, gamma0, lam0)
                rows.append(FigureRow(lam0, curve_id, value, 0.0, 1, seed))
            else:
                fids = _sampled_fidelities(
                    gamma0, lam0, 15, streams[ci * GRID_POINTS + pi], DRAWS_PER_POINT
                )
                rows.append(
                    FigureRow(
                        lam0,
                        curve_id,
                        float(fids.mean()),
                        float(fids.std(ddof=1)),
                        DRAWS_PER_POINT,
                        seed,
                    )
                )
    return rows


def figure3_data(seed: int) -> list[FigureRow]:
    """Averaged fidelity vs residual failure of an amplified circuit.

    The control-|1> branch is taken post-amplification with success
    1 - eps; the x axis sweeps eps on a log grid, four ancillas, with both
    failure distributions drawn at random per point.
    """
    eps_grid = np.geomspace(1e-6, 1e-1, GRID_POINTS)
    curves = {
        "gamma_one": lambda lam0: 1.0,
        "gamma_under": lambda lam0: lam0 * (1.0 - DETUNING),
        "gamma_matched": lambda lam0: lam0,
    }
    rows: list[FigureRow] = []
    streams = qcore.substreams(seed, len(curves) * GRID_POINTS)
    for ci, (curve_id, gamma0_of) in enumerate(curves.items()):
        for pi, eps in enumerate(eps_grid):
            lam0 = 1.0 - float(eps)
            gamma0 = gamma0_of(lam0)
            fids = _sampled_fidelities(
                gamma0, lam0, 15, streams[ci * GRID_POINTS + pi], DRAWS_PER_POINT
            )
            rows.append(
                FigureRow(
                    float(eps),
                    curve_id,
                    float(fids.mean()),
                    float(fids.std(ddof=1)),
                    DRAWS_PER_POINT,
                    seed,
                )
            )
    return rows
