"""Open-system dynamics over a piecewise-constant control grid.

The generator of the evolution is ``L(rho) = -i[H, rho] + sum_c (gamma_c/2)
(A_c rho A_c - rho)`` with involutory Hermitian dephasing bases ``A_c``.  The
state is advanced step by step as ``rho_j = exp(dt L_j) rho_{j-1}``, and the
parameter derivatives of the state are carried along in one of two ways:

``exact``
    per-step derivative of the exponential via the augmented block matrix
    ``exp(dt [[L, dL], [0, L]])``, exact to machine precision for
    piecewise-constant generators;

``first_order``
    the recursion ``drho_j = exp(dt L_j) drho_{j-1} + dt (dL_j) rho_j``,
    first-order accurate in dt.  This is the discretization the analytic
    control gradients are derived from, so gradient checks must compare
    against this mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InvariantViolation,
    PropagationError,
)
from .operators import (
    Povm,
    Superoperator,
    commutator_superop,
    dag,
    sandwich_superop,
    validate_density_matrix,
    validate_hermitian,
    vec,
)

__all__ = [
    "ControlGrid",
    "NoiseSpec",
    "Trajectory",
    "build_liouvillian",
    "measure",
    "measure_derivs",
    "propagate",
    "step_hamiltonians",
    "step_liouvillians",
]

TRACE_DRIFT_ABORT = 1e-6
PROB_CLAMP_FLOOR = -1e-12


@dataclass(frozen=True)
class NoiseSpec:
    """Dephasing channels ``(gamma/2)(A rho A - rho)`` with A Hermitian, A^2 = 1."""

    channels: tuple = ()

    def __post_init__(self):
        for a, rate in self.channels:
            if rate < 0:
                raise InvariantViolation(f"negative dephasing rate {rate}")
            a = validate_hermitian(a, atol=1e-10, name="jump basis")
            if np.max(np.abs(a @ a - np.eye(a.shape[0]))) > 1e-10:
                raise InvariantViolation("jump basis is not involutory (A^2 != 1)")

    @staticmethod
    def none() -> "NoiseSpec":
        return NoiseSpec(())

    @staticmethod
    def dephasing(pairs) -> "NoiseSpec":
        """Build from an iterable of (basis operator, rate) pairs."""
        return NoiseSpec(tuple((np.asarray(a, dtype=complex), float(g)) for a, g in pairs))

    def __bool__(self) -> bool:
        return any(rate > 0 for _, rate in self.channels)


@dataclass(frozen=True)
class ControlGrid:
    """Piecewise-constant control amplitudes: ``num_fields`` x ``num_steps``."""

    num_fields: int
    num_steps: int
    total_time: float
    amplitudes: np.ndarray
    amplitude_bound: float | None = None

    def __post_init__(self):
        if self.num_fields < 1 or self.num_steps < 1:
            raise InvariantViolation("control grid needs >= 1 field and >= 1 step")
        if not self.total_time > 0:
            raise InvariantViolation("total_time must be positive")
        amps = np.asarray(self.amplitudes, dtype=float)
        if amps.shape != (self.num_fields, self.num_steps):
            raise DimensionMismatch(
                f"amplitudes shape {amps.shape} != ({self.num_fields}, {self.num_steps})"
            )
        if not np.all(np.isfinite(amps)):
            raise InvariantViolation("control amplitudes must be finite")
        if self.amplitude_bound is not None and np.max(np.abs(amps)) > self.amplitude_bound:
            raise InvariantViolation(
                f"amplitudes exceed the configured bound {self.amplitude_bound}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dt(self) -> float:
        return self.total_time / self.num_steps

    @staticmethod
    def zeros(num_fields: int, num_steps: int, total_time: float,
              amplitude_bound: float | None = None) -> "ControlGrid":
        return ControlGrid(num_fields, num_steps, total_time,
                           np.zeros((num_fields, num_steps)), amplitude_bound)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "ControlGrid":
        return ControlGrid(self.num_fields, self.num_steps, self.total_time,
                           amplitudes, self.amplitude_bound)


@dataclass(frozen=True)
class Trajectory:
    """States, per-step propagators and state derivatives along the grid.

    ``states[j]`` is the state after j steps (``states[0]`` is the probe),
    ``segment_propagators[j-1]`` maps ``states[j-1]`` to ``states[j]``, and
    ``param_derivs[a][j]`` is the derivative of ``states[j]`` with respect to
    the a-th model parameter (None when derivatives were not requested).
    """

    model: object
    x: np.ndarray
    controls: ControlGrid
    states: tuple
    segment_propagators: tuple
    param_derivs: np.ndarray | None
    deriv_method: str | None
    dt: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dt", self.controls.dt)

    @property
    def num_steps(self) -> int:
        return len(self.segment_propagators)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_derivs(self) -> np.ndarray:
        if self.param_derivs is None:
            raise InvariantViolation("trajectory was propagated without derivatives")
        return self.param_derivs[:, -1]


def build_liouvillian(h: np.ndarray, noise: NoiseSpec) -> Superoperator:
    """Generator ``rho -> -i[H, rho] + sum_c (gamma_c/2)(A_c rho A_c - rho)``."""
    h = validate_hermitian(h, atol=1e-10, name="Hamiltonian")
    d = h.shape[0]
    lmat = -1j * commutator_superop(h).mat
    eye = np.eye(d * d, dtype=complex)
    for a, rate in noise.channels:
        if a.shape[0] != d:
            raise DimensionMismatch("jump basis dimension does not match Hamiltonian")
        lmat = lmat + 0.5 * rate * (sandwich_superop(a).mat - eye)
    return Superoperator(d, lmat)


def step_hamiltonians(model, x, controls: ControlGrid) -> list:
    """Total Hamiltonian ``H0(x) + sum_k V_k(j) H_k`` for each time step."""
    if controls.num_fields != len(model.control_hams):
        raise DimensionMismatch(
            f"{controls.num_fields} control fields vs "
            f"{len(model.control_hams)} control Hamiltonians"
        )
    h0 = model.h0(np.asarray(x, dtype=float))
    hams = []
    for j in range(controls.num_steps):
        h = h0.copy()
        for k, hk in enumerate(model.control_hams):
            h = h + controls.amplitudes[k, j] * hk
        hams.append(h)
    return hams


def step_liouvillians(model, x, controls: ControlGrid) -> list:
    """Per-step generators ``L_i = build_liouvillian(H_i, noise)``."""
    return [build_liouvillian(h, model.noise) for h in step_hamiltonians(model, x, controls)]


def _hamiltonian_step_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    # Spectral exponential of the (normal) purely Hamiltonian generator:
    # exp(dt L) = U kron conj(U) with U = exp(-i dt H).
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(-1j * dt * evals)) @ dag(evecs)
    return np.kron(u, np.conj(u))


def _exact_step_derivative(lmat: np.ndarray, dlmat: np.ndarray, dt: float) -> np.ndarray:
    # Upper-right block of exp(dt [[L, dL], [0, L]]) is the exact derivative
    # of exp(dt L) in the direction dL.
    d2 = lmat.shape[0]
    aug = np.zeros((2 * d2, 2 * d2), dtype=complex)
    aug[:d2, :d2] = lmat
    aug[:d2, d2:] = dlmat
    aug[d2:, d2:] = lmat
    return scipy.linalg.expm(dt * aug)[:d2, d2:]


def propagate(model, x, controls: ControlGrid, probe: np.ndarray | None = None,
              deriv_method: str | None = "exact") -> Trajectory:
    """Evolve the probe through every control step, tracking derivatives.

    Parameters
    ----------
    model : ParametricModel
        Supplies ``h0``, ``dh0``, ``control_hams`` and ``noise``.
    x : array_like
        Parameter point at which the dynamics is linearized.
    controls : ControlGrid
    probe : ndarray, optional
        Initial state; defaults to the model's probe.
    deriv_method : {"exact", "first_order", None}
        How parameter derivatives of the state are propagated (None skips
        them entirely).
    """
    if deriv_method not in ("exact", "first_order", None):
        raise InvariantViolation(f"unknown deriv_method {deriv_method!r}")
    x = np.asarray(x, dtype=float)
    if probe is None:
        probe = model.default_probe
    probe = validate_density_matrix(probe, name="probe")
    if probe.shape[0] != model.dim:
        raise DimensionMismatch("probe dimension does not match the model")

    d = model.dim
    dt = controls.dt
    m = controls.num_steps
    hams = step_hamiltonians(model, x, controls)
    noisy = bool(model.noise)

    # Propagators for repeated identical steps are computed once.
    uniform = bool(np.all(controls.amplitudes == controls.amplitudes[:, :1]))

    liouvillians = None
    derivs_wanted = deriv_method is not None
    if noisy or derivs_wanted:
        if uniform:
            first = build_liouvillian(hams[0], model.noise)
            liouvillians = [first] * m
        else:
            liouvillians = [build_liouvillian(h, model.noise) for h in hams]

    segs: list = []
    if uniform:
        if noisy:
            e0 = scipy.linalg.expm(dt * liouvillians[0].mat)
        else:
            e0 = _hamiltonian_step_propagator(hams[0], dt)
        segs = [e0] * m
    else:
        for j in range(m):
            if noisy:
                segs.append(scipy.linalg.expm(dt * liouvillians[j].mat))
            else:
                segs.append(_hamiltonian_step_propagator(hams[j], dt))

    n_par = len(model.param_names)
    dh0 = model.dh0(x)
    dl_mats = [-1j * commutator_superop(dh).mat for dh in dh0] if derivs_wanted else []

    dsegs = None
    if deriv_method == "exact":
        if uniform:
            base = [_exact_step_derivative(liouvillians[0].mat, dl, dt) for dl in dl_mats]
            dsegs = [base] * m
        else:
            dsegs = [
                [_exact_step_derivative(liouvillians[j].mat, dl, dt) for dl in dl_mats]
                for j in range(m)
            ]

    rho_v = vec(probe)
    states = [probe]
    drho_v = np.zeros((n_par, d * d), dtype=complex) if derivs_wanted else None
    derivs = [np.zeros((n_par, d, d), dtype=complex)] if derivs_wanted else None

    for j in range(m):
        prev_v = rho_v
        rho_v = segs[j] @ rho_v
        tr = np.sum(rho_v.reshape(d, d).diagonal())
        if not np.isfinite(tr.real) or abs(tr - 1.0) > TRACE_DRIFT_ABORT:
            raise PropagationError(
                f"trace drifted to {tr:.6g} at step {j + 1} of {m} "
                f"(dt={dt:.3g}); propagation aborted"
            )
        states.append(rho_v.reshape(d, d))
        if derivs_wanted:
            if deriv_method == "exact":
                drho_v = drho_v @ segs[j].T + np.stack(
                    [dsegs[j][a] @ prev_v for a in range(n_par)]
                )
            else:
                drho_v = drho_v @ segs[j].T + dt * np.stack(
                    [dl_mats[a] @ rho_v for a in range(n_par)]
                )
            derivs.append(drho_v.reshape(n_par, d, d))

    param_derivs = np.stack(derivs, axis=1) if derivs_wanted else None
    return Trajectory(
        model=model,
        x=x,
        controls=controls,
        states=tuple(states),
        segment_propagators=tuple(Superoperator(d, s) for s in segs),
        param_derivs=param_derivs,
        deriv_method=deriv_method,
    )


def measure(rho: np.ndarray, povm: Povm) -> np.ndarray:
    """Outcome probabilities ``p_y = Tr(rho E_y)``, clamped to [0, 1]."""
    if rho.shape[0] != povm.dim:
        raise DimensionMismatch("state and POVM dimensions differ")
    p = np.array([np.trace(rho @ e).real for e in povm.effects])
    if np.min(p) < PROB_CLAMP_FLOOR:
        raise PropagationError(
            f"probability {np.min(p):.3e} below clamp floor; propagation is broken"
        )
    p = np.clip(p, 0.0, 1.0)
    if abs(np.sum(p) - 1.0) > 1e-9:
        raise InvariantViolation(f"probabilities sum to {np.sum(p):.12f}, not 1")
    return p


def measure_derivs(trajectory: Trajectory, povm: Povm):
    """Final-state probabilities and their parameter derivatives.

    Returns ``(p, dp)`` with ``dp[a, y] = Tr(drho_a E_y)``.
    """
    p = measure(trajectory.final_state, povm)
    drho = trajectory.final_derivs
    dp = np.array([[np.trace(dr @ e).real for e in povm.effects] for dr in drho])
    if np.max(np.abs(dp.sum(axis=1))) > 1e-8:
        raise InvariantViolation("probability derivatives do not sum to zero")
    return p, dp
