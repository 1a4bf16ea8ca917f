"""Analytic control gradients of the classical information matrix and the
gradient-ascent pulse loop.

Response structure
------------------
Writing ``D_a^b`` for the propagator product over steps a..b (identity when
a > b) and ``J_X(j)`` for the within-step insertion of a generator direction
X into step j, the responses behind the gradients are

* probability:       ``R1_{k,j}   = D_{j+1}^m J_k(j) rho_{j-1}``,
* past insertions:   ``R2_{a,k,j} = D_{j+1}^m J_k(j) w_{a,j-1}``,
* future insertions: ``R3_{a,k,j} = G_{a,j} J_k(j) rho_{j-1}``,
* same-step mix:     ``RX_{a,k,j} = D_{j+1}^m (dJ_a(j)/dV_k(j)) rho_{j-1}``,

with the running sums ``w_{a,j} = sum_{i<=j} D_{i+1}^j J_a(i) rho_{i-1}`` and
``G_{a,j} = sum_{i>j} D_{i+1}^m J_a(i) D_{j+1}^{i-1}`` (empty, hence zero, at
j = m).  Then ``dp_y/dV_k(j) = Tr[E_y R1]``, ``d(d_a p_y)/dV_k(j) =
Tr[E_y (R2 + R3 + RX)]``, and the information-matrix entry gradients combine
the responses through the score-weighted effect operators
``sum_y (d ln p_y) E_y``.

The insertion ``J_X(j)`` discretizes the within-step integral
``int_0^dt exp((dt-s) L_j) X exp(s L_j) ds`` by quadrature: "simpson"
(default for the standalone gradient functions; bias is fourth order in dt)
or "trapezoid" (used inside the ascent loop where per-iteration cost
matters; bias is second order).  The textbook end-point form of these
gradients is first order in dt and misses finite-difference checks at
practical grid densities, which is why the refined quadratures are used.
Both running sums are built by one forward and one backward recursion, so a
full gradient grid costs O(m) small matrix products per parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import (
    ControlGrid,
    Trajectory,
    _hamiltonian_step_propagator,
    build_liouvillian,
    measure,
    propagate,
    step_hamiltonians,
)
from .errors import (
    DimensionMismatch,
    FisherctlError,
    InvariantViolation,
    PropagationError,
    SingularContribution,
)
from .fisher import EPS_P, FisherMatrix, cfim, objective_f0, objective_fcle, tr_inv
from .operators import Povm, commutator_superop, vec

__all__ = [
    "GradientContext",
    "GrapeConfig",
    "GrapeResult",
    "gradient_cfim_entry",
    "gradient_dprob",
    "gradient_objective",
    "gradient_prob",
    "optimize",
]

OBJECTIVES = ("f0", "fcle")
MAX_BACKTRACKS = 30


@dataclass(frozen=True)
class GrapeConfig:
    """Knobs of the ascent loop.

    ``init_scheme`` is one of "zeros", "random" (uniform in
    [-init_amplitude, init_amplitude], seeded) or "user" (``user_controls``
    supplies the p x m amplitude grid).  ``update_rule`` is "gradient"
    (backtracking gradient ascent; plain fixed-step when ``fixed_step``) or
    "bfgs" (quasi-Newton over the flattened control vector).
    """

    step_size: float = 0.01
    max_iters: int = 1000
    convergence_tol: float = 1e-6
    convergence_window: int = 5
    init_scheme: str = "random"
    init_seed: int = 0
    init_amplitude: float = 0.1
    user_controls: np.ndarray | None = None
    update_rule: str = "gradient"
    amplitude_bound: float | None = None
    fixed_step: bool = False
    steps_per_unit: int = 100

    def __post_init__(self):
        if not self.step_size > 0:
            raise InvariantViolation("step_size must be positive")
        if self.max_iters < 1:
            raise InvariantViolation("max_iters must be >= 1")
        if not self.convergence_tol > 0:
            raise InvariantViolation("convergence_tol must be positive")
        if self.init_scheme not in ("zeros", "random", "user"):
            raise InvariantViolation(f"unknown init_scheme {self.init_scheme!r}")
        if self.update_rule not in ("gradient", "bfgs"):
            raise InvariantViolation(f"unknown update_rule {self.update_rule!r}")
        if self.init_scheme == "user" and self.user_controls is None:
            raise InvariantViolation("init_scheme 'user' requires user_controls")


@dataclass(frozen=True)
class GrapeResult:
    """Outcome of one ascent run."""

    final_controls: ControlGrid
    objective_history: tuple
    final_cfim: FisherMatrix
    final_tr_inv: float
    iterations_used: int
    converged: bool
    objective: str
    final_objective: float


def _half_step_propagators(trajectory: Trajectory) -> np.ndarray:
    """exp(dt/2 L_j) for every step, reusing the uniform-grid shortcut."""
    model = trajectory.model
    controls = trajectory.controls
    dt2 = 0.5 * trajectory.dt
    hams = step_hamiltonians(model, trajectory.x, controls)
    uniform = bool(np.all(controls.amplitudes == controls.amplitudes[:, :1]))
    noisy = bool(model.noise)

    def one(h):
        if noisy:
            return scipy.linalg.expm(dt2 * build_liouvillian(h, model.noise).mat)
        return _hamiltonian_step_propagator(h, dt2)

    if uniform:
        e = one(hams[0])
        return np.broadcast_to(e, (controls.num_steps,) + e.shape)
    return np.stack([one(h) for h in hams])


class GradientContext:
    """Per-trajectory workspace for the analytic control gradients.

    The forward insertion sums (enough for probabilities, their parameter
    derivatives and hence the objective value) are built eagerly; the
    backward sweeps needed for control gradients are built on first use.
    Step indices ``j`` are 1-based, matching control grid columns
    ``amplitudes[:, j-1]``.
    """

    def __init__(self, trajectory: Trajectory, povm: Povm, insertion: str = "simpson"):
        model = trajectory.model
        if povm.dim != model.dim:
            raise DimensionMismatch("POVM dimension does not match the model")
        if insertion not in ("simpson", "trapezoid"):
            raise InvariantViolation(f"unknown insertion rule {insertion!r}")
        self.trajectory = trajectory
        self.povm = povm
        self.insertion = insertion
        dt = trajectory.dt
        self.dt = dt
        m = trajectory.num_steps
        d = model.dim
        self.num_steps = m
        self.num_fields = len(model.control_hams)
        self.num_params = model.num_params

        self.segs = np.stack([s.mat for s in trajectory.segment_propagators])
        self.rvecs = np.stack([vec(s) for s in trajectory.states])  # (m+1, d^2)

        self.ctrl_comms = np.stack(
            [commutator_superop(hk).mat for hk in model.control_hams]
        )
        dh0 = model.dh0(trajectory.x)
        self.dh0_comms = np.stack([commutator_superop(dh).mat for dh in dh0])

        if insertion == "simpson":
            self._coef = -1j * dt / 6.0
            self.halves = _half_step_propagators(trajectory)
            # hvecs[j-1] = exp(dt/2 L_j) rho_{j-1}
            self.hvecs = np.einsum("jrs,js->jr", self.halves, self.rvecs[:-1])
        else:
            self._coef = -0.5j * dt
            self.halves = None
            self.hvecs = None

        # Forward insertion sums w[a, j] = sum_{i<=j} D_{i+1}^j J_a(i) rho_{i-1},
        # pre-insertion transports u[a, j] = E_j w[a, j-1] and (simpson only)
        # the half-step transports uh[a, j] = exp(dt/2 L_j) w[a, j-1].
        n = self.num_params
        d2 = d * d
        wsum = np.zeros((n, m + 1, d2), dtype=complex)
        usum = np.zeros_like(wsum)
        uhsum = np.zeros_like(wsum) if insertion == "simpson" else None
        dh_t = self.dh0_comms.transpose(0, 2, 1)
        for j in range(1, m + 1):
            e_j = self.segs[j - 1]
            w_prev = wsum[:, j - 1]
            u = w_prev @ e_j.T
            usum[:, j] = u
            if insertion == "simpson":
                uh = w_prev @ self.halves[j - 1].T
                uhsum[:, j] = uh
                wsum[:, j] = u + self._coef * (
                    self.rvecs[j] @ dh_t
                    + 4.0 * ((self.hvecs[j - 1] @ dh_t) @ self.halves[j - 1].T)
                    + (self.rvecs[j - 1] @ dh_t) @ e_j.T
                )
            else:
                wsum[:, j] = u + self._coef * (
                    self.rvecs[j] @ dh_t + (self.rvecs[j - 1] @ dh_t) @ e_j.T
                )
        self.wsum = wsum
        self.usum = usum
        self.uhsum = uhsum

        # Measurement data.  Derivatives follow the trajectory when present;
        # otherwise w[a, m] is the discretized derivative of the final state.
        self.p = measure(trajectory.final_state, povm)
        if trajectory.param_derivs is not None:
            drho_flat = trajectory.final_derivs.reshape(n, -1)
        else:
            drho_flat = wsum[:, m]
        self.effect_vecs = np.stack([np.conj(vec(e)) for e in povm.effects])
        self.dp = np.real(self.effect_vecs @ drho_flat.T).T

        self._active = self.p > EPS_P
        self._suffix = None
        self._gsum = None
        self._gsum_e = None
        self._gsum_h = None

    # -- backward sweeps -------------------------------------------------------

    def _ensure_backward(self):
        if self._suffix is not None:
            return
        m = self.num_steps
        d2 = self.rvecs.shape[1]
        n = self.num_params
        simpson = self.insertion == "simpson"
        suffix = np.empty((m + 1, d2, d2), dtype=complex)
        suffix[m] = np.eye(d2)
        gsum = np.zeros((n, m + 1, d2, d2), dtype=complex)
        gsum_e = np.zeros_like(gsum)
        gsum_h = np.zeros_like(gsum) if simpson else None
        for j in range(m - 1, -1, -1):
            e_next = self.segs[j]  # propagator of step j+1 in 0-based storage
            suffix[j] = suffix[j + 1] @ e_next
            if simpson:
                se_half = suffix[j + 1] @ self.halves[j]
            for a in range(n):
                ge = gsum[a, j + 1] @ e_next
                gsum_e[a, j + 1] = ge
                if simpson:
                    gsum_h[a, j + 1] = gsum[a, j + 1] @ self.halves[j]
                    step_ins = self._coef * (
                        (suffix[j + 1] @ self.dh0_comms[a]) @ e_next
                        + 4.0 * (se_half @ self.dh0_comms[a]) @ self.halves[j]
                        + suffix[j] @ self.dh0_comms[a]
                    )
                else:
                    step_ins = self._coef * (
                        (suffix[j + 1] @ self.dh0_comms[a]) @ e_next
                        + suffix[j] @ self.dh0_comms[a]
                    )
                gsum[a, j] = ge + step_ins
        self._suffix = suffix
        self._gsum = gsum
        self._gsum_e = gsum_e
        self._gsum_h = gsum_h

    @property
    def suffix(self) -> np.ndarray:
        self._ensure_backward()
        return self._suffix

    # -- response vectors --------------------------------------------------------

    def _check_indices(self, k: int, j: int):
        if not 0 <= k < self.num_fields:
            raise DimensionMismatch(f"field index {k} out of range")
        if not 1 <= j <= self.num_steps:
            raise DimensionMismatch(f"step index {j} out of range (1..{self.num_steps})")

    def _insert_vec(self, x_comm: np.ndarray, j: int, pre: np.ndarray,
                    post: np.ndarray, halfv: np.ndarray | None = None) -> np.ndarray:
        """``J_X(j)`` applied to a vectorized operator with transported forms
        ``post = E_j pre`` and (simpson) ``halfv = exp(dt/2 L_j) pre``."""
        e_j = self.segs[j - 1]
        if self.insertion == "simpson":
            if halfv is None:
                halfv = self.halves[j - 1] @ pre
            return self._coef * (
                x_comm @ post
                + 4.0 * (self.halves[j - 1] @ (x_comm @ halfv))
                + e_j @ (x_comm @ pre)
            )
        return self._coef * (x_comm @ post + e_j @ (x_comm @ pre))

    def pulse_response(self, k: int, j: int) -> np.ndarray:
        """vec of ``D_{j+1}^m J_k(j) rho_{j-1}``."""
        self._check_indices(k, j)
        self._ensure_backward()
        halfv = self.hvecs[j - 1] if self.insertion == "simpson" else None
        ins = self._insert_vec(self.ctrl_comms[k], j, self.rvecs[j - 1],
                               self.rvecs[j], halfv)
        return self._suffix[j] @ ins

    def _cross_insert(self, a: int, k: int, j: int) -> np.ndarray:
        # Same-step mix dJ_a(j)/dV_k(j) rho_{j-1}: differentiate the step
        # propagators inside J_a(j) in the V_k(j) direction, at the same
        # quadrature order as J itself.
        hk = self.ctrl_comms[k]
        hd = self.dh0_comms[a]
        e_j = self.segs[j - 1]
        rho_pre = self.rvecs[j - 1]
        jd = hd @ rho_pre
        if self.insertion == "trapezoid":
            c2 = self._coef
            ins_k = c2 * (hk @ self.rvecs[j] + e_j @ (hk @ rho_pre))
            jk_jd = c2 * (hk @ (e_j @ jd) + e_j @ (hk @ jd))
            return c2 * (hd @ ins_k + jk_jd)
        c6 = self._coef
        half_j = self.halves[j - 1]
        hv = self.hvecs[j - 1]
        c4 = -0.25j * self.dt  # trapezoid insert over the half step
        jk_full_rho = self._insert_vec(hk, j, rho_pre, self.rvecs[j], hv)
        jk_half_rho = c4 * (hk @ hv + half_j @ (hk @ rho_pre))
        jk_full_jd = c6 * (
            hk @ (e_j @ jd)
            + 4.0 * (half_j @ (hk @ (half_j @ jd)))
            + e_j @ (hk @ jd)
        )
        xah = hd @ hv
        t4a = c4 * (hk @ (half_j @ xah) + half_j @ (hk @ xah))
        t4b = half_j @ (hd @ jk_half_rho)
        return c6 * (hd @ jk_full_rho + 4.0 * (t4a + t4b) + jk_full_jd)

    def deriv_response(self, a: int, k: int, j: int) -> np.ndarray:
        """vec of the past/future/same-step insertion response for parameter a."""
        self._check_indices(k, j)
        self._ensure_backward()
        hk = self.ctrl_comms[k]
        # past: J_k(j) applied to the accumulated parameter insertions
        halfv = self.uhsum[a, j] if self.insertion == "simpson" else None
        ins_past = self._insert_vec(hk, j, self.wsum[a, j - 1], self.usum[a, j], halfv)
        past = self._suffix[j] @ (ins_past + self._cross_insert(a, k, j))
        # future: insertions in steps after j, transported around J_k(j)
        future = self._gsum[a, j] @ (hk @ self.rvecs[j]) \
            + self._gsum_e[a, j] @ (hk @ self.rvecs[j - 1])
        if self.insertion == "simpson":
            future = future + 4.0 * (self._gsum_h[a, j] @ (hk @ self.hvecs[j - 1]))
        return past + self._coef * future

    # -- score-weighted effect operators -------------------------------------------

    def score_effect(self, a: int) -> np.ndarray:
        """vec (conjugated) of ``sum_y (d_a ln p_y) E_y`` over active outcomes."""
        weights = np.where(self._active, self.dp[a] / np.where(self._active, self.p, 1.0), 0.0)
        return weights @ self.effect_vecs

    def score_pair_effect(self, a: int, b: int) -> np.ndarray:
        """vec (conjugated) of ``sum_y (d_a ln p_y)(d_b ln p_y) E_y``."""
        p_safe = np.where(self._active, self.p, 1.0)
        weights = np.where(self._active, self.dp[a] * self.dp[b] / p_safe**2, 0.0)
        return weights @ self.effect_vecs

    # -- public gradients ------------------------------------------------------------

    def prob_gradient(self, k: int, j: int) -> np.ndarray:
        return np.real(self.effect_vecs @ self.pulse_response(k, j))

    def dprob_gradient(self, a: int, k: int, j: int) -> np.ndarray:
        return np.real(self.effect_vecs @ self.deriv_response(a, k, j))

    def cfim_entry_gradient(self, a: int, b: int, k: int, j: int) -> float:
        r1 = self.pulse_response(k, j)
        ra = self.deriv_response(a, k, j)
        rb = self.deriv_response(b, k, j)
        term = float(np.real(self.score_effect(b) @ ra))
        term += float(np.real(self.score_effect(a) @ rb))
        term -= float(np.real(self.score_pair_effect(a, b) @ r1))
        return term

    def _response_grids(self):
        """R1 (k, j, s) and R2+R3+RX (a, k, j, s) for all indices at once."""
        self._ensure_backward()
        coef = self._coef
        c2 = -0.5j * self.dt
        segs, suffix = self.segs, self._suffix
        simpson = self.insertion == "simpson"

        # hr[k, j] = [H_k, rho_j]; ehr[k, j] = E_j [H_k, rho_{j-1}]
        hr = np.einsum("krs,js->kjr", self.ctrl_comms, self.rvecs)
        ehr = np.einsum("jrs,kjs->kjr", segs, hr[:, :-1])
        if simpson:
            hhv = np.einsum("krs,js->kjr", self.ctrl_comms, self.hvecs)
            ehhv = np.einsum("jrs,kjs->kjr", self.halves, hhv)
            ins = coef * (hr[:, 1:] + 4.0 * ehhv + ehr)
        else:
            ins = coef * (hr[:, 1:] + ehr)  # J_k(j) rho_{j-1}, j = 1..m
        r1 = np.einsum("jrs,kjs->kjr", suffix[1:], ins)

        # past insertions: J_k(j) w_{a, j-1}
        hu = np.einsum("krs,ajs->akjr", self.ctrl_comms, self.usum[:, 1:])
        hw = np.einsum("krs,ajs->akjr", self.ctrl_comms, self.wsum[:, :-1])
        ehw = np.einsum("jrs,akjs->akjr", segs, hw)
        if simpson:
            huh = np.einsum("krs,ajs->akjr", self.ctrl_comms, self.uhsum[:, 1:])
            ehuh = np.einsum("jrs,akjs->akjr", self.halves, huh)
            ins_past = coef * (hu + 4.0 * ehuh + ehw)
        else:
            ins_past = coef * (hu + ehw)

        # same-step mix, at the same quadrature order as the main insertions
        jd = np.einsum("ars,js->ajr", self.dh0_comms, self.rvecs[:-1])  # j-1 slot
        ejd = np.einsum("jrs,ajs->ajr", segs, jd)
        hejd = np.einsum("krs,ajs->akjr", self.ctrl_comms, ejd)
        hjd = np.einsum("krs,ajs->akjr", self.ctrl_comms, jd)
        ehjd = np.einsum("jrs,akjs->akjr", segs, hjd)
        if simpson:
            c4 = -0.25j * self.dt
            halves = self.halves
            # J_k over the full step applied to [dH0_a, rho_{j-1}]
            hhhjd = np.einsum("krs,ajs->akjr", self.ctrl_comms,
                              np.einsum("jrs,ajs->ajr", halves, jd))
            jk_full_jd = coef * (hejd + 4.0 * np.einsum(
                "jrs,akjs->akjr", halves, hhhjd) + ehjd)
            # half-step pieces
            jk_half_rho = c4 * (hhv + np.einsum("jrs,kjs->kjr", halves, hr[:, :-1]))
            xah = np.einsum("ars,js->ajr", self.dh0_comms, self.hvecs)
            hxah = np.einsum("krs,ajs->akjr", self.ctrl_comms,
                             np.einsum("jrs,ajs->ajr", halves, xah))
            ehxah = np.einsum("jrs,akjs->akjr", halves,
                              np.einsum("krs,ajs->akjr", self.ctrl_comms, xah))
            t4a = c4 * (hxah + ehxah)
            t4b = np.einsum("jrs,akjs->akjr", halves,
                            np.einsum("ars,kjs->akjr", self.dh0_comms, jk_half_rho))
            ins_cross = coef * (
                np.einsum("ars,kjs->akjr", self.dh0_comms, ins)
                + 4.0 * (t4a + t4b)
                + jk_full_jd
            )
        else:
            ins_k2 = c2 * (hr[:, 1:] + ehr)
            ins_cross = c2 * (
                np.einsum("ars,kjs->akjr", self.dh0_comms, ins_k2)
                + c2 * (hejd + ehjd)
            )

        r23 = np.einsum("jrs,akjs->akjr", suffix[1:], ins_past + ins_cross)
        future = np.einsum("ajrs,kjs->akjr", self._gsum[:, 1:], hr[:, 1:])
        future += np.einsum("ajrs,kjs->akjr", self._gsum_e[:, 1:], hr[:, :-1])
        if simpson:
            future += 4.0 * np.einsum("ajrs,kjs->akjr", self._gsum_h[:, 1:], hhv)
        r23 += coef * future
        return r1, r23

    def cfim_gradient_grid(self) -> np.ndarray:
        """All entry gradients at once: shape (n_par, n_par, p, m)."""
        n = self.num_params
        r1, r23 = self._response_grids()
        l1 = np.stack([self.score_effect(a) for a in range(n)])
        t23 = np.real(np.einsum("cs,bkjs->cbkj", l1, r23))  # Tr[L1_c R_b]
        grid = np.empty((n, n, self.num_fields, self.num_steps))
        for a in range(n):
            for b in range(a, n):
                l2 = self.score_pair_effect(a, b)
                g = t23[b, a] + t23[a, b] - np.real(np.einsum("s,kjs->kj", l2, r1))
                grid[a, b] = grid[b, a] = g
        return grid

    def current_cfim(self) -> FisherMatrix:
        return cfim(self.p, self.dp)


def gradient_prob(trajectory: Trajectory, povm: Povm, k: int, j: int) -> np.ndarray:
    """Per-outcome gradient of the outcome probabilities w.r.t. ``V_k(j)``.

    ``j`` is 1-based (step index); returns one value per POVM outcome.
    """
    return GradientContext(trajectory, povm).prob_gradient(k, j)


def gradient_dprob(trajectory: Trajectory, povm: Povm, a: int, k: int, j: int) -> np.ndarray:
    """Per-outcome gradient of the probability derivative ``d_a p`` w.r.t. ``V_k(j)``."""
    return GradientContext(trajectory, povm).dprob_gradient(a, k, j)


def gradient_cfim_entry(trajectory: Trajectory, povm: Povm, a: int, b: int,
                        k: int, j: int) -> float:
    """Gradient of the classical information-matrix entry (a, b) w.r.t.
    ``V_k(j)``; symmetric in (a, b) by construction."""
    return GradientContext(trajectory, povm).cfim_entry_gradient(a, b, k, j)


def _objective_value(objective: str, f: FisherMatrix) -> float:
    if objective == "f0":
        return objective_f0(f)
    if objective == "fcle":
        return objective_fcle(f)
    raise FisherctlError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def _objective_gradient_from_grid(objective: str, fmat: np.ndarray,
                                  grid: np.ndarray) -> np.ndarray:
    n = fmat.shape[0]
    if objective == "f0":
        diag = np.diag(fmat)
        if np.min(diag) <= 0:
            raise InvariantViolation("harmonic objective gradient needs positive diagonal")
        f0 = 1.0 / np.sum(1.0 / diag)
        out = np.zeros_like(grid[0, 0])
        for a in range(n):
            out += (f0**2 / diag[a] ** 2) * grid[a, a]
        return out
    if objective == "fcle":
        if n != 2:
            raise DimensionMismatch("det/trace objective needs exactly two parameters")
        trf = fmat[0, 0] + fmat[1, 1]
        if trf <= 0:
            raise InvariantViolation("det/trace objective gradient needs positive trace")
        out = (fmat[1, 1] ** 2 + fmat[0, 1] ** 2) / trf**2 * grid[0, 0]
        out += (fmat[0, 0] ** 2 + fmat[0, 1] ** 2) / trf**2 * grid[1, 1]
        out -= (2 * fmat[0, 1] / trf) * grid[0, 1]
        return out
    raise FisherctlError(f"unknown objective {objective!r}")


def gradient_objective(trajectory: Trajectory, povm: Povm, objective: str) -> np.ndarray:
    """Chain-rule gradient grid (num_fields x num_steps) of a scalar objective."""
    ctx = GradientContext(trajectory, povm)
    fmat = ctx.current_cfim().matrix
    return _objective_gradient_from_grid(objective, fmat, ctx.cfim_gradient_grid())


# -- ascent loop ----------------------------------------------------------------------


def _initial_controls(model, t: float, m: int, config: GrapeConfig) -> ControlGrid:
    p = len(model.control_hams)
    if config.init_scheme == "zeros":
        amps = np.zeros((p, m))
    elif config.init_scheme == "random":
        rng = np.random.default_rng(config.init_seed)
        amps = rng.uniform(-config.init_amplitude, config.init_amplitude, size=(p, m))
    else:
        amps = np.asarray(config.user_controls, dtype=float)
        if amps.shape != (p, m):
            raise DimensionMismatch(f"user controls shape {amps.shape} != ({p}, {m})")
    if config.amplitude_bound is not None:
        amps = np.clip(amps, -config.amplitude_bound, config.amplitude_bound)
    return ControlGrid(p, m, t, amps, config.amplitude_bound)


def _bfgs_update(hinv: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    sy = float(s @ y)
    if sy <= 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
        return hinv  # curvature condition failed; keep the old approximation
    rho = 1.0 / sy
    hy = hinv @ y
    yhy = float(y @ hy)
    term = np.outer(s, hy)
    return hinv - rho * (term + term.T) + rho**2 * (yhy + sy) * np.outer(s, s)


def optimize(model, x_true, probe, povm, t: float, config: GrapeConfig,
             objective: str | None = None) -> GrapeResult:
    """Run gradient-ascent pulse engineering at a fixed parameter point.

    Iterates propagate -> objective -> gradient -> update until the relative
    objective change stays below ``config.convergence_tol`` over
    ``config.convergence_window`` iterations or ``config.max_iters`` is hit.
    With backtracking enabled (the default) the recorded objective history is
    non-decreasing.  The reported information matrix and precision limit are
    re-evaluated at the final controls with exact state derivatives.
    """
    if probe is None:
        probe = model.default_probe
    if povm is None:
        povm = model.default_povm
    if objective is None:
        objective = model.default_objective
    x_true = np.asarray(x_true, dtype=float)
    m = max(1, round(config.steps_per_unit * t))
    controls = _initial_controls(model, t, m, config)

    def evaluate(grid: ControlGrid):
        traj = propagate(model, x_true, grid, probe, deriv_method=None)
        ctx = GradientContext(traj, povm, insertion="trapezoid")
        fm = ctx.current_cfim()
        val = _objective_value(objective, fm)
        if not math.isfinite(val):
            raise PropagationError(f"objective became non-finite ({val})")
        return val, fm, ctx

    obj, fmat, ctx = evaluate(controls)
    history = [obj]
    n_ctrl = controls.num_fields * m
    hinv = np.eye(n_ctrl) if config.update_rule == "bfgs" else None
    grad_flat = _objective_gradient_from_grid(
        objective, fmat.matrix, ctx.cfim_gradient_grid()
    ).reshape(-1)
    converged = False
    iterations = 0
    step_memory = config.step_size  # grows/shrinks with accepted steps

    for iterations in range(1, config.max_iters + 1):
        if config.update_rule == "bfgs":
            direction = hinv @ grad_flat
            if float(direction @ grad_flat) <= 0:
                hinv = np.eye(n_ctrl)  # reset a non-ascent approximation
                direction = grad_flat.copy()
            step0 = 1.0
        else:
            direction = grad_flat
            step0 = 2.0 * step_memory

        if config.fixed_step and config.update_rule == "gradient":
            new_amps = controls.amplitudes + config.step_size * direction.reshape(
                controls.num_fields, m
            )
            if config.amplitude_bound is not None:
                new_amps = np.clip(new_amps, -config.amplitude_bound, config.amplitude_bound)
            candidate = controls.with_amplitudes(new_amps)
            try:
                new_obj, new_fmat, new_ctx = evaluate(candidate)
            except (PropagationError, SingularContribution):
                converged = False
                break
            accepted = True
        else:
            accepted = False
            step = step0
            for _ in range(MAX_BACKTRACKS + 1):
                new_amps = controls.amplitudes + step * direction.reshape(
                    controls.num_fields, m
                )
                if config.amplitude_bound is not None:
                    new_amps = np.clip(
                        new_amps, -config.amplitude_bound, config.amplitude_bound
                    )
                candidate = controls.with_amplitudes(new_amps)
                try:
                    new_obj, new_fmat, new_ctx = evaluate(candidate)
                except (PropagationError, SingularContribution):
                    step *= 0.5
                    continue
                if new_obj > obj:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break  # stalled: no ascent at line-search resolution
            if config.update_rule == "gradient":
                step_memory = step

        new_grad = _objective_gradient_from_grid(
            objective, new_fmat.matrix, new_ctx.cfim_gradient_grid()
        ).reshape(-1)
        if config.update_rule == "bfgs":
            s = (candidate.amplitudes - controls.amplitudes).reshape(-1)
            y = -(new_grad - grad_flat)  # gradients of the minimized (-objective)
            hinv = _bfgs_update(hinv, s, y)

        controls, obj, fmat, ctx, grad_flat = candidate, new_obj, new_fmat, new_ctx, new_grad
        history.append(obj)

        w = config.convergence_window
        if len(history) > w:
            change = abs(history[-1] - history[-1 - w])
            if change <= config.convergence_tol * max(abs(history[-1]), 1e-30):
                converged = True
                break

    final_traj = propagate(model, x_true, controls, probe, deriv_method="exact")
    final_ctx = GradientContext(final_traj, povm)
    final_cfim = final_ctx.current_cfim()
    return GrapeResult(
        final_controls=controls,
        objective_history=tuple(history),
        final_cfim=final_cfim,
        final_tr_inv=tr_inv(final_cfim),
        iterations_used=iterations,
        converged=converged,
        objective=objective,
        final_objective=_objective_value(objective, final_cfim),
    )
