"""Force-generation model contract and the minimal distribution-moments model.

A force model advances a state vector ``r`` driven by calcium, strain ``lam`` and
strain rate ``lam_dot`` and exposes the active tension ``T_a`` and active
stiffness ``K_a`` (both in Pa).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .solvers import newton

STEPPER_KINDS = ("implicit", "semimplicit")


class MomentPair(NamedTuple):
    """Eulerian distribution-moments (mu0 = attached fraction, mu1 = first moment)."""

    mu0: float
    mu1: float


class LagrangianMoments(NamedTuple):
    mu0_hat: float
    mu1_hat: float
    mu2_hat: float | None = None


class ActiveOutputs(NamedTuple):
    tension: float
    stiffness: float


@dataclass(frozen=True)
class MinimalModelParams:
    """Rates of the two-moment model (s^-1) and the upscaled crossbridge stiffness (Pa)."""

    mu0_f: float = 114.4
    mu1_f: float = 1.76
    r: float = 520.0
    a_xb: float = 17.727e6

    def __post_init__(self):
        for name in ("mu0_f", "mu1_f", "r", "a_xb"):
            if not getattr(self, name) > 0:
                raise ValueError(f"MinimalModelParams.{name} must be strictly positive")

    @property
    def mu0_steady(self) -> float:
        return self.mu0_f / self.r

    @property
    def mu1_steady(self) -> float:
        return self.mu1_f / self.r


class ForceModel(abc.ABC):
    """Contract every force-generation model implements.

    Subclasses are immutable after construction; all methods are pure functions
    of their arguments.
    """

    name: str = "abstract"
    state_names: tuple[str, ...] = ()
    stepper: str = "implicit"

    # tolerances for the implicit inner Newton solve
    newton_rtol = 1e-10
    newton_atol = 1e-12
    newton_max_iter = 50

    @property
    def n_state(self) -> int:
        return len(self.state_names)

    @abc.abstractmethod
    def initial_state(self) -> np.ndarray:
        """Relaxed state used when no explicit initial values are given."""

    @abc.abstractmethod
    def rhs(self, r: np.ndarray, ca: float, lam: float, lam_dot: float) -> np.ndarray:
        ...

    @abc.abstractmethod
    def tension(self, r: np.ndarray, lam: float) -> float:
        ...

    @abc.abstractmethod
    def stiffness(self, r: np.ndarray, lam: float) -> float:
        ...

    def outputs(self, r: np.ndarray, lam: float) -> ActiveOutputs:
        return ActiveOutputs(self.tension(r, lam), self.stiffness(r, lam))

    def rhs_split(
        self, r_old: np.ndarray, r_new: np.ndarray, ca: float, lam: float, lam_dot: float
    ) -> np.ndarray:
        """IMEX right-hand side; must reduce to ``rhs(r, ...)`` when ``r_old == r_new``.

        The default is fully implicit.
        """
        return self.rhs(r_new, ca, lam, lam_dot)

    def step_residual(
        self,
        r_new: np.ndarray,
        r_old: np.ndarray,
        ca: float,
        lam: float,
        lam_dot: float,
        dt: float,
    ) -> np.ndarray:
        """Residual whose root in ``r_new`` is one inner time step."""
        return r_new - r_old - dt * self.rhs_split(r_old, r_new, ca, lam, lam_dot)

    def state_scale(self) -> np.ndarray:
        return np.ones(self.n_state)

    def step(
        self, r: np.ndarray, ca: float, lam: float, lam_dot: float, dt: float
    ) -> np.ndarray:
        """Advance the state by one step of length ``dt`` with frozen mechanical inputs."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        r = np.asarray(r, dtype=float)
        guess = r + dt * self.rhs(r, ca, lam, lam_dot)
        if not np.all(np.isfinite(guess)):
            guess = r.copy()
        x, _ = newton(
            lambda x: self.step_residual(x, r, ca, lam, lam_dot, dt),
            guess,
            rtol=self.newton_rtol,
            atol=self.newton_atol,
            max_iter=self.newton_max_iter,
            x_scale=self.state_scale(),
        )
        return x


# ---------------------------------------------------------------------------
# minimal model: pure functions


def minimal_rhs(state: MomentPair, lambda_dot: float, params: MinimalModelParams) -> MomentPair:
    mu0, mu1 = state
    return MomentPair(params.mu0_f - params.r * mu0, params.mu1_f - params.r * mu1 + lambda_dot * mu0)


def minimal_step_implicit(
    state: MomentPair, lambda_dot_star: float, dt: float, params: MinimalModelParams
) -> MomentPair:
    """Implicit Euler on the linear moment equations, solved exactly (mu0 first)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    denom = 1.0 + params.r * dt
    mu0 = (state[0] + params.mu0_f * dt) / denom
    mu1 = (state[1] + params.mu1_f * dt + dt * lambda_dot_star * mu0) / denom
    return MomentPair(mu0, mu1)


def active_tension_minimal(mu1: float, a_xb: float) -> float:
    return a_xb * mu1


def active_stiffness_minimal(mu0: float, a_xb: float) -> float:
    return a_xb * mu0


def to_lagrangian(mu: MomentPair | LagrangianMoments, lam: float, mu2: float | None = None) -> LagrangianMoments:
    """Pull Eulerian moments back to the reference frame at strain ``lam``.

    ``mu2`` is optional; when given the second Lagrangian moment is returned too.
    """
    mu0, mu1 = mu[0], mu[1]
    mu2_hat = None
    if mu2 is not None:
        mu2_hat = mu2 - 2.0 * lam * mu1 + lam * lam * mu0
    return LagrangianMoments(mu0, mu1 - lam * mu0, mu2_hat)


def to_eulerian(mu_hat: LagrangianMoments, lam: float) -> tuple[MomentPair, float | None]:
    """Push Lagrangian moments forward; returns ``(MomentPair, mu2 or None)``."""
    m0, m1, m2 = mu_hat.mu0_hat, mu_hat.mu1_hat, mu_hat.mu2_hat
    mu2 = None if m2 is None else lam * lam * m0 + 2.0 * lam * m1 + m2
    return MomentPair(m0, lam * m0 + m1), mu2


def active_tension_lagrangian(mu_hat: LagrangianMoments, lam: float, a_xb: float) -> float:
    """Tension from reference-frame moments; equals ``a_xb * mu1`` of the pushed-forward state."""
    return a_xb * (mu_hat.mu1_hat + mu_hat.mu0_hat * lam)


def active_energy(mu_hat: LagrangianMoments, lam: float, a_xb: float) -> float:
    """Elastic energy density (Pa) stored in attached crossbridges."""
    if mu_hat.mu2_hat is None:
        raise ValueError("active_energy needs the second Lagrangian moment mu2_hat")
    m0, m1, m2 = mu_hat.mu0_hat, mu_hat.mu1_hat, mu_hat.mu2_hat
    return 0.5 * a_xb * (m0 * lam * lam + 2.0 * m1 * lam + m2)


class MinimalModel(ForceModel):
    """Two-moment crossbridge model; state ``(mu0, mu1)``. Calcium is not an input."""

    name = "MDM"
    state_names = ("mu0", "mu1")

    def __init__(self, params: MinimalModelParams | None = None, initial: MomentPair = MomentPair(0.0, 0.0)):
        self.params = params or MinimalModelParams()
        self.initial = MomentPair(*initial)

    def initial_state(self) -> np.ndarray:
        return np.array(self.initial, dtype=float)

    def rhs(self, r, ca, lam, lam_dot):
        return np.array(minimal_rhs(MomentPair(r[0], r[1]), lam_dot, self.params))

    def tension(self, r, lam):
        return active_tension_minimal(r[1], self.params.a_xb)

    def stiffness(self, r, lam):
        return active_stiffness_minimal(r[0], self.params.a_xb)

    def step(self, r, ca, lam, lam_dot, dt):
        return np.array(minimal_step_implicit(MomentPair(r[0], r[1]), lam_dot, dt, self.params))

    def state_scale(self):
        return np.array([self.params.mu0_steady, self.params.mu1_steady])


def stiffness_fd(
    model: ForceModel,
    state: np.ndarray,
    ca: float,
    lam: float,
    lam_dot: float,
    delta: float | None = None,
    include_strain_term: bool = False,
) -> float:
    """Finite-difference active stiffness ``grad_r g . dh/dlam_dot``.

    With ``include_strain_term`` the explicit strain sensitivity ``dg/dlam`` is
    added. Central differences throughout; serves as an oracle for the analytic
    stiffness of every model.
    """
    if delta is None:
        delta = max(1e-6, 1e-6 * abs(lam_dot))
    if not delta > 0:
        raise ValueError("delta must be positive")
    r = np.asarray(state, dtype=float)
    dh = (model.rhs(r, ca, lam, lam_dot + delta) - model.rhs(r, ca, lam, lam_dot - delta)) / (2 * delta)
    scale = np.maximum(np.abs(r), model.state_scale())
    grad = np.empty(r.size)
    for j in range(r.size):
        # g is affine in most components; a relative step keeps round-off small
        h = 1e-6 * scale[j]
        rp, rm = r.copy(), r.copy()
        rp[j] += h
        rm[j] -= h
        grad[j] = (model.tension(rp, lam) - model.tension(rm, lam)) / (rp[j] - rm[j])
    k = float(grad @ dh)
    if include_strain_term:
        k += (model.tension(r, lam + delta) - model.tension(r, lam - delta)) / (2 * delta)
    if not np.isfinite(k):
        raise FloatingPointError("non-finite model output in stiffness_fd")
    return k


def inner_step(model: ForceModel, state, ca: float, lam_star: float, lam_dot_star: float, dt: float) -> np.ndarray:
    """One force-model step with the extrapolated strain and strain rate held fixed."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return model.step(np.asarray(state, dtype=float), ca, lam_star, lam_dot_star, dt)
