"""Fading-memory force model (Niederer, Hunter & Smith 2006).

State: ``(ca_trpn [uM], z, q1, q2, q3)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ForceModel


@dataclass(frozen=True)
class NHS06Params:
    k_on: float = 100.0  # uM^-1 s^-1
    k_off: float = 200.0  # s^-1
    ca_trpn_max: float = 70.0  # uM
    gamma_trpn: float = 2.0
    t_ref: float = 56.2e3  # Pa
    alpha0: float = 8.0  # s^-1
    alpha_r1: float = 2.0  # s^-1
    alpha_r2: float = 1.75  # s^-1
    n_h: float = 3.0
    n_rel: float = 3.0
    k_z: float = 0.15
    z_p: float = 0.85
    beta0: float = 4.9
    beta1: float = -4.0
    ca50_ref: float = 1.05  # uM
    a_curv: float = 0.35
    a_i: tuple[float, float, float] = (-29.0, 138.0, 129.0)
    alpha_i: tuple[float, float, float] = (30.0, 130.0, 625.0)  # s^-1
    k1: float | None = None
    k2: float | None = None

    def __post_init__(self):
        for name in ("k_on", "k_off", "ca_trpn_max", "alpha0", "alpha_r1", "alpha_r2", "t_ref"):
            if not getattr(self, name) > 0:
                raise ValueError(f"NHS06Params.{name} must be positive")
        if not self.a_curv > 0:
            raise ValueError("NHS06Params.a_curv must be positive")
        if any(a <= 0 for a in self.alpha_i):
            raise ValueError("fading-memory rates alpha_i must be positive")
        # K1, K2 linearise the relaxation term around z_p
        zn, kn, n = self.z_p**self.n_rel, self.k_z**self.n_rel, self.n_rel
        if self.k1 is None:
            object.__setattr__(self, "k1", self.alpha_r2 * self.z_p ** (n - 1) * n * kn / (zn + kn) ** 2)
        if self.k2 is None:
            object.__setattr__(self, "k2", self.alpha_r2 * zn / (zn + kn) * (1 - n * kn / (zn + kn)))


def velocity_function(q: float, a: float) -> float:
    """Velocity factor K(Q): 1 at Q = 0, -> -a as Q -> -inf, -> 2 + a as Q -> +inf."""
    if q <= 0:
        return (a * q + 1.0) / (1.0 - q)
    return ((2.0 + a) * q + 1.0) / (1.0 + q)


def velocity_function_prime(q: float, a: float) -> float:
    return (1.0 + a) / (1.0 + abs(q)) ** 2


class NHS06Model(ForceModel):
    name = "NHS06"
    state_names = ("ca_trpn", "z", "q1", "q2", "q3")
    stepper = "implicit"

    def __init__(self, params: NHS06Params | None = None):
        self.params = params or NHS06Params()
        self._a = np.array(self.params.a_i, dtype=float)
        self._alpha = np.array(self.params.alpha_i, dtype=float)

    # helpers -----------------------------------------------------------------

    def ca50(self, lam: float) -> float:
        return self.params.ca50_ref * (1.0 + self.params.beta1 * lam)

    def ca50_trpn(self, lam: float) -> float:
        p = self.params
        c50 = self.ca50(lam)
        # half-activation from the steady state of the binding equation at T_a = T_ref(1 + beta0 lam)/2
        denom = c50 + p.k_off / p.k_on * (1.0 - (1.0 + p.beta0 * lam) / (2.0 * p.gamma_trpn))
        if denom == 0.0:
            raise FloatingPointError("vanishing denominator in the half-activation concentration")
        return p.ca_trpn_max * c50 / denom

    def z_max(self, lam: float) -> float:
        p = self.params
        act = p.alpha0 * (p.ca_trpn_max / self.ca50_trpn(lam)) ** p.n_h
        zm = (act - p.k2) / (act + p.alpha_r1 + p.k1)
        if not zm > 0:
            raise FloatingPointError(f"z_max(lambda={lam}) = {zm} is not positive")
        return zm

    def K(self, q: float) -> float:
        return velocity_function(q, self.params.a_curv)

    def Kprime(self, q: float) -> float:
        return velocity_function_prime(q, self.params.a_curv)

    # contract ----------------------------------------------------------------

    def initial_state(self):
        return np.zeros(5)

    def state_scale(self):
        return np.array([self.params.ca_trpn_max, 1.0, 1e-3, 1e-3, 1e-3])

    def tension(self, r, lam):
        p = self.params
        return p.t_ref * (1.0 + p.beta0 * lam) * r[1] / self.z_max(lam) * self.K(r[2] + r[3] + r[4])

    def stiffness(self, r, lam):
        p = self.params
        return (
            p.t_ref
            * (1.0 + p.beta0 * lam)
            * r[1]
            / self.z_max(lam)
            * self.Kprime(r[2] + r[3] + r[4])
            * float(self._a.sum())
        )

    def rhs(self, r, ca, lam, lam_dot):
        p = self.params
        c, z = r[0], r[1]
        ta = self.tension(r, lam)
        dc = p.k_on * ca * (p.ca_trpn_max - c) - p.k_off * (1.0 - ta / (p.gamma_trpn * p.t_ref)) * c
        ratio = c / self.ca50_trpn(lam)
        zr = max(z, 0.0) ** p.n_rel
        dz = (
            p.alpha0 * np.sign(ratio) * abs(ratio) ** p.n_h * (1.0 - z)
            - p.alpha_r1 * z
            - p.alpha_r2 * zr / (zr + p.k_z**p.n_rel)
        )
        dq = self._a * lam_dot - self._alpha * r[2:5]
        return np.concatenate(([dc, dz], dq))
