"""Distortion-decay force model (Land et al. 2017, human cardiomyocytes).

State: ``(ca_trpn, b, w, s, zeta_w, zeta_s)``; the unblocked fraction
``u = 1 - b - w - s`` is derived and never integrated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import STEPPER_KINDS, ForceModel

CA_TRPN_FLOOR = 1e-12


@dataclass(frozen=True)
class L17Params:
    k_trpn: float = 100.0  # s^-1
    n_trpn: float = 2.0
    ca50_ref: float = 0.805  # uM
    beta1: float = -2.4  # uM per unit strain
    k_u: float = 1000.0  # s^-1
    n_tm: float = 5.0
    trpn50: float = 0.35
    k_uw: float = 182.0  # s^-1
    k_ws: float = 12.0  # s^-1
    r_w: float = 0.5
    r_s: float = 0.25
    gamma_s: float = 8.5  # s^-1
    gamma_w: float = 615.0  # s^-1
    phi: float = 2.23
    a_eff: float = 25.0
    beta0: float = 2.3
    t_ref: float = 120e3  # Pa
    # derived from the steady-state constraints of the original model unless given
    k_b: float | None = None
    k_wu: float | None = None
    k_su: float | None = None
    a_w: float | None = None
    a_s: float | None = None
    c_w: float | None = None
    c_s: float | None = None

    def __post_init__(self):
        if not 0 < self.r_s <= 1:
            raise ValueError("L17Params.r_s must lie in (0, 1]")
        for name in ("k_trpn", "k_u", "k_uw", "k_ws", "t_ref"):
            if not getattr(self, name) > 0:
                raise ValueError(f"L17Params.{name} must be positive")
        rs, rw = self.r_s, self.r_w
        derived = {
            "k_b": self.k_u * self.trpn50**self.n_tm / (1 - rs - (1 - rs) * rw),
            "k_wu": self.k_uw * (1 / rw - 1) - self.k_ws,
            "k_su": self.k_ws * rw * (1 / rs - 1),
            "a_w": self.a_eff * rs / ((1 - rs) * rw + rs),
            "a_s": self.a_eff * rs / ((1 - rs) * rw + rs),
            "c_w": self.phi * self.k_uw * (1 - rs) * (1 - rw) / ((1 - rs) * rw),
            "c_s": self.phi * self.k_ws * (1 - rs) * rw / rs,
        }
        for name, value in derived.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)


def gamma_wu(zeta_w: float, gamma_w: float) -> float:
    return gamma_w * abs(zeta_w)


def gamma_su(zeta_s: float, gamma_s: float) -> float:
    if 1.0 + zeta_s < 0.0:
        return -gamma_s * (1.0 + zeta_s)
    if 1.0 + zeta_s > 1.0:
        return gamma_s * zeta_s
    return 0.0


def h1(psi: float, beta0: float) -> float:
    return 1.0 + beta0 * (psi + min(psi, 0.87) - 1.87)


def length_factor(lam: float, beta0: float) -> float:
    return max(0.0, h1(min(1.0 + lam, 1.2), beta0))


class L17Model(ForceModel):
    name = "L17"
    state_names = ("ca_trpn", "b", "w", "s", "zeta_w", "zeta_s")

    def __init__(self, params: L17Params | None = None, stepper: str = "implicit"):
        if stepper not in STEPPER_KINDS:
            raise ValueError(f"unknown stepper {stepper!r}")
        self.params = params or L17Params()
        self.stepper = stepper

    def ca50(self, lam: float) -> float:
        return self.params.ca50_ref + self.params.beta1 * min(lam, 0.2)

    def h(self, lam: float) -> float:
        return length_factor(lam, self.params.beta0)

    def initial_state(self):
        # fully blocked, no attached crossbridges
        return np.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])

    def tension(self, r, lam):
        p = self.params
        _, _, w, s, zw, zs = r
        return self.h(lam) * p.t_ref / p.r_s * ((1.0 + zs) * s + zw * w)

    def stiffness(self, r, lam):
        p = self.params
        return self.h(lam) * p.t_ref / p.r_s * (p.a_s * r[3] + p.a_w * r[2])

    def _site_rhs(self, b, w, s, ca_trpn_x, zw_x, zs_x):
        """Site-group kinetics with the nonlinear couplings taken from the ``*_x`` arguments."""
        p = self.params
        if not ca_trpn_x > CA_TRPN_FLOOR:
            raise FloatingPointError(f"ca_trpn={ca_trpn_x} at or below the floor {CA_TRPN_FLOOR}")
        u = 1.0 - b - w - s
        db = p.k_b * ca_trpn_x ** (-p.n_tm / 2) * u - p.k_u * ca_trpn_x ** (p.n_tm / 2) * b
        dw = p.k_uw * u - (p.k_wu + gamma_wu(zw_x, p.gamma_w) + p.k_ws) * w
        ds = p.k_ws * w - (p.k_su + gamma_su(zs_x, p.gamma_s)) * s
        return db, dw, ds

    def _other_rhs(self, ca_trpn, zw, zs, ca, lam, lam_dot):
        p = self.params
        dc = p.k_trpn * ((ca / self.ca50(lam)) ** p.n_trpn * (1.0 - ca_trpn) - ca_trpn)
        dzw = p.a_w * lam_dot - p.c_w * zw
        dzs = p.a_s * lam_dot - p.c_s * zs
        return dc, dzw, dzs

    def rhs(self, r, ca, lam, lam_dot):
        c, b, w, s, zw, zs = r
        db, dw, ds = self._site_rhs(b, w, s, max(c, CA_TRPN_FLOOR * 2), zw, zs)
        dc, dzw, dzs = self._other_rhs(c, zw, zs, ca, lam, lam_dot)
        return np.array([dc, db, dw, ds, dzw, dzs])

    def rhs_split(self, r_old, r_new, ca, lam, lam_dot):
        if self.stepper == "implicit":
            return self.rhs(r_new, ca, lam, lam_dot)
        # semimplicit: ca_trpn, zeta_w, zeta_s enter the site kinetics explicitly
        c, b, w, s, zw, zs = r_new
        db, dw, ds = self._site_rhs(b, w, s, max(r_old[0], CA_TRPN_FLOOR * 2), r_old[4], r_old[5])
        dc, dzw, dzs = self._other_rhs(c, zw, zs, ca, lam, lam_dot)
        return np.array([dc, db, dw, ds, dzw, dzs])
