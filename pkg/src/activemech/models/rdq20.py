"""Mean-field regulatory-unit model with two-group crossbridge moments (RDQ20-MF).

State layout (20 entries): the 16 triplet probabilities ``pi[a, b, d, e]``
flattened in C order, followed by ``(mu_p0, mu_n0, mu_p1, mu_n1)``.
Tropomyosin index: N = 0, P = 1. Troponin index: U = 0, B = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ForceModel

N, P = 0, 1
U, B = 0, 1
N_PI = 16
MASS_GUARD = 1e-14

# number of permissive neighbours for each (left, right) pair
_N_PERM = np.add.outer(np.arange(2), np.arange(2))


@dataclass(frozen=True)
class RDQ20Params:
    # sarcomere geometry (um)
    sl0: float = 2.2
    la: float = 1.25
    lm: float = 1.65
    lb: float = 0.18
    # regulatory units
    q: float = 2.0
    kd0: float = 0.381  # uM
    alpha_kd: float = -0.2083  # uM/um
    mu: float = 10.0
    gamma: float = 12.0
    k_off: float = 100.0  # s^-1
    k_basic: float = 2.0  # s^-1
    # crossbridges
    r0: float = 134.31  # s^-1
    alpha_vel: float = 25.184
    mu_fp0: float = 32.72  # s^-1
    mu_fp1: float = 0.768  # s^-1
    a_xb: float = 22.894e6  # Pa
    # explicit sub-step for the triplet probabilities (s)
    dt_pi: float = 2.5e-5

    def __post_init__(self):
        for name in ("k_off", "k_basic", "r0", "mu", "gamma", "a_xb", "dt_pi", "sl0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RDQ20Params.{name} must be positive")
        for name in ("q", "alpha_vel", "mu_fp0", "mu_fp1"):
            if getattr(self, name) < 0:
                raise ValueError(f"RDQ20Params.{name} must be nonnegative")
        if not self.la > 0 or not self.lm > self.lb:
            raise ValueError("RDQ20Params geometry requires la > 0 and lm > lb")

    def sarcomere_length(self, lam: float) -> float:
        return self.sl0 * (1.0 + lam)

    def kd(self, sl: float) -> float:
        return self.kd0 - self.alpha_kd * (2.15 - sl)


def single_overlap_ratio(sl: float, p: RDQ20Params) -> float:
    """Fraction of the thin filament lying in the single-overlap zone; piecewise linear in ``sl``."""
    half = 0.5 * (p.lm - p.lb)
    if p.la < sl <= p.lm:
        return (sl - p.la) / half
    if p.lm < sl <= 2 * p.la - p.lb:
        return 0.5 * (sl + p.lm - 2 * p.la) / half
    if 2 * p.la - p.lb < sl <= 2 * p.la + p.lb:
        return 1.0
    if 2 * p.la + p.lb < sl <= 2 * p.la + p.lm:
        return 0.5 * (p.lm + 2 * p.la - sl) / half
    return 0.0


def default_rate_tables(ca: float, lam: float, p: RDQ20Params) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(k_t, k_c)``.

    ``k_t[b, a, d, e]`` is the rate at which a unit in tropomyosin state ``b``
    with neighbours ``a, d`` and troponin ``e`` flips tropomyosin state;
    ``k_c[e, b]`` is the rate at which troponin leaves state ``e`` when its
    tropomyosin is in state ``b``.
    """
    kd = p.kd(p.sarcomere_length(lam))
    if not kd > 0:
        raise FloatingPointError(f"non-positive dissociation constant Kd={kd}")
    k_on = p.k_off / kd
    k_t = np.empty((2, 2, 2, 2))
    up = p.k_basic * p.q * p.gamma**_N_PERM
    k_t[N, :, :, B] = up
    k_t[N, :, :, U] = up / p.mu
    k_t[P, :, :, :] = (p.k_basic * p.gamma ** (2 - _N_PERM))[:, :, None]
    k_c = np.array(
        [
            [k_on * ca, k_on * ca],  # U -> B
            [p.k_off, p.k_off / p.mu],  # B -> U
        ]
    )
    return k_t, k_c


RateTables = Callable[[float, float, RDQ20Params], "tuple[np.ndarray, np.ndarray]"]


def permissivity(pi: np.ndarray) -> float:
    return float(pi.reshape(2, 2, 2, 2)[:, P].sum())


def _safe_ratio(num, den):
    den = np.asarray(den)
    out = np.zeros(np.broadcast(num, den).shape)
    ok = den >= MASS_GUARD
    np.divide(num, den, out=out, where=ok)
    return out


def flux_rates(pi: np.ndarray, k_t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean-field flip rates of the outer units of the triplet.

    ``k_left[a, b]``: rate of a left unit in state ``a`` given its right neighbour ``b``.
    ``k_right[d, b]``: rate of a right unit in state ``d`` given its left neighbour ``b``.
    """
    pi = pi.reshape(2, 2, 2, 2)
    # left unit plays the centre of a triplet (xi, a, b), troponin zeta
    num_l = np.einsum("axbz,xabz->ab", k_t, pi)
    den_l = pi.sum(axis=(0, 3))
    # right unit plays the centre of a triplet (b, d, xi)
    num_r = np.einsum("dbxz,bdxz->db", k_t, pi)
    den_r = pi.sum(axis=(2, 3)).T
    return _safe_ratio(num_l, den_l), _safe_ratio(num_r, den_r)


def pi_rhs(pi: np.ndarray, k_t: np.ndarray, k_c: np.ndarray) -> np.ndarray:
    pi = pi.reshape(2, 2, 2, 2)
    k_left, k_right = flux_rates(pi, k_t)
    # outgoing flux rate of every configuration, split by which unit flips
    out_l = k_left[:, :, None, None] * pi
    out_c = np.transpose(k_t, (1, 0, 2, 3)) * pi
    out_r = np.transpose(k_right, (1, 0))[None, :, :, None] * pi
    out_t = k_c.T[None, :, None, :] * pi
    d = -(out_l + out_c + out_r + out_t)
    d += out_l[::-1, :, :, :]
    d += out_c[:, ::-1, :, :]
    d += out_r[:, :, ::-1, :]
    d += out_t[:, :, :, ::-1]
    return d.reshape(N_PI)


def mean_field_transfer(pi: np.ndarray, k_t: np.ndarray) -> tuple[float, float, float]:
    """Return ``(P, k_np, k_pn)``: permissivity and the group-transfer rates of the moments."""
    pi = pi.reshape(2, 2, 2, 2)
    perm = float(pi[:, P].sum())
    flux_np = float(np.einsum("ade,ade->", k_t[N], pi[:, N]))
    flux_pn = float(np.einsum("ade,ade->", k_t[P], pi[:, P]))
    k_np = flux_np / (1.0 - perm) if 1.0 - perm >= MASS_GUARD else 0.0
    k_pn = flux_pn / perm if perm >= MASS_GUARD else 0.0
    return perm, k_np, k_pn


def moment_system(perm, k_np, k_pn, lam_dot, p: RDQ20Params) -> tuple[np.ndarray, np.ndarray]:
    """Linear moment dynamics ``dm/dt = A m + b`` with ``m = (mu_p0, mu_n0, mu_p1, mu_n1)``."""
    base = p.r0 + p.alpha_vel * abs(lam_dot)
    a = np.array(
        [
            [-(base + k_pn), k_np, 0.0, 0.0],
            [k_pn, -(base + k_np), 0.0, 0.0],
            [lam_dot, 0.0, -(base + k_pn), k_np],
            [0.0, lam_dot, k_pn, -(base + k_np)],
        ]
    )
    b = np.array([perm * p.mu_fp0, 0.0, perm * p.mu_fp1, 0.0])
    return a, b


class RDQ20Model(ForceModel):
    name = "RDQ20-MF"
    state_names = tuple(
        f"pi_{'NP'[a]}{'NP'[b]}{'NP'[d]}_{'UB'[e]}"
        for a in range(2)
        for b in range(2)
        for d in range(2)
        for e in range(2)
    ) + ("mu_p0", "mu_n0", "mu_p1", "mu_n1")
    stepper = "semimplicit"

    def __init__(
        self,
        params: RDQ20Params | None = None,
        rate_tables: RateTables | None = None,
        chi_so: Callable[[float], float] | None = None,
    ):
        self.params = params or RDQ20Params()
        self.rate_tables = rate_tables or default_rate_tables
        self._chi = chi_so
        self._pi_cache: tuple | None = None

    def chi_so(self, lam: float) -> float:
        if self._chi is not None:
            return self._chi(lam)
        return single_overlap_ratio(self.params.sarcomere_length(lam), self.params)

    def initial_state(self):
        r = np.zeros(N_PI + 4)
        r[0] = 1.0  # all units non-permissive, troponin unbound
        return r

    def state_scale(self):
        return np.concatenate((np.ones(N_PI), [0.1, 0.1, 1e-3, 1e-3]))

    def tension(self, r, lam):
        return self.params.a_xb * self.chi_so(lam) * (r[N_PI + 2] + r[N_PI + 3])

    def stiffness(self, r, lam):
        return self.params.a_xb * self.chi_so(lam) * (r[N_PI] + r[N_PI + 1])

    def _moment_rhs(self, pi, m, k_t, lam_dot):
        a, b = moment_system(*mean_field_transfer(pi, k_t), lam_dot, self.params)
        return a @ m + b

    def rhs(self, r, ca, lam, lam_dot):
        r = np.asarray(r, dtype=float)
        pi, m = r[:N_PI], r[N_PI:]
        k_t, k_c = self.rate_tables(ca, lam, self.params)
        return np.concatenate((pi_rhs(pi, k_t, k_c), self._moment_rhs(pi, m, k_t, lam_dot)))

    def rhs_split(self, r_old, r_new, ca, lam, lam_dot):
        # probabilities explicit; moments implicit with the updated probabilities
        k_t, k_c = self.rate_tables(ca, lam, self.params)
        return np.concatenate(
            (pi_rhs(r_old[:N_PI], k_t, k_c), self._moment_rhs(r_new[:N_PI], r_new[N_PI:], k_t, lam_dot))
        )

    def advance_pi(self, pi, ca, lam, dt) -> np.ndarray:
        """Forward-Euler sub-steps of the triplet probabilities, clamped and renormalised."""
        key = (pi.tobytes(), ca, lam, dt)
        if self._pi_cache is not None and self._pi_cache[0] == key:
            return self._pi_cache[1].copy()
        k_t, k_c = self.rate_tables(ca, lam, self.params)
        n_sub = max(1, math.ceil(dt / self.params.dt_pi - 1e-9))
        h = dt / n_sub
        x = np.array(pi, dtype=float)
        for _ in range(n_sub):
            x = x + h * pi_rhs(x, k_t, k_c)
            np.maximum(x, 0.0, out=x)
            total = x.sum()
            if not (np.isfinite(total) and total > 0):
                raise FloatingPointError("invalid probability vector in explicit update")
            x /= total
        self._pi_cache = (key, x.copy())
        return x

    def step(self, r, ca, lam, lam_dot, dt):
        if not dt > 0:
            raise ValueError("dt must be positive")
        r = np.asarray(r, dtype=float)
        pi_new = self.advance_pi(r[:N_PI], ca, lam, dt)
        k_t, _ = self.rate_tables(ca, lam, self.params)
        a, b = moment_system(*mean_field_transfer(pi_new, k_t), lam_dot, self.params)
        m_new = np.linalg.solve(np.eye(4) - dt * a, r[N_PI:] + dt * b)
        return np.concatenate((pi_new, m_new))

    def step_residual(self, r_new, r_old, ca, lam, lam_dot, dt):
        r_new = np.asarray(r_new, dtype=float)
        pi_new = self.advance_pi(np.asarray(r_old[:N_PI], dtype=float), ca, lam, dt)
        k_t, _ = self.rate_tables(ca, lam, self.params)
        m_new, m_old = r_new[N_PI:], np.asarray(r_old[N_PI:], dtype=float)
        res_m = m_new - m_old - dt * self._moment_rhs(pi_new, m_new, k_t, lam_dot)
        return np.concatenate((r_new[:N_PI] - pi_new, res_m))
