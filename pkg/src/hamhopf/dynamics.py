"""Direct integration of the full family: flows, the momentum-shift identity,
relative-periodicity residuals and shooting.

The integrator composes implicit-midpoint steps with the symmetric
fourth-order (Yoshida) weights.  Each stage is symplectic and preserves
quadratic invariants, so the composition does too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import NEWTON_DIVERGED, NOETHER_VIOLATION, NONCONVERGENT, SECTION_DEGENERATE, HopfError
from .kernels import midpoint_run, midpoint_run_jac
from .normalform import noether_residual
from .polynomial import Poly
from .tolerances import DEFAULT, Tolerances

_CBRT2 = 2.0 ** (1.0 / 3.0)
YOSHIDA4 = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))
MIDPOINT = (1.0,)


def _arrays(h: Poly):
    exps, coefs = h.arrays()
    return np.ascontiguousarray(exps, dtype=np.int64), np.ascontiguousarray(coefs, dtype=float)


def _weights(order: int):
    if order == 2:
        return np.array(MIDPOINT)
    if order == 4:
        return np.array(YOSHIDA4)
    raise ValueError("order must be 2 or 4")


def _steps(t: float, dt: float) -> tuple:
    n = max(1, int(np.ceil(abs(t) / dt - 1e-9)))
    return n, t / n


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    momenta: dict = field(default_factory=dict)

    @property
    def energy_drift(self) -> float:
        return float(np.abs(self.energy - self.energy[0]).max())

    def momentum_drift(self, name: str) -> float:
        m = self.momenta[name]
        return float(np.abs(m - m[0]).max())


def integrate(h: Poly, P, v0, t_end: float, dt: float, order: int = 4, record_every: int = 1,
              momenta: Optional[dict] = None, tols: Tolerances = DEFAULT) -> Trajectory:
    """Integrate x' = P grad h(x) from v0 over [0, t_end] with step close to dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n, step = _steps(t_end, dt)
    exps, coefs = _arrays(h)
    P = np.ascontiguousarray(P, dtype=float)
    states, it = midpoint_run(exps, coefs, P, np.asarray(v0, float), step, n, _weights(order),
                              tols.inner_tol, tols.inner_maxit, record_every)
    if it < 0:
        raise HopfError(NONCONVERGENT, "implicit midpoint fixed point did not converge")
    times = step * record_every * np.arange(states.shape[0])
    energy = h(states)
    mom = {k: K(states) for k, K in (momenta or {}).items()}
    return Trajectory(times, states, energy, mom)


def flow(h: Poly, P, v, t: float, dt: float, order: int = 4, tols: Tolerances = DEFAULT) -> np.ndarray:
    if t == 0.0:
        return np.asarray(v, float).copy()
    tr = integrate(h, P, v, t, dt, order, record_every=_steps(t, dt)[0], tols=tols)
    return tr.states[-1]


def flow_jacobian(h: Poly, P, v, t: float, dt: float, order: int = 4, tols: Tolerances = DEFAULT):
    """(F_t(v), exact Jacobian of the discrete map)."""
    n, step = _steps(t, dt)
    exps, coefs = _arrays(h)
    x, Phi, it = midpoint_run_jac(exps, coefs, np.ascontiguousarray(P, dtype=float),
                                  np.asarray(v, float), step, n, _weights(order),
                                  tols.inner_tol, tols.inner_maxit)
    if it < 0:
        raise HopfError(NONCONVERGENT, "implicit midpoint fixed point did not converge")
    return np.asarray(x), np.asarray(Phi)


def shifted_flow_check(h: Poly, xi, K: Poly, P, v, t_grid: Sequence[float], dt: float,
                       tols: Tolerances = DEFAULT) -> float:
    """sup_t || G_t(v) - exp(-t xi) F_t(v) || with G the flow of h - K."""
    res = noether_residual(h, K, P)
    if res > tols.noether_tol * max(1.0, h.max_abs_coef()):
        raise HopfError(NOETHER_VIOLATION, "{h, K} does not vanish", residual=res)
    xi = np.asarray(xi, float)
    heff = h - K
    worst = 0.0
    for t in t_grid:
        Ft = flow(h, P, v, t, dt, tols=tols)
        Gt = flow(heff, P, v, t, dt, tols=tols)
        worst = max(worst, float(np.abs(Gt - expm(-t * xi) @ Ft).max()))
    return worst


def rpo_residual(h: Poly, P, v, tau: float, g, t_grid: Optional[Sequence[float]] = None,
                 dt: Optional[float] = None, tols: Tolerances = DEFAULT) -> float:
    """sup_t || F_{t+tau}(v) - g F_t(v) || divided by max(1, max_t ||F_t(v)||)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    g = np.asarray(g, float)
    nsub = 8
    t_grid = np.linspace(0.0, tau, nsub + 1) if t_grid is None else np.asarray(t_grid, float)
    dt = tau / tols.steps_per_period if dt is None else dt
    # integrate on a common grid so F_t and F_{t+tau} share the discretization
    n, step = _steps(tau, dt)
    T = tau + float(np.max(t_grid))
    ntot = int(round(T / step))
    exps, coefs = _arrays(h)
    states, it = midpoint_run(exps, coefs, np.ascontiguousarray(P, dtype=float), np.asarray(v, float),
                              step, ntot, _weights(4), tols.inner_tol, tols.inner_maxit, 1)
    if it < 0:
        raise HopfError(NONCONVERGENT, "implicit midpoint fixed point did not converge")
    scale = max(1.0, float(np.abs(states).max()))
    worst = 0.0
    for t in t_grid:
        i = int(round(t / step))
        worst = max(worst, float(np.abs(states[i + n] - g @ states[i]).max()))
    return worst / scale


@dataclass
class RpoCertificate:
    v: np.ndarray
    tau: float
    xi: np.ndarray
    g: np.ndarray
    residual: float
    samples: int
    shooting_residual: float = float("nan")
    phase_distance: float = float("nan")    # min over sampled orbit of ||g - I||; reported only

    def to_json(self) -> dict:
        return {
            "v": np.asarray(self.v).tolist(),
            "tau": self.tau,
            "xi": np.asarray(self.xi).tolist(),
            "g": np.asarray(self.g).tolist(),
            "residual": self.residual,
            "samples": self.samples,
            "shooting_residual": self.shooting_residual,
            "phase_distance": self.phase_distance,
        }


def shooting_refine(h_eff: Poly, P, v_guess, tau_guess: float, phase_generators: Sequence = (),
                    dt: Optional[float] = None, tols: Tolerances = DEFAULT, fix_energy: bool = True):
    """Periodic point of h_eff near (v_guess, tau_guess).

    Gauss-Newton on F_tau(v) - v = 0 with the flow-direction section, the
    energy level of the guess and <v - v_guess, A v_guess> = 0 for each
    phase generator A.  Returns (v, tau, residual).
    """
    P = np.asarray(P, float)
    vg = np.asarray(v_guess, float)
    scale = float(np.linalg.norm(vg))
    if scale == 0.0:
        raise HopfError(SECTION_DEGENERATE, "guess is the trivial equilibrium")
    Xg = P @ h_eff.grad(vg)
    if np.linalg.norm(Xg) <= 1e-14 * max(1.0, scale):
        raise HopfError(SECTION_DEGENERATE, "vector field vanishes at the guess")
    rows = [Xg / np.linalg.norm(Xg)]
    for A in phase_generators:
        w = np.asarray(A, float) @ vg
        if np.linalg.norm(w) > 1e-14:
            rows.append(w / np.linalg.norm(w))
    Sec = np.array(rows)
    E0 = float(h_eff(vg))
    dt = tau_guess / tols.steps_per_period if dt is None else dt
    n_steps = _steps(tau_guess, dt)[0]
    v, tau = vg.copy(), float(tau_guess)
    d = vg.size
    res = np.inf
    for _ in range(tols.shooting_maxit):
        x, Phi = flow_jacobian(h_eff, P, v, tau, tau / n_steps)
        r_per = x - v
        Fx = P @ h_eff.grad(x)
        res = float(np.abs(r_per).max()) / scale
        if res < tols.shooting_tol:
            return v, tau, res
        # d/dtau with a fixed number of steps: x moves along the discrete flow, approximated by X(x)
        Jm = [np.hstack([Phi - np.eye(d), Fx[:, None]])]
        rhs = [-r_per]
        Jm.append(np.hstack([Sec, np.zeros((Sec.shape[0], 1))]))
        rhs.append(-(Sec @ (v - vg)))
        if fix_energy:
            Jm.append(np.concatenate([h_eff.grad(v), [0.0]])[None, :])
            rhs.append(np.array([-(float(h_eff(v)) - E0)]))
        step = np.linalg.lstsq(np.vstack(Jm), np.concatenate(rhs), rcond=1e-12)[0]
        v = v + step[:d]
        tau = tau + step[d]
        if not np.all(np.isfinite(v)) or tau <= 0 or np.linalg.norm(v - vg) > 10 * scale:
            break
    raise HopfError(NEWTON_DIVERGED, "shooting did not converge", residual=res)


def certify_rpo(h: Poly, K: Poly, xi, P, v_guess, tau_guess: float, phase_generators: Sequence = (),
                tols: Tolerances = DEFAULT, samples: int = 8) -> RpoCertificate:
    """Shoot on h - K (K the momentum of xi), then check the relative periodicity of h."""
    xi = np.asarray(xi, float)
    v, tau, sres = shooting_refine(h - K, P, v_guess, tau_guess, phase_generators, tols=tols)
    g = expm(tau * xi)
    grid = np.linspace(0.0, tau, samples + 1)
    res = rpo_residual(h, P, v, tau, g, grid, tau / tols.steps_per_period, tols)
    return RpoCertificate(v=v, tau=tau, xi=xi, g=g, residual=res, samples=samples + 1,
                          shooting_residual=sres, phase_distance=float(np.abs(g - np.eye(len(v))).max()))
