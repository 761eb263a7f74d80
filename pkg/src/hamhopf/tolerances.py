"""Default numerical tolerances; every report embeds the effective set."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    symplectic_tol: float = 1e-10       # ||A^T W + W A|| relative to ||A||
    cluster_rel: float = 1e-7           # eigenvalue clustering, times ||A||
    spectral_rel: float = 1e-7          # resonance membership, times ||A||
    frame_tol: float = 1e-8             # Williamson frame residuals
    block_tol: float = 1e-8             # diag(A_g, A_g) structure
    equivariance_tol: float = 1e-8      # Hessian fit residual
    normal_form_tol: float = 1e-9       # S^1 invariance after normalization
    homological_tol: float = 1e-9       # homological solve residual
    h_fd_scale: float = 1e-4            # h_fd = h_fd_scale * (1 + |lambda0|)
    grid_halfwidth: float = 0.05        # Chebyshev grid on lambda0 +- halfwidth
    grid_points: int = 5
    rho_min: float = 1e-12
    newton_tol: float = 1e-12
    newton_maxit: int = 50
    trust_radius: float = 0.1
    inner_tol: float = 1e-13            # implicit midpoint fixed point
    inner_maxit: int = 100
    steps_per_period: int = 2000
    drift_tol: float = 1e-8             # energy drift per 10 periods
    noether_tol: float = 1e-9
    shooting_tol: float = 1e-11
    shooting_maxit: int = 30
    rpo_tol: float = 1e-6
    kmax: int = 0                       # 0 means ceil(||A||/nu0) + 1

    def with_overrides(self, overrides: dict | None) -> "Tolerances":
        if not overrides:
            return self
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, val in overrides.items():
            if key not in known:
                raise KeyError(key)
            cast = int if known[key] in ("int", int) else float
            v = cast(val)
            if v < 0 or (v == 0 and key != "kmax"):
                raise ValueError(f"tolerance {key} must be positive")
            clean[key] = v
        return replace(self, **clean)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()
