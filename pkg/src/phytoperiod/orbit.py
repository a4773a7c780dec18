"""Locate and characterise periodic solutions by single shooting.

A T-periodic solution of the log-frame system is a fixed point of the
period map z -> phi_T(z).  Newton iteration on G(z) = phi_T(z) - z uses
the monodromy matrix M(z) (from the variational equations) for its
Jacobian M - I, with a step-halving line search to tame the exponential
nonlinearity far from the root.

Two degenerate outcomes are recognised explicitly rather than reported
as bare non-convergence:

* steady state: the one-period trajectory in the original frame is
  essentially constant (an equilibrium, possibly on a coordinate axis
  where the log frame has no finite fixed point).  Detected up front
  and characterised with the original-frame variational equations.
* extinction: one species decays geometrically period over period, so
  the period map has no interior fixed point along the seeded path.
  The Newton defect then stalls at the decay rate; the diagnosis names
  the dying species and measures the rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditions import BoundReport
from .integrator import (IntegratorConfig, Trajectory, flow_and_monodromy,
                         flow_map, integrate, variational_flow)
from .model import ModelParams, jac_original, rhs_log, rhs_original

__all__ = [
    "PeriodicOrbit",
    "SeedResult",
    "BoundCheck",
    "OrbitSearchError",
    "NonConvergenceError",
    "NearDegenerateOrbitError",
    "ExtinctionDiagnosis",
    "seed_by_transient",
    "find_periodic_orbit",
    "detect_steady_state",
    "diagnose_extinction",
    "verify_bounds",
]

_SINGULAR_DET_TOL = 1e-12
_MAX_HALVINGS = 20
_MAX_NEWTON_STEP = 5.0        # trust region, in log-density units
_ORBIT_SAMPLES = 256          # sampling resolution over one period
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class SeedResult:
    z: np.ndarray               # endpoint after the transient
    contraction: float          # ||z(nT) - z((n-1)T)||_inf


@dataclass(frozen=True)
class ExtinctionDiagnosis:
    species: int                # 1 or 2
    rate_per_period: float      # per-period drift of ln(density), < 0

    def describe(self) -> str:
        return (f"species {self.species} decays geometrically "
                f"(d ln x{self.species} = {self.rate_per_period:.6g} per period); "
                "the period map has no interior fixed point along this path")


@dataclass(frozen=True)
class PeriodicOrbit:
    """A converged fixed point of the period map, with its linearisation."""

    z0: np.ndarray
    residual_norm: float
    monodromy: np.ndarray
    floquet_multipliers: tuple[complex, complex]
    stable: bool
    newton_iterations: int
    orbit_samples: Trajectory
    residual_history: tuple[float, ...] = ()
    degenerate_steady_state: bool = False

    def to_dict(self) -> dict:
        mults = self.floquet_multipliers
        return {
            "z0": [float(self.z0[0]), float(self.z0[1])],
            "x0": [float(math.exp(self.z0[0])), float(math.exp(self.z0[1]))],
            "residual_norm": self.residual_norm,
            "monodromy": [[float(v) for v in row] for row in self.monodromy],
            "floquet_multipliers": [
                {"re": float(m.real), "im": float(m.imag)} for m in mults],
            "stable": self.stable,
            "newton_iterations": self.newton_iterations,
            "degenerate_steady_state": self.degenerate_steady_state,
        }


class OrbitSearchError(RuntimeError):
    def __init__(self, message: str, z_last=None, residual: float | None = None,
                 iterations: int = 0,
                 diagnosis: ExtinctionDiagnosis | None = None):
        super().__init__(message)
        self.z_last = None if z_last is None else np.asarray(z_last, dtype=float)
        self.residual = residual
        self.iterations = iterations
        self.diagnosis = diagnosis


class NonConvergenceError(OrbitSearchError):
    pass


class NearDegenerateOrbitError(OrbitSearchError):
    pass


def seed_by_transient(params: ModelParams, z_start, n_periods: int,
                      cfg: IntegratorConfig) -> SeedResult:
    """Integrate n_periods * T and report the endpoint and its drift."""
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    z = np.asarray(z_start, dtype=float)
    prev = z
    for _ in range(n_periods):
        prev = z
        traj = integrate(lambda t, s: rhs_log(params, t, s),
                         0.0, z, params.period, cfg, frame="log")
        z = traj.final_state
    return SeedResult(z=z, contraction=float(np.max(np.abs(z - prev))))


def _sample_orbit(params: ModelParams, z0, cfg: IntegratorConfig) -> Trajectory:
    ts = np.linspace(0.0, params.period, _ORBIT_SAMPLES + 1)
    return integrate(lambda t, s: rhs_log(params, t, s),
                     0.0, z0, params.period, cfg, t_eval=ts[1:-1], frame="log")


def find_periodic_orbit(params: ModelParams, guess, tol: float = 1e-12,
                        max_iter: int = 25,
                        cfg: IntegratorConfig | None = None) -> PeriodicOrbit:
    """Newton shooting on G(z) = phi_T(z) - z from the given guess.

    Raises :class:`NearDegenerateOrbitError` when M - I is numerically
    singular and :class:`NonConvergenceError` when the iteration budget
    or the line search is exhausted; both carry the last iterate,
    residual and (when one is detectable) an extinction diagnosis.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if cfg is None:
        cfg = IntegratorConfig()
    z_start = np.asarray(guess, dtype=float)
    z = z_start.copy()
    history: list[float] = []

    # extinction is a property of the flow from the caller's state, not
    # of wherever the iteration happens to wander, so diagnose from there
    def fail(exc_type, message, it):
        raise exc_type(message, z_last=z, residual=rnorm, iterations=it,
                       diagnosis=diagnose_extinction(params, z_start, cfg))

    zT, M = flow_and_monodromy(params, z, cfg)
    G = zT - z
    rnorm = float(np.max(np.abs(G)))
    history.append(rnorm)

    for it in range(max_iter):
        if rnorm < tol:
            return _finalize(params, z, rnorm, M, it, cfg, tuple(history))
        A = M - np.eye(2)
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < _SINGULAR_DET_TOL:
            fail(NearDegenerateOrbitError,
                 f"period-map Jacobian is singular (|det(M - I)| = {abs(det):.3e})",
                 it)
        dz = np.linalg.solve(A, -G)
        step_norm = float(np.max(np.abs(dz)))
        if step_norm > _MAX_NEWTON_STEP:
            dz *= _MAX_NEWTON_STEP / step_norm

        # step-halving line search on the defect norm; probes use the
        # plain flow, the monodromy is recomputed only at the accepted point
        s = 1.0
        for _ in range(_MAX_HALVINGS):
            z_try = z + s * dz
            try:
                r_try = float(np.max(np.abs(flow_map(params, z_try, cfg) - z_try)))
            except Exception:
                s *= 0.5
                continue
            if r_try < rnorm:
                break
            s *= 0.5
        else:
            fail(NonConvergenceError,
                 f"line search stalled at defect {rnorm:.3e}", it)

        z = z_try
        zT, M = flow_and_monodromy(params, z, cfg)
        G = zT - z
        rnorm = float(np.max(np.abs(G)))
        history.append(rnorm)

    if rnorm < tol:
        return _finalize(params, z, rnorm, M, max_iter, cfg, tuple(history))
    fail(NonConvergenceError,
         f"no convergence in {max_iter} iterations (last defect {rnorm:.3e})",
         max_iter)


def _finalize(params, z, rnorm, M, iterations, cfg, history):
    mults = np.linalg.eigvals(M)
    return PeriodicOrbit(
        z0=z,
        residual_norm=rnorm,
        monodromy=M,
        floquet_multipliers=(complex(mults[0]), complex(mults[1])),
        stable=bool(np.all(np.abs(mults) < 1.0)),
        newton_iterations=iterations,
        orbit_samples=_sample_orbit(params, z, cfg),
        residual_history=history,
    )


def detect_steady_state(params: ModelParams, z, cfg: IntegratorConfig,
                        variance_tol: float = 1e-12) -> PeriodicOrbit | None:
    """Recognise an (near-)equilibrium posing as a periodic solution.

    Integrates one period in the original frame from x = exp(z) and, if
    every component's sample variance is below ``variance_tol``, returns
    the constant trajectory as a degenerate orbit.  The linearisation is
    done in the original frame, which stays regular when a species sits
    on (or exponentially close to) its extinction axis, where the log
    frame has no finite fixed point.
    """
    x0 = np.exp(np.asarray(z, dtype=float))
    ts = np.linspace(0.0, params.period, _ORBIT_SAMPLES + 1)
    traj = integrate(lambda t, x: rhs_original(params, t, x),
                     0.0, x0, params.period, cfg, t_eval=ts[1:-1],
                     frame="original")
    variances = np.var(traj.states, axis=0)
    if np.max(variances) >= variance_tol:
        return None
    _, M = variational_flow(lambda t, x: rhs_original(params, t, x),
                            lambda t, x: jac_original(params, t, x),
                            0.0, x0, params.period, cfg)
    mults = np.linalg.eigvals(M)
    residual = float(np.max(np.abs(traj.final_state - x0)))
    with np.errstate(divide="ignore"):
        z0 = np.log(x0)
    log_traj = Trajectory("log", traj.times,
                          np.log(np.maximum(traj.states, np.finfo(float).tiny)))
    return PeriodicOrbit(
        z0=z0,
        residual_norm=residual,
        monodromy=M,
        floquet_multipliers=(complex(mults[0]), complex(mults[1])),
        stable=bool(np.all(np.abs(mults) < 1.0)),
        newton_iterations=0,
        orbit_samples=log_traj,
        degenerate_steady_state=True,
    )


def diagnose_extinction(params: ModelParams, z, cfg: IntegratorConfig,
                        max_periods: int = 300) -> ExtinctionDiagnosis | None:
    """Detect a geometric collapse of one species from a stalled iterate.

    Follows the flow period by period.  The reported rate is asymptotic
    only once the surviving component has stopped moving, so the
    diagnosis waits until exactly one component keeps a steady negative
    drift while the others sit still, then averages three more periods.
    Returns None when nothing is dying (e.g. an orbit merely missed) or
    no clean regime emerges within the period budget.
    """
    z = np.asarray(z, dtype=float)

    def one_period(state):
        return integrate(lambda t, s: rhs_log(params, t, s),
                         0.0, state, params.period, cfg, frame="log").final_state

    try:
        for _ in range(max_periods):
            z_next = one_period(z)
            drift = z_next - z
            z = z_next
            dying = [i for i in (0, 1) if drift[i] < -1e-3]
            settled = all(abs(drift[j]) < 1e-6 for j in (0, 1) if j not in dying)
            if not dying and settled:
                return None
            if dying and settled:
                rates = []
                for _ in range(3):
                    z_next = one_period(z)
                    rates.append(z_next - z)
                    z = z_next
                mean_drift = np.mean(rates, axis=0)
                i = max(dying, key=lambda j: -mean_drift[j])
                if mean_drift[i] < -1e-3:
                    return ExtinctionDiagnosis(species=i + 1,
                                               rate_per_period=float(mean_drift[i]))
                return None
    except Exception:
        return None
    return None


@dataclass(frozen=True)
class BoundCheck:
    """Verdict for one side of the a priori box on one log component."""

    name: str
    applicable: bool
    satisfied: bool | None
    worst_margin: float | None

    def to_dict(self) -> dict:
        return {"name": self.name, "applicable": self.applicable,
                "satisfied": self.satisfied, "worst_margin": self.worst_margin}


def verify_bounds(orbit: PeriodicOrbit, report: BoundReport) -> list[BoundCheck]:
    """Check L2 <= z1 <= L1 and L4 <= z2 <= L3 on all orbit samples.

    Margins are the worst (most violated) slack over the samples, signed
    so that negatives mean violation.  Bounds whose defining quantity
    was non-positive (undefined logarithm) come back not-applicable.
    """
    z1 = orbit.orbit_samples.states[:, 0]
    z2 = orbit.orbit_samples.states[:, 1]
    checks = []
    for name, lo, hi, vals in (("z1", report.L2, report.L1, z1),
                               ("z2", report.L4, report.L3, z2)):
        for side, bound in (("lower", lo), ("upper", hi)):
            label = f"{name}_{side}"
            if bound is None:
                checks.append(BoundCheck(label, False, None, None))
                continue
            margin = (float(np.min(vals) - bound) if side == "lower"
                      else float(bound - np.max(vals)))
            checks.append(BoundCheck(label, True, margin >= -_BOUND_SLACK, margin))
    return checks
