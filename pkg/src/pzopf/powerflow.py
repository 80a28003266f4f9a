"""Newton-Raphson AC power flow (polar form).

Unknowns are the angles of all non-slack buses and the magnitudes of PQ
buses.  The solver always starts flat so a result depends only on its
inputs.  :func:`solve_pf_batch` runs many independent dispatches through the
same iteration, which is how the population methods evaluate a swarm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .network import AdmittanceMatrix, Network

log = logging.getLogger(__name__)

PF_TOL = 1e-8
PF_MAX_ITER = 50
_BLOWUP = 1e10


@dataclass
class PowerFlowSolution:
    v_mag: np.ndarray
    theta: np.ndarray  # radians
    p_slack: float  # MW
    q_gen: np.ndarray  # MVAr, network.generators order
    mismatch_inf_norm: float  # p.u.
    iterations: int
    converged: bool
    message: str = ""

    def total_generation(self, dispatch) -> float:
        return float(self.p_slack + np.sum(dispatch))


def bus_injections(v_mag, theta, y: AdmittanceMatrix):
    """Computed (P, Q) injections at every bus, p.u., from the trigonometric balance sums."""
    v_mag = np.asarray(v_mag, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d = theta[:, None] - theta[None, :]
    vv = v_mag[:, None] * v_mag[None, :]
    p = np.sum(vv * (y.g * np.cos(d) + y.b * np.sin(d)), axis=1)
    q = np.sum(vv * (y.g * np.sin(d) - y.b * np.cos(d)), axis=1)
    return p, q


def mismatch(v_mag, theta, injections, y: AdmittanceMatrix, pvpq, pq) -> np.ndarray:
    """Scheduled minus computed power: P at ``pvpq`` buses followed by Q at ``pq`` buses.

    ``injections`` is the complex scheduled net injection ``P + jQ`` per bus (p.u.).
    """
    p, q = bus_injections(v_mag, theta, y)
    s = np.asarray(injections)
    return np.concatenate([s.real[pvpq] - p[pvpq], s.imag[pq] - q[pq]])


def _complex_injection(v, ybus):
    # v: (B, n) complex voltages
    return v * np.conj(v @ ybus.T)


def _jacobian_batch(v, ybus, pvpq, pq):
    # A_ik = V_i conj(Y_ik V_k); dS/dVa = diag(jV conj(I)) - jA, dS/dVm = A / |V_k| + diag(conj(I) V/|V|)
    nb, n = v.shape
    vm = np.abs(v)
    ci = np.conj(v @ ybus.T)
    a = v[:, :, None] * np.conj(ybus)[None] * np.conj(v)[:, None, :]
    dva = 1j * v * ci
    dvm = ci * v / vm
    full = np.empty((nb, 2 * n, 2 * n))
    full[:, :n, :n] = a.imag
    full[:, :n, n:] = a.real / vm[:, None, :]
    full[:, n:, :n] = -a.real
    full[:, n:, n:] = a.imag / vm[:, None, :]
    k = np.arange(n)
    full[:, k, k] += dva.real
    full[:, k, n + k] += dvm.real
    full[:, n + k, k] += dva.imag
    full[:, n + k, n + k] += dvm.imag
    idx = np.r_[pvpq, n + pq]
    return full[:, idx[:, None], idx[None, :]]


def jacobian(v_mag, theta, y: AdmittanceMatrix, pvpq, pq) -> np.ndarray:
    """Derivative of the computed injections ``[P(pvpq); Q(pq)]`` w.r.t. ``[theta(pvpq); v_mag(pq)]``.

    This is the negative of the derivative of :func:`mismatch`.
    """
    v = (np.asarray(v_mag) * np.exp(1j * np.asarray(theta)))[None]
    return _jacobian_batch(v, y.y, np.asarray(pvpq), np.asarray(pq))[0]


def _solve_batch(jac, f):
    try:
        return np.linalg.solve(jac, f[..., None])[..., 0], np.ones(len(f), dtype=bool)
    except np.linalg.LinAlgError:
        out = np.full_like(f, np.nan)
        ok = np.zeros(len(f), dtype=bool)
        for k in range(len(f)):
            try:
                out[k] = np.linalg.solve(jac[k], f[k])
                ok[k] = True
            except np.linalg.LinAlgError:
                pass
        return out, ok


def newton_batch(ybus, v0, s_sched, pvpq, pq, tol=PF_TOL, max_iter=PF_MAX_ITER):
    """Run Newton-Raphson for a batch of scheduled injections.

    Returns ``(v, norm, iterations, converged, message)`` with one row or
    entry per batch member.  Members stop updating once they converge or fail.
    """
    v = np.array(v0, dtype=complex)
    nb = v.shape[0]
    norm = np.full(nb, np.inf)
    iters = np.zeros(nb, dtype=int)
    conv = np.zeros(nb, dtype=bool)
    done = np.zeros(nb, dtype=bool)
    msg = np.array([""] * nb, dtype=object)
    npvpq = len(pvpq)
    for it in range(max_iter + 1):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        va = v[act]
        mis = _complex_injection(va, ybus) - s_sched[act]
        f = np.concatenate([mis.real[:, pvpq], mis.imag[:, pq]], axis=1)
        nrm = np.max(np.abs(f), axis=1) if f.shape[1] else np.zeros(len(act))
        nrm = np.where(np.isfinite(nrm), nrm, np.inf)
        norm[act] = nrm
        iters[act] = it
        ok = nrm <= tol
        bad = ~ok & (nrm > _BLOWUP)
        conv[act[ok]] = True
        done[act[ok | bad]] = True
        msg[act[bad]] = "mismatch blew up"
        step = ~(ok | bad)
        if it == max_iter or not step.any():
            msg[act[step]] = f"no convergence in {max_iter} iterations"
            break
        act, va, f = act[step], va[step], f[step]
        dx, solved = _solve_batch(_jacobian_batch(va, ybus, pvpq, pq), f)
        if not solved.all():
            done[act[~solved]] = True
            msg[act[~solved]] = "singular Jacobian"
            act, va, dx = act[solved], va[solved], dx[solved]
        vm, ang = np.abs(va), np.angle(va)
        ang[:, pvpq] -= dx[:, :npvpq]
        vm[:, pq] -= dx[:, npvpq:]
        v[act] = vm * np.exp(1j * ang)
    return v, norm, iters, conv, list(msg)


def scheduled_injections(net: Network, dispatch) -> np.ndarray:
    """Complex scheduled injections, p.u., for a batch of dispatches ``(B, n_g - 1)``."""
    dispatch = np.atleast_2d(np.asarray(dispatch, dtype=float))
    base = net.base_mva
    load = np.array([complex(b.p_load, b.q_load) for b in net.buses])
    s = np.tile(-load, (dispatch.shape[0], 1))
    s[:, net.gen_index[1:]] += dispatch
    return s / base


def flat_start(net: Network) -> np.ndarray:
    v = np.ones(net.n_bus, dtype=complex)
    fixed = np.r_[net.slack_index, net.pv_index].astype(int)
    v[fixed] = [net.buses[i].v_setpoint for i in fixed]
    return v


def solve_pf_batch(net: Network, y: AdmittanceMatrix, dispatches, tol=PF_TOL, max_iter=PF_MAX_ITER):
    dispatches = np.atleast_2d(np.asarray(dispatches, dtype=float))
    nb = dispatches.shape[0]
    pvpq = np.sort(np.r_[net.pv_index, net.pq_index]).astype(int)
    pq = net.pq_index
    s = scheduled_injections(net, dispatches)
    v0 = np.tile(flat_start(net), (nb, 1))
    with np.errstate(all="ignore"):
        v, norm, iters, conv, msg = newton_batch(y.y, v0, s, pvpq, pq, tol, max_iter)
        s_calc = _complex_injection(v, y.y) * net.base_mva
    load = np.array([complex(b.p_load, b.q_load) for b in net.buses])
    gi = net.gen_index
    out = []
    for k in range(nb):
        sg = s_calc[k, gi] + load[gi]
        # slack output is the net injection at the slack bus plus its load
        p_slack = float((s_calc[k, net.slack_index] + load[net.slack_index]).real)
        if not conv[k]:
            log.debug("power flow not converged: %s", msg[k])
        out.append(PowerFlowSolution(
            v_mag=np.abs(v[k]), theta=np.angle(v[k]), p_slack=p_slack if np.isfinite(p_slack) else np.nan,
            q_gen=sg.imag.copy(), mismatch_inf_norm=float(norm[k]), iterations=int(iters[k]),
            converged=bool(conv[k]), message=msg[k]))
    return out


def solve_pf(net: Network, y: AdmittanceMatrix, dispatch, tol=PF_TOL, max_iter=PF_MAX_ITER) -> PowerFlowSolution:
    """Solve the power flow for one dispatch of the controllable generators (MW)."""
    return solve_pf_batch(net, y, np.asarray(dispatch, dtype=float)[None], tol, max_iter)[0]
