"""Two-variable Mitchell-Schaeffer membrane model in 0D and on a 1D cable, and
the pacing protocol that turns it into APD and CV restitution tables.

The membrane variable ``v`` is dimensionless in [0, 1]; ``to_mv`` maps it
affinely to rest -80 mV / peak +20 mV so the -62 mV threshold applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba as nb
import numpy as np

from .tables import RestitutionTable

V_REST_MV = -80.0
V_PEAK_MV = 20.0
THRESHOLD_MV = -62.0


def to_mv(v):
    return V_REST_MV + (V_PEAK_MV - V_REST_MV) * np.asarray(v)


def from_mv(u):
    return (np.asarray(u) - V_REST_MV) / (V_PEAK_MV - V_REST_MV)


V_THRESHOLD = float(from_mv(THRESHOLD_MV))
# a response counts as an action potential only if it also overshoots this
# level; a stimulus landing just after repolarisation can re-cross the
# threshold briefly without a regenerative upstroke
UPSTROKE_MV = -30.0
V_UPSTROKE = float(from_mv(UPSTROKE_MV))


class MsError(RuntimeError):
    pass


@dataclass(frozen=True)
class MsParameters:
    tau_in: float = 0.3  # ms
    tau_out: float = 6.0  # ms
    tau_open: float = 120.0  # ms
    tau_close: float = 150.0  # ms
    v_gate: float = 0.13
    stim_amplitude: float = 0.05  # 1/ms, dimensionless rate added to dv/dt
    stim_duration: float = 2.0  # ms
    name: str = "ms"

    def __post_init__(self):
        for k in ("tau_in", "tau_out", "tau_open", "tau_close", "stim_duration"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be positive")
        if not 0 < self.v_gate < 1:
            raise ValueError("v_gate must lie in (0, 1)")
        if self.stim_amplitude < 0:
            raise ValueError("stim_amplitude must be non-negative")

    def as_tuple(self):
        return (self.tau_in, self.tau_out, self.tau_open, self.tau_close, self.v_gate)


# Fitted so that the pacing protocol below yields DI_min 60 / 25 ms (to the
# 10 ms decrement), long-DI CV 50 / 30 cm/s at sigma 0.46 / 0.19 mS/cm and
# APD plateaus near 200 / 305 ms. tau_out sets the excitation threshold and
# hence DI_min. v_gate keeps its canonical value everywhere; the border zone
# shortens tau_open to 60 ms so its CV recovers quickly after short DIs.
HEALTHY = MsParameters(tau_in=0.0869, tau_out=2.39, tau_close=93.8, name="healthy")
BORDER_ZONE = MsParameters(tau_in=0.1029, tau_out=3.227, tau_open=60.0, tau_close=135.6, name="border_zone")


@dataclass(frozen=True)
class PacingProtocol:
    bcl: float = 1500.0  # ms
    cl0: float = 200.0  # ms
    decrement: float = 10.0  # ms
    n_conditioning: int = 5

    def __post_init__(self):
        if not self.bcl > self.cl0 > 0:
            raise ValueError("need bcl > cl0 > 0")
        if self.decrement <= 0 or self.n_conditioning < 1:
            raise ValueError("decrement must be positive and n_conditioning >= 1")

    def cycle_lengths(self) -> np.ndarray:
        """Test CLs from BCL down to CL0 (inclusive when it lands on the grid)."""
        n = int(math.floor((self.bcl - self.cl0) / self.decrement + 1e-9))
        return self.bcl - self.decrement * np.arange(n + 1)


MS_PROTOCOL = PacingProtocol()


@dataclass(frozen=True)
class CableConfig:
    length: float = 4.0  # cm
    dx: float = 0.005  # cm
    dt: float = 0.02  # ms
    sigma: float = 0.46  # mS/cm
    c_m: float = 1.0  # uF/cm^2
    beta: float = 800.0  # 1/cm
    stim_length: float = 0.1  # cm
    stim_amplitude: float = 0.5  # 1/ms

    def __post_init__(self):
        n = self.length / self.dx
        if abs(n - round(n)) > 1e-6 or round(n) < 10:
            raise ValueError("length/dx must be an integer >= 10")
        for k in ("length", "dx", "dt", "sigma", "c_m", "beta", "stim_length"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be positive")

    @property
    def n_cells(self) -> int:
        return int(round(self.length / self.dx))

    @property
    def diffusivity(self) -> float:
        """sigma / (beta C_m) in cm^2/ms."""
        return self.sigma / (self.beta * self.c_m)


# --- 0D -------------------------------------------------------------------


@nb.njit(cache=True)
def _ms_rhs(v, h, tau_in, tau_out):
    return h * v * v * (1.0 - v) / tau_in - v / tau_out


@nb.njit(cache=True)
def _gate(v, h, tau_open, tau_close, v_gate):
    if v < v_gate:
        return (1.0 - h) / tau_open
    return -h / tau_close


@nb.njit(cache=True)
def _cell_run(v, h, stim, amp, dt, p):
    tau_in, tau_out, tau_open, tau_close, v_gate = p
    n = stim.shape[0]
    vs = np.empty(n + 1)
    hs = np.empty(n + 1)
    vs[0] = v
    hs[0] = h
    for k in range(n):
        dv = _ms_rhs(v, h, tau_in, tau_out)
        if stim[k]:
            dv += amp
        dh = _gate(v, h, tau_open, tau_close, v_gate)
        v += dt * dv
        h += dt * dh
        vs[k + 1] = v
        hs[k + 1] = h
    return vs, hs


def _stim_mask(n_steps, dt, times, duration):
    mask = np.zeros(n_steps, dtype=np.bool_)
    for t in times:
        k0 = int(round(t / dt))
        k1 = k0 + int(round(duration / dt))
        mask[max(k0, 0) : max(min(k1, n_steps), 0)] = True
    return mask


def ms_cell_run(params: MsParameters, stimulus_times, dt: float = 0.02, horizon: float = 1000.0,
                v0: float = 0.0, h0: float = 1.0):
    """Integrate the single cell with explicit Euler.

    Returns (t, v_mv, h) sampled every ``dt`` from 0 to ``horizon``.
    """
    n = int(round(horizon / dt))
    stim = _stim_mask(n, dt, stimulus_times, params.stim_duration)
    vs, hs = _cell_run(float(v0), float(h0), stim, params.stim_amplitude, dt, params.as_tuple())
    if not (np.all(np.isfinite(vs)) and vs.min() > -0.5 and vs.max() < 1.5):
        k = int(np.argmax(~np.isfinite(vs) | (vs <= -0.5) | (vs >= 1.5)))
        raise MsError(f"membrane trace diverged at t = {k * dt:.3f} ms (v = {vs[k]!r}); reduce dt")
    return np.arange(n + 1) * dt, to_mv(vs), hs


def _crossings(v, dt, thr, t0=0.0):
    """Interpolated up- and down-crossing times of ``thr``."""
    above = v >= thr
    flips = np.flatnonzero(above[1:] != above[:-1])
    ups, downs = [], []
    for k in flips:
        frac = (thr - v[k]) / (v[k + 1] - v[k])
        t = t0 + (k + frac) * dt
        (ups if above[k + 1] else downs).append(t)
    return ups, downs


def action_potential_durations(t, v_mv, threshold_mv=THRESHOLD_MV):
    """List of (onset, duration) for every excursion above the threshold."""
    dt = t[1] - t[0]
    ups, downs = _crossings(np.asarray(v_mv), dt, threshold_mv, t[0])
    out = []
    for u in ups:
        later = [d for d in downs if d > u]
        if later:
            out.append((u, later[0] - u))
    return out


def _apd_after(vs, dt, start=0):
    if vs[start:].max() < V_UPSTROKE:
        return None
    ups, downs = _crossings(vs[start:], dt, V_THRESHOLD)
    if not ups:
        return None
    later = [d for d in downs if d > ups[0]]
    if not later:
        return None
    return later[0] - ups[0], later[0]


def generate_apd_restitution(params: MsParameters, protocol: PacingProtocol = MS_PROTOCOL,
                             dt: float = 0.02, max_apd: float = 1000.0):
    """APD restitution by S1-S2 pacing in 0D.

    ``n_conditioning`` stimuli at BCL, then one test stimulus CL after the
    last of them, for CL = BCL, BCL - decrement, ..., CL0. DI = CL - APD of
    the last conditioning beat. A test beat counts when the membrane crosses
    the -62 mV threshold and overshoots -30 mV.

    Returns (di, apd, di_min) with DI ascending.
    """
    bcl, n_cond = protocol.bcl, protocol.n_conditioning
    t_last = (n_cond - 1) * bcl
    n = int(round((t_last + bcl) / dt))
    times = [k * bcl for k in range(n_cond)]
    stim = _stim_mask(n, dt, times, params.stim_duration)
    vs, hs = _cell_run(0.0, 1.0, stim, params.stim_amplitude, dt, params.as_tuple())
    k_last = int(round(t_last / dt))
    prev = _apd_after(vs, dt, k_last)
    if prev is None:
        raise MsError(f"{params.name}: conditioning stimulus did not elicit an action potential")
    apd_prev = prev[0]

    n_test = int(round(max_apd / dt))
    test_stim = _stim_mask(n_test, dt, [0.0], params.stim_duration)
    di, apd = [], []
    for cl in protocol.cycle_lengths():
        k = k_last + int(round(cl / dt))
        tv, _ = _cell_run(vs[k], hs[k], test_stim, params.stim_amplitude, dt, params.as_tuple())
        if vs[k] >= V_THRESHOLD:
            continue  # previous beat not over: no new action potential possible
        res = _apd_after(tv, dt)
        if res is None:
            continue
        di.append(cl - apd_prev)
        apd.append(res[0])
    if not di:
        raise MsError(f"{params.name}: no cycle length elicited an action potential")
    order = np.argsort(di)
    di = np.asarray(di)[order]
    apd = np.asarray(apd)[order]
    return di, apd, float(di[0])


# --- 1D cable -------------------------------------------------------------


def _thomas_factor(n, r):
    """LU factors of (I - r L) with L the no-flux second difference."""
    lower = np.full(n, -r)
    upper = np.full(n, -r)
    diag = np.full(n, 1.0 + 2.0 * r)
    diag[0] = diag[-1] = 1.0 + r
    lower[0] = 0.0
    upper[-1] = 0.0
    cp = np.empty(n)
    den = np.empty(n)
    den[0] = diag[0]
    cp[0] = upper[0] / den[0]
    for i in range(1, n):
        den[i] = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / den[i]
    return lower, cp, den


@nb.njit(cache=True)
def _thomas_solve(lower, cp, den, rhs, out):
    n = rhs.shape[0]
    out[0] = rhs[0] / den[0]
    for i in range(1, n):
        out[i] = (rhs[i] - lower[i] * out[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@nb.njit(cache=True)
def _cable_run(v, h, n_steps, dt, p, lower, cp, den, stim_steps, n_stim_cells, amp,
               save_steps, save_v, save_h, probes, thr, stop_when_crossed):
    """Advance the cable in place.

    Records, for each probe cell, every threshold crossing time (step units,
    interpolated) as up (+) and down (-) events in ``events`` (cap 64 each).
    """
    tau_in, tau_out, tau_open, tau_close, v_gate = p
    nc = v.shape[0]
    rhs = np.empty(nc)
    n_probe = probes.shape[0]
    ups = np.full((n_probe, 64), np.nan)
    downs = np.full((n_probe, 64), np.nan)
    n_up = np.zeros(n_probe, dtype=np.int64)
    n_down = np.zeros(n_probe, dtype=np.int64)
    si = 0
    for k in range(n_steps):
        stim_on = stim_steps[k]
        for i in range(nc):
            dv = _ms_rhs(v[i], h[i], tau_in, tau_out)
            if stim_on and i < n_stim_cells:
                dv += amp
            rhs[i] = v[i] + dt * dv
            h[i] += dt * _gate(v[i], h[i], tau_open, tau_close, v_gate)
        prev = np.empty(n_probe)
        for q in range(n_probe):
            prev[q] = v[probes[q]]
        _thomas_solve(lower, cp, den, rhs, v)
        done = True
        for q in range(n_probe):
            a = prev[q]
            b = v[probes[q]]
            if (a < thr) != (b < thr):
                frac = (thr - a) / (b - a)
                if b >= thr and n_up[q] < 64:
                    ups[q, n_up[q]] = k + frac
                    n_up[q] += 1
                elif b < thr and n_down[q] < 64:
                    downs[q, n_down[q]] = k + frac
                    n_down[q] += 1
            if n_up[q] == 0:
                done = False
        while si < save_steps.shape[0] and save_steps[si] == k + 1:
            save_v[si, :] = v
            save_h[si, :] = h
            si += 1
        if stop_when_crossed and done:
            break
    return ups, n_up, downs, n_down


class Cable:
    """Monodomain strand with implicit diffusion and explicit membrane update."""

    def __init__(self, params: MsParameters, config: CableConfig):
        self.params = params
        self.config = config
        n = config.n_cells
        r = config.diffusivity * config.dt / config.dx**2
        self._factors = _thomas_factor(n, r)
        self.n_stim = max(1, int(round(config.stim_length / config.dx)))
        self.x = (np.arange(n) + 0.5) * config.dx

    def cell_at(self, x: float) -> int:
        return int(np.clip(round(x / self.config.dx - 0.5), 0, self.config.n_cells - 1))

    def rest_state(self):
        n = self.config.n_cells
        return np.zeros(n), np.ones(n)

    def run(self, v, h, duration, stim_times=(), probes=(), save_times=(), stop_when_crossed=False):
        """Advance (v, h) in place by ``duration`` ms from local time 0.

        Returns per-probe lists of up- and down-crossing times and the saved
        (v, h) snapshots.
        """
        cfg = self.config
        n_steps = int(round(duration / cfg.dt))
        stim = _stim_mask(n_steps, cfg.dt, stim_times, self.params.stim_duration)
        steps = np.array([int(round(t / cfg.dt)) for t in save_times], dtype=np.int64)
        order = np.argsort(steps, kind="stable")
        save_steps = steps[order]
        save_v = np.empty((len(steps), cfg.n_cells))
        save_h = np.empty((len(steps), cfg.n_cells))
        probes = np.asarray(probes, dtype=np.int64)
        lower, cp, den = self._factors
        ups, n_up, downs, n_down = _cable_run(
            v, h, n_steps, cfg.dt, self.params.as_tuple(), lower, cp, den, stim, self.n_stim,
            cfg.stim_amplitude, save_steps, save_v, save_h, probes, V_THRESHOLD, stop_when_crossed,
        )
        if not (np.all(np.isfinite(v)) and v.max() < 1.5 and v.min() > -0.5):
            raise MsError("cable state diverged; reduce dt")
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        save_v, save_h = save_v[inv], save_h[inv]
        up_t = [list(ups[q, : n_up[q]] * cfg.dt) for q in range(len(probes))]
        down_t = [list(downs[q, : n_down[q]] * cfg.dt) for q in range(len(probes))]
        return up_t, down_t, (save_v, save_h)


def generate_cv_restitution(params: MsParameters, cable: CableConfig = CableConfig(),
                            protocol: PacingProtocol = MS_PROTOCOL, window: float = 400.0):
    """CV restitution on a 1D strand paced from its left end.

    CV is the distance between the centres of the two halves over the
    difference of their activation times. DI is measured locally at the
    first centre: test activation time minus the previous repolarisation.

    Returns (di, cv) with DI ascending and CV in cm/s.
    """
    model = Cable(params, cable)
    x1, x2 = 0.25 * cable.length, 0.75 * cable.length
    probes = [model.cell_at(x1), model.cell_at(x2)]
    dist = model.x[probes[1]] - model.x[probes[0]]
    bcl, n_cond = protocol.bcl, protocol.n_conditioning
    v, h = model.rest_state()
    # all conditioning beats but the last
    if n_cond > 1:
        model.run(v, h, (n_cond - 1) * bcl, stim_times=[k * bcl for k in range(n_cond - 1)])
    cls = protocol.cycle_lengths()
    ups, downs, (sv, sh) = model.run(
        v, h, bcl, stim_times=[0.0], probes=probes, save_times=list(cls)
    )
    if not ups[0] or not downs[0]:
        raise MsError(f"{params.name}: conditioning beat did not propagate")
    repol = downs[0][0]

    di, cv = [], []
    for i, cl in enumerate(cls):
        vv, hh = sv[i].copy(), sh[i].copy()
        if vv[probes[0]] >= V_THRESHOLD:
            continue
        up, _, _ = model.run(vv, hh, window, stim_times=[0.0], probes=probes, stop_when_crossed=True)
        if not up[0] or not up[1]:
            continue
        t1, t2 = up[0][0], up[1][0]
        di.append(cl + t1 - repol)
        cv.append(1000.0 * dist / (t2 - t1))
    if not di:
        raise MsError(f"{params.name}: conduction blocked at every cycle length")
    order = np.argsort(di)
    return np.asarray(di)[order], np.asarray(cv)[order]


def long_di_cv(params: MsParameters, cable: CableConfig = CableConfig()) -> float:
    """CV (cm/s) of a single wave launched into a fully rested strand."""
    model = Cable(params, cable)
    probes = [model.cell_at(0.25 * cable.length), model.cell_at(0.75 * cable.length)]
    v, h = model.rest_state()
    up, _, _ = model.run(v, h, 500.0, stim_times=[0.0], probes=probes, stop_when_crossed=True)
    if not up[0] or not up[1]:
        raise MsError(f"{params.name}: no propagation in a rested strand")
    return 1000.0 * (model.x[probes[1]] - model.x[probes[0]]) / (up[1][0] - up[0][0])


def generate_table(params: MsParameters, tissue_id: int, sigma: float, ratio: float = 1.0,
                   protocol: PacingProtocol = MS_PROTOCOL, cable: CableConfig | None = None,
                   dt: float = 0.02) -> RestitutionTable:
    """Full restitution table (APD from 0D, CV from the cable) for one tissue."""
    di_a, apd, di_min = generate_apd_restitution(params, protocol, dt)
    cable = replace(cable or CableConfig(), sigma=sigma, dt=dt)
    di_c, cv = generate_cv_restitution(params, cable, protocol)
    keep = di_c >= di_min
    if not keep.any():
        raise MsError(f"{params.name}: no propagating beat at DI >= DI_min")
    # measured curves carry timing noise of order 1e-6 at long DI; restitution is monotone
    apd = np.maximum.accumulate(apd)
    cv = np.maximum.accumulate(cv[keep])
    return RestitutionTable(tissue_id, di_min, di_a, apd, di_c[keep], cv, ratio, params.name)
