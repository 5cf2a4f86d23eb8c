"""Time-stepped fast marching with re-excitable tissue.

Nodes cycle through Far (excitable) -> Considered -> Accepted (activated,
then refractory) -> Far. Each activation draws its APD from the tissue's
restitution table at the node's current diastolic interval, and the front
speed towards a node is set by the same table at that node's DI.

Two rules decide which neighbour values an update may use. A neighbour is
a source for target ``x`` only if it is Accepted and activated no earlier
than the moment ``x`` last became excitable, so activation times from
earlier beats never leak into the current one. A triangle that touches a
node still active from such an earlier beat is a refractory wall and does
not conduct towards ``x`` at all.

Opening a block line is the exception: every still-active node across the
opened triangles is a source regardless of age, so a front held at a closed
line resumes once the far side is excitable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .fmm import ACCEPTED, CONSIDERED, FAR, IMPROVE_TOL
from .geometry import SCAR
from .heap import heap_decrease, heap_pop, heap_push, heap_remove
from .local_solver import triangle_update
from .mesh import Adjacency, Mesh, build_adjacency
from .metric import inverse_metric_into
from .restitution.tables import RestitutionTable, flat_table

INERT = -1  # state of scar nodes

ACTIVATION, REPOLARIZATION, REEXCITABLE = 0, 1, 2
EVENT_NAMES = {ACTIVATION: "activation", REPOLARIZATION: "repolarization", REEXCITABLE: "reexcitable"}


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class StimulusEvent:
    nodes: np.ndarray  # node ids, sorted, scar nodes removed
    time: float  # ms

    def __post_init__(self):
        nodes = np.unique(np.asarray(self.nodes, dtype=np.int64))
        object.__setattr__(self, "nodes", nodes)
        if not self.time >= 0:
            raise EngineError(f"stimulus time must be >= 0, got {self.time}")
        if nodes.size == 0:
            raise EngineError(f"stimulus at {self.time} ms has no nodes")


@dataclass(frozen=True)
class BlockLine:
    edges: np.ndarray  # (k, 2) node pairs, each a mesh edge
    t_open: float  # ms

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", edges)
        if edges.shape[0] == 0:
            raise EngineError("block line has no edges")

    def triangles(self, adjacency: Adjacency) -> np.ndarray:
        out = []
        for a, b in self.edges:
            shared = adjacency.shared(int(a), int(b))
            if shared.size == 0:
                raise EngineError(f"block line pair ({a}, {b}) is not a mesh edge")
            out.extend(shared.tolist())
        return np.unique(np.asarray(out, dtype=np.int64))


@dataclass(frozen=True)
class EngineConfig:
    t_end: float  # ms
    tables: dict  # tissue id -> RestitutionTable
    dt: float = 1.0  # ms
    snapshot_every: float = 5.0  # ms
    ratios: dict | None = None  # tissue id -> cv_t / cv_l, overrides the table's ratio
    scar_ids: tuple = (SCAR,)

    def __post_init__(self):
        if not 0 < self.dt <= self.t_end:
            raise EngineError(f"need 0 < dt <= T, got dt={self.dt}, T={self.t_end}")
        if not self.snapshot_every > 0:
            raise EngineError("snapshot cadence must be positive")
        for tid, r in self.ratio_map().items():
            if not 0 < r <= 1:
                raise EngineError(f"tissue {tid}: anisotropy ratio must be in (0, 1], got {r}")

    def ratio_map(self) -> dict:
        out = {int(k): float(t.ratio) for k, t in self.tables.items()}
        out.update({int(k): float(r) for k, r in (self.ratios or {}).items()})
        return out


@dataclass(frozen=True)
class Snapshot:
    t: float
    v: np.ndarray
    phi: np.ndarray
    di: np.ndarray
    state: np.ndarray


@dataclass
class EventLog:
    kind: np.ndarray
    node: np.ndarray
    time: np.ndarray
    di: np.ndarray  # DI before activation, or DI at re-excitability
    apd: np.ndarray  # APD assigned at activation

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int8), np.empty(0, np.int64), np.empty(0), np.empty(0), np.empty(0))

    def __len__(self):
        return int(self.kind.size)

    def select(self, kind=None, node=None) -> "EventLog":
        m = np.ones(len(self), dtype=bool)
        if kind is not None:
            m &= self.kind == kind
        if node is not None:
            m &= self.node == node
        return EventLog(self.kind[m], self.node[m], self.time[m], self.di[m], self.apd[m])

    def activations(self, node: int) -> np.ndarray:
        return self.select(ACTIVATION, node).time

    def records(self):
        for k, n, t, d, a in zip(self.kind, self.node, self.time, self.di, self.apd):
            rec = {"event": EVENT_NAMES[int(k)], "node": int(n), "t": float(t)}
            if k == ACTIVATION:
                rec["di"] = float(d) if math.isfinite(d) else None
                rec["apd"] = float(a)
            elif k == REEXCITABLE:
                rec["di"] = float(d)
            yield rec


@dataclass
class SnapshotSeries:
    snapshots: list = field(default_factory=list)
    events: EventLog = field(default_factory=EventLog.empty)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i) -> Snapshot:
        return self.snapshots[i]

    def at(self, t: float) -> Snapshot:
        for s in self.snapshots:
            if abs(s.t - t) < 1e-9:
                return s
        raise KeyError(f"no snapshot at t = {t}")


# --- kernels --------------------------------------------------------------


@nb.njit(cache=True)
def _lookup(x, ptr, xs, ys, k):
    lo, hi = ptr[k], ptr[k + 1]
    if x >= xs[hi - 1]:
        return ys[hi - 1]
    return np.interp(x, xs[lo:hi], ys[lo:hi])


@nb.njit(cache=True)
def _is_source(y, xn, state, phi, since):
    return state[y] == ACCEPTED and phi[y] >= since[xn]


@nb.njit(cache=True)
def _is_wall(y, xn, state, v, phi, since):
    return state[y] == ACCEPTED and v[y] == 1 and phi[y] < since[xn]


@nb.njit(cache=True)
def _opposite(tri, x):
    a, b, c = tri[0], tri[1], tri[2]
    if a == x:
        return b, c
    if b == x:
        return c, a
    return a, b


@nb.njit(cache=True)
def _target_velocity(xn, tis, di, cv_ptr, cv_x, cv_y, ratio):
    k = tis[xn]
    cv_l = _lookup(di[xn], cv_ptr, cv_x, cv_y, k) / 1000.0
    return cv_l, ratio[k] * cv_l


@nb.njit(cache=True)
def _tri_candidate(t, xn, nodes, tris, fibers, cond, blocked, state, v, phi, since, cv_l, cv_t, M):
    if not cond[t] or blocked[t] > 0 or cv_t <= 0.0:
        return math.inf
    tri = tris[t]
    y1, y2 = _opposite(tri, xn)
    if _is_wall(y1, xn, state, v, phi, since) or _is_wall(y2, xn, state, v, phi, since):
        return math.inf
    p1 = phi[y1] if _is_source(y1, xn, state, phi, since) else math.inf
    p2 = phi[y2] if _is_source(y2, xn, state, phi, since) else math.inf
    if p1 == math.inf and p2 == math.inf:
        return math.inf
    inverse_metric_into(cv_l, cv_t, fibers[t], M)
    return triangle_update(nodes[xn], nodes[y1], nodes[y2], p1, p2, M)


@nb.njit(cache=True)
def _offer(xn, cand, state, keys, ids, pos, size):
    if state[xn] == FAR:
        heap_push(keys, ids, pos, size, xn, cand)
        state[xn] = CONSIDERED
    elif cand < keys[pos[xn]] - IMPROVE_TOL:
        heap_decrease(keys, ids, pos, xn, cand)


@nb.njit(cache=True)
def _relax(xa, front, nodes, tris, fibers, cond, blocked, tri_ptr, tri_idx, nbr_ptr, nbr_idx,
           tis, di, cv_ptr, cv_x, cv_y, ratio, state, v, phi, since, keys, ids, pos, size, M):
    for q in range(nbr_ptr[xa], nbr_ptr[xa + 1]):
        xn = nbr_idx[q]
        if state[xn] == ACCEPTED or state[xn] == INERT:
            continue
        cv_l, cv_t = _target_velocity(xn, tis, di, cv_ptr, cv_x, cv_y, ratio)
        cand = math.inf
        for r in range(tri_ptr[xn], tri_ptr[xn + 1]):
            t = tri_idx[r]
            tri = tris[t]
            if tri[0] != xa and tri[1] != xa and tri[2] != xa:
                continue
            val = _tri_candidate(t, xn, nodes, tris, fibers, cond, blocked, state, v, phi, since,
                                 cv_l, cv_t, M)
            if val < cand:
                cand = val
        if cand == math.inf:
            continue
        if cand < front:
            cand = front
        _offer(xn, cand, state, keys, ids, pos, size)


@nb.njit(cache=True)
def _activate(x, time, tis, di, apd_ptr, apd_x, apd_y, state, v, phi, apd,
              ev_kind, ev_node, ev_time, ev_di, ev_apd, n_ev):
    k = tis[x]
    a = _lookup(di[x], apd_ptr, apd_x, apd_y, k)
    i = n_ev[0]
    ev_kind[i] = ACTIVATION
    ev_node[i] = x
    ev_time[i] = time
    ev_di[i] = di[x]
    ev_apd[i] = a
    n_ev[0] = i + 1
    phi[x] = time
    v[x] = 1
    apd[x] = a
    di[x] = 0.0
    state[x] = ACCEPTED


@nb.njit(cache=True)
def _window(t, dt, front, next_stim, stim_times, stim_ptr, stim_nodes,
            nodes, tris, fibers, cond, blocked, tri_ptr, tri_idx, nbr_ptr, nbr_idx,
            tis, di, apd_ptr, apd_x, apd_y, cv_ptr, cv_x, cv_y, ratio,
            state, v, phi, apd, since, keys, ids, pos, size,
            ev_kind, ev_node, ev_time, ev_di, ev_apd, n_ev, only_stimuli):
    """Accept everything due in [t, t + dt).

    Stimuli are interleaved with heap pops in time order so the accepted
    times stay non-decreasing even when a stimulus falls inside the window.
    Returns the number of nodes activated by stimuli.
    """
    dim = nodes.shape[1]
    M = np.empty((dim, dim))
    t_next = t + dt
    n_stim = stim_times.shape[0]
    stimulated = 0
    fresh = np.empty(nodes.shape[0], dtype=np.int64)
    while True:
        i = next_stim[0]
        has_stim = i < n_stim and stim_times[i] < t_next
        horizon = stim_times[i] if has_stim else t_next
        if not only_stimuli:
            while size[0] > 0 and keys[0] < horizon:
                xa, key = heap_pop(keys, ids, pos, size)
                _activate(xa, key, tis, di, apd_ptr, apd_x, apd_y, state, v, phi, apd,
                          ev_kind, ev_node, ev_time, ev_di, ev_apd, n_ev)
                front[0] = key
                _relax(xa, key, nodes, tris, fibers, cond, blocked, tri_ptr, tri_idx, nbr_ptr,
                       nbr_idx, tis, di, cv_ptr, cv_x, cv_y, ratio, state, v, phi, since, keys,
                       ids, pos, size, M)
        if not has_stim:
            break
        ti = stim_times[i]
        n_fresh = 0
        for q in range(stim_ptr[i], stim_ptr[i + 1]):
            x = stim_nodes[q]
            if state[x] == ACCEPTED or state[x] == INERT:
                continue
            if state[x] == CONSIDERED:
                heap_remove(keys, ids, pos, size, x)
            _activate(x, ti, tis, di, apd_ptr, apd_x, apd_y, state, v, phi, apd,
                      ev_kind, ev_node, ev_time, ev_di, ev_apd, n_ev)
            fresh[n_fresh] = x
            n_fresh += 1
        if ti > front[0]:
            front[0] = ti
        for q in range(n_fresh):
            _relax(fresh[q], front[0], nodes, tris, fibers, cond, blocked, tri_ptr, tri_idx,
                   nbr_ptr, nbr_idx, tis, di, cv_ptr, cv_x, cv_y, ratio, state, v, phi, since,
                   keys, ids, pos, size, M)
        stimulated += n_fresh
        next_stim[0] = i + 1
    return stimulated


@nb.njit(cache=True)
def _end_of_step(t_new, dt, tis, di_min, state, v, phi, apd, di, since,
                 ev_kind, ev_node, ev_time, ev_di, ev_apd, n_ev):
    for x in range(state.shape[0]):
        s = state[x]
        if s == INERT:
            continue
        if s != ACCEPTED:
            di[x] += dt
            continue
        end = phi[x] + apd[x]
        if end > t_new:
            continue
        if v[x] == 1:
            v[x] = 0
            i = n_ev[0]
            ev_kind[i] = REPOLARIZATION
            ev_node[i] = x
            ev_time[i] = end
            ev_di[i] = 0.0
            ev_apd[i] = apd[x]
            n_ev[0] = i + 1
        di[x] = t_new - end
        if di[x] >= di_min[tis[x]]:
            state[x] = FAR
            phi[x] = math.inf
            since[x] = t_new
            i = n_ev[0]
            ev_kind[i] = REEXCITABLE
            ev_node[i] = x
            ev_time[i] = t_new
            ev_di[i] = di[x]
            ev_apd[i] = apd[x]
            n_ev[0] = i + 1


@nb.njit(cache=True)
def _reseed_candidate(t, xn, nodes, tris, fibers, cond, blocked, state, v, phi, cv_l, cv_t, M):
    # any still-active vertex counts, however old its activation
    if not cond[t] or blocked[t] > 0 or cv_t <= 0.0:
        return math.inf
    y1, y2 = _opposite(tris[t], xn)
    p1 = phi[y1] if state[y1] == ACCEPTED and v[y1] == 1 else math.inf
    p2 = phi[y2] if state[y2] == ACCEPTED and v[y2] == 1 else math.inf
    if p1 == math.inf and p2 == math.inf:
        return math.inf
    inverse_metric_into(cv_l, cv_t, fibers[t], M)
    return triangle_update(nodes[xn], nodes[y1], nodes[y2], p1, p2, M)


@nb.njit(cache=True)
def _reseed(opened, clock, nodes, tris, fibers, cond, blocked, tis, di, cv_ptr, cv_x, cv_y,
            ratio, state, v, phi, keys, ids, pos, size):
    dim = nodes.shape[1]
    M = np.empty((dim, dim))
    count = 0
    for r in range(opened.shape[0]):
        t = opened[r]
        for j in range(3):
            xn = tris[t, j]
            if state[xn] == ACCEPTED or state[xn] == INERT:
                continue
            cv_l, cv_t = _target_velocity(xn, tis, di, cv_ptr, cv_x, cv_y, ratio)
            cand = _reseed_candidate(t, xn, nodes, tris, fibers, cond, blocked, state, v, phi,
                                     cv_l, cv_t, M)
            if cand == math.inf:
                continue
            if cand < clock:
                cand = clock
            _offer(xn, cand, state, keys, ids, pos, size)
            count += 1
    return count


# --- Python driver --------------------------------------------------------


def _pack_tables(tables, ids, attr_x, attr_y):
    ptr = [0]
    xs, ys = [], []
    for tid in ids:
        tab = tables[tid]
        xs.append(getattr(tab, attr_x))
        ys.append(getattr(tab, attr_y))
        ptr.append(ptr[-1] + len(xs[-1]))
    return np.array(ptr, np.int64), np.concatenate(xs), np.concatenate(ys)


class Engine:
    """Mutable simulation state. Build with :func:`init_engine`."""

    def __init__(self, mesh: Mesh, adjacency: Adjacency, config: EngineConfig,
                 stimuli=(), blocks=()):
        self.mesh = mesh
        self.adjacency = adjacency
        self.config = config
        n = mesh.n_nodes
        scar = np.isin(mesh.tissue, np.asarray(config.scar_ids, dtype=np.int64))
        used = sorted(set(np.unique(mesh.tissue[~scar]).tolist()))
        missing = [t for t in used if t not in config.tables]
        if missing:
            raise EngineError(f"no restitution table for tissue id(s) {missing}")
        ids = sorted(int(k) for k in config.tables)
        index = {tid: i for i, tid in enumerate(ids)}
        self.tissue_ids = ids
        self.tis = np.array([index.get(int(t), -1) for t in mesh.tissue], dtype=np.int64)
        self.apd_ptr, self.apd_x, self.apd_y = _pack_tables(config.tables, ids, "apd_di", "apd")
        self.cv_ptr, self.cv_x, self.cv_y = _pack_tables(config.tables, ids, "cv_di", "cv")
        rmap = config.ratio_map()
        self.ratio = np.array([rmap[t] for t in ids])
        self.di_min = np.array([float(config.tables[t].di_min) for t in ids])

        self.nodes = np.ascontiguousarray(mesh.nodes)
        self.tris = np.ascontiguousarray(mesh.triangles)
        self.fibers = np.ascontiguousarray(mesh.fibers)
        self.cond = ~scar[mesh.triangles].any(axis=1)
        self.blocked = np.zeros(mesh.n_triangles, dtype=np.int32)

        self.state = np.where(scar, INERT, FAR).astype(np.int8)
        self.phi = np.full(n, np.inf)
        self.v = np.zeros(n, dtype=np.int8)
        self.apd = np.zeros(n)
        self.di = np.full(n, np.inf)
        self.since = np.full(n, -np.inf)
        self.keys = np.empty(n)
        self.ids = np.empty(n, dtype=np.int64)
        self.pos = np.full(n, -1, dtype=np.int64)
        self.size = np.zeros(1, dtype=np.int64)
        self.front = np.array([-np.inf])

        stimuli = sorted(stimuli, key=lambda s: s.time)
        if not stimuli:
            raise EngineError("at least one stimulus is required")
        self.stimuli = stimuli
        self.stim_times = np.array([s.time for s in stimuli])
        nodes_per = [s.nodes[~scar[s.nodes]] for s in stimuli]
        self.stim_ptr = np.concatenate([[0], np.cumsum([len(x) for x in nodes_per])]).astype(np.int64)
        self.stim_nodes = np.concatenate(nodes_per).astype(np.int64)
        self.next_stim = np.zeros(1, dtype=np.int64)

        self.blocks = [(b, b.triangles(adjacency)) for b in blocks]
        self.block_open = [False] * len(self.blocks)
        for _, tri in self.blocks:
            self.blocked[tri] += 1

        self.t0 = float(self.stim_times[0])
        self.n_steps = 0
        self.clock = self.t0
        cap = 3 * n + len(self.stim_nodes) + 1
        self._ev = (np.empty(cap, np.int8), np.empty(cap, np.int64), np.empty(cap), np.empty(cap),
                    np.empty(cap))
        self._n_ev = np.zeros(1, dtype=np.int64)
        self._event_chunks = []
        self._flush_events()
        self._open_due_blocks()

    # state views
    @property
    def heap_size(self) -> int:
        return int(self.size[0])

    @property
    def events(self) -> EventLog:
        if not self._event_chunks:
            return EventLog.empty()
        parts = list(zip(*self._event_chunks))
        return EventLog(*(np.concatenate(p) for p in parts))

    def snapshot(self) -> Snapshot:
        return Snapshot(self.clock, self.v.copy(), self.phi.copy(), self.di.copy(), self.state.copy())

    def _flush_events(self):
        k = int(self._n_ev[0])
        if k:
            self._event_chunks.append(tuple(a[:k].copy() for a in self._ev))
        self._n_ev[0] = 0

    def _tables_args(self):
        return (self.tis, self.di, self.apd_ptr, self.apd_x, self.apd_y, self.cv_ptr, self.cv_x,
                self.cv_y, self.ratio)

    def _window(self, only_stimuli: bool) -> int:
        n = _window(
            self.clock, self.config.dt, self.front, self.next_stim, self.stim_times, self.stim_ptr,
            self.stim_nodes, self.nodes, self.tris, self.fibers, self.cond, self.blocked,
            self.adjacency.tri_ptr, self.adjacency.tri_idx, self.adjacency.nbr_ptr,
            self.adjacency.nbr_idx, *self._tables_args(), self.state, self.v, self.phi, self.apd,
            self.since, self.keys, self.ids, self.pos, self.size, *self._ev, self._n_ev,
            only_stimuli,
        )
        self._flush_events()
        return int(n)

    def _open_due_blocks(self):
        for i, (block, _) in enumerate(self.blocks):
            if not self.block_open[i] and block.t_open <= self.clock + 1e-9:
                open_block_line(self, block)

    def _stimuli_due(self) -> bool:
        i = int(self.next_stim[0])
        return i < len(self.stim_times) and self.stim_times[i] < self.clock + self.config.dt


def init_engine(mesh: Mesh, adjacency: Adjacency | None, config: EngineConfig, stimuli=(),
                blocks=()) -> Engine:
    """All non-scar nodes Far with phi = inf, v = 0, DI = inf; clock at the first stimulus."""
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    return Engine(mesh, adjacency, config, stimuli, blocks)


def apply_stimuli(engine: Engine) -> int:
    """Deliver every stimulus due in [t, t + dt); returns the number of nodes activated.

    Stimulated nodes that are Accepted (active or refractory) are skipped.
    """
    return engine._window(only_stimuli=True)


def directional_metric(engine: Engine, target: int, triangles) -> list:
    """Inverse metric used for updating ``target`` through each triangle, or None
    where the triangle does not conduct towards it."""
    e = engine
    k = e.tis[target]
    if k < 0 or e.v[target] == 1:
        # scar, or an active node that nothing may re-excite until it repolarises
        return [None for _ in triangles]
    cv_l = float(np.interp(min(e.di[target], e.cv_x[e.cv_ptr[k + 1] - 1]),
                           e.cv_x[e.cv_ptr[k]:e.cv_ptr[k + 1]], e.cv_y[e.cv_ptr[k]:e.cv_ptr[k + 1]])) / 1000.0
    cv_t = e.ratio[k] * cv_l
    out = []
    for t in triangles:
        t = int(t)
        tri = e.tris[t]
        if not e.cond[t] or e.blocked[t] > 0 or cv_t <= 0:
            out.append(None)
            continue
        if any(y != target and _is_wall(y, target, e.state, e.v, e.phi, e.since) for y in tri):
            out.append(None)
            continue
        M = np.empty((e.mesh.dim, e.mesh.dim))
        inverse_metric_into(cv_l, cv_t, e.fibers[t], M)
        out.append(M)
    return out


def open_block_line(engine: Engine, block: BlockLine) -> int:
    """Make the block's triangles conductive and re-seed nodes waiting beside it.

    Returns the number of (re)tagged Considered updates.
    """
    e = engine
    for i, (b, tri) in enumerate(e.blocks):
        if b is block:
            if e.block_open[i]:
                return 0
            e.block_open[i] = True
            e.blocked[tri] -= 1
            opened = tri[e.blocked[tri] == 0]
            return int(_reseed(opened, e.clock, e.nodes, e.tris, e.fibers, e.cond, e.blocked,
                               e.tis, e.di, e.cv_ptr, e.cv_x, e.cv_y, e.ratio, e.state, e.v,
                               e.phi, e.keys, e.ids, e.pos, e.size))
    raise EngineError("block line is not part of this engine")


def step(engine: Engine) -> None:
    """Advance the engine by one time step."""
    e = engine
    e._open_due_blocks()
    e._window(only_stimuli=False)
    e.n_steps += 1
    t_new = e.t0 + e.n_steps * e.config.dt
    _end_of_step(t_new, e.config.dt, e.tis, e.di_min, e.state, e.v, e.phi, e.apd, e.di, e.since,
                 *e._ev, e._n_ev)
    e._flush_events()
    e.clock = t_new


def _on_cadence(t: float, every: float) -> bool:
    k = round(t / every)
    return k >= 1 and abs(k * every - t) <= 1e-9 * max(1.0, abs(t))


def run(engine: Engine, on_snapshot=None, keep: bool = True) -> SnapshotSeries:
    """Step until the clock reaches T, taking snapshots at multiples of the cadence.

    The final state is always captured, even when T is not on the cadence.

    ``on_snapshot`` is called with each snapshot as it is taken; with
    ``keep=False`` snapshots are not accumulated in memory.
    """
    e = engine
    series = SnapshotSeries()
    while e.clock < e.config.t_end - 1e-9:
        step(e)
        last = e.clock >= e.config.t_end - 1e-9
        if last or _on_cadence(e.clock, e.config.snapshot_every):
            snap = e.snapshot()
            if on_snapshot is not None:
                on_snapshot(snap)
            if keep:
                series.snapshots.append(snap)
    series.events = e.events
    return series


def flat_tables(tissue_ids, apd: float, cv: float, di_min: float = 0.0, ratio: float = 1.0) -> dict:
    return {int(t): flat_table(int(t), apd, cv, di_min, ratio) for t in tissue_ids}


__all__ = [
    "ACCEPTED", "ACTIVATION", "BlockLine", "CONSIDERED", "Engine", "EngineConfig", "EngineError",
    "EventLog", "FAR", "INERT", "REEXCITABLE", "REPOLARIZATION", "RestitutionTable", "Snapshot",
    "SnapshotSeries", "StimulusEvent", "apply_stimuli", "directional_metric", "flat_tables",
    "init_engine", "open_block_line", "run", "step",
]
