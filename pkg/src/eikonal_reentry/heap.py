"""Indexed binary min-heap keyed by (time, node id).

The numba functions operate on plain arrays so the marching kernels can use
them directly; :class:`WavefrontHeap` wraps the same functions for Python
callers.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, inline="always")
def _less(keys, ids, i, j):
    return keys[i] < keys[j] or (keys[i] == keys[j] and ids[i] < ids[j])


@nb.njit(cache=True)
def _swap(keys, ids, pos, i, j):
    keys[i], keys[j] = keys[j], keys[i]
    ids[i], ids[j] = ids[j], ids[i]
    pos[ids[i]] = i
    pos[ids[j]] = j


@nb.njit(cache=True)
def _sift_up(keys, ids, pos, i):
    while i > 0:
        parent = (i - 1) >> 1
        if _less(keys, ids, i, parent):
            _swap(keys, ids, pos, i, parent)
            i = parent
        else:
            break


@nb.njit(cache=True)
def _sift_down(keys, ids, pos, i, size):
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and _less(keys, ids, right, left):
            child = right
        if _less(keys, ids, child, i):
            _swap(keys, ids, pos, i, child)
            i = child
        else:
            break


@nb.njit(cache=True)
def heap_push(keys, ids, pos, size, node, key):
    """Insert ``node``; ``size`` is a one-element array holding the heap size."""
    n = size[0]
    keys[n] = key
    ids[n] = node
    pos[node] = n
    size[0] = n + 1
    _sift_up(keys, ids, pos, n)


@nb.njit(cache=True)
def heap_decrease(keys, ids, pos, node, key):
    i = pos[node]
    keys[i] = key
    _sift_up(keys, ids, pos, i)


@nb.njit(cache=True)
def heap_pop(keys, ids, pos, size):
    node = ids[0]
    key = keys[0]
    last = size[0] - 1
    size[0] = last
    pos[node] = -1
    if last > 0:
        keys[0] = keys[last]
        ids[0] = ids[last]
        pos[ids[0]] = 0
        _sift_down(keys, ids, pos, 0, last)
    return node, key


@nb.njit(cache=True)
def heap_remove(keys, ids, pos, size, node):
    i = pos[node]
    last = size[0] - 1
    size[0] = last
    pos[node] = -1
    if i != last:
        keys[i] = keys[last]
        ids[i] = ids[last]
        pos[ids[i]] = i
        _sift_down(keys, ids, pos, i, last)
        _sift_up(keys, ids, pos, i)


class WavefrontHeap:
    """Min-heap of temporary arrival times with one live entry per node."""

    def __init__(self, n_nodes: int):
        self.keys = np.empty(n_nodes, dtype=np.float64)
        self.ids = np.empty(n_nodes, dtype=np.int64)
        self.pos = np.full(n_nodes, -1, dtype=np.int64)
        self.size = np.zeros(1, dtype=np.int64)

    def __len__(self):
        return int(self.size[0])

    def __contains__(self, node):
        return self.pos[node] >= 0

    def key(self, node) -> float:
        i = self.pos[node]
        if i < 0:
            raise KeyError(node)
        return float(self.keys[i])

    def push(self, node: int, key: float) -> None:
        if node in self:
            raise KeyError(f"node {node} already in heap")
        heap_push(self.keys, self.ids, self.pos, self.size, node, key)

    def decrease_key(self, node: int, key: float) -> None:
        if node not in self:
            raise KeyError(node)
        if key > self.key(node):
            raise ValueError("decrease_key called with a larger key")
        heap_decrease(self.keys, self.ids, self.pos, node, key)

    def push_or_decrease(self, node: int, key: float) -> bool:
        """Insert, or lower the key if ``key`` improves it. Returns True if changed."""
        if node not in self:
            self.push(node, key)
            return True
        if key < self.key(node):
            heap_decrease(self.keys, self.ids, self.pos, node, key)
            return True
        return False

    def peek(self):
        if not len(self):
            raise IndexError("peek on empty heap")
        return int(self.ids[0]), float(self.keys[0])

    def pop(self):
        if not len(self):
            raise IndexError("pop from empty heap")
        node, key = heap_pop(self.keys, self.ids, self.pos, self.size)
        return int(node), float(key)

    def remove(self, node: int) -> None:
        if node not in self:
            raise KeyError(node)
        heap_remove(self.keys, self.ids, self.pos, self.size, node)
