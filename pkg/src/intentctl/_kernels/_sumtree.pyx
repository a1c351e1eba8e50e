# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sum tree. Same interface as sumtree_py.SumTree."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef class SumTree:
    cdef readonly long capacity
    cdef long _cap2
    cdef double[::1] _tree
    cdef object _tree_arr

    def __init__(self, capacity):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        cdef long cap2 = 1
        while cap2 < capacity:
            cap2 *= 2
        self._cap2 = cap2
        self._tree_arr = np.zeros(2 * cap2, dtype=np.float64)
        self._tree = self._tree_arr

    def set_many(self, indices, values):
        cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.ascontiguousarray(indices, dtype=np.int64).ravel()
        cdef cnp.ndarray[cnp.float64_t, ndim=1] val = np.ascontiguousarray(values, dtype=np.float64).ravel()
        if idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values must have matching shapes")
        cdef long n = idx.shape[0]
        if n == 0:
            return
        cdef double[::1] tree = self._tree
        cdef long cap2 = self._cap2
        cdef long i, node
        for i in range(n):
            if idx[i] < 0 or idx[i] >= self.capacity:
                raise IndexError("leaf index out of range")
        for i in range(n):
            node = idx[i] + cap2
            tree[node] = val[i]
            node >>= 1
            while node >= 1:
                tree[node] = tree[2 * node] + tree[2 * node + 1]
                node >>= 1

    def values(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return self._tree_arr[idx + self._cap2].copy()

    @property
    def leaves(self):
        return self._tree_arr[self._cap2 : self._cap2 + self.capacity]

    def total(self):
        return float(self._tree[1])

    def find(self, prefix):
        cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.array(prefix, dtype=np.float64).ravel()
        cdef long n = p.shape[0]
        cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
        cdef double[::1] tree = self._tree
        cdef long cap2 = self._cap2
        cdef long cap = self.capacity
        cdef long i, node
        cdef double mass, left_sum
        for i in range(n):
            mass = p[i]
            node = 1
            while node < cap2:
                left_sum = tree[2 * node]
                if mass < left_sum:
                    node = 2 * node
                else:
                    mass -= left_sum
                    node = 2 * node + 1
            node -= cap2
            if node > cap - 1:
                node = cap - 1
            out[i] = node
        shape = np.asarray(prefix).shape
        return out.reshape(shape)
