"""Pure-python/numpy sum tree, fallback for the compiled kernel.

Binary heap over a power-of-two leaf array.  Leaf i lives at tree[cap2 + i];
internal node j holds tree[2j] + tree[2j+1].  The descent in `find` is
vectorized across the query batch, one level per iteration.
"""

import numpy as np


class SumTree:
    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        cap2 = 1
        while cap2 < capacity:
            cap2 *= 2
        self._cap2 = cap2
        self._tree = np.zeros(2 * cap2, dtype=np.float64)

    def set_many(self, indices: np.ndarray, values: np.ndarray) -> None:
        """Assign values to leaves and repair all ancestor sums."""
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if idx.shape != val.shape:
            raise ValueError("indices and values must have matching shapes")
        if idx.size == 0:
            return
        if idx.min() < 0 or idx.max() >= self.capacity:
            raise IndexError("leaf index out of range")
        nodes = idx + self._cap2
        self._tree[nodes] = val
        # repair ancestors level by level; dedupe so each node is summed once
        parents = np.unique(nodes // 2)
        while parents.size and parents[0] >= 1:
            self._tree[parents] = self._tree[2 * parents] + self._tree[2 * parents + 1]
            parents = np.unique(parents // 2)
            if parents[0] == 0:
                break

    def values(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        return self._tree[idx + self._cap2].copy()

    @property
    def leaves(self) -> np.ndarray:
        """Read-only view of all leaf values (length == capacity)."""
        return self._tree[self._cap2 : self._cap2 + self.capacity]

    def total(self) -> float:
        return float(self._tree[1])

    def find(self, prefix: np.ndarray) -> np.ndarray:
        """Map prefix masses to leaf indices: smallest i with cumsum(i) > prefix."""
        p = np.array(prefix, dtype=np.float64, copy=True)
        node = np.ones(p.shape, dtype=np.int64)
        while node[0] < self._cap2:
            left = 2 * node
            left_sum = self._tree[left]
            go_right = p >= left_sum
            p = np.where(go_right, p - left_sum, p)
            node = np.where(go_right, left + 1, left)
        leaf = node - self._cap2
        return np.minimum(leaf, self.capacity - 1)
