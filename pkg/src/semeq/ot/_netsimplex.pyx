# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled network simplex for the dense transportation problem.

The spanning tree is stored as parent / predecessor-arc arrays plus
sibling-linked child lists. After a pivot only the re-hung subtree has its
potentials shifted; the join node is found by marking ancestors, so no depth
labels are kept. The leaving arc follows the strongly-feasible-tree rule, so
degenerate pivots cannot cycle, and a solved tree stays primal feasible for
any new cost matrix with the same marginals (warm start).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double INF = float("inf")


cdef class TransportSimplex:
    """Exact solver for min <gamma, C> over couplings of (mu, nu).

    Parameters
    ----------
    mu, nu : array-like
        Non-negative marginals with equal total mass.

    Notes
    -----
    Repeated calls to :meth:`solve` start from the previous optimal basis.
    """

    cdef public int nx, ny
    cdef Py_ssize_t n_arcs, n_nodes, root
    cdef double[::1] supply
    cdef double[::1] flow
    cdef signed char[::1] in_tree
    cdef Py_ssize_t[::1] parent, pred, first_child, next_sib, prev_sib, stack, mark
    cdef signed char[::1] pred_up
    cdef double[::1] pi
    cdef double[::1] cost
    cdef double art_cost, eps
    cdef Py_ssize_t stamp
    cdef public long n_pivots
    cdef public double objective

    def __init__(self, mu, nu):
        mu = np.ascontiguousarray(mu, dtype=np.float64).ravel()
        nu = np.ascontiguousarray(nu, dtype=np.float64).ravel()
        self.nx = mu.shape[0]
        self.ny = nu.shape[0]
        self.n_arcs = <Py_ssize_t>self.nx * self.ny
        self.n_nodes = self.nx + self.ny
        self.root = self.n_nodes
        self.supply = np.concatenate([mu, -nu])
        self.flow = np.zeros(self.n_arcs + self.n_nodes, dtype=np.float64)
        self.in_tree = np.zeros(self.n_arcs + self.n_nodes, dtype=np.int8)
        self.parent = np.full(self.n_nodes + 1, -1, dtype=np.intp)
        self.pred = np.full(self.n_nodes + 1, -1, dtype=np.intp)
        self.first_child = np.full(self.n_nodes + 1, -1, dtype=np.intp)
        self.next_sib = np.full(self.n_nodes + 1, -1, dtype=np.intp)
        self.prev_sib = np.full(self.n_nodes + 1, -1, dtype=np.intp)
        self.stack = np.empty(self.n_nodes + 1, dtype=np.intp)
        self.mark = np.zeros(self.n_nodes + 1, dtype=np.intp)
        self.pred_up = np.zeros(self.n_nodes + 1, dtype=np.int8)
        self.pi = np.zeros(self.n_nodes + 1, dtype=np.float64)
        self.stamp = 0
        self.n_pivots = 0
        self.objective = 0.0
        self._init_tree()

    cdef void _init_tree(self):
        cdef Py_ssize_t u, e
        for u in range(self.n_nodes):
            e = self.n_arcs + u
            self._link(u, self.root)
            self.pred[u] = e
            self.in_tree[e] = 1
            if self.supply[u] >= 0:
                self.pred_up[u] = 1
                self.flow[e] = self.supply[u]
            else:
                self.pred_up[u] = 0
                self.flow[e] = -self.supply[u]

    cdef inline void _link(self, Py_ssize_t w, Py_ssize_t p):
        cdef Py_ssize_t f = self.first_child[p]
        self.parent[w] = p
        self.prev_sib[w] = -1
        self.next_sib[w] = f
        if f >= 0:
            self.prev_sib[f] = w
        self.first_child[p] = w

    cdef inline void _unlink(self, Py_ssize_t w):
        cdef Py_ssize_t p = self.parent[w]
        if self.prev_sib[w] >= 0:
            self.next_sib[self.prev_sib[w]] = self.next_sib[w]
        else:
            self.first_child[p] = self.next_sib[w]
        if self.next_sib[w] >= 0:
            self.prev_sib[self.next_sib[w]] = self.prev_sib[w]

    cdef inline double _arc_cost(self, Py_ssize_t e):
        if e < self.n_arcs:
            return self.cost[e]
        # artificial arcs into the root are free, out of the root are penalized
        if self.supply[e - self.n_arcs] >= 0:
            return 0.0
        return self.art_cost

    cdef inline Py_ssize_t _arc_source(self, Py_ssize_t e):
        if e < self.n_arcs:
            return e // self.ny
        if self.supply[e - self.n_arcs] >= 0:
            return e - self.n_arcs
        return self.root

    cdef inline double _tree_potential(self, Py_ssize_t w):
        cdef double c = self._arc_cost(self.pred[w])
        if self.pred_up[w]:
            return self.pi[self.parent[w]] - c
        return self.pi[self.parent[w]] + c

    cdef void _rebuild_potentials(self):
        cdef Py_ssize_t top = 0, w, ch
        self.pi[self.root] = 0.0
        self.stack[top] = self.root
        top += 1
        while top > 0:
            top -= 1
            w = self.stack[top]
            ch = self.first_child[w]
            while ch >= 0:
                self.pi[ch] = self._tree_potential(ch)
                self.stack[top] = ch
                top += 1
                ch = self.next_sib[ch]

    cdef void _shift_subtree(self, Py_ssize_t r, double sigma):
        cdef Py_ssize_t top = 0, w, ch
        self.stack[top] = r
        top += 1
        while top > 0:
            top -= 1
            w = self.stack[top]
            self.pi[w] += sigma
            ch = self.first_child[w]
            while ch >= 0:
                self.stack[top] = ch
                top += 1
                ch = self.next_sib[ch]

    def solve(self, cost, long max_pivots=0):
        """Solve for ``cost`` (shape ``(nx, ny)``) and return the optimal plan."""
        if np.shape(cost) != (self.nx, self.ny):
            raise ValueError("cost matrix shape does not match the marginals")
        cdef cnp.ndarray[cnp.float64_t, ndim=1] c_arr = np.ascontiguousarray(
            cost, dtype=np.float64).ravel()
        cdef double cmin = c_arr.min() if self.n_arcs else 0.0
        cdef double cmax
        # balanced problem: a constant shift leaves the argmin unchanged
        c_arr = c_arr - cmin
        cmax = c_arr.max() if self.n_arcs else 0.0
        self.cost = c_arr
        self.art_cost = (cmax + 1.0) * (self.n_nodes + 1)
        self.eps = 1e-12 * (cmax + 1.0)
        if max_pivots <= 0:
            max_pivots = 100 * (self.n_arcs + self.n_nodes) + 1000
        self._rebuild_potentials()

        cdef Py_ssize_t block = <Py_ssize_t>sqrt(<double>self.n_arcs)
        if block < 10:
            block = 10
        cdef Py_ssize_t next_arc = 0, e, in_arc, cnt, k
        cdef Py_ssize_t i, j, u, a, b, join, first, second, w, u_out, u_in, v_in
        cdef Py_ssize_t prev, prev_arc, nxt, nxt_arc, out_arc, result
        cdef double rc, min_rc, delta, d, sigma
        cdef long pivots = 0

        while True:
            # block search pricing
            in_arc = -1
            min_rc = -self.eps
            cnt = block
            e = next_arc
            i = e // self.ny
            j = e - i * self.ny
            for k in range(self.n_arcs):
                if not self.in_tree[e]:
                    rc = self.cost[e] + self.pi[i] - self.pi[self.nx + j]
                    if rc < min_rc:
                        min_rc = rc
                        in_arc = e
                e += 1
                j += 1
                if j == self.ny:
                    j = 0
                    i += 1
                    if e == self.n_arcs:
                        e = 0
                        i = 0
                cnt -= 1
                if cnt == 0:
                    if in_arc >= 0:
                        break
                    cnt = block
            if in_arc < 0:
                break
            next_arc = e
            pivots += 1
            if pivots > max_pivots:
                raise RuntimeError("network simplex exceeded the pivot limit")

            first = in_arc // self.ny
            second = self.nx + (in_arc - first * self.ny)
            self.stamp += 1
            a = first
            while a >= 0:
                self.mark[a] = self.stamp
                a = self.parent[a]
            b = second
            while self.mark[b] != self.stamp:
                b = self.parent[b]
            join = b

            # leaving arc: last blocking arc on the cycle oriented from join
            delta = INF
            u_out = -1
            result = 0
            w = first
            while w != join:
                if self.pred_up[w]:
                    d = self.flow[self.pred[w]]
                    if d < delta:
                        delta = d
                        u_out = w
                        result = 1
                w = self.parent[w]
            w = second
            while w != join:
                if not self.pred_up[w]:
                    d = self.flow[self.pred[w]]
                    if d <= delta:
                        delta = d
                        u_out = w
                        result = 2
                w = self.parent[w]
            if result == 0:
                raise RuntimeError("unbounded transportation problem")

            if delta > 0:
                self.flow[in_arc] += delta
                w = first
                while w != join:
                    if self.pred_up[w]:
                        self.flow[self.pred[w]] -= delta
                    else:
                        self.flow[self.pred[w]] += delta
                    w = self.parent[w]
                w = second
                while w != join:
                    if self.pred_up[w]:
                        self.flow[self.pred[w]] += delta
                    else:
                        self.flow[self.pred[w]] -= delta
                    w = self.parent[w]

            out_arc = self.pred[u_out]
            if result == 1:
                u_in = first
                v_in = second
            else:
                u_in = second
                v_in = first
            # re-hang the path u_in .. u_out below v_in
            prev = v_in
            prev_arc = in_arc
            w = u_in
            while True:
                nxt = self.parent[w]
                nxt_arc = self.pred[w]
                self._unlink(w)
                self._link(w, prev)
                self.pred[w] = prev_arc
                self.pred_up[w] = 1 if self._arc_source(prev_arc) == w else 0
                if w == u_out:
                    break
                prev = w
                prev_arc = nxt_arc
                w = nxt
            self.in_tree[in_arc] = 1
            self.in_tree[out_arc] = 0
            sigma = self._tree_potential(u_in) - self.pi[u_in]
            if sigma != 0.0:
                self._shift_subtree(u_in, sigma)

        self.n_pivots += pivots
        for u in range(self.n_nodes):
            if self.flow[self.n_arcs + u] > 1e-9:
                raise ValueError("infeasible marginals")

        gamma = np.asarray(self.flow[:self.n_arcs]).copy()
        np.maximum(gamma, 0.0, out=gamma)
        gamma = gamma.reshape(self.nx, self.ny)
        self.objective = float(np.dot(gamma.ravel(), np.asarray(cost, dtype=np.float64).ravel()))
        return gamma

    @property
    def potentials(self):
        """Dual potentials of the last solve (shifted cost frame)."""
        return np.asarray(self.pi[:self.n_nodes]).copy()
