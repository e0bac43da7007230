"""Pure-Python network simplex, used when the compiled kernel is unavailable.

Same algorithm and pivot rules as ``_netsimplex.pyx``; block pricing is
vectorized with numpy, tree maintenance runs in Python.
"""

import math

import numpy as np


class TransportSimplex:
    """Exact solver for min <gamma, C> over couplings of (mu, nu)."""

    def __init__(self, mu, nu):
        mu = np.asarray(mu, dtype=np.float64).ravel()
        nu = np.asarray(nu, dtype=np.float64).ravel()
        self.nx = mu.shape[0]
        self.ny = nu.shape[0]
        self.n_arcs = self.nx * self.ny
        self.n_nodes = self.nx + self.ny
        self.root = self.n_nodes
        self.supply = np.concatenate([mu, -nu])
        self.flow = np.zeros(self.n_arcs + self.n_nodes)
        self.in_tree = np.zeros(self.n_arcs + self.n_nodes, dtype=bool)
        self.parent = [self.root] * self.n_nodes + [-1]
        self.pred = [self.n_arcs + u for u in range(self.n_nodes)] + [-1]
        self.pred_up = [bool(s >= 0) for s in self.supply] + [False]
        self.depth = [0] * (self.n_nodes + 1)
        self.pi = [0.0] * (self.n_nodes + 1)
        self.in_tree[self.n_arcs:] = True
        self.flow[self.n_arcs:] = np.abs(self.supply)
        self.n_pivots = 0
        self.objective = 0.0
        self._cost = None

    def _arc_cost(self, e):
        if e < self.n_arcs:
            return self._cost[e]
        if self.supply[e - self.n_arcs] >= 0:
            return 0.0
        return self._art_cost

    def _arc_source(self, e):
        if e < self.n_arcs:
            return e // self.ny
        if self.supply[e - self.n_arcs] >= 0:
            return e - self.n_arcs
        return self.root

    def _rebuild_potentials(self):
        parent, pred, up = self.parent, self.pred, self.pred_up
        depth, pi = self.depth, self.pi
        done = [False] * (self.n_nodes + 1)
        done[self.root] = True
        depth[self.root] = 0
        pi[self.root] = 0.0
        for v in range(self.n_nodes):
            if done[v]:
                continue
            stack = []
            w = v
            while not done[w]:
                stack.append(w)
                w = parent[w]
            while stack:
                w = stack.pop()
                p = parent[w]
                depth[w] = depth[p] + 1
                c = self._arc_cost(pred[w])
                pi[w] = pi[p] - c if up[w] else pi[p] + c
                done[w] = True

    def _price(self, start, block, eps):
        pi = np.asarray(self.pi)
        pi_src = pi[: self.nx]
        pi_dst = pi[self.nx : self.n_nodes]
        n = self.n_arcs
        scanned = 0
        e = start
        while scanned < n:
            stop = min(e + block, n)
            idx = np.arange(e, stop)
            rc = self._cost[e:stop] + pi_src[idx // self.ny] - pi_dst[idx % self.ny]
            rc[self.in_tree[e:stop]] = 0.0
            k = int(np.argmin(rc))
            scanned += stop - e
            if rc[k] < -eps:
                return e + k, stop % n
            e = stop % n
        return -1, start

    def solve(self, cost, max_pivots=0):
        """Solve for ``cost`` (shape ``(nx, ny)``) and return the optimal plan."""
        raw = np.asarray(cost, dtype=np.float64)
        if raw.shape != (self.nx, self.ny):
            raise ValueError("cost matrix shape does not match the marginals")
        c = np.ascontiguousarray(raw).ravel()
        c = c - c.min()
        cmax = float(c.max())
        self._cost = c
        self._art_cost = (cmax + 1.0) * (self.n_nodes + 1)
        eps = 1e-12 * (cmax + 1.0)
        if max_pivots <= 0:
            max_pivots = 100 * (self.n_arcs + self.n_nodes) + 1000
        self._rebuild_potentials()
        block = max(10, int(math.sqrt(self.n_arcs)))
        parent, pred, up, depth, flow = (
            self.parent, self.pred, self.pred_up, self.depth, self.flow)

        next_arc = 0
        pivots = 0
        while True:
            in_arc, next_arc = self._price(next_arc, block, eps)
            if in_arc < 0:
                break
            pivots += 1
            if pivots > max_pivots:
                raise RuntimeError("network simplex exceeded the pivot limit")

            first = in_arc // self.ny
            second = self.nx + in_arc % self.ny
            a, b = first, second
            while a != b:
                if depth[a] > depth[b]:
                    a = parent[a]
                elif depth[b] > depth[a]:
                    b = parent[b]
                else:
                    a, b = parent[a], parent[b]
            join = a

            delta = math.inf
            u_out = -1
            result = 0
            w = first
            while w != join:
                if up[w] and flow[pred[w]] < delta:
                    delta = flow[pred[w]]
                    u_out, result = w, 1
                w = parent[w]
            w = second
            while w != join:
                if not up[w] and flow[pred[w]] <= delta:
                    delta = flow[pred[w]]
                    u_out, result = w, 2
                w = parent[w]
            if result == 0:
                raise RuntimeError("unbounded transportation problem")

            if delta > 0:
                flow[in_arc] += delta
                w = first
                while w != join:
                    flow[pred[w]] += -delta if up[w] else delta
                    w = parent[w]
                w = second
                while w != join:
                    flow[pred[w]] += delta if up[w] else -delta
                    w = parent[w]

            out_arc = pred[u_out]
            u_in, v_in = (first, second) if result == 1 else (second, first)
            prev, prev_arc, w = v_in, in_arc, u_in
            while True:
                nxt, nxt_arc = parent[w], pred[w]
                parent[w] = prev
                pred[w] = prev_arc
                up[w] = self._arc_source(prev_arc) == w
                if w == u_out:
                    break
                prev, prev_arc, w = w, nxt_arc, nxt
            self.in_tree[in_arc] = True
            self.in_tree[out_arc] = False
            self._rebuild_potentials()

        self.n_pivots += pivots
        if np.any(flow[self.n_arcs :] > 1e-9):
            raise ValueError("infeasible marginals")
        gamma = np.maximum(flow[: self.n_arcs], 0.0).reshape(self.nx, self.ny)
        self.objective = float(np.sum(gamma * raw))
        return gamma

    @property
    def potentials(self):
        """Dual potentials of the last solve (shifted cost frame)."""
        return np.asarray(self.pi[: self.n_nodes])
