"""Exact earth mover's distance between weighted point clouds.

The main solver is a network simplex specialized to the dense balanced
transportation problem (complete bipartite graph, real-valued supplies).
``emd_lp_oracle`` solves the identical linear program through
``scipy.optimize.linprog`` and exists purely to cross-check the simplex;
``sinkhorn`` is an entropic approximation for large clouds and is never a
substitute in exactness tests.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .core import LayoutElement
from .errors import EmptySideError, NumericalError, ValidationError

__all__ = [
    "PointMass",
    "FlowPlan",
    "rasterize",
    "emd",
    "emd_lp_oracle",
    "sinkhorn",
    "solve_transport",
    "lp_transport",
]

_WEIGHT_TOL = 1e-9
# seeded degeneracy-breaking perturbation, small enough to stay far below
# the 1e-6 exactness tolerance yet large enough to separate equal supplies
_PERTURB = 1e-13


@dataclass(frozen=True)
class PointMass:
    """Weighted 2-d point cloud; weights are a normalized density."""

    points: np.ndarray  # (k, 2) float64
    weights: np.ndarray  # (k,) float64

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        wts = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, 2)
            wts = wts.reshape(0)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError(f"points must be (k, 2), got {pts.shape}")
        if wts.shape != (pts.shape[0],):
            raise ValidationError("one weight per point required")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(wts)):
            raise ValidationError("non-finite point mass data")
        if np.any(wts < 0):
            raise ValidationError("negative weights")
        if len(wts) and abs(wts.sum() - 1.0) > _WEIGHT_TOL:
            raise ValidationError(f"weights sum to {wts.sum()}, expected 1")
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def empty(cls) -> "PointMass":
        return cls(np.zeros((0, 2)), np.zeros(0))

    @classmethod
    def uniform(cls, points) -> "PointMass":
        points = np.asarray(points, dtype=np.float64)
        k = len(points)
        if k == 0:
            return cls.empty()
        return cls(points, np.full(k, 1.0 / k))


@dataclass(frozen=True)
class FlowPlan:
    """Sparse optimal transport plan: entries ``(i, j, f_ij)`` plus objective."""

    sources: np.ndarray
    targets: np.ndarray
    flows: np.ndarray
    objective: float

    def validate(self, a: PointMass, b: PointMass, tol: float = 1e-9) -> None:
        if np.any(self.flows < -tol):
            raise NumericalError("negative flow in plan")
        row = np.bincount(self.sources, weights=self.flows, minlength=len(a))
        col = np.bincount(self.targets, weights=self.flows, minlength=len(b))
        if np.any(row > a.weights + tol) or np.any(col > b.weights + tol):
            raise NumericalError("plan exceeds marginal weights")
        if abs(self.flows.sum() - 1.0) > tol:
            raise NumericalError(f"total flow {self.flows.sum()} != 1")


def rasterize(boxes, page, grid: int = 64) -> PointMass:
    """Uniform density over the union of boxes, sampled on a grid lattice.

    Lattice sites are the centers of a ``grid x grid`` subdivision of the
    page; a site belongs to the union when it falls strictly inside at least
    one box. Coordinates are returned normalized to the unit square. Boxes
    too thin to trap a lattice site contribute nothing.
    """
    if grid < 2:
        raise ValidationError("grid must be at least 2")
    pw, ph = float(page[0]), float(page[1])
    xs = (np.arange(grid) + 0.5) * (pw / grid)
    ys = (np.arange(grid) + 0.5) * (ph / grid)
    covered = np.zeros((grid, grid), dtype=bool)
    for box in boxes:
        if isinstance(box, LayoutElement):
            x, y, w, h = box.x, box.y, box.w, box.h
        else:
            x, y, w, h = box
        if w <= 0 or h <= 0:
            continue
        in_x = (xs > x) & (xs < x + w)
        in_y = (ys > y) & (ys < y + h)
        covered |= np.outer(in_x, in_y)
    idx = np.argwhere(covered)
    if len(idx) == 0:
        return PointMass.empty()
    pts = np.column_stack((xs[idx[:, 0]] / pw, ys[idx[:, 1]] / ph))
    return PointMass(pts, np.full(len(pts), 1.0 / len(pts)))


# ---------------------------------------------------------------------------
# network simplex for the dense transportation problem


def hilbert_order(points, bits: int = 10) -> np.ndarray:
    """Sort order of 2-d points along a Hilbert curve.

    Locality-preserving 1-d order; used to seed the simplex with a
    near-monotone coupling. Points are quantized to a 2^bits lattice for
    ordering purposes only.
    """
    pts = np.asarray(points, dtype=np.float64)
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span == 0] = 1.0
    side = 1 << bits
    x = np.clip(((pts[:, 0] - lo[0]) / span[0] * side).astype(np.int64), 0, side - 1)
    y = np.clip(((pts[:, 1] - lo[1]) / span[1] * side).astype(np.int64), 0, side - 1)
    d = np.zeros(len(pts), dtype=np.int64)
    s = side >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        # rotate the quadrant so the curve stays contiguous
        flip = (ry == 0) & (rx == 1)
        x[flip] = s - 1 - x[flip]
        y[flip] = s - 1 - y[flip]
        swap = ry == 0
        x_new = np.where(swap, y, x)
        y = np.where(swap, x, y)
        x = x_new
        s >>= 1
    return np.argsort(d, kind="stable")


def _greedy_init(cost, a, b):
    """Matrix-minimum initial basis: allocate in global cost order.

    Every allocation saturates one row or column, so the allocated cells
    can never close a cycle; with generic (perturbed) supplies the result
    is a spanning-tree basis of exactly n + m - 1 arcs. Near-optimal for
    geometric point clouds, which keeps the pivot count low.
    """
    n, m = cost.shape
    ra = a.copy()
    rb = b.copy()
    order = np.argsort(cost, axis=None, kind="stable")
    arc_i = np.empty(n + m - 1, dtype=np.int64)
    arc_j = np.empty(n + m - 1, dtype=np.int64)
    flow = np.empty(n + m - 1, dtype=np.float64)
    alive_row = np.ones(n, dtype=bool)
    alive_col = np.ones(m, dtype=bool)
    k = 0
    target = n + m - 1
    for start in range(0, len(order), 4096):
        chunk = order[start : start + 4096]
        ii = chunk // m
        jj = chunk - ii * m
        keep = alive_row[ii] & alive_col[jj]
        for i, j in zip(ii[keep], jj[keep]):
            if not (alive_row[i] and alive_col[j]):
                continue
            if k == target - 1:
                # last allocation absorbs the float residual
                theta = max(ra[i], 0.0)
            else:
                theta = min(ra[i], rb[j])
            arc_i[k] = i
            arc_j[k] = j
            flow[k] = theta
            k += 1
            ra[i] -= theta
            rb[j] -= theta
            if k == target:
                return arc_i, arc_j, flow
            # saturate exactly one side (ties broken toward the row)
            if ra[i] <= rb[j]:
                alive_row[i] = False
            else:
                alive_col[j] = False
    # simultaneous exhaustion starved the stream; caller falls back
    return None


def _northwest_corner(a, b, order_a, order_b):
    """Initial basic feasible solution along the given orderings.

    Returns parallel arrays (arc_i, arc_j, flow) with exactly n + m - 1 arcs.
    """
    n, m = len(a), len(b)
    ra = a[order_a].copy()
    rb = b[order_b].copy()
    arc_i = np.empty(n + m - 1, dtype=np.int64)
    arc_j = np.empty(n + m - 1, dtype=np.int64)
    flow = np.empty(n + m - 1, dtype=np.float64)
    p = q = 0
    for k in range(n + m - 1):
        arc_i[k] = order_a[p]
        arc_j[k] = order_b[q]
        theta = min(ra[p], rb[q])
        if p == n - 1 and q == m - 1:
            theta = max(ra[p], 0.0)  # absorb float residual
        flow[k] = theta
        ra[p] -= theta
        rb[q] -= theta
        # advance exactly one pointer per arc so the basis forms a tree
        if p < n - 1 and (ra[p] <= rb[q] or q == m - 1):
            p += 1
        else:
            q += 1
    return arc_i, arc_j, flow


class _SpanningTree:
    """Basis bookkeeping for the transportation network simplex.

    Nodes 0..n-1 are sources, n..n+m-1 sinks. The basis holds n + m - 1
    arcs in parallel arrays; per-node adjacency sets map to arc slots.
    Pivots run in O(cycle + detached subtree): the leaving arc splits off a
    subtree which is re-rooted at the entering arc's endpoint, and all duals
    inside it shift by the entering arc's reduced cost.
    """

    def __init__(self, n, m, arc_i, arc_j, flow, cost):
        self.n, self.m = n, m
        # python lists: the pivot loops chase pointers item by item, where
        # numpy scalar indexing would dominate the runtime
        self.arc_i = [int(x) for x in arc_i]
        self.arc_j = [int(x) for x in arc_j]
        self.flow = [float(x) for x in flow]
        self.cost = cost
        nn = n + m
        self.adj = [set() for _ in range(nn)]
        for k in range(n + m - 1):
            self.adj[self.arc_i[k]].add(k)
            self.adj[n + self.arc_j[k]].add(k)
        self.parent = [-1] * nn
        self.parent_arc = [-1] * nn
        self.depth = [0] * nn
        self.u = np.zeros(n, dtype=np.float64)
        self.v = np.zeros(m, dtype=np.float64)
        self._init_from_root()

    def _other(self, arc, node):
        i = self.arc_i[arc]
        return self.n + self.arc_j[arc] if node == i else i

    def _init_from_root(self):
        n = self.n
        arc_i, arc_j = self.arc_i, self.arc_j
        parent, parent_arc, depth = self.parent, self.parent_arc, self.depth
        u, v, cost = self.u, self.v, self.cost
        seen = [False] * (n + self.m)
        seen[0] = True
        visited = 1
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for k in self.adj[node]:
                i = arc_i[k]
                nxt = n + arc_j[k] if node == i else i
                if seen[nxt]:
                    continue
                seen[nxt] = True
                visited += 1
                parent[nxt] = node
                parent_arc[nxt] = k
                depth[nxt] = depth[node] + 1
                c = cost[i, arc_j[k]]
                if nxt >= n:
                    v[nxt - n] = c - u[i]
                else:
                    u[nxt] = c - v[arc_j[k]]
                queue.append(nxt)
        if visited != n + self.m:
            raise NumericalError("transport basis is not a spanning tree")

    def pivot(self, ei, ej, reduced_cost):
        """Bring arc (ei, ej) into the basis; returns the flow change."""
        n = self.n
        parent, parent_arc, depth = self.parent, self.parent_arc, self.depth
        arc_i, arc_j, flow, adj = self.arc_i, self.arc_j, self.flow, self.adj
        # walk both endpoints up to the LCA collecting (arc, child) pairs
        x, y = n + ej, ei
        path_x, path_y = [], []
        while depth[x] > depth[y]:
            path_x.append((parent_arc[x], x))
            x = parent[x]
        while depth[y] > depth[x]:
            path_y.append((parent_arc[y], y))
            y = parent[y]
        while x != y:
            path_x.append((parent_arc[x], x))
            x = parent[x]
            path_y.append((parent_arc[y], y))
            y = parent[y]
        # cycle arc order: entering, then from the sink endpoint around to
        # the source endpoint; signs alternate -, +, -, ... after entering
        cycle = path_x + path_y[::-1]
        theta = float("inf")
        leave_pos = -1
        for pos in range(0, len(cycle), 2):
            f = flow[cycle[pos][0]]
            if f < theta:
                theta = f
                leave_pos = pos
        leave_arc, leave_child = cycle[leave_pos]
        for pos, (arc, _child) in enumerate(cycle):
            if pos % 2:
                flow[arc] += theta
            else:
                flow[arc] -= theta

        # entering endpoint inside the detached subtree: the side of the
        # cycle whose upward walk crossed the leaving arc
        e_sub = n + ej if leave_pos < len(path_x) else ei
        e_root = ei if e_sub == n + ej else n + ej

        # splice the entering arc into the leaving arc's slot
        adj[arc_i[leave_arc]].discard(leave_arc)
        adj[n + arc_j[leave_arc]].discard(leave_arc)
        arc_i[leave_arc] = ei
        arc_j[leave_arc] = ej
        flow[leave_arc] = theta
        adj[ei].add(leave_arc)
        adj[n + ej].add(leave_arc)

        # re-root the detached subtree at e_sub: reverse parents along the
        # path from e_sub up to the leaving arc's child
        prev_node, prev_arc = e_root, leave_arc
        node = e_sub
        while True:
            nxt_parent = parent[node]
            nxt_arc = parent_arc[node]
            parent[node] = prev_node
            parent_arc[node] = prev_arc
            if node == leave_child:
                break
            prev_node, prev_arc = node, nxt_arc
            node = nxt_parent

        # refresh depths and shift duals across the subtree
        if e_sub >= n:
            dv, du = reduced_cost, -reduced_cost
        else:
            du, dv = reduced_cost, -reduced_cost
        u, v = self.u, self.v
        stack = [e_sub]
        depth[e_sub] = depth[e_root] + 1
        while stack:
            node = stack.pop()
            if node >= n:
                v[node - n] += dv
            else:
                u[node] += du
            d1 = depth[node] + 1
            pnode = parent[node]
            for k in adj[node]:
                i = arc_i[k]
                nxt = n + arc_j[k] if node == i else i
                if nxt != pnode:
                    depth[nxt] = d1
                    stack.append(nxt)
        return theta


def solve_transport(cost, a, b, order_a=None, order_b=None,
                    opt_tol: float = 1e-11, max_pivots: int | None = None):
    """Exact balanced transport by network simplex.

    ``cost`` is a dense (n, m) matrix; ``a`` and ``b`` are nonnegative
    weights with equal sums. Returns ``(objective, (rows, cols, flows))``.
    Supplies receive a seeded perturbation of absolute size ~1e-13 to break
    degeneracy; the objective shift stays orders of magnitude below solver
    comparison tolerances. Pricing keeps a candidate list of the most
    negative reduced costs and rescans when it runs dry.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = cost.shape
    if len(a) != n or len(b) != m:
        raise ValidationError("weight lengths do not match cost matrix")
    if n == 0 or m == 0:
        raise EmptySideError("transport requires nonempty marginals")
    if abs(a.sum() - b.sum()) > 1e-7 * max(a.sum(), 1.0):
        raise ValidationError(f"unbalanced marginals: {a.sum()} vs {b.sum()}")

    rng = np.random.default_rng(0x5EED)
    pa = a + _PERTURB * rng.uniform(0.5, 1.5, size=n)
    pb = b + _PERTURB * rng.uniform(0.5, 1.5, size=m)
    pb *= pa.sum() / pb.sum()

    if order_a is None:
        order_a = np.arange(n)
    if order_b is None:
        order_b = np.arange(m)

    init = _greedy_init(cost, pa, pb)
    if init is None:
        init = _northwest_corner(pa, pb, order_a, order_b)
    arc_i0, arc_j0, flow0 = init
    tree = _SpanningTree(n, m, arc_i0, arc_j0, flow0, cost)

    if max_pivots is None:
        max_pivots = 400 * (n + m) + 4000
    nm = n * m
    u, v = tree.u, tree.v
    pivots = 0

    if nm <= 32768:
        # small problems: full Dantzig pricing, fewest pivots
        reduced = np.empty_like(cost)
        while True:
            np.subtract(cost, u[:, None], out=reduced)
            reduced -= v[None, :]
            flat = int(np.argmin(reduced))
            ei, ej = flat // m, flat % m
            if reduced[ei, ej] >= -opt_tol:
                break
            tree.pivot(ei, ej, float(reduced[ei, ej]))
            pivots += 1
            if pivots > max_pivots:
                raise NumericalError(f"network simplex exceeded {max_pivots} pivots")
            if pivots % 4096 == 0:
                tree._init_from_root()
    else:
        # large problems: block-cyclic pricing over the flattened matrix
        block = max(1024, 8 * int(np.sqrt(nm)))
        flat_cost = cost.ravel()
        pos = 0
        clean = 0  # arcs scanned since the last improving pivot
        while clean < nm:
            idx = np.arange(pos, pos + block) % nm
            ii = idx // m
            jj = idx - ii * m
            red = flat_cost[idx] - u[ii] - v[jj]
            k = int(np.argmin(red))
            if red[k] < -opt_tol:
                tree.pivot(int(ii[k]), int(jj[k]), float(red[k]))
                clean = 0
                pivots += 1
                if pivots > max_pivots:
                    raise NumericalError(f"network simplex exceeded {max_pivots} pivots")
                if pivots % 4096 == 0:
                    tree._init_from_root()  # shed accumulated dual drift
                continue  # re-price the same block until it is clean
            clean += block
            pos = (pos + block) % nm

    rows = np.array(tree.arc_i, dtype=np.int64)
    cols = np.array(tree.arc_j, dtype=np.int64)
    flows = np.array(tree.flow, dtype=np.float64)
    keep = flows > 1e-15
    rows, cols, flows = rows[keep], cols[keep], flows[keep]
    objective = float(np.dot(cost[rows, cols], flows))
    return objective, (rows, cols, flows)


def emd(a: PointMass, b: PointMass, method: str = "exact",
        reg: float = 0.002) -> tuple[float, FlowPlan]:
    """Minimum-cost transport between two point masses.

    Ground cost is the Euclidean distance between normalized coordinates, so
    the distance lies in ``[0, sqrt(2)]`` for unit-square clouds. Emptiness
    is the caller's concern (the document metric turns it into a class
    penalty): an empty side raises :class:`EmptySideError`.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptySideError("emd requires two nonempty point masses")
    if method == "sinkhorn":
        return sinkhorn(a, b, reg=reg)
    if method != "exact":
        raise ValidationError(f"unknown emd method {method!r}")
    if len(a) == len(b) and np.array_equal(a.points, b.points) and np.array_equal(
        a.weights, b.weights
    ):
        # the identity plan attains the zero lower bound exactly
        idx = np.arange(len(a))
        return 0.0, FlowPlan(idx, idx, a.weights.copy(), 0.0)
    cost = cdist(a.points, b.points)
    order_a = hilbert_order(a.points)
    order_b = hilbert_order(b.points)
    objective, (rows, cols, flows) = solve_transport(
        cost, a.weights, b.weights, order_a, order_b
    )
    plan = FlowPlan(rows, cols, flows, objective)
    plan.validate(a, b)
    return objective, plan


def lp_transport(cost, a, b) -> float:
    """Transport objective via a dense LP (scipy HiGHS); test oracle only."""
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n * m > 10_000:
        raise ValidationError(f"LP oracle refuses {n}x{m} problem (> 1e4 variables)")
    var = np.arange(n * m)
    rows_src = sparse.csr_matrix(
        (np.ones(n * m), (var // m, var)), shape=(n, n * m)
    )
    rows_snk = sparse.csr_matrix(
        (np.ones(n * m), (var % m, var)), shape=(m, n * m)
    )
    a_eq = sparse.vstack([rows_src, rows_snk])
    b_eq = np.concatenate([a, b])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalError(f"LP oracle failed: {res.message}")
    return float(res.fun)


def emd_lp_oracle(a: PointMass, b: PointMass) -> float:
    if len(a) == 0 or len(b) == 0:
        raise EmptySideError("emd requires two nonempty point masses")
    return lp_transport(cdist(a.points, b.points), a.weights, b.weights)


def sinkhorn(a: PointMass, b: PointMass, reg: float = 0.002,
             max_iter: int = 2000, tol: float = 1e-9) -> tuple[float, FlowPlan]:
    """Entropic approximation of ``emd`` (log-domain updates).

    Returns the transport cost of the entropic plan. Accuracy degrades as
    ``reg`` grows; this path is for large clouds, never for exactness tests.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptySideError("sinkhorn requires two nonempty point masses")
    cost = cdist(a.points, b.points)
    log_a = np.log(np.maximum(a.weights, 1e-300))
    log_b = np.log(np.maximum(b.weights, 1e-300))
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    scaled = -cost / reg
    for _ in range(max_iter):
        f = reg * (log_a - _logsumexp_rows(scaled + g[None, :] / reg))
        g = reg * (log_b - _logsumexp_rows((scaled + f[:, None] / reg).T))
        plan = np.exp(scaled + (f[:, None] + g[None, :]) / reg)
        err = np.abs(plan.sum(axis=1) - a.weights).sum()
        if err < tol:
            break
    rows, cols = np.nonzero(plan > 1e-15)
    flows = plan[rows, cols]
    objective = float((plan * cost).sum())
    return objective, FlowPlan(rows, cols, flows, objective)


def _logsumexp_rows(x):
    mx = x.max(axis=1, keepdims=True)
    return (mx + np.log(np.exp(x - mx).sum(axis=1, keepdims=True))).ravel()
