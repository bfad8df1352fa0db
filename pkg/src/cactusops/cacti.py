"""Spineless cacti: marked treelike ribbon graphs, gluing, and cell homology.

A cactus is a treelike configuration of parameterized circles.  It is held
either as a marked metric ribbon graph (flags, involution, vertex map,
cyclic orders) or as a topological type — a planted planar bipartite tree —
together with exact rational arc lengths.  Arcs correspond to the non-root
edges of the type: the edge e owns the arc in the angle right before e in
the planar order at e's white vertex, and the outgoing edge of a lobe owns
the closing arc.

Everything is exact rational; sign and incidence decisions never touch
floating point.
"""

from __future__ import annotations

import itertools
import random as _random
from dataclasses import dataclass
from fractions import Fraction

from .trees import BWTree, TreeChain, enumerate_trees, parse_tree
from . import tree_operad
from .linalg import rational_rank, smith_normal_form

__all__ = [
    "RibbonGraph",
    "SpinelessCactus",
    "S1Graph",
    "scaling_compose",
    "dual_tree",
    "ribbon_from_tree",
    "glue_s1",
    "glue_sub",
    "chord_diagram",
    "glue_cacti",
    "CellComplexKn",
    "build_cell_complex",
    "homology",
    "homology_report",
    "random_cactus",
    "verify_cell_composition",
    "parse_cactus",
    "format_cactus",
]


# ---------------------------------------------------------------------------
# ribbon graphs


@dataclass(frozen=True)
class RibbonGraph:
    """Flags 0..2E-1 with involution, vertex map, cyclic orders, marking.

    ``orders[v]`` lists the flags at vertex v in cyclic order; the successor
    of a flag f along its cycle is the flag after iota(f) at iota(f)'s
    vertex.  The metric assigns a rational length to each edge, keyed by
    min(f, iota(f)).
    """

    iota: tuple
    vertex_of: tuple
    orders: tuple
    marked: int
    metric: tuple = ()
    lobe_labels: tuple = ()  # ((flag on the cycle, label), ...)

    def __post_init__(self):
        n = len(self.iota)
        for f in range(n):
            if self.iota[self.iota[f]] != f or self.iota[f] == f:
                raise ValueError("iota must be a fixed-point-free involution")
        seen = set()
        for v, flags in enumerate(self.orders):
            for f in flags:
                if self.vertex_of[f] != v:
                    raise ValueError("orders disagree with the vertex map")
                seen.add(f)
        if seen != set(range(n)):
            raise ValueError("orders must partition the flags")

    @property
    def n_flags(self):
        return len(self.iota)

    @property
    def n_edges(self):
        return len(self.iota) // 2

    @property
    def n_vertices(self):
        return len(self.orders)

    def metric_map(self):
        return dict(self.metric)

    def successor(self, f):
        g = self.iota[f]
        flags = self.orders[self.vertex_of[g]]
        return flags[(flags.index(g) + 1) % len(flags)]

    def cycles(self):
        seen = set()
        out = []
        for f in range(self.n_flags):
            if f in seen:
                continue
            cyc = []
            g = f
            while g not in seen:
                seen.add(g)
                cyc.append(g)
                g = self.successor(g)
            out.append(tuple(cyc))
        return out

    @property
    def genus(self):
        chi = self.n_vertices - self.n_edges + len(self.cycles())
        return (2 - chi) // 2

    def marked_cycle(self):
        for cyc in self.cycles():
            if self.marked in cyc:
                k = cyc.index(self.marked)
                return cyc[k:] + cyc[:k]
        raise AssertionError("marked flag lost")

    def cycle_index_of(self, f):
        for idx, cyc in enumerate(self.cycles()):
            if f in cyc:
                return idx
        raise AssertionError

    def is_marked_spineless_treelike(self):
        if self.genus != 0:
            return False
        c0 = set(self.marked_cycle())
        for f in range(self.n_flags):
            if f not in c0 and self.iota[f] not in c0:
                return False
        v0 = self.vertex_of[self.marked]
        for v, flags in enumerate(self.orders):
            if len(flags) < (2 if v == v0 else 3):
                return False
        return True


def dual_tree(graph, cycle_labels=None):
    """The planted planar bipartite tree dual to a marked treelike graph.

    White vertices are the non-marked cycles (lobes), black vertices the
    graph's vertices; the planar structure is read off by walking the
    outside circle from the marked flag.  ``cycle_labels`` maps cycle index
    to lobe label, defaulting to first-visit order 1..n.
    """
    if not graph.is_marked_spineless_treelike():
        raise ValueError("graph is not marked spineless treelike")
    c0 = graph.marked_cycle()
    cycles = graph.cycles()
    lobe_sizes = {}
    for idx, cyc in enumerate(cycles):
        if graph.marked not in cyc:
            lobe_sizes[idx] = len(cyc)
    if cycle_labels is None and graph.lobe_labels:
        cycle_labels = {
            graph.cycle_index_of(f): lab for f, lab in graph.lobe_labels
        }
    if cycle_labels is None:
        cycle_labels = {}
        nxt = 1
        for f in c0:
            idx = graph.cycle_index_of(graph.iota[f])
            if idx not in cycle_labels:
                cycle_labels[idx] = nxt
                nxt += 1

    pos = [0]

    def parse_lobes_at(vertex, enclosing):
        children = []
        while pos[0] < len(c0):
            f = c0[pos[0]]
            if graph.vertex_of[f] != vertex:
                break
            lobe = graph.cycle_index_of(graph.iota[f])
            if lobe == enclosing:
                break
            children.append(parse_lobe(lobe))
        return children

    def parse_lobe(lobe):
        kids = []
        arcs_left = lobe_sizes[lobe]
        while arcs_left:
            f = c0[pos[0]]
            pos[0] += 1
            arcs_left -= 1
            if arcs_left == 0:
                break
            v = graph.vertex_of[graph.iota[f]]
            kids.append(("b", tuple(parse_lobes_at(v, lobe))))
        return ("w", cycle_labels[lobe], tuple(kids))

    v0 = graph.vertex_of[graph.marked]
    top_children = parse_lobes_at(v0, None)
    if pos[0] != len(c0):
        raise ValueError("outside circle not exhausted; graph is not a cactus")
    return BWTree((("b", tuple(top_children)),))


def _arc_of_edge(tree, edge):
    """The arc owned by a non-root edge: (lobe path, angle index)."""
    parent = tree.node_at(edge[:-1])
    if parent[0] == "w":
        return (edge[:-1], edge[-1])
    node = tree.node_at(edge)
    return (edge, len(node[2]))


def _lobe_arcs(tree, w_path):
    """Arc keys of a lobe in traversal order, with owning edges."""
    k = tree.children_count(w_path)
    arcs = []
    for a in range(k):
        arcs.append(((w_path, a), w_path + (a,)))
    arcs.append(((w_path, k), w_path))
    return arcs


def ribbon_from_tree(tree, lengths=None):
    """The marked spineless treelike ribbon graph of a bipartite tree.

    Flags are arc ends: (lobe, angle, 0) where the arc starts and
    (lobe, angle, 1) where it ends.  The cyclic order at a special point
    follows the outside circle: arrive on the enclosing lobe, visit the
    lobes based there in planar order, leave on the enclosing lobe.
    """
    tree.check_class()
    flag_id = {}
    keys = []
    whites = [(p, n) for p, n in tree.iter_vertices() if n[0] == "w"]
    for w_path, node in whites:
        k = len(node[2])
        for a in range(k + 1):
            for side in (0, 1):
                flag_id[(w_path, a, side)] = len(keys)
                keys.append((w_path, a, side))
    iota = [flag_id[(w, a, 1 - s)] for (w, a, s) in keys]

    blacks = [p for p, n in tree.iter_vertices() if n[0] == "b"]
    black_index = {p: i for i, p in enumerate(blacks)}

    def arc_endpoints(w_path, a):
        k = tree.children_count(w_path)
        def point(edge_idx):
            if edge_idx == 0:
                return w_path[:-1]
            return w_path + (edge_idx - 1,)
        return point(a), point((a + 1) % (k + 1))

    vertex_of = [None] * len(keys)
    for w_path, node in whites:
        k = len(node[2])
        for a in range(k + 1):
            start, end = arc_endpoints(w_path, a)
            vertex_of[flag_id[(w_path, a, 0)]] = black_index[start]
            vertex_of[flag_id[(w_path, a, 1)]] = black_index[end]

    orders = []
    for b_path in blacks:
        node = tree.node_at(b_path)
        flags = []
        if len(b_path) > 1:
            w_path = b_path[:-1]
            j = b_path[-1]
            flags.append(flag_id[(w_path, j, 1)])  # arrive on the enclosing lobe
        for c_idx, child in enumerate(node[1]):
            w_path = b_path + (c_idx,)
            k = len(child[2])
            flags.append(flag_id[(w_path, 0, 0)])   # enter the lobe
            flags.append(flag_id[(w_path, k, 1)])   # return from the lobe
        if len(b_path) > 1:
            w_path = b_path[:-1]
            j = b_path[-1]
            flags.append(flag_id[(w_path, j + 1, 0)])  # leave on the enclosing lobe
        orders.append(tuple(flags))

    first_lobe = (0, 0)
    marked = flag_id[((0, 0), 0, 0)]
    metric = ()
    if lengths is not None:
        pairs = []
        for edge, value in lengths.items():
            w, a = _arc_of_edge(tree, edge)
            f = flag_id[(w, a, 0)]
            pairs.append((min(f, iota[f]), Fraction(value)))
        metric = tuple(sorted(pairs))
    lobe_labels = []
    for w_path, node in whites:
        # the lobe's own cycle holds the side-1 flag of its first arc unless
        # that side lies on the outside circle; resolve after construction
        lobe_labels.append((flag_id[(w_path, 0, 1)], node[1]))
    graph = RibbonGraph(
        tuple(iota), tuple(vertex_of), tuple(orders), marked, metric, ()
    )
    c0 = set(graph.marked_cycle())
    fixed = []
    for f, lab in lobe_labels:
        fixed.append((f if f not in c0 else iota[f], lab))
    return RibbonGraph(
        tuple(iota), tuple(vertex_of), tuple(orders), marked, metric, tuple(fixed)
    )


# ---------------------------------------------------------------------------
# cacti as (type, arc lengths)


@dataclass(frozen=True)
class SpinelessCactus:
    """A spineless cactus: topological type plus positive rational arcs.

    ``lengths`` maps each non-root edge path of the type to the length of
    the arc the edge owns.
    """

    tree: BWTree
    lengths: tuple  # sorted ((edge_path, Fraction), ...)

    @staticmethod
    def build(tree, lengths):
        tree.check_class()
        edges = [e for e in tree.edge_paths() if e != (0,)]
        lengths = {e: Fraction(v) for e, v in dict(lengths).items()}
        if sorted(lengths) != sorted(edges):
            raise ValueError("arc lengths must cover the non-root edges exactly")
        if any(v <= 0 for v in lengths.values()):
            raise ValueError("arc lengths must be positive")
        return SpinelessCactus(tree, tuple(sorted(lengths.items())))

    def length_map(self):
        return dict(self.lengths)

    def lobe_length(self, w_path):
        lens = self.length_map()
        return sum(lens[e] for _arc, e in _lobe_arcs(self.tree, w_path))

    def lobe_lengths(self):
        labels = self.tree.labels()
        return {lab: self.lobe_length(p) for lab, p in labels.items()}

    @property
    def is_normalized(self):
        return all(v == 1 for v in self.lobe_lengths().values())

    def scaled(self, factor):
        factor = Fraction(factor)
        return SpinelessCactus(self.tree, tuple((e, v * factor) for e, v in self.lengths))

    def outer_circle(self):
        """Arc segments (edge path, length) along the outside circle."""
        lens = self.length_map()
        out = []

        def visit_lobe(w_path):
            node = self.tree.node_at(w_path)
            k = len(node[2])
            for a in range(k):
                out.append((w_path + (a,), lens[w_path + (a,)]))
                child_black = w_path + (a,)
                for c_idx, _c in enumerate(self.tree.node_at(child_black)[1]):
                    visit_lobe(child_black + (c_idx,))
            out.append((w_path, lens[w_path]))

        top = self.tree.top
        for c_idx, _c in enumerate(top[1]):
            visit_lobe((0, c_idx))
        return out

    def ribbon(self):
        return ribbon_from_tree(self.tree, self.length_map())


def format_cactus(cactus):
    edges = [e for e in cactus.tree.edge_paths()]
    index = {e: k for k, e in enumerate(edges)}
    lines = [cactus.tree.literal]
    for e, v in cactus.lengths:
        lines.append("arc %d %s" % (index[e], v))
    return "\n".join(lines) + "\n"


def parse_cactus(text):
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    tree = parse_tree(lines[0])
    edges = tree.edge_paths()
    lengths = {}
    for line in lines[1:]:
        parts = line.split()
        if parts[0] != "arc":
            raise ValueError("bad cactus line: %r" % line)
        lengths[edges[int(parts[1])]] = Fraction(parts[2])
    return SpinelessCactus.build(tree, lengths)


# ---------------------------------------------------------------------------
# circle graphs


@dataclass(frozen=True)
class S1Graph:
    """A metric circle with marked points 0 = t_0 < t_1 < ... < t_n < 1,
    scaled by the radius."""

    radius: Fraction
    points: tuple

    @staticmethod
    def build(radius, points):
        radius = Fraction(radius)
        pts = tuple(sorted(Fraction(p) for p in set(points) | {Fraction(0)}))
        if any(not 0 <= p < 1 for p in pts):
            raise ValueError("marked points must lie in [0, 1)")
        return S1Graph(radius, pts)

    def arc_lengths(self):
        pts = list(self.points) + [Fraction(1)]
        return [self.radius * (b - a) for a, b in zip(pts, pts[1:])]


def glue_s1(s, s2):
    """Union of marked points after rescaling s2 to the radius of s.

    Returns (glued graph, number of coincidences merged).
    """
    merged = set(s.points) | set(s2.points)
    coincidences = len(s.points) + len(s2.points) - len(merged)
    return S1Graph.build(s.radius, merged), coincidences


def subdivide_edge(graph, f, first_length):
    """Split the edge of flag f by a new valence-two vertex.

    The piece on f's side gets ``first_length``; the remainder keeps the
    old metric entry.  The new vertex's two flags continue both cycles of
    the old edge.
    """
    g = graph.iota[f]
    n = graph.n_flags
    new1, new2 = n, n + 1
    iota = list(graph.iota) + [None, None]
    iota[f], iota[new1] = new1, f
    iota[g], iota[new2] = new2, g
    vertex_of = list(graph.vertex_of) + [graph.n_vertices, graph.n_vertices]
    orders = list(graph.orders) + [(new1, new2)]
    metric = dict(graph.metric)
    old_key = min(f, g)
    total = metric.pop(old_key, None)
    metric[min(f, new1)] = Fraction(first_length)
    if total is not None:
        metric[min(g, new2)] = total - Fraction(first_length)
    return RibbonGraph(
        tuple(iota), tuple(vertex_of), tuple(orders), graph.marked,
        tuple(sorted(metric.items())), graph.lobe_labels,
    )


def glue_sub(graph, cycle_flag, s2):
    """Insert the marked points of an S1 graph into a cycle of a ribbon graph.

    The cycle containing ``cycle_flag`` is traversed from that flag; the
    nonzero marked points of ``s2`` (rescaled to the cycle's length)
    subdivide its edges by new valence-two vertices.  Points that hit
    existing vertices are merged silently.
    """
    for cyc in graph.cycles():
        if cycle_flag in cyc:
            start = cyc.index(cycle_flag)
            cycle = cyc[start:] + cyc[:start]
            break
    else:
        raise ValueError("flag not found")
    metric = graph.metric_map()
    radius = sum(metric[min(f, graph.iota[f])] for f in cycle)
    positions = sorted(p * radius for p in s2.points if p)
    # process positions one at a time; the cycle is re-walked after every
    # subdivision so that flag ids stay valid
    for pos in positions:
        for cyc in graph.cycles():
            if cycle_flag in cyc:
                start = cyc.index(cycle_flag)
                cycle = cyc[start:] + cyc[:start]
                break
        metric = graph.metric_map()
        cursor = Fraction(0)
        for f in cycle:
            length = metric[min(f, graph.iota[f])]
            if pos == cursor:
                break  # coincides with an existing vertex
            if cursor < pos < cursor + length:
                graph = subdivide_edge(graph, f, pos - cursor)
                break
            cursor += length
    return graph


def chord_diagram(cactus):
    """The covering S1 graph of the outside circle plus the gluing classes.

    Returns (S1Graph, classes) where classes groups the marked-point
    indices by the special point of the cactus they map to.
    """
    segments = cactus.outer_circle()
    total = sum(l for _e, l in segments)
    tree = cactus.tree
    points = []
    classes = {}
    cursor = Fraction(0)
    for e, l in segments:
        arc, _owner = _arc_of_edge(tree, e), e
        w_path, a = arc
        k = tree.children_count(w_path)
        start = w_path[:-1] if a == 0 else w_path + (a - 1,)
        points.append(cursor / total)
        classes.setdefault(start, []).append(len(points) - 1)
        cursor += l
    return S1Graph.build(total, points), classes


# ---------------------------------------------------------------------------
# gluing cacti


@dataclass
class GlueResult:
    cactus: SpinelessCactus
    degenerations: list
    edge_origin: dict  # new white edge path -> ("host"|"inner", source edge path)


def glue_cacti(c, i, c2, mode="normalized"):
    """Glue c2 into the lobe i of c; returns a GlueResult.

    Modes: "normalized" re-parameterizes the host lobe to the outer length
    of c2 and changes nothing else; "right" scales c2 down to the lobe;
    "left" scales the whole host up to c2's outer circle; "symmetric"
    scales the host by c2's outer length and c2 by the lobe's length.
    Attachment points that hit existing special points are merged and
    reported as degenerations.

    The combinatorics reuses the composition machinery: the host lobe's
    branches are regrafted onto the white vertices of c2 at the positions
    where their attachment points land on c2's outer circle.
    """
    tree = c.tree
    vi = tree.labels()[i]
    lens = c.length_map()
    r_i = c.lobe_length(vi)
    outer2 = c2.outer_circle()
    R2 = sum(l for _e, l in outer2)
    if mode == "normalized":
        alpha, beta, host_scale = R2 / r_i, Fraction(1), Fraction(1)
    elif mode == "right":
        alpha, beta, host_scale = Fraction(1), r_i / R2, Fraction(1)
    elif mode == "left":
        alpha, beta, host_scale = R2 / r_i, Fraction(1), R2 / r_i
    elif mode == "symmetric":
        alpha, beta, host_scale = R2, r_i, R2
    else:
        raise ValueError("unknown mode %r" % mode)

    n = tree.n_lobes
    m = c2.tree.n_lobes

    # landing positions of the host lobe's interior points along the circle
    k = tree.children_count(vi)
    positions = []
    cursor = Fraction(0)
    for a in range(k):
        cursor += lens[vi + (a,)] * alpha
        positions.append(cursor)
    segments = [(e, l * beta) for e, l in outer2]

    degenerations = []
    landings = []  # per branch: ("inside", c2 edge, offset) | ("merge", point)
    for bidx, pos in enumerate(positions):
        cursor = Fraction(0)
        for e, l in segments:
            if pos == cursor:
                w2, a = _arc_of_edge(c2.tree, e)
                point = w2[:-1] if a == 0 else w2 + (a - 1,)
                if point == ():
                    raise ValueError("branch lands on the global zero of the insert")
                degenerations.append(
                    "branch %d lands on the existing point %s of the insert"
                    % (bidx + 1, point)
                )
                landings.append(("merge", point))
                break
            if cursor < pos < cursor + l:
                landings.append(("inside", e, pos - cursor))
                break
            cursor += l
        else:
            raise AssertionError("branch position beyond the outer circle")

    # absorb merged branches into the (label-shifted) inner tree upfront
    inner_shifted = c2.tree.relabel({j: n + j for j in range(1, m + 1)})
    host_branch_nodes = [tree.node_at(vi)[2][a] for a in range(k)]
    merged_lengths = {}
    for bidx, landing in enumerate(landings):
        if landing[0] != "merge":
            continue
        point = landing[1]
        black = inner_shifted.node_at(point)
        offset = len(black[1])
        inner_shifted = inner_shifted.replace_at(
            point, ("b", black[1] + host_branch_nodes[bidx][1])
        )
        # branch arcs move under the merged point
        for e, v in lens.items():
            if len(e) > len(vi) + 1 and e[: len(vi) + 1] == vi + (bidx,):
                rel = e[len(vi) + 1 :]
                merged_lengths[point + (offset + rel[0],) + rel[1:]] = v * host_scale
    truncated, _branches_all = tree_operad.tree_cut(tree, i)
    host = tree_operad.leaf_graft(truncated, i, inner_shifted)
    parent_path, idx = vi[:-1], vi[-1]
    c_tb = len(inner_shifted.top[1])

    def host_path_of(path):
        if path[: len(parent_path)] == parent_path and len(path) > len(parent_path):
            j = path[len(parent_path)]
            if j > idx:
                return parent_path + (j + c_tb - 1,) + path[len(parent_path) + 1 :]
        return path

    def inner_path_of(path):
        return parent_path + (idx + path[1],) + path[2:]

    inside = [bidx for bidx, l in enumerate(landings) if l[0] == "inside"]
    branches = [BWTree((host_branch_nodes[bidx],)) for bidx in inside]
    assignment = []
    for bidx in inside:
        _tag, e2, _off = landings[bidx]
        w2, a = _arc_of_edge(c2.tree, e2)
        assignment.append((inner_path_of(w2), a - 1))
    glued_tree, root_paths = tree_operad._build_placement(host, branches, assignment)

    # assemble arc lengths and origins
    host_edges = host.edge_paths()[1:]
    new_of_host = dict(
        zip(
            host_edges,
            tree_operad._host_edge_paths_after(host, host_edges, assignment, root_paths),
        )
    )
    lengths = {}
    origin = {}
    for e, v in lens.items():
        if e[: len(vi)] == vi:
            continue
        new_e = new_of_host[host_path_of(e)]
        lengths[new_e] = v * host_scale
        origin[new_e] = ("host", e)
    for pos_in_list, bidx in enumerate(inside):
        root = root_paths[pos_in_list]
        for e, v in lens.items():
            if len(e) > len(vi) + 1 and e[: len(vi) + 1] == vi + (bidx,):
                new_e = root + e[len(vi) + 1 :]
                lengths[new_e] = v * host_scale
                origin[new_e] = ("host", e)
    for point_path, v in merged_lengths.items():
        new_e = new_of_host.get(inner_path_of(point_path), inner_path_of(point_path))
        lengths[new_e] = v
        origin[new_e] = ("host", None)
    landings_per_edge = {}
    for pos_in_list, bidx in enumerate(inside):
        _tag, e2, off = landings[bidx]
        landings_per_edge.setdefault(e2, []).append((off, pos_in_list))
    for e2, v in c2.length_map().items():
        scaled = v * beta
        hits = sorted(landings_per_edge.get(e2, []))
        new_e = new_of_host[inner_path_of(e2)]
        if not hits:
            lengths[new_e] = scaled
            origin[new_e] = ("inner", e2)
            continue
        cursor = Fraction(0)
        for off, pos_in_list in hits:
            lengths[root_paths[pos_in_list]] = off - cursor
            origin[root_paths[pos_in_list]] = ("host", vi + (inside[pos_in_list],))
            cursor = off
        lengths[new_e] = scaled - cursor
        origin[new_e] = ("inner", e2)

    final = {}
    for j in range(1, n + 1):
        if j < i:
            final[j] = j
        elif j > i:
            final[j] = j + m - 1
    for j in range(1, m + 1):
        final[n + j] = i + j - 1
    final_tree = glued_tree.relabel(final)
    cactus = SpinelessCactus.build(final_tree, lengths)
    return GlueResult(cactus, degenerations, origin)

# ---------------------------------------------------------------------------
# the scaling operad


def scaling_compose(r, i, r2):
    """(r_1,..,r_n) o_i (r'_1,..,r'_m): insert the block scaled by r_i/R."""
    r = [Fraction(x) for x in r]
    r2 = [Fraction(x) for x in r2]
    if not 1 <= i <= len(r):
        raise ValueError("index out of range")
    if any(x <= 0 for x in r + r2):
        raise ValueError("scaling vectors must be positive")
    R = sum(r2)
    factor = r[i - 1] / R
    return tuple(r[: i - 1] + [factor * x for x in r2] + r[i:])


# ---------------------------------------------------------------------------
# the cell complex K(n)


@dataclass
class CellComplexKn:
    """Cells of K(n) by dimension with integer boundary matrices.

    ``boundaries[k]`` maps the k-cells (columns) to (k-1)-cells (rows),
    entries from the tree differential.
    """

    n: int
    cells: list
    boundaries: list

    def cell_counts(self):
        return [len(c) for c in self.cells]


def build_cell_complex(n):
    cells = []
    k = 0
    while True:
        basis = enumerate_trees(n, k)
        if not basis:
            break
        cells.append(basis)
        k += 1
    boundaries = [None]
    for k in range(1, len(cells)):
        index = {t.literal: r for r, t in enumerate(cells[k - 1])}
        rows = len(cells[k - 1])
        matrix = [[0] * len(cells[k]) for _ in range(rows)]
        for col, tree in enumerate(cells[k]):
            for face, coeff in tree_operad.differential(tree).terms.items():
                matrix[index[face.literal]][col] += coeff
        boundaries.append(matrix)
    return CellComplexKn(n, cells, boundaries)


def homology(n):
    """Betti numbers and torsion of K(n), by rank over Q and SNF over Z."""
    complex_ = build_cell_complex(n)
    counts = complex_.cell_counts()
    dims = len(counts)
    ranks = [0] * (dims + 1)
    torsion = [[] for _ in range(dims)]
    for k in range(1, dims):
        matrix = complex_.boundaries[k]
        ranks[k] = rational_rank(matrix)
        diag = smith_normal_form(matrix)
        torsion[k - 1] = [d for d in diag if d not in (0, 1)]
    betti = []
    for k in range(dims):
        betti.append(counts[k] - ranks[k] - ranks[k + 1])
    return {
        "n": n,
        "cells": counts,
        "ranks": ranks[1:dims],
        "betti": betti,
        "torsion": torsion,
    }


def homology_report(n):
    """The text table `n k cells rank betti torsion`."""
    data = homology(n)
    lines = ["n k cells rank betti torsion"]
    for k, count in enumerate(data["cells"]):
        rank = data["ranks"][k] if k < len(data["ranks"]) else 0
        tors = data["torsion"][k] if k < len(data["torsion"]) else []
        tors_txt = ",".join(str(t) for t in tors) or "-"
        lines.append("%d %d %d %d %d %s" % (n, k, count, rank, data["betti"][k], tors_txt))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sampling and the geometric/combinatorial comparison


def random_cactus(n, rng, denominator_bound=8, tree=None):
    """A random normalized cactus: uniform type, bounded-denominator arcs."""
    if tree is None:
        types = enumerate_trees(n)
        tree = types[rng.randrange(len(types))]
    lengths = {}
    for w_path, node in tree.iter_vertices():
        if node[0] != "w":
            continue
        k = len(node[2])
        weights = [rng.randint(1, denominator_bound) for _ in range(k + 1)]
        total = sum(weights)
        for a, weight in enumerate(weights):
            edge = w_path + (a,) if a < k else w_path
            lengths[edge] = Fraction(weight, total)
    return SpinelessCactus.build(tree, lengths)


def _orientation_sign_from_origin(result_tree, origin, host_tree, inner_tree):
    """Parity of the coordinate interleaving, from the edge origins.

    The Nat orientation lists white-edge coordinates in the outside order;
    the glued cactus's coordinates come from the host's and the insert's,
    whose own Nat orders are preserved.  The sign of the permutation
    [host word then inner word] -> [result word] is the keylemma sign.
    """
    inversions = 0
    seen_inner = 0
    for e in result_tree.white_edges():
        side = origin.get(e, ("host", None))[0]
        if side == "inner":
            seen_inner += 1
        else:
            inversions += seen_inner
    return -1 if inversions % 2 else 1


def _region_base(tree, inner_labels):
    """The black vertex where the inner region attaches."""
    labels = tree.labels()
    for lab in sorted(inner_labels):
        p = labels[lab]
        parent_black = p[:-1]
        if len(parent_black) == 1:
            return parent_black
        grand_white = tree.node_at(parent_black[:-1])
        if grand_white[1] not in inner_labels:
            return parent_black
    raise AssertionError("inner region has no base")


def _subcactus(glued, i, m):
    """Extract the inner cactus (lobes i..i+m-1) of a glued cactus.

    Branch attachment points inside those lobes are erased by merging the
    adjacent arcs; the lobes are relabelled 1..m, rooted at the local zero
    of the lobe i.
    """
    tree = glued.tree
    lens = glued.length_map()
    inner = set(range(i, i + m))
    base = _region_base(tree, inner)
    out_lengths = {}

    def build_white(w_path, new_path):
        node = tree.node_at(w_path)
        kids = []
        running = Fraction(0)
        for a, child in enumerate(node[2]):
            running += lens[w_path + (a,)]
            keep = [ci for ci, c in enumerate(child[1]) if c[1] in inner]
            if keep:
                if len(keep) != len(child[1]):
                    raise ValueError("mixed attachment point; degenerate glue")
                new_b_path = new_path + (len(kids),)
                sub_nodes = []
                for ci in keep:
                    sub_new = new_b_path + (len(sub_nodes),)
                    sub_nodes.append(build_white(w_path + (a, ci), sub_new))
                out_lengths[new_b_path] = running
                running = Fraction(0)
                kids.append(("b", tuple(sub_nodes)))
        out_lengths[new_path] = running + lens[w_path]
        return ("w", node[1] - i + 1, tuple(kids))

    base_node = tree.node_at(base)
    top_children = []
    for ci, child in enumerate(base_node[1]):
        if child[1] in inner:
            new_path = (0, len(top_children))
            top_children.append(build_white(base + (ci,), new_path))
    sub_tree = BWTree((("b", tuple(top_children)),))
    return SpinelessCactus.build(sub_tree, out_lengths)


def _host_reconstruction(glued, i, m):
    """Collapse the inner region of a glued cactus back to a single lobe.

    The d-coordinates of the new lobe are the distances between consecutive
    branch attachment points along the inner region's outside circle,
    scaled by 1/(outer length).
    """
    tree = glued.tree
    lens = glued.length_map()
    inner = set(range(i, i + m))
    base = _region_base(tree, inner)
    events = []  # (gap before this event, branch black node, old black path)
    total = [Fraction(0)]

    def walk_white(w_path, running):
        node = tree.node_at(w_path)
        for a, child in enumerate(node[2]):
            arc = lens[w_path + (a,)]
            running += arc
            total[0] += arc
            child_path = w_path + (a,)
            inner_kids = [ci for ci, c in enumerate(child[1]) if c[1] in inner]
            if inner_kids:
                if len(inner_kids) != len(child[1]):
                    raise ValueError("mixed attachment point; degenerate glue")
                for ci in inner_kids:
                    running = walk_white(child_path + (ci,), running)
            else:
                events.append((running, child, child_path))
                running = Fraction(0)
        closing = lens[w_path]
        total[0] += closing
        return running + closing

    base_node = tree.node_at(base)
    inner_positions = [
        ci for ci, child in enumerate(base_node[1]) if child[1] in inner
    ]
    if inner_positions != list(
        range(inner_positions[0], inner_positions[0] + len(inner_positions))
    ):
        raise ValueError("inner region is not contiguous at its base")
    running = Fraction(0)
    for ci in inner_positions:
        running = walk_white(base + (ci,), running)
    closing_gap = running
    R = total[0]

    # new lobe node: branches in traversal order
    lobe_children = tuple(ev[1] for ev in events)
    lobe_node = ("w", i, lobe_children)
    block_start = inner_positions[0]
    block_len = len(inner_positions)
    new_base_children = (
        base_node[1][:block_start] + (lobe_node,) + base_node[1][block_start + block_len :]
    )
    new_tree = glued.tree.replace_at(base, ("b", new_base_children))
    lobe_path = base + (block_start,)

    # relabel: glued labels j < i stay, j >= i + m shift down by m - 1
    relabel = {}
    for lab in new_tree.labels():
        if lab >= i + m:
            relabel[lab] = lab - m + 1
    new_tree = new_tree.relabel(relabel)

    lengths = {}
    for j, (gap, _node, _old) in enumerate(events):
        lengths[lobe_path + (j,)] = gap / R
    lengths[lobe_path] = closing_gap / R

    def old_to_new(path):
        if path[: len(base)] == base and len(path) > len(base):
            j = path[len(base)]
            if j < block_start:
                return path
            if j >= block_start + block_len:
                return base + (j - block_len + 1,) + path[len(base) + 1 :]
            return None  # inside the collapsed region
        return path

    for e, v in lens.items():
        mapped = old_to_new(e)
        if mapped is not None:
            lengths[mapped] = v
    for j, (_gap, _node, old_path) in enumerate(events):
        for e, v in lens.items():
            if len(e) > len(old_path) and e[: len(old_path)] == old_path:
                lengths[lobe_path + (j,) + e[len(old_path) :]] = v
    return SpinelessCactus.build(new_tree, lengths)


def verify_cell_composition(n, m, samples, seed, denominator_bound=8):
    """Geometric/combinatorial comparison of gluing and composition.

    For each sample: glue random rational normalized cacti, check that the
    glued type is a summand of the tree composition with the orientation
    sign of the coordinate interleaving, reconstruct the unique
    decomposition, and re-glue it.  Degenerate samples (attachment points
    hitting existing special points) are reported separately.
    """
    rng = _random.Random(seed)
    failures = []
    degenerate = 0
    checked = 0
    for _ in range(samples):
        c = random_cactus(n, rng, denominator_bound)
        c2 = random_cactus(m, rng, denominator_bound)
        i = rng.randint(1, n)
        result = glue_cacti(c, i, c2, mode="normalized")
        if result.degenerations:
            degenerate += 1
            continue
        checked += 1
        glued = result.cactus
        chain = tree_operad.compose_trees(c.tree, i, c2.tree, signed=True)
        coeff = chain.terms.get(glued.tree, 0)
        geo = _orientation_sign_from_origin(glued.tree, result.edge_origin, c.tree, c2.tree)
        if coeff != geo:
            failures.append(
                "sign: %s o_%d %s -> %s (coeff %d, geometric %d)"
                % (c.tree.literal, i, c2.tree.literal, glued.tree.literal, coeff, geo)
            )
            continue
        c2_rec = _subcactus(glued, i, m)
        if c2_rec != c2:
            failures.append(
                "inner reconstruction: %s o_%d %s" % (c.tree.literal, i, c2.tree.literal)
            )
            continue
        c_rec = _host_reconstruction(glued, i, m)
        if c_rec != c:
            failures.append(
                "host reconstruction: %s o_%d %s (got %s)"
                % (c.tree.literal, i, c2.tree.literal, c_rec.tree.literal)
            )
            continue
        reglued = glue_cacti(c_rec, i, c2_rec, mode="normalized").cactus
        if reglued != glued:
            failures.append(
                "reglue: %s o_%d %s" % (c.tree.literal, i, c2.tree.literal)
            )
    return {
        "samples": samples,
        "checked": checked,
        "degenerate": degenerate,
        "failures": failures,
    }
