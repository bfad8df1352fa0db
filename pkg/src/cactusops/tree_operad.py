"""The dg-operad of planted planar bipartite trees.

Composition comes in two independent engines that must agree term by term:

* ``engine="graft"`` follows the cut / leaf-graft / regraft-branches recipe:
  cut the branches at the target lobe, graft the inserted tree at the leaf,
  then sum over all order-respecting regraftings of the branches onto the
  white vertices of the inserted tree, with weighted-shuffle signs;
* ``engine="subtree"`` enumerates the trees that contain the inserted tree
  as a labelled subtree with the correct quotient, with the sign read off
  from the interleaving of the two white-edge orders in the result.

Signs follow the shift principle: a white edge is a degree-one slot, the
orientation of a cell is the Nat (outside-path) order of its white edges,
and the sign of a composition term is the Koszul sign of the permutation
that interleaves the two white-edge words into the word of the result.

The differential collapses angles.  The face of the arc in front of an
in-edge e carries (-1)^{pos(e)}, the face of the closing arc of a lobe
carries (-1)^{pos(last in-edge)+1}, where pos is the 1-based Nat position
of the white edge; these are the incidence numbers of the CW structure
(the literal num_E ranking of the angle edges does not square to zero).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .trees import BWTree, TreeChain, branch as tree_branch, cut as tree_cut

__all__ = [
    "WeightedShuffle",
    "ShiftMarker",
    "shuffle_sign",
    "leaf_graft",
    "graft",
    "graft_all",
    "compose",
    "compose_trees",
    "differential",
    "tail_differential",
    "foliage",
    "sym_action",
    "orientation_sign",
    "convert_orientation",
    "shift_compose_check",
]


# ---------------------------------------------------------------------------
# weighted shuffles


@dataclass(frozen=True)
class WeightedShuffle:
    """Two weighted ordered sets and a merged order.

    ``merged`` is a sequence of ("S", index) / ("T", index) tags; the shuffle
    must restrict to the orders of S and T, and for the Sh' variant the first
    element must be the first element of S.
    """

    s_weights: tuple
    t_weights: tuple
    merged: tuple

    def validate(self, prime=True):
        s_seen, t_seen = -1, -1
        for side, idx in self.merged:
            if side == "S":
                if idx != s_seen + 1:
                    raise ValueError("merged order does not restrict to S")
                s_seen = idx
            else:
                if idx != t_seen + 1:
                    raise ValueError("merged order does not restrict to T")
                t_seen = idx
        if s_seen + 1 != len(self.s_weights) or t_seen + 1 != len(self.t_weights):
            raise ValueError("merged order does not exhaust S and T")
        if prime and self.s_weights and self.merged[0] != ("S", 0):
            raise ValueError("Sh' requires the minimum to come from S")


def shuffle_sign(shuffle):
    """(-1)^{sum over pairs t before s of wt(s)wt(t)}."""
    shuffle.validate(prime=False)
    sign = 1
    pending_t = 0  # running sum of T-weights already seen
    for side, idx in shuffle.merged:
        if side == "T":
            pending_t += shuffle.t_weights[idx]
        else:
            if (pending_t * shuffle.s_weights[idx]) % 2:
                sign = -sign
    return sign


# ---------------------------------------------------------------------------
# grafting


def leaf_graft(host, label_i, other):
    """Graft ``other`` at the white leaf with label ``label_i``.

    Identifies the leaf and the root of ``other``, contracting both the root
    edge of ``other`` and the outgoing edge of the leaf: the children of the
    first black vertex of ``other`` are spliced into the parent of the leaf
    at the leaf's position.
    """
    path = host.labels()[label_i]
    if host.children_count(path):
        raise ValueError("leaf_graft target must be a leaf")
    parent_path, idx = path[:-1], path[-1]
    parent = host.node_at(parent_path)
    incoming = other.top[1]
    children = list(parent[-1])
    children[idx : idx + 1] = list(incoming)
    if parent_path == ():
        return BWTree(tuple(children))
    merged = ("w", parent[1], tuple(children)) if parent[0] == "w" else ("b", tuple(children))
    return host.replace_at(parent_path, merged)


def _build_placement(host, branches, assignment):
    """Insert branches into the host at (white path, anchor) positions.

    ``assignment[j] = (white_path, anchor)`` with anchor -1 for "before all
    children" and anchor k for "right after child k" (paths and anchors in
    the host's indexing).  Branches sharing a position stack in branch
    order.  Returns (tree, new branch-root paths).
    """
    groups = {}
    for j, key in enumerate(assignment):
        groups.setdefault(key, []).append(j)
    root_paths = {}

    def rec(node, old_path, new_path):
        new_children = []
        for j in groups.get((old_path, -1), []):
            root_paths[j] = new_path + (len(new_children),)
            new_children.append(branches[j].top)
        for k, child in enumerate(node[-1]):
            sub_new = new_path + (len(new_children),)
            new_children.append(rec(child, old_path + (k,), sub_new))
            for j in groups.get((old_path, k), []):
                root_paths[j] = new_path + (len(new_children),)
                new_children.append(branches[j].top)
        if node[0] == "w":
            return ("w", node[1], tuple(new_children))
        return ("b", tuple(new_children))

    rebuilt = rec(("b", host.root_children), (), ())
    return BWTree(rebuilt[1]), root_paths


def _placement_fe_valid(root_paths):
    """Branch roots must appear in branch order along the outside path."""
    order = sorted(root_paths, key=lambda j: root_paths[j])
    return order == sorted(root_paths)


def graft(host, branches, merged):
    """A single grafting gr(host; branches; merged shuffle).

    ``merged`` is the Sh'-shuffle of the host's non-root edges with the
    branch root edges, as ("E", edge_index)/("R", branch_index) tags; a
    branch attaches to the white vertex of its immediate predecessor, right
    after that edge in the vertex's linear order.  Returns the grafted tree,
    or None when the grafting is not geometric (the branches would appear
    out of order along the outside path).
    """
    built = _graft_restricted(host, branches, merged, None)
    return built[0] if built is not None else None


def _host_edge_paths_after(host, edges, assignment, root_paths):
    """New paths of the host edges and branch roots after insertion."""
    groups = {}
    for j, key in enumerate(assignment):
        groups.setdefault(key, []).append(j)

    def shift(path):
        # how many branch tops were inserted before each step of the path
        out = ()
        for depth in range(len(path)):
            prefix, k = path[:depth], path[depth]
            extra = sum(
                len(js)
                for (p, a), js in groups.items()
                if p == prefix and a < k
            )
            out += (k + extra,)
        return out

    return [shift(e) for e in edges] + [root_paths[j] for j in range(len(root_paths))]


def _iter_merged(n_edges, n_branches):
    """All Sh' interleavings: positions of branch tags among 1..total-1."""
    total = n_edges + n_branches
    for positions in itertools.combinations(range(1, total), n_branches):
        merged = []
        pos_set = set(positions)
        e_idx = r_idx = 0
        for p in range(total):
            if p in pos_set:
                merged.append(("R", r_idx))
                r_idx += 1
            else:
                merged.append(("E", e_idx))
                e_idx += 1
        yield tuple(merged)


def graft_all(host, branches, signed=True, allowed_whites=None):
    """Signed sum over all graftings of the branches onto the host.

    Enumerates the Sh' shuffles of the host's non-root edges with the branch
    root edges; each root attaches at the white vertex of its immediate
    predecessor, and graftings whose outside-path order would invert the
    branch order are not geometric and are skipped.  The weighted-shuffle
    sign (white edges weight 1, branch roots weight |E_w(branch)| + 1) is
    evaluated on the realized outside-path interleaving.

    ``allowed_whites`` optionally restricts the attachment vertices (the
    composition restricts them to the white vertices of the inserted tree).
    With ``signed=False`` all coefficients are +1.
    """
    edges = host.edge_paths()[1:]
    white = set(host.white_edges())
    s_weights = tuple(1 if e in white else 0 for e in edges)
    t_weights = tuple(b.white_edge_count + 1 for b in branches)
    if allowed_whites is not None:
        labels = host.labels()
        allowed_paths = {labels[l] for l in allowed_whites}
    spots = []
    for e in edges:
        parent = host.node_at(e[:-1])
        spot = (e[:-1], e[-1]) if parent[0] == "w" else (e, -1)
        if allowed_whites is None or spot[0] in allowed_paths:
            spots.append(spot)
    out = {}
    for assignment in itertools.product(spots, repeat=len(branches)):
        tree, root_paths = _build_placement(host, branches, assignment)
        if not _placement_fe_valid(root_paths):
            continue
        if signed:
            new_paths = _host_edge_paths_after(host, edges, assignment, root_paths)
            tags = [("S", i) for i in range(len(edges))] + [("T", j) for j in range(len(branches))]
            realized = tuple(t for _, t in sorted(zip(new_paths, tags)))
            sign = shuffle_sign(WeightedShuffle(s_weights, t_weights, realized))
        else:
            sign = 1
        out[tree] = out.get(tree, 0) + sign
    return TreeChain(out)


def _graft_restricted(host, branches, merged, allowed_whites):
    edges = host.edge_paths()[1:]
    if allowed_whites is not None:
        labels = host.labels()
        allowed_paths = {labels[l] for l in allowed_whites}
    assignment = [None] * len(branches)
    last = None
    for pos, (side, idx) in enumerate(merged):
        if side == "E":
            e = edges[idx]
            parent = host.node_at(e[:-1])
            last = (e[:-1], e[-1]) if parent[0] == "w" else (e, -1)
        else:
            if pos == 0 or last is None:
                return None
            if allowed_whites is not None and last[0] not in allowed_paths:
                return None
            assignment[idx] = last
    tree, root_paths = _build_placement(host, branches, assignment)
    if not _placement_fe_valid(root_paths):
        return None
    return tree, None


# ---------------------------------------------------------------------------
# composition


def _relabel_for_composition(ta, i, tb):
    """Shift tb's labels out of ta's range; return final relabelling map."""
    m, n = ta.n_lobes, tb.n_lobes
    tb_shift = tb.relabel({j: m + j for j in range(1, n + 1)})
    final = {}
    for j in range(1, i):
        final[j] = j
    for j in range(i + 1, m + 1):
        final[j] = j + n - 1
    for j in range(1, n + 1):
        final[m + j] = i + j - 1
    return tb_shift, final


def compose_trees(ta, i, tb, signed=True, engine="graft"):
    """The composition ta o_i tb of single trees, as a TreeChain."""
    if i not in ta.labels():
        raise ValueError("label %d not present in %s" % (i, ta.literal))
    tb_shift, final = _relabel_for_composition(ta, i, tb)
    if engine == "graft":
        raw = _compose_graft(ta, i, tb_shift, signed)
    elif engine == "subtree":
        raw = _compose_subtree(ta, i, tb_shift, signed)
    else:
        raise ValueError("unknown engine %r" % engine)
    return TreeChain({t.relabel(final): c for t, c in raw.terms.items()})


def compose(ca, i, cb, signed=True, engine="graft"):
    """Bilinear extension of compose_trees to chains."""
    out = TreeChain.zero()
    for ta, c1 in ca.terms.items():
        for tb, c2 in cb.terms.items():
            out = out + compose_trees(ta, i, tb, signed, engine) * (c1 * c2)
    return out


def _compose_graft(ta, i, tb, signed):
    truncated, branches = tree_cut(ta, i)
    host = leaf_graft(truncated, i, tb)
    allowed = sorted(tb.labels())
    chain = graft_all(host, branches, signed=signed, allowed_whites=allowed)
    if not signed:
        return chain
    g = _graft_global_sign(ta, i, tb, host)
    return TreeChain({t: c * g for t, c in chain.terms.items()})


def _graft_global_sign(ta, i, tb, host):
    """Parity relating the graft baseline to the shift baseline.

    The weighted-shuffle sign of graft_all moves each branch block (root
    edge plus its white edges) backwards past the host's white-edge word;
    the shift sign of the composition moves the inserted tree's white-edge
    word past the outer one.  The two baselines differ by a fixed parity:
    (right edges before away edges in the host word) + (branch edges before
    away edges in the outer word) + |E_w(inserted)| * total branch block.
    """
    tb_labels = set(tb.labels())
    label_at = {p: n[1] for p, n in host.iter_vertices() if n[0] == "w"}
    inv_host = seen_right = 0
    for e in host.white_edges():
        if label_at[e[:-1]] in tb_labels:
            seen_right += 1
        else:
            inv_host += seen_right
    vi = ta.labels()[i]
    inv_outer = seen_branch = total_branch = 0
    for e in ta.white_edges():
        if len(e) > len(vi) and e[: len(vi)] == vi:
            seen_branch += 1
            total_branch += 1
        else:
            inv_outer += seen_branch
    parity = inv_host + inv_outer + tb.white_edge_count * total_branch
    return -1 if parity % 2 else 1


def _compose_subtree(ta, i, tb, signed):
    """Subtree-contraction engine: enumerate placements, sign by interleave.

    The inserted tree tb (labels already shifted) replaces the lobe i of ta;
    the branches of lobe i are distributed over the white vertices of tb in
    every way that keeps their outside-path order.  The sign of a term is
    the Koszul parity of interleaving tb's white-edge word (degree-one
    slots) into ta's: (-1)^{# pairs (right-side edge before left-side edge)}.
    """
    truncated, branches = tree_cut(ta, i)
    host = leaf_graft(truncated, i, tb)
    tb_labels = sorted(tb.labels())
    host_labels = host.labels()
    spots = []
    for lab in tb_labels:
        path = host_labels[lab]
        arity = host.children_count(path)
        spots.extend((path, a) for a in range(-1, arity))
    out = {}
    for assignment in itertools.product(spots, repeat=len(branches)):
        tree, root_paths = _build_placement(host, branches, assignment)
        if not _placement_fe_valid(root_paths):
            continue
        sign = _interleave_sign(tree, set(tb_labels), set(root_paths.values())) if signed else 1
        out[tree] = out.get(tree, 0) + sign
    return TreeChain(out)


def _interleave_sign(tree, right_labels, branch_root_paths):
    """(-1)^{# pairs (right-side white edge before left-side white edge)}.

    A white edge of the result belongs to the right (inserted) side when its
    parent is a right-side white vertex and it is not a regrafted branch
    root; branch roots and edges inside branches belong to the left side.
    """
    label_at = {path: node[1] for path, node in tree.iter_vertices() if node[0] == "w"}
    inversions = 0
    seen_right = 0
    for e in tree.white_edges():
        parent_label = label_at[e[:-1]]
        is_right = parent_label in right_labels and e not in branch_root_paths
        if is_right:
            seen_right += 1
        else:
            inversions += seen_right
    return -1 if inversions % 2 else 1


# ---------------------------------------------------------------------------
# the differential


def differential(chain):
    """The cellular boundary, extended linearly to chains."""
    if isinstance(chain, BWTree):
        chain = TreeChain.single(chain)
    return chain.map_trees(_d_tree)


def _collapse_in(tree, w_path, j):
    """Collapse the angle in front of in-edge j of the white vertex."""
    w = tree.node_at(w_path)
    children = list(w[2])
    if j == 0:
        # merge the black child into the parent black, just before the lobe
        moved = children.pop(0)[1]
        new_w = ("w", w[1], tuple(children))
        parent_path, idx = w_path[:-1], w_path[-1]
        parent = tree.node_at(parent_path)
        siblings = list(parent[-1])
        siblings[idx : idx + 1] = list(moved) + [new_w]
        if parent_path == ():
            return BWTree(tuple(siblings))
        return tree.replace_at(parent_path, ("b", tuple(siblings)))
    left, right = children[j - 1], children[j]
    children[j - 1 : j + 1] = [("b", left[1] + right[1])]
    return tree.replace_at(w_path, ("w", w[1], tuple(children)))


def _collapse_out(tree, w_path):
    """Collapse the closing angle of the lobe (last in-edge meets out-edge)."""
    w = tree.node_at(w_path)
    children = list(w[2])
    moved = children.pop()[1]
    new_w = ("w", w[1], tuple(children))
    parent_path, idx = w_path[:-1], w_path[-1]
    parent = tree.node_at(parent_path)
    siblings = list(parent[-1])
    siblings[idx : idx + 1] = [new_w] + list(moved)
    if parent_path == ():
        return BWTree(tuple(siblings))
    return tree.replace_at(parent_path, ("b", tuple(siblings)))


def _d_tree(tree):
    if tree.has_tails:
        raise ValueError("differential is defined on the no-tails class; "
                         "use tail_differential for trees with tails")
    pos = {e: k + 1 for k, e in enumerate(tree.white_edges())}
    terms = []
    for w_path, node in tree.iter_vertices():
        if node[0] != "w" or not node[2]:
            continue
        k = len(node[2])
        for j in range(k):
            sign = -1 if pos[w_path + (j,)] % 2 else 1
            terms.append((_collapse_in(tree, w_path, j), sign))
        sign = 1 if pos[w_path + (k - 1,)] % 2 else -1
        terms.append((_collapse_out(tree, w_path), sign))
    return TreeChain(terms)


# ---------------------------------------------------------------------------
# trees with tails: the foliage operator and its differential

# Calibrated against the Hochschild coboundary sign pattern (see tests):
# the count runs over the black-angle edges of the new tree up to and
# including the new tail edge, the root edge included.
_TAIL_SIGN_FLIP = 0  # global sign: (-1)^{count + _TAIL_SIGN_FLIP}


def _b_angle_edges(tree):
    """E_b_angle: every edge that is not an internal white edge."""
    out = []

    def rec(path, node, parent_white):
        internal_white = parent_white and node != ("b", ())
        if not internal_white:
            out.append(path)
        for k, child in enumerate(node[-1]):
            rec(path + (k,), child, node[0] == "w")

    for k, child in enumerate(tree.root_children):
        rec((k,), child, False)
    return out


def tail_differential(chain):
    """The coboundary of trees with tails: one face per variable slot.

    A tree with s tails (read in outside order as the variables of its flow
    chart) has s + 2 faces: the new tail multiplied onto the front of the
    root product, the split of each tail into a product of two (nested when
    the tail hangs on a white vertex, flattened into the ambient product
    when it hangs on a black one), and the new tail at the end of the root
    product; the face of variable index j carries (-1)^j.

    This reproduces the Hochschild coboundary of the tree's flow chart
    exactly (see tests); squares to zero on the flat-product normal form.
    """
    if isinstance(chain, BWTree):
        chain = TreeChain.single(chain)
    out = {}
    for tree, coeff in chain.terms.items():
        for t2, c2 in _d_tails_tree(tree):
            out[t2] = out.get(t2, 0) + coeff * c2
    return TreeChain(out)


def _d_tails_tree(tree):
    top = tree.top
    tails = tree.tails()
    s = len(tails)
    terms = []
    front = ("b", (("b", ()),) + top[1])
    terms.append((BWTree((front,)), 1))
    for j, path in enumerate(tails, start=1):
        parent = tree.node_at(path[:-1])
        if parent[0] == "w":
            split = tree.replace_at(path, ("b", (("b", ()), ("b", ()))))
        else:
            children = list(parent[-1])
            children.insert(path[-1], ("b", ()))
            split = tree.replace_at(path[:-1], ("b", tuple(children)))
        terms.append((split, -1 if j % 2 else 1))
    back = ("b", top[1] + (("b", ()),))
    terms.append((BWTree((back,)), -1 if (s + 1) % 2 else 1))
    return terms


def foliage(tree, tail_budget):
    """Truncated foliage operator: sprinkle up to ``tail_budget`` tails.

    Tails are added to white vertices in every planar position; every term
    has coefficient +1.  Terms are tagged by their total tail count through
    the tree itself.
    """
    def sprinkle(node, budget):
        # returns list of (new_node, tails_used)
        if node[0] == "w":
            child_opts = [sprinkle(c, budget) for c in node[2]]
            out = []
            for combo in itertools.product(*child_opts) if child_opts else [()]:
                used = sum(u for _, u in combo)
                if used > budget:
                    continue
                rebuilt = tuple(c for c, _ in combo)
                for extra in range(budget - used + 1):
                    for gaps in _weak_compositions(extra, len(rebuilt) + 1):
                        children = []
                        for g, child in zip(gaps, rebuilt + (None,)):
                            children.extend([("b", ())] * g)
                            if child is not None:
                                children.append(child)
                        out.append((("w", node[1], tuple(children)), used + extra))
            return out
        if node == ("b", ()):
            return [(node, 0)]
        child_opts = [sprinkle(c, budget) for c in node[1]]
        out = []
        for combo in itertools.product(*child_opts):
            used = sum(u for _, u in combo)
            if used <= budget:
                out.append((("b", tuple(c for c, _ in combo)), used))
        return out
    results = {}
    for top, _used in sprinkle(tree.top, tail_budget):
        t = BWTree((top,))
        results[t] = results.get(t, 0) + 1
    return TreeChain(results)


def _weak_compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _weak_compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# symmetric group action and orientations


def sym_action(sigma, chain):
    """Relabel a chain by the permutation (1-based dict or sequence).

    In the Nat orientation the relabelling map is orientation-true, so the
    action carries no sign; signs appear only in orientation conversions and
    in actions on graded targets.
    """
    if not isinstance(sigma, dict):
        sigma = {j + 1: v for j, v in enumerate(sigma)}
    if isinstance(chain, BWTree):
        chain = TreeChain.single(chain)
    n = chain.n_lobes
    if n is not None and sorted(sigma) != list(range(1, n + 1)):
        raise ValueError("permutation size does not match the chain")
    return TreeChain({t.relabel(sigma): c for t, c in chain.terms.items()})


def _perm_parity(perm):
    perm = list(perm)
    parity = 0
    for a in range(len(perm)):
        for b in range(a + 1, len(perm)):
            if perm[a] > perm[b]:
                parity ^= 1
    return parity


def orientation_sign(tree, orientation):
    """Sign converting the Nat generator to the requested orientation."""
    base = orientation[:-4] if orientation.endswith("_bar") else orientation
    edges = tree.white_edges()
    k = len(edges)
    if base == "Nat":
        ranks = list(range(k))
    elif base == "Op":
        labels = {p: n[1] for p, n in tree.iter_vertices() if n[0] == "w"}
        order = sorted(range(k), key=lambda idx: (labels[edges[idx][:-1]], edges[idx]))
        ranks = [order.index(i) for i in range(k)]
    elif base == "Lab":
        def below_label(e):
            black = tree.node_at(e)
            whites = [c[1] for c in black[1] if c[0] == "w"]
            if len(whites) != 1:
                raise ValueError("Lab orientation needs a top-dimensional cell")
            return whites[0]
        order = sorted(range(k), key=lambda idx: below_label(edges[idx]))
        ranks = [order.index(i) for i in range(k)]
    else:
        raise ValueError("unknown orientation %r" % orientation)
    sign = -1 if _perm_parity(ranks) else 1
    if orientation.endswith("_bar"):
        if (k * (k - 1) // 2) % 2:
            sign = -sign
    return sign


def convert_orientation(chain, orientation):
    """Re-express a Nat-oriented chain in another orientation convention."""
    return TreeChain({t: c * orientation_sign(t, orientation) for t, c in chain.terms.items()})


# ---------------------------------------------------------------------------
# shifted complexes


@dataclass(frozen=True)
class ShiftMarker:
    """Degree annotation for white edges: +1 (L), -1 (L*), or 0."""

    shift: int

    def compose_sign(self, result_tree, right_labels, branch_root_paths):
        """Koszul sign the shift produces on a composition term."""
        if self.shift == 0:
            return 1
        return _interleave_sign(result_tree, right_labels, branch_root_paths)


def shift_compose_check(ta, i, tb):
    """S+ consistency: signed compose == L-bookkeeping over unsigned terms.

    Recomputes every term's sign by classifying the result's white edges from
    labels alone (no placement bookkeeping) and compares with compose().
    """
    signed = compose_trees(ta, i, tb, signed=True, engine="subtree")
    unsigned = compose_trees(ta, i, tb, signed=False, engine="subtree")
    n = tb.n_lobes
    right_range = set(range(i, i + n))
    rebuilt = {}
    for tree, coeff in unsigned.terms.items():
        sign = _interleave_sign_by_labels(tree, right_range)
        rebuilt[tree] = coeff * sign
    return signed == TreeChain(rebuilt)


def _interleave_sign_by_labels(tree, right_labels):
    """Side classification from labels: an edge is right-side when its
    parent is a right-side white and the black child leads to right-side
    whites only through its immediate white children."""
    label_at = {p: n[1] for p, n in tree.iter_vertices() if n[0] == "w"}
    inversions = 0
    seen_right = 0
    for e in tree.white_edges():
        parent_label = label_at[e[:-1]]
        black = tree.node_at(e)
        child_labels = [c[1] for c in black[1] if c[0] == "w"]
        is_right = parent_label in right_labels and all(
            lab in right_labels for lab in child_labels
        )
        if is_right:
            seen_right += 1
        else:
            inversions += seen_right
    return -1 if inversions % 2 else 1


# ---------------------------------------------------------------------------
# mixed-complex refinements
#
# When the white vertices carry graded decorations (weights), the composition
# and boundary signs refine: a white edge remains a degree-one slot, a white
# vertex contributes its weight, and every coefficient is the Koszul sign of
# the corresponding rearrangement of this weighted word.  Setting all vertex
# weights to zero recovers the plain chain-level signs.


def _w_symbols(tree, weights):
    """The W word of a tree: ("l", path) and ("f", label) with weights."""
    syms = []

    def rec(path, node, parent_white):
        if parent_white:
            syms.append((("l", path), 1))
        if node[0] == "w":
            syms.append((("f", node[1]), weights[node[1]]))
        for k, child in enumerate(node[-1]):
            rec(path + (k,), child, node[0] == "w")

    for k, child in enumerate(tree.root_children):
        rec((k,), child, False)
    return syms


def _koszul_of_words(src, tgt, weight_of):
    sign = 1
    pos = {sym: k for k, sym in enumerate(src)}
    perm = [pos[sym] for sym in tgt]
    for a in range(len(perm)):
        wa = weight_of(src[perm[a]])
        if wa % 2 == 0:
            continue
        for b in range(a + 1, len(perm)):
            if perm[a] > perm[b] and weight_of(src[perm[b]]) % 2:
                sign = -sign
    return sign


def compose_trees_mixed(ta, i, tb, weights):
    """Composition terms with mixed-complex coefficients.

    ``weights`` maps the labels 1..m+n-1 of the result to the degrees of the
    decorations (zero weights reduce to the signed chain composition).  Each
    term's coefficient is the Koszul sign of interleaving the word of tb
    (spliced at lobe i of ta) into the word of the term, white vertices
    weighted as given and white edges weighted one.
    """
    tb_shift, final = _relabel_for_composition(ta, i, tb)
    truncated, branches = tree_cut(ta, i)
    host = leaf_graft(truncated, i, tb_shift)
    vi = ta.labels()[i]
    c_tb = len(tb_shift.top[1])
    pp, idx = vi[:-1], vi[-1]

    def ta_to_host(path):
        if path[: len(pp)] == pp and len(path) > len(pp) and path[len(pp)] > idx:
            return pp + (path[len(pp)] + c_tb - 1,) + path[len(pp) + 1 :]
        return path

    def tb_to_host(path):
        return pp + (idx + path[1],) + path[2:]

    tb_word = []

    def rec_tb(path, node, parent_white):
        if parent_white:
            tb_word.append(("lh", tb_to_host(path)))
        if node[0] == "w":
            tb_word.append(("f", final[node[1]]))
        for k, child in enumerate(node[-1]):
            rec_tb(path + (k,), child, node[0] == "w")

    for k, child in enumerate(tb_shift.root_children):
        rec_tb((k,), child, False)

    splice = []

    def rec_ta(path, node, parent_white):
        if parent_white:
            if path[: len(vi)] == vi and len(path) > len(vi):
                splice.append(("lb", path[len(vi)], path[len(vi) + 1 :]))
            else:
                splice.append(("lh", ta_to_host(path)))
        if node[0] == "w":
            if node[1] == i:
                splice.extend(tb_word)
            else:
                splice.append(("f", final[node[1]]))
        for k, child in enumerate(node[-1]):
            rec_ta(path + (k,), child, node[0] == "w")

    for k, child in enumerate(ta.root_children):
        rec_ta((k,), child, False)

    def weight_of(sym):
        return weights[sym[1]] if sym[0] == "f" else 1

    tb_labels = sorted(tb_shift.labels())
    host_labels = host.labels()
    spots = []
    for lab in tb_labels:
        path = host_labels[lab]
        spots.extend((path, a) for a in range(-1, host.children_count(path)))
    host_edges = host.edge_paths()[1:]
    results = []
    for assignment in itertools.product(spots, repeat=len(branches)):
        tree, root_paths = _build_placement(host, branches, assignment)
        if not _placement_fe_valid(root_paths):
            continue
        new_paths = _host_edge_paths_after(host, host_edges, assignment, root_paths)
        res_to_host = dict(zip(new_paths, host_edges))
        roots = sorted(root_paths.items(), key=lambda kv: len(kv[1]), reverse=True)
        final_tree = tree.relabel(final)
        tgt = []

        def rec_res(path, node, parent_white):
            if parent_white:
                for j, p in roots:
                    if path[: len(p)] == p:
                        tgt.append(("lb", j, path[len(p) :]))
                        break
                else:
                    tgt.append(("lh", res_to_host[path]))
            if node[0] == "w":
                tgt.append(("f", node[1]))
            for k, child in enumerate(node[-1]):
                rec_res(path + (k,), child, node[0] == "w")

        for k, child in enumerate(final_tree.root_children):
            rec_res((k,), child, False)
        sign = _koszul_of_words(splice, tgt, weight_of)
        results.append((final_tree, sign))
    return results


def mixed_boundary(tree, weights):
    """Boundary faces of the weighted cell, as (face tree, coefficient).

    The coefficient of a face is read off the weighted word: collapsing the
    angle in front of an in-edge passes the remaining suffix of the word
    (and, for the first in-edge of a lobe, slides the branch past the
    lobe's decoration); the closing angle carries an extra minus sign.
    With all weights zero this equals (-1)^{|E_w|} times differential().
    """
    syms = _w_symbols(tree, weights)
    total = sum(w for _s, w in syms)
    prefix = {}
    run = 0
    for sym, w in syms:
        prefix[sym] = run
        run += w

    def subtree_weight(path):
        w = 0
        for sym, wt in syms:
            key = sym[1]
            if sym[0] == "l" and key[: len(path)] == path:
                w += wt
        for p, n in tree.iter_vertices():
            if n[0] == "w" and p[: len(path)] == path:
                w += weights[n[1]]
        return w

    out = []
    for w_path, node in tree.iter_vertices():
        if node[0] != "w" or not node[2]:
            continue
        kids = len(node[2])
        d_w = weights[node[1]]
        for j in range(kids):
            e = w_path + (j,)
            exponent = total - prefix[("l", e)] - 1
            if j == 0:
                exponent += d_w * (subtree_weight(e) - 1)
            sign = -1 if exponent % 2 else 1
            out.append((_collapse_in(tree, w_path, j), sign))
        e_last = w_path + (kids - 1,)
        exponent = total - prefix[("l", e_last)] - 1 + 1
        sign = -1 if exponent % 2 else 1
        out.append((_collapse_out(tree, w_path), sign))
    return out


def w_suffix_weights(tree, weights):
    """Suffix weight of the word after each white vertex's decoration."""
    syms = _w_symbols(tree, weights)
    total = sum(w for _s, w in syms)
    run = 0
    out = {}
    for sym, w in syms:
        run += w
        if sym[0] == "f":
            out[sym[1]] = total - run
    return out
