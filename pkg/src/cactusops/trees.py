"""Planted planar black/white trees, rooted trees, and integer tree chains.

The basic object is a planted planar tree with black and white vertices: the
root is a distinguished black vertex carrying exactly one child, every vertex
holds its children in a fixed planar order, and white vertices carry the
labels 1..n.  Trees are written in a bracket grammar,

    tree  := "b[" node* "]"                outermost bracket = root vertex
    node  := "b[" node* "]" | "w" INT "[" node* "]" | "t"

with children listed in planar order and "t" denoting a tail (a black leaf).
The canonical serialization *is* the identity of a tree: two trees are equal
iff their literals are equal.

Conventions used throughout:

* vertices are addressed by paths, tuples of child indices from the root
  vertex; the path also names the edge from that vertex to its parent, so the
  root edge is (0,) on a planted tree and the root vertex () has no edge;
* the outside path (the planar traversal that walks every edge twice) orders
  edges by first encounter, which for paths is exactly lexicographic order;
* an edge is white when its parent endpoint is white, i.e. white edges are
  the incoming edges of white vertices, and the cell dimension of a tree is
  its white edge count |E_w| = sum of white arities.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "BWTree",
    "RootedTree",
    "TreeChain",
    "parse_tree",
    "parse_rooted",
    "parse_forest",
    "parse_chain",
    "outside_order",
    "contract_edge",
    "branch",
    "cut",
    "cppin",
    "st_infinity",
    "enumerate_trees",
    "enumerate_shapes",
]

# A node is ("b", children) or ("w", label, children); a tail is ("b", ()).

_TOKEN = re.compile(r"\s*(b\[|w(\d+)\[|t|\])")


class TreeSyntaxError(ValueError):
    pass


def _node_children(node):
    return node[-1]


def _node_is_white(node):
    return node[0] == "w"


def _serialize_node(node):
    if node[0] == "w":
        inner = "".join(_serialize_node(c) for c in node[2])
        label = node[1] if node[1] is not None else ""
        return "w%s[%s]" % (label, inner)
    if not node[1]:
        return "t"
    return "b[%s]" % "".join(_serialize_node(c) for c in node[1])


@dataclass(frozen=True)
class BWTree:
    """An immutable planar planted b/w tree (root vertex implicit)."""

    root_children: tuple

    @property
    def literal(self):
        return "b[%s]" % "".join(_serialize_node(c) for c in self.root_children)

    def __str__(self):
        return self.literal

    def __lt__(self, other):
        return self.literal < other.literal

    # -- structure access ------------------------------------------------

    @property
    def planted(self):
        return len(self.root_children) == 1

    @property
    def top(self):
        if not self.planted:
            raise ValueError("tree is not planted: %s" % self.literal)
        return self.root_children[0]

    def node_at(self, path):
        node = ("b", self.root_children)
        for i in path:
            children = _node_children(node)
            node = children[i]
        return node

    def is_white(self, path):
        return _node_is_white(self.node_at(path))

    def children_count(self, path):
        return len(_node_children(self.node_at(path)))

    def iter_vertices(self):
        """Yield (path, node) in depth-first (outside path) order, root omitted."""

        def rec(path, node):
            yield path, node
            for i, child in enumerate(_node_children(node)):
                yield from rec(path + (i,), child)

        for i, child in enumerate(self.root_children):
            yield from rec((i,), child)

    def edge_paths(self):
        """All edges in the outside-path (first encounter) order."""
        return [p for p, _ in self.iter_vertices()]

    def white_edges(self):
        """Incoming edges of white vertices, in outside-path order."""
        out = []

        def rec(path, node, parent_white):
            if parent_white:
                out.append(path)
            for i, child in enumerate(_node_children(node)):
                rec(path + (i,), child, _node_is_white(node))

        for i, child in enumerate(self.root_children):
            rec((i,), child, False)
        return out

    @property
    def white_edge_count(self):
        return len(self.white_edges())

    def white_vertices(self):
        return [(p, n) for p, n in self.iter_vertices() if _node_is_white(n)]

    def labels(self):
        """Mapping label -> path of the white vertex carrying it."""
        out = {}
        for path, node in self.iter_vertices():
            if _node_is_white(node) and node[1] is not None:
                if node[1] in out:
                    raise ValueError("duplicate label %d in %s" % (node[1], self.literal))
                out[node[1]] = path
        return out

    @property
    def n_lobes(self):
        return sum(1 for _, n in self.iter_vertices() if _node_is_white(n))

    def tails(self):
        return [p for p, n in self.iter_vertices() if n == ("b", ())]

    @property
    def has_tails(self):
        return bool(self.tails())

    # -- class predicates --------------------------------------------------

    def is_bipartite(self, allow_tails=False):
        """Planted, root child black, non-tail edges joining black and white."""
        if not self.planted or _node_is_white(self.top):
            return False
        for path, node in self.iter_vertices():
            if node == ("b", ()):
                if not allow_tails:
                    return False
                continue
            if len(path) == 1:
                continue
            parent = self.node_at(path[:-1])
            if _node_is_white(parent) == _node_is_white(node):
                return False
        return True

    def is_stable(self):
        """No black vertex of arity one except possibly the root side."""
        for path, node in self.iter_vertices():
            if len(path) > 1 and not _node_is_white(node) and len(node[1]) == 1:
                return False
        return True

    def is_labelled(self):
        labels = self.labels()
        n = self.n_lobes
        return sorted(labels) == list(range(1, n + 1))

    def check_class(self, allow_tails=False):
        if not self.is_bipartite(allow_tails=allow_tails):
            raise ValueError("not a planted bipartite b/w tree: %s" % self.literal)
        if not self.is_labelled():
            raise ValueError("labels are not a bijection with 1..n: %s" % self.literal)

    # -- editing -----------------------------------------------------------

    def replace_at(self, path, new_node):
        def rec(node, rest):
            if not rest:
                return new_node
            i = rest[0]
            children = list(_node_children(node))
            children[i] = rec(children[i], rest[1:])
            if _node_is_white(node):
                return ("w", node[1], tuple(children))
            return ("b", tuple(children))

        top = ("b", self.root_children)
        return BWTree(_node_children(rec(top, path)))

    def relabel(self, mapping):
        """Apply label -> label mapping to all white vertices."""

        def rec(node):
            if _node_is_white(node):
                lab = mapping.get(node[1], node[1]) if node[1] is not None else None
                return ("w", lab, tuple(rec(c) for c in node[2]))
            return ("b", tuple(rec(c) for c in node[1]))

        return BWTree(tuple(rec(c) for c in self.root_children))


def parse_tree(text):
    """Parse a tree literal; raises TreeSyntaxError on malformed input."""
    pos = 0
    n = len(text)

    def parse_node():
        nonlocal pos
        m = _TOKEN.match(text, pos)
        if not m:
            raise TreeSyntaxError("unexpected input at %d in %r" % (pos, text))
        tok = m.group(1)
        pos = m.end()
        if tok == "t":
            return ("b", ())
        if tok == "]":
            raise TreeSyntaxError("unexpected ']' at %d in %r" % (pos, text))
        children = []
        while True:
            m2 = _TOKEN.match(text, pos)
            if not m2:
                raise TreeSyntaxError("unterminated bracket in %r" % text)
            if m2.group(1) == "]":
                pos = m2.end()
                break
            children.append(parse_node())
        if tok == "b[":
            if not children:
                raise TreeSyntaxError("black leaves must be written 't' (%r)" % text)
            return ("b", tuple(children))
        return ("w", int(m.group(2)), tuple(children))

    m = _TOKEN.match(text, pos)
    if not m or m.group(1) != "b[":
        raise TreeSyntaxError("tree literal must start with 'b[': %r" % text)
    pos = m.end()
    children = []
    while True:
        m2 = _TOKEN.match(text, pos)
        if not m2:
            raise TreeSyntaxError("unterminated root bracket in %r" % text)
        if m2.group(1) == "]":
            pos = m2.end()
            break
        children.append(parse_node())
    if text[pos:].strip():
        raise TreeSyntaxError("trailing input after tree literal: %r" % text)
    return BWTree(tuple(children))


def outside_order(tree):
    """The order induced by the outside path on vertices and edges.

    Returns a list of ("edge", path) / ("vertex", path) entries; the first
    element is the root edge and the last is the root vertex.
    """
    if not tree.planted:
        raise ValueError("outside order requires a planted tree")
    seq = []
    for path, _node in tree.iter_vertices():
        seq.append(("edge", path))
        seq.append(("vertex", path))
    seq.append(("vertex", ()))
    return seq


def contract_edge(tree, edge):
    """Contract the edge addressed by ``edge`` (the path of its lower vertex).

    The lower vertex's children are spliced into the parent's child list at
    the position of the contracted edge, preserving the planar order.  The
    merged vertex keeps the parent's colour and label.
    """
    node = tree.node_at(edge)
    parent_path = edge[:-1]
    parent = tree.node_at(parent_path)
    idx = edge[-1]
    children = list(_node_children(parent))
    children[idx : idx + 1] = list(_node_children(node))
    if parent_path == ():
        return BWTree(tuple(children))
    if _node_is_white(parent):
        merged = ("w", parent[1], tuple(children))
    else:
        merged = ("b", tuple(children))
    return tree.replace_at(parent_path, merged)


def branch(tree, edge):
    """The branch br(e): everything above the white edge ``e``, planted.

    The white parent of ``e`` is recoloured black and becomes the root, so
    ``e`` turns into the root edge of the result.
    """
    parent = tree.node_at(edge[:-1])
    if not _node_is_white(parent):
        raise ValueError("branch is defined for white edges only")
    return BWTree((tree.node_at(edge),))


def cut(tree, label):
    """Cut all branches at the white vertex with the given label.

    Returns (truncated tree, ordered list of branches); the vertex becomes a
    leaf, the branches are planted trees ordered by the planar order at the
    vertex.
    """
    path = tree.labels()[label]
    node = tree.node_at(path)
    branches = [BWTree((child,)) for child in node[2]]
    truncated = tree.replace_at(path, ("w", node[1], ()))
    return truncated, branches


# ---------------------------------------------------------------------------
# rooted (non-planar) trees


@dataclass(frozen=True)
class RootedTree:
    """A rooted tree in canonical form; children sorted, labels optional.

    node := (label_or_None, children tuple); ``canonical`` sorts children by
    (unlabelled serialization, labelled serialization) so the representative
    of each isomorphism class is unique, labels compared last.
    """

    node: tuple

    @staticmethod
    def build(label, children):
        return RootedTree(_canon_rooted((label, tuple(c.node for c in children))))

    @staticmethod
    def leaf(label=None):
        return RootedTree((label, ()))

    @property
    def label(self):
        return self.node[0]

    @property
    def children(self):
        return [RootedTree(c) for c in self.node[1]]

    @property
    def size(self):
        return _rooted_size(self.node)

    @property
    def literal(self):
        return _serialize_rooted(self.node)

    def __str__(self):
        return self.literal

    def __lt__(self, other):
        return _rooted_key(self.node) < _rooted_key(other.node)

    def labels(self):
        out = []

        def rec(node):
            if node[0] is not None:
                out.append(node[0])
            for c in node[1]:
                rec(c)

        rec(self.node)
        return sorted(out)

    def is_fully_labelled(self):
        labs = self.labels()
        return labs == list(range(1, self.size + 1))

    def relabel(self, mapping):
        def rec(node):
            lab = mapping.get(node[0], node[0])
            return (lab, tuple(rec(c) for c in node[1]))

        return RootedTree(_canon_rooted(rec(self.node)))

    def strip_labels(self):
        def rec(node):
            return (None, tuple(rec(c) for c in node[1]))

        return RootedTree(_canon_rooted(rec(self.node)))

    def symmetry_factor(self):
        """Product over vertices of multiplicities m! of repeated child subtrees."""

        def rec(node):
            out = 1
            counts = {}
            for c in node[1]:
                out *= rec(c)
                counts[c] = counts.get(c, 0) + 1
            for m in counts.values():
                for j in range(2, m + 1):
                    out *= j
            return out

        if self.labels():
            return 1
        return rec(self.node)


def _rooted_size(node):
    return 1 + sum(_rooted_size(c) for c in node[1])


def _serialize_rooted(node):
    label = node[0] if node[0] is not None else ""
    return "r%s[%s]" % (label, "".join(_serialize_rooted(c) for c in node[1]))


def _shape_serial(node):
    return "r[%s]" % "".join(_shape_serial(c) for c in node[1])


def _rooted_key(node):
    return (_shape_serial(node), _serialize_rooted(node))


def _canon_rooted(node):
    children = tuple(sorted((_canon_rooted(c) for c in node[1]), key=_rooted_key))
    return (node[0], children)


_ROOTED_TOKEN = re.compile(r"\s*(r(\d*)\[|\])")


def parse_rooted(text, keep_order=False):
    """Parse a rooted tree literal r<label?>[...]; canonicalizes by default."""
    pos = 0

    def parse_node():
        nonlocal pos
        m = _ROOTED_TOKEN.match(text, pos)
        if not m or m.group(1) == "]":
            raise TreeSyntaxError("expected 'r[' at %d in %r" % (pos, text))
        label = int(m.group(2)) if m.group(2) else None
        pos = m.end()
        children = []
        while True:
            m2 = _ROOTED_TOKEN.match(text, pos)
            if not m2:
                raise TreeSyntaxError("unterminated bracket in %r" % text)
            if m2.group(1) == "]":
                pos = m2.end()
                break
            children.append(parse_node())
        return (label, tuple(children))

    node = parse_node()
    if text[pos:].strip():
        raise TreeSyntaxError("trailing input after rooted tree: %r" % text)
    return RootedTree(node if keep_order else _canon_rooted(node))


def parse_forest(text):
    """Parse a '*'-joined multiset of rooted-tree literals."""
    parts = [p for p in text.split("*") if p.strip()]
    return tuple(sorted((parse_rooted(p) for p in parts), key=lambda t: _rooted_key(t.node)))


# ---------------------------------------------------------------------------
# integer chains of b/w trees


class TreeChain:
    """A formal integer combination of b/w trees, homogeneous in (n, |E_w|)."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        data = {}
        if terms:
            for tree, coeff in (terms.items() if isinstance(terms, dict) else terms):
                if coeff:
                    data[tree] = data.get(tree, 0) + coeff
        self.terms = {t: c for t, c in data.items() if c}
        self._check_homogeneous()

    def _check_homogeneous(self):
        # the no-tails class is graded by (lobes, white edges); with tails
        # present (foliage truncations) only the lobe count is fixed
        if any(t.has_tails for t in self.terms):
            grades = {t.n_lobes for t in self.terms}
        else:
            grades = {(t.n_lobes, t.white_edge_count) for t in self.terms}
        if len(grades) > 1:
            raise ValueError("inhomogeneous chain: grades %s" % sorted(grades))

    @staticmethod
    def single(tree, coeff=1):
        return TreeChain({tree: coeff})

    @staticmethod
    def zero():
        return TreeChain({})

    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        if self.is_zero:
            return None
        return next(iter(self.terms)).white_edge_count

    @property
    def n_lobes(self):
        if self.is_zero:
            return None
        return next(iter(self.terms)).n_lobes

    def __add__(self, other):
        data = dict(self.terms)
        for t, c in other.terms.items():
            data[t] = data.get(t, 0) + c
        return TreeChain(data)

    def __sub__(self, other):
        return self + (other * -1)

    def __mul__(self, scalar):
        return TreeChain({t: c * scalar for t, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __eq__(self, other):
        return isinstance(other, TreeChain) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def map_trees(self, fn):
        """Extend a tree -> TreeChain map linearly."""
        out = {}
        for tree, coeff in self.terms.items():
            for t2, c2 in fn(tree).terms.items():
                out[t2] = out.get(t2, 0) + coeff * c2
        return TreeChain(out)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda tc: tc[0].literal)

    @property
    def literal(self):
        if self.is_zero:
            return "0"
        return " ".join("%+d*%s" % (c, t.literal) for t, c in self.sorted_terms())

    def __str__(self):
        return self.literal

    def __repr__(self):
        return "TreeChain(%s)" % self.literal


def parse_chain(text):
    """Parse a chain literal '+1*b[...] -2*b[...]' (or a bare tree literal)."""
    text = text.strip()
    if text == "0":
        return TreeChain.zero()
    if text.startswith("b["):
        return TreeChain.single(parse_tree(text))
    terms = []
    for piece in text.split():
        if "*" not in piece:
            raise TreeSyntaxError("bad chain term %r" % piece)
        coeff, lit = piece.split("*", 1)
        terms.append((parse_tree(lit), int(coeff)))
    return TreeChain(terms)


# ---------------------------------------------------------------------------
# maps between tree classes


def cppin(rooted):
    """Plant, pin, colour and expand a fully labelled rooted tree.

    The result is the sum over all pinnings (orderings of every vertex's
    children) of the bipartite planted planar tree obtained by colouring all
    vertices white, planting with a black root, and inserting a black vertex
    into every edge.  All coefficients are +1 and every term has
    |E_w| = n - 1 (a top-dimensional cell).
    """
    if not rooted.is_fully_labelled():
        raise ValueError("cppin requires a fully labelled rooted tree")

    def expansions(node):
        label, children = node
        child_options = [expansions(c) for c in children]
        out = []
        for perm in itertools.permutations(range(len(children))):
            for combo in itertools.product(*(child_options[i] for i in perm)):
                out.append(("w", label, tuple(("b", (sub,)) for sub in combo)))
        return out or [("w", label, ())]

    terms = [(BWTree((("b", (white,)),)), 1) for white in expansions(rooted.node)]
    return TreeChain(terms)


def st_infinity(tree):
    """Collapse a stable b/w tree to its bipartite image.

    Kills trees with a black vertex of arity > 2, contracts black-black
    edges (except the root edge, which keeps the tree planted, and tail
    edges, which keep variable slots intact), and inserts a black vertex
    into every white-white edge.
    """
    if not tree.planted:
        raise ValueError("st_infinity requires a planted tree")
    for _path, node in tree.iter_vertices():
        if not _node_is_white(node) and node != ("b", ()) and len(node[1]) > 2:
            return TreeChain.zero()

    def rec(node, parent_white):
        if _node_is_white(node):
            children = tuple(rec(c, True) for c in node[2])
            white = ("w", node[1], children)
            return ("b", (white,)) if parent_white else white
        if node == ("b", ()):
            return node
        merged = []
        for c in node[1]:
            sub = rec(c, False)
            if _node_is_white(sub) or sub == ("b", ()):
                merged.append(sub)
            else:
                merged.extend(sub[1])  # black-black edge: splice children up
        return ("b", tuple(merged))

    top = rec(tree.top, False)
    if _node_is_white(top):
        top = ("b", (top,))
    return TreeChain.single(BWTree((top,)))


# ---------------------------------------------------------------------------
# enumeration


def _compositions(total, parts):
    """Ordered compositions of ``total`` into ``parts`` positive integers."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


_shape_cache = {}


def _white_shapes(n):
    """Shapes of white-rooted subtrees with n white vertices (labels None)."""
    if n in _shape_cache:
        return _shape_cache[n]
    out = []
    for k in range(0, n):
        for comp in _compositions(n - 1, k):
            for blacks in itertools.product(*(_black_shapes(m) for m in comp)):
                out.append(("w", None, tuple(blacks)))
    _shape_cache[n] = out
    return out


_black_cache = {}


def _black_shapes(n):
    """Shapes of black vertices holding >= 1 white subtrees, n whites total."""
    if n in _black_cache:
        return _black_cache[n]
    out = []
    for k in range(1, n + 1):
        for comp in _compositions(n, k):
            for whites in itertools.product(*(_white_shapes(m) for m in comp)):
                out.append(("b", tuple(whites)))
    _black_cache[n] = out
    return out


def enumerate_shapes(n):
    """All unlabelled shapes of planted bipartite no-tail trees, n lobes."""
    return [BWTree((shape,)) for shape in _black_shapes(n)]


def enumerate_trees(n, k=None):
    """All labelled trees in the bipartite planted no-tails class.

    Returns the trees with n lobes (and |E_w| = k when given), deduplicated
    by canonical serialization and sorted by literal.
    """
    if n < 1:
        raise ValueError("lobe count must be >= 1")
    out = {}
    for shape in enumerate_shapes(n):
        if k is not None and shape.white_edge_count != k:
            continue
        whites = [p for p, node in shape.iter_vertices() if _node_is_white(node)]
        for perm in itertools.permutations(range(1, n + 1)):
            tree = shape
            for path, lab in zip(whites, perm):
                node = tree.node_at(path)
                tree = tree.replace_at(path, ("w", lab, node[2]))
            out[tree.literal] = tree
    return [out[lit] for lit in sorted(out)]


UNIT_TREE = BWTree((("b", (("w", 1, ()),)),))


def unit_tree():
    """The one-lobe tree b[b[w1[]]], the operad unit."""
    return UNIT_TREE
