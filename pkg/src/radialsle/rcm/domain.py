"""Square-lattice domains for the random-cluster model.

A domain is a simply connected union of unit lattice faces, described by its
vertex and edge lists.  The outer boundary is traced counterclockwise at
construction time, and an even number of marked boundary vertices splits it
into arcs that alternate wired and free, starting wired from the first mark.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, GeometryError
from .connectivity import UnionFind


def _neighbors(coord):
    x, y = coord
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


@dataclass(frozen=True)
class PrimalDomain:
    """Finite simply connected face complex with optional marked points.

    vertices: lattice coordinates, edges: index pairs into ``vertices``.
    ``marked`` lists boundary vertex coordinates in counterclockwise order;
    arc k runs from mark k to mark k+1 and even-numbered arcs are wired.
    ``mesh`` is the physical edge length, carried for scaling bookkeeping.
    """

    vertices: tuple
    edges: tuple
    marked: tuple = ()
    mesh: float = 1.0
    marked_interior: tuple = None

    def __post_init__(self):
        verts = tuple((int(x), int(y)) for x, y in self.vertices)
        if len(set(verts)) != len(verts):
            raise DomainError("duplicate vertices")
        vindex = {c: i for i, c in enumerate(verts)}
        edges = tuple(tuple(sorted((int(a), int(b)))) for a, b in self.edges)
        if len(set(edges)) != len(edges):
            raise DomainError("duplicate edges")
        for a, b in edges:
            if not (0 <= a < len(verts) and 0 <= b < len(verts)) or a == b:
                raise DomainError(f"edge ({a}, {b}) out of range")
            xa, ya = verts[a]
            xb, yb = verts[b]
            if abs(xa - xb) + abs(ya - yb) != 1:
                raise DomainError(f"edge ({a}, {b}) is not a lattice bond")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_vindex", vindex)
        object.__setattr__(self, "_eindex",
                           {e: k for k, e in enumerate(edges)})

        uf = UnionFind(len(verts))
        for a, b in edges:
            uf.union(a, b)
        if len(verts) and uf.n_components() != 1:
            raise DomainError("domain graph is disconnected")

        faces = []
        edge_set = set(edges)
        for x, y in verts:
            corners = ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1))
            if all(c in vindex for c in corners):
                ids = [vindex[c] for c in corners]
                sides = [tuple(sorted((ids[k], ids[(k + 1) % 4])))
                         for k in range(4)]
                if all(s in edge_set for s in sides):
                    faces.append((x, y))
        object.__setattr__(self, "faces", tuple(sorted(faces)))
        if not self.faces:
            raise GeometryError("domain contains no unit face")
        if len(verts) - len(edges) + len(self.faces) != 1:
            raise GeometryError("domain is not simply connected")

        face_set = set(self.faces)
        on_face = set()
        for x, y in self.faces:
            for c in ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)):
                on_face.add(vindex[c])
        if len(on_face) != len(verts):
            raise GeometryError("vertex not on any face")

        # Boundary edges border exactly one face; orient them with that face
        # on the left so chaining them walks the outer cycle counterclockwise.
        succ = {}
        for a, b in edges:
            xa, ya = verts[a]
            xb, yb = verts[b]
            if ya == yb:
                lo = a if xa < xb else b
                hi = b if lo == a else a
                above = (verts[lo][0], ya) in face_set
                below = (verts[lo][0], ya - 1) in face_set
                if above and below:
                    continue
                if not (above or below):
                    raise GeometryError("edge not on any face")
                tail, head = (lo, hi) if above else (hi, lo)
            else:
                lo = a if ya < yb else b
                hi = b if lo == a else a
                west = (xa - 1, verts[lo][1]) in face_set
                east = (xa, verts[lo][1]) in face_set
                if west and east:
                    continue
                if not (west or east):
                    raise GeometryError("edge not on any face")
                tail, head = (lo, hi) if west else (hi, lo)
            if tail in succ:
                raise GeometryError("boundary pinches at a vertex")
            succ[tail] = head

        start = min(succ, key=lambda i: (verts[i][1], verts[i][0]))
        cycle = [start]
        cur = succ[start]
        while cur != start:
            cycle.append(cur)
            cur = succ[cur]
        if len(cycle) != len(succ):
            raise GeometryError("boundary is not a single cycle")
        object.__setattr__(self, "boundary", tuple(cycle))

        marked = tuple((int(x), int(y)) for x, y in self.marked)
        object.__setattr__(self, "marked", marked)
        if marked:
            if len(marked) % 2 or len(marked) < 2:
                raise DomainError("need an even number of marked points")
            if len(set(marked)) != len(marked):
                raise DomainError("repeated marked point")
            bpos = {v: k for k, v in enumerate(cycle)}
            pos = []
            for c in marked:
                if c not in vindex or vindex[c] not in bpos:
                    raise DomainError(f"marked point {c} is not on the "
                                      "boundary")
                pos.append(bpos[vindex[c]])
            rel = [(p - pos[0]) % len(cycle) for p in pos]
            if rel != sorted(rel):
                raise GeometryError("marked points are not in "
                                    "counterclockwise order")
            for c in marked:
                if self.degree(vindex[c]) != 3:
                    raise GeometryError(f"marked point {c} sits at a corner; "
                                        "it needs exactly one outward edge")
            object.__setattr__(self, "_marked_pos", tuple(pos))

        if self.marked_interior is not None:
            z = (int(self.marked_interior[0]), int(self.marked_interior[1]))
            object.__setattr__(self, "marked_interior", z)
            if z not in vindex or vindex[z] in set(cycle):
                raise DomainError("marked_interior must be an interior "
                                  "vertex")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    def vertex_id(self, coord):
        try:
            return self._vindex[(int(coord[0]), int(coord[1]))]
        except KeyError:
            raise DomainError(f"vertex {tuple(coord)} is not in the domain")

    def edge_id(self, a, b):
        try:
            return self._eindex[tuple(sorted((a, b)))]
        except KeyError:
            raise DomainError(f"no edge between vertices {a} and {b}")

    def degree(self, i):
        c = 0
        for n in _neighbors(self.vertices[i]):
            j = self._vindex.get(n)
            if j is not None and tuple(sorted((i, j))) in self._eindex:
                c += 1
        return c

    def arcs(self):
        """Boundary arcs between consecutive marks, endpoints included."""
        if not self.marked:
            raise DomainError("domain has no marked points")
        pos = self._marked_pos
        nb = len(self.boundary)
        out = []
        for k in range(len(pos)):
            a, b = pos[k], pos[(k + 1) % len(pos)]
            run = [self.boundary[a]]
            while a != b:
                a = (a + 1) % nb
                run.append(self.boundary[a])
            out.append(tuple(run))
        return tuple(out)

    def edge_array(self):
        return np.array(self.edges, dtype=np.int64)


@dataclass(frozen=True)
class BoundaryPartition:
    """Wired parts of the boundary; unlisted boundary vertices stay free."""

    wired: tuple = ()

    def __post_init__(self):
        parts = tuple(frozenset(int(i) for i in p) for p in self.wired)
        seen = set()
        for p in parts:
            if not p:
                raise DomainError("empty wired part")
            if p & seen:
                raise DomainError("wired parts overlap")
            seen |= p
        object.__setattr__(self, "wired", parts)


@dataclass(frozen=True)
class EdgeConfig:
    """Open/closed state per edge, aligned with the domain's edge list."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise DomainError("edge states must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_array(cls, arr):
        return cls(tuple(int(b) for b in np.asarray(arr).ravel()))

    def as_array(self):
        return np.array(self.bits, dtype=bool)

    @property
    def n_open(self):
        return sum(self.bits)

    def __len__(self):
        return len(self.bits)


def partition_from_arcs(domain):
    """Alternating partition: even arcs wired, odd arcs free."""
    arcs = domain.arcs()
    return BoundaryPartition(tuple(frozenset(arcs[k])
                                   for k in range(0, len(arcs), 2)))


def wired_partition(domain):
    """Whole boundary in a single wired part."""
    return BoundaryPartition((frozenset(domain.boundary),))


def free_partition():
    return BoundaryPartition(())


def check_partition(domain, pi):
    bset = set(domain.boundary)
    for p in pi.wired:
        if not p <= bset:
            raise DomainError("wired part contains a non-boundary vertex")


def check_config(domain, omega):
    if len(omega) != domain.n_edges:
        raise DomainError(f"configuration has {len(omega)} bits for "
                          f"{domain.n_edges} edges")


def contracted_nodes(domain, pi):
    """Vertex-to-node map after gluing each wired part to one node.

    Returns (n_nodes, node_of) with wired nodes occupying the lowest ids,
    one per part, followed by all remaining vertices.
    """
    check_partition(domain, pi)
    node_of = np.empty(domain.n_vertices, dtype=np.int64)
    node_of.fill(-1)
    for k, p in enumerate(pi.wired):
        for i in p:
            node_of[i] = k
    nxt = len(pi.wired)
    for i in range(domain.n_vertices):
        if node_of[i] < 0:
            node_of[i] = nxt
            nxt += 1
    return nxt, node_of


def contracted_edges(domain, pi):
    """(n_nodes, node_of, edge node pairs) for the contracted graph."""
    n_nodes, node_of = contracted_nodes(domain, pi)
    e = domain.edge_array()
    return n_nodes, node_of, np.stack((node_of[e[:, 0]], node_of[e[:, 1]]),
                                      axis=1)


def _face_complex(faces):
    faces = sorted(set((int(x), int(y)) for x, y in faces))
    verts = set()
    for x, y in faces:
        verts.update(((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)))
    verts = sorted(verts)
    vid = {c: i for i, c in enumerate(verts)}
    edges = set()
    for x, y in faces:
        ids = [vid[(x, y)], vid[(x + 1, y)], vid[(x + 1, y + 1)],
               vid[(x, y + 1)]]
        for k in range(4):
            edges.add(tuple(sorted((ids[k], ids[(k + 1) % 4]))))
    return tuple(verts), tuple(sorted(edges))


def build_domain(spec):
    """Construct a domain from a shape description.

    ``spec`` is a mapping with a ``shape`` key:

    - ``{"shape": "square", "side": L}``: L by L vertices, (L-1)^2 faces;
    - ``{"shape": "disc", "radius": R}``: faces whose corners all lie within
      distance R of the origin;
    - ``{"shape": "faces", "faces": [[x, y], ...]}``: explicit face list by
      lower-left corner.

    Optional keys: ``marked`` (counterclockwise boundary coordinates,
    alternating arcs start wired), ``interior`` (a distinguished interior
    vertex), ``mesh``.
    """
    if not isinstance(spec, dict) or "shape" not in spec:
        raise DomainError("domain spec needs a 'shape' key")
    shape = spec["shape"]
    known = {"shape", "marked", "interior", "mesh", "side", "radius", "faces"}
    extra = set(spec) - known
    if extra:
        raise DomainError(f"unknown domain spec keys: {sorted(extra)}")
    if shape == "square":
        side = int(spec.get("side", 0))
        if side < 2:
            raise DomainError("square domain needs side >= 2 vertices")
        faces = [(x, y) for x in range(side - 1) for y in range(side - 1)]
    elif shape == "disc":
        r = float(spec.get("radius", 0.0))
        if r < np.sqrt(2.0):
            raise DomainError("disc radius too small to hold a face")
        m = int(np.ceil(r))
        faces = []
        for x in range(-m - 1, m + 1):
            for y in range(-m - 1, m + 1):
                corners = ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1))
                if all(cx * cx + cy * cy <= r * r for cx, cy in corners):
                    faces.append((x, y))
    elif shape == "faces":
        faces = spec.get("faces", ())
        if not faces:
            raise DomainError("explicit shape needs a nonempty face list")
    else:
        raise DomainError(f"unknown shape {shape!r}")
    verts, edges = _face_complex(faces)
    return PrimalDomain(vertices=verts, edges=edges,
                        marked=tuple(tuple(c) for c in spec.get("marked", ())),
                        mesh=float(spec.get("mesh", 1.0)),
                        marked_interior=(tuple(spec["interior"])
                                         if spec.get("interior") is not None
                                         else None))
