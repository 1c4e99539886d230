//! Stable graphs: data model, invariant checks, rigidifications, extension,
//! fusing moves, canonical forms and enumeration of trivalent graphs.
//!
//! Every edge carries a persisted orientation `tail -> head`. The oriented
//! edges are `+e` (pointing at the head) and `-e` (pointing at the tail), and
//! `v_h` is the vertex an oriented edge points at, so `v_{+e}` is the head.
//! A *branch* at a vertex is an oriented edge pointing at it or a tail
//! ending there; a loop contributes both `+e` and `-e`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = u32;
pub type EdgeId = u32;
pub type TailId = u32;

/// Largest `2g - 2 + n` accepted by [`enumerate_trivalent`] unless overridden.
pub const DEFAULT_ENUMERATION_BOUND: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("malformed graph: {}", .0.join("; "))]
    Structural(Vec<String>),
    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex {vertex} has degree {degree}, expected {expected}")]
    Degree {
        vertex: VertexId,
        degree: u32,
        expected: &'static str,
    },
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("edge {0} is a loop; fusing moves need distinct endpoints")]
    LoopEdge(EdgeId),
    #[error("edge {0} is not a loop")]
    NotALoop(EdgeId),
    #[error("edge id {0} already used")]
    EdgeIdClash(EdgeId),
    #[error("type ({g},{n}) is unstable: 2g-2+n must be positive")]
    UnstableType { g: u32, n: u32 },
    #[error("type ({g},{n}) exceeds the enumeration bound 2g-2+n <= {bound}")]
    BoundExceeded { g: u32, n: u32, bound: u32 },
    #[error("no rigidification exists (exhaustive search failed)")]
    RigidificationFailed,
    #[error("invalid rigidification: {0}")]
    InvalidRigidification(String),
    #[error("cannot parse branch {0:?}")]
    BranchParse(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dir {
    Plus,
    Minus,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::Plus => Dir::Minus,
            Dir::Minus => Dir::Plus,
        }
    }
}

/// An oriented edge `+e` or `-e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdge {
    pub edge: EdgeId,
    pub dir: Dir,
}

impl HalfEdge {
    pub fn plus(edge: EdgeId) -> Self {
        HalfEdge { edge, dir: Dir::Plus }
    }

    pub fn minus(edge: EdgeId) -> Self {
        HalfEdge { edge, dir: Dir::Minus }
    }

    pub fn reverse(self) -> Self {
        HalfEdge {
            edge: self.edge,
            dir: self.dir.flip(),
        }
    }
}

impl fmt::Display for HalfEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.dir == Dir::Plus { '+' } else { '-' };
        write!(f, "{s}e{}", self.edge)
    }
}

impl FromStr for HalfEdge {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Branch>()? {
            Branch::Half(h) => Ok(h),
            Branch::Tail(_) => Err(GraphError::BranchParse(s.to_string())),
        }
    }
}

/// Something incident at a vertex: an oriented edge pointing at it or a tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Half(HalfEdge),
    Tail(TailId),
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Half(h) => write!(f, "{h}"),
            Branch::Tail(t) => write!(f, "t{t}"),
        }
    }
}

/// Accepts `+e3`, `-e3`, `+3`, `-3` and `t2`.
impl FromStr for Branch {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let err = || GraphError::BranchParse(s.to_string());
        if let Some(rest) = t.strip_prefix('t') {
            return rest.parse().map(Branch::Tail).map_err(|_| err());
        }
        let (dir, rest) = if let Some(r) = t.strip_prefix('+') {
            (Dir::Plus, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (Dir::Minus, r)
        } else {
            return Err(err());
        };
        let rest = rest.strip_prefix('e').unwrap_or(rest);
        let edge = rest.parse().map_err(|_| err())?;
        Ok(Branch::Half(HalfEdge { edge, dir }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tail {
    pub end: VertexId,
    pub num: u32,
}

/// A graph with vertices, oriented edges and numbered tails.
///
/// Construction only enforces well-formedness (ids resolve, numbering is a
/// bijection onto `1..=#T`). Connectivity and stability are checked by
/// [`StableGraph::validate`], so unstable graphs such as a single vertex with
/// one loop can still be represented.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StableGraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, Edge>,
    tails: BTreeMap<TailId, Tail>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub id: EdgeId,
    pub ends: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailJson {
    pub id: TailId,
    pub end: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num: Option<u32>,
}

/// Wire format. Loops are written with a single end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<VertexId>,
    #[serde(default)]
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub tails: Vec<TailJson>,
    #[serde(default)]
    pub orientation: BTreeMap<EdgeId, [VertexId; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    Disconnected { components: usize },
    Unstable { vertex: VertexId, degree: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "no vertices"),
            Violation::Disconnected { components } => {
                write!(f, "disconnected ({components} components)")
            }
            Violation::Unstable { vertex, degree } => {
                write!(f, "vertex {vertex} has degree {degree} < 3")
            }
        }
    }
}

/// Structural errors mean the input does not describe a graph at all;
/// violations are connectivity/stability failures of a well-formed graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub structural_errors: Vec<String>,
    pub violations: Vec<Violation>,
}

impl StableGraph {
    /// Builds a graph from oriented edges `(id, tail, head)` and tails
    /// `(id, end, num)`.
    pub fn new(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (EdgeId, VertexId, VertexId)>,
        tails: impl IntoIterator<Item = (TailId, VertexId, u32)>,
    ) -> Result<Self> {
        let mut errors = Vec::new();
        let mut vs = BTreeSet::new();
        for v in vertices {
            if !vs.insert(v) {
                errors.push(format!("duplicate vertex id {v}"));
            }
        }
        let mut es = BTreeMap::new();
        for (id, tail, head) in edges {
            for end in [tail, head] {
                if !vs.contains(&end) {
                    errors.push(format!("edge {id} references missing vertex {end}"));
                }
            }
            if es.insert(id, Edge { tail, head }).is_some() {
                errors.push(format!("duplicate edge id {id}"));
            }
        }
        let mut ts = BTreeMap::new();
        for (id, end, num) in tails {
            if !vs.contains(&end) {
                errors.push(format!("tail {id} references missing vertex {end}"));
            }
            if ts.insert(id, Tail { end, num }).is_some() {
                errors.push(format!("duplicate tail id {id}"));
            }
        }
        let nums: BTreeSet<u32> = ts.values().map(|t| t.num).collect();
        let n = ts.len() as u32;
        if nums.len() != ts.len() || nums.iter().any(|&k| k == 0 || k > n) {
            errors.push(format!("tail numbering is not a bijection onto 1..={n}"));
        }
        if !errors.is_empty() {
            return Err(GraphError::Structural(errors));
        }
        Ok(StableGraph {
            vertices: vs,
            edges: es,
            tails: ts,
        })
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let mut errors = Vec::new();
        let mut edges = Vec::new();
        for e in &json.edges {
            let (a, b) = match e.ends.as_slice() {
                [v] => (*v, *v),
                [v, w] => (*v, *w),
                _ => {
                    errors.push(format!("edge {} must have one or two ends", e.id));
                    continue;
                }
            };
            let (tail, head) = match json.orientation.get(&e.id) {
                Some(&[t, h]) if (t == a && h == b) || (t == b && h == a) => (t, h),
                Some(o) => {
                    errors.push(format!("orientation {o:?} of edge {} does not match its ends", e.id));
                    continue;
                }
                None => (a, b),
            };
            edges.push((e.id, tail, head));
        }
        for id in json.orientation.keys() {
            if !json.edges.iter().any(|e| e.id == *id) {
                errors.push(format!("orientation given for missing edge {id}"));
            }
        }
        let any_num = json.tails.iter().any(|t| t.num.is_some());
        let all_num = json.tails.iter().all(|t| t.num.is_some());
        if any_num && !all_num {
            errors.push("tail numbering must be given for all tails or none".into());
        }
        // without numbering, tails are numbered in id order
        let mut by_id: Vec<&TailJson> = json.tails.iter().collect();
        by_id.sort_by_key(|t| t.id);
        let tails: Vec<_> = by_id
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id, t.end, t.num.unwrap_or(i as u32 + 1)))
            .collect();
        match StableGraph::new(json.vertices.iter().copied(), edges, tails) {
            Ok(g) if errors.is_empty() => Ok(g),
            Ok(_) => Err(GraphError::Structural(errors)),
            Err(GraphError::Structural(more)) => {
                errors.extend(more);
                Err(GraphError::Structural(errors))
            }
            Err(e) => Err(e),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: GraphJson = serde_json::from_str(s).map_err(|e| GraphError::Json(e.to_string()))?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertices.iter().copied().collect(),
            edges: self
                .edges
                .iter()
                .map(|(&id, e)| EdgeJson {
                    id,
                    ends: if e.is_loop() { vec![e.tail] } else { vec![e.tail, e.head] },
                })
                .collect(),
            tails: self
                .tails
                .iter()
                .map(|(&id, t)| TailJson {
                    id,
                    end: t.end,
                    num: Some(t.num),
                })
                .collect(),
            orientation: self.edges.iter().map(|(&id, e)| (id, [e.tail, e.head])).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph serializes")
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, Edge)> + '_ {
        self.edges.iter().map(|(&id, &e)| (id, e))
    }

    pub fn tails(&self) -> impl Iterator<Item = (TailId, Tail)> + '_ {
        self.tails.iter().map(|(&id, &t)| (id, t))
    }

    pub fn edge(&self, id: EdgeId) -> Option<Edge> {
        self.edges.get(&id).copied()
    }

    pub fn tail(&self, id: TailId) -> Option<Tail> {
        self.tails.get(&id).copied()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_tails(&self) -> usize {
        self.tails.len()
    }

    pub fn has_edge(&self, id: EdgeId) -> bool {
        self.edges.contains_key(&id)
    }

    pub fn max_edge_id(&self) -> Option<EdgeId> {
        self.edges.keys().next_back().copied()
    }

    /// `v_h`: the vertex the oriented edge points at.
    pub fn target(&self, h: HalfEdge) -> Option<VertexId> {
        let e = self.edges.get(&h.edge)?;
        Some(match h.dir {
            Dir::Plus => e.head,
            Dir::Minus => e.tail,
        })
    }

    /// The vertex a branch is incident to.
    pub fn branch_vertex(&self, b: Branch) -> Option<VertexId> {
        match b {
            Branch::Half(h) => self.target(h),
            Branch::Tail(t) => self.tails.get(&t).map(|t| t.end),
        }
    }

    /// Degree counting loops twice and tails once.
    pub fn degree(&self, v: VertexId) -> u32 {
        let e: u32 = self
            .edges
            .values()
            .map(|e| (e.tail == v) as u32 + (e.head == v) as u32)
            .sum();
        let t = self.tails.values().filter(|t| t.end == v).count() as u32;
        e + t
    }

    /// Branches at `v`: tails by number, then oriented edges by (edge id, `+` before `-`).
    pub fn branches_at(&self, v: VertexId) -> Vec<Branch> {
        let mut tails: Vec<(u32, TailId)> = self
            .tails
            .iter()
            .filter(|(_, t)| t.end == v)
            .map(|(&id, t)| (t.num, id))
            .collect();
        tails.sort_unstable();
        let mut out: Vec<Branch> = tails.into_iter().map(|(_, id)| Branch::Tail(id)).collect();
        for (&id, e) in &self.edges {
            if e.head == v {
                out.push(Branch::Half(HalfEdge::plus(id)));
            }
            if e.tail == v {
                out.push(Branch::Half(HalfEdge::minus(id)));
            }
        }
        out
    }

    /// All oriented edges `±E`.
    pub fn half_edges(&self) -> Vec<HalfEdge> {
        self.edges
            .keys()
            .flat_map(|&id| [HalfEdge::plus(id), HalfEdge::minus(id)])
            .collect()
    }

    pub fn loops_of(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|(_, e)| e.is_loop())
            .map(|(&id, _)| id)
            .collect()
    }

    fn component_count(&self) -> usize {
        let idx: BTreeMap<VertexId, usize> =
            self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut parent: Vec<usize> = (0..idx.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in self.edges.values() {
            let a = find(&mut parent, idx[&e.tail]);
            let b = find(&mut parent, idx[&e.head]);
            parent[a] = b;
        }
        (0..idx.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.vertices.is_empty() {
            violations.push(Violation::Empty);
        } else {
            let c = self.component_count();
            if c != 1 {
                violations.push(Violation::Disconnected { components: c });
            }
        }
        for &v in &self.vertices {
            let d = self.degree(v);
            if d < 3 {
                violations.push(Violation::Unstable { vertex: v, degree: d });
            }
        }
        ValidationReport {
            ok: violations.is_empty(),
            structural_errors: Vec::new(),
            violations,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.validate().ok
    }

    /// First Betti number `#E - #V + 1`.
    pub fn genus(&self) -> Result<u32> {
        if self.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let c = self.component_count();
        if c != 1 {
            return Err(GraphError::Disconnected(c));
        }
        Ok((self.edges.len() + 1 - self.vertices.len()) as u32)
    }

    pub fn is_trivalent(&self) -> bool {
        self.vertices.iter().all(|&v| self.degree(v) == 3)
    }

    /// `(genus, #T)`.
    pub fn type_of(&self) -> Result<(u32, u32)> {
        Ok((self.genus()?, self.tails.len() as u32))
    }

    fn require_trivalent(&self) -> Result<()> {
        for &v in &self.vertices {
            let d = self.degree(v);
            if d != 3 {
                return Err(GraphError::Degree {
                    vertex: v,
                    degree: d,
                    expected: "3",
                });
            }
        }
        Ok(())
    }

    /// Replaces every tail by an edge to a fresh vertex carrying one loop.
    /// New vertex and edge ids continue past the current maxima, in tail
    /// number order; each connecting edge points at the new vertex.
    pub fn extend(&self) -> StableGraph {
        let mut out = StableGraph {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            tails: BTreeMap::new(),
        };
        let mut next_v = self.vertices.iter().next_back().map_or(0, |v| v + 1);
        let mut next_e = self.max_edge_id().map_or(0, |e| e + 1);
        let mut tails: Vec<Tail> = self.tails.values().copied().collect();
        tails.sort_by_key(|t| t.num);
        for t in tails {
            out.vertices.insert(next_v);
            out.edges.insert(next_e, Edge { tail: t.end, head: next_v });
            out.edges.insert(next_e + 1, Edge { tail: next_v, head: next_v });
            next_v += 1;
            next_e += 2;
        }
        out
    }

    /// Same graph with the given edge contracted (its head merged into its tail).
    pub fn contract_edge(&self, e: EdgeId) -> Result<StableGraph> {
        let edge = self.edge(e).ok_or(GraphError::UnknownEdge(e))?;
        if edge.is_loop() {
            return Err(GraphError::LoopEdge(e));
        }
        let (keep, gone) = (edge.tail, edge.head);
        let re = |v: VertexId| if v == gone { keep } else { v };
        let mut out = self.clone();
        out.edges.remove(&e);
        out.vertices.remove(&gone);
        for ed in out.edges.values_mut() {
            ed.tail = re(ed.tail);
            ed.head = re(ed.head);
        }
        for t in out.tails.values_mut() {
            t.end = re(t.end);
        }
        Ok(out)
    }

    /// Applies relabelings of vertex and edge ids and reverses the
    /// orientation of the edges in `flip`. Used to test invariance.
    pub fn relabeled(
        &self,
        vmap: &BTreeMap<VertexId, VertexId>,
        emap: &BTreeMap<EdgeId, EdgeId>,
        flip: &BTreeSet<EdgeId>,
    ) -> Result<StableGraph> {
        let v = |x: VertexId| vmap.get(&x).copied().unwrap_or(x);
        StableGraph::new(
            self.vertices.iter().map(|&x| v(x)),
            self.edges.iter().map(|(&id, e)| {
                let nid = emap.get(&id).copied().unwrap_or(id);
                if flip.contains(&id) {
                    (nid, v(e.head), v(e.tail))
                } else {
                    (nid, v(e.tail), v(e.head))
                }
            }),
            self.tails.iter().map(|(&id, t)| (id, v(t.end), t.num)),
        )
    }

    fn move_branch(&mut self, b: Branch, to: VertexId) {
        match b {
            Branch::Half(h) => {
                let e = self.edges.get_mut(&h.edge).expect("branch edge exists");
                match h.dir {
                    Dir::Plus => e.head = to,
                    Dir::Minus => e.tail = to,
                }
            }
            Branch::Tail(t) => self.tails.get_mut(&t).expect("branch tail exists").end = to,
        }
    }

    /// Canonical encoding up to isomorphisms that preserve tail numbers
    /// (edge ids and orientations are ignored).
    pub fn canonical_form(&self) -> CanonicalForm {
        let (rows, order) = self.canonical_rows();
        CanonicalForm {
            rows,
            vertex_order: order,
        }
    }

    pub fn certificate(&self) -> String {
        self.canonical_form().certificate()
    }

    pub fn is_isomorphic(&self, other: &StableGraph) -> bool {
        self.canonical_form().rows == other.canonical_form().rows
    }

    fn canonical_rows(&self) -> (Vec<Vec<u32>>, Vec<VertexId>) {
        let vs: Vec<VertexId> = self.vertices.iter().copied().collect();
        let idx: BTreeMap<VertexId, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = vs.len();
        let mut labels = vec![Vec::new(); n];
        for t in self.tails.values() {
            labels[idx[&t.end]].push(t.num);
        }
        labels.iter_mut().for_each(|l| l.sort_unstable());
        let mut mult = vec![vec![0u32; n]; n];
        for e in self.edges.values() {
            let (a, b) = (idx[&e.tail], idx[&e.head]);
            mult[a][b] += 1;
            if a != b {
                mult[b][a] += 1;
            }
        }
        let (rows, order) = canonical_code(&labels, &mult);
        (rows, order.into_iter().map(|i| vs[i]).collect())
    }

    /// Isomorphic copy with vertex ids `1..` in canonical order, edge ids `1..`
    /// sorted by canonical endpoints, edges oriented from the earlier vertex,
    /// and tail ids equal to tail numbers.
    pub fn canonical_graph(&self) -> StableGraph {
        let (_, order) = self.canonical_rows();
        let pos: BTreeMap<VertexId, u32> =
            order.iter().enumerate().map(|(i, &v)| (v, i as u32 + 1)).collect();
        let mut ends: Vec<(u32, u32)> = self
            .edges
            .values()
            .map(|e| {
                let (a, b) = (pos[&e.tail], pos[&e.head]);
                (a.min(b), a.max(b))
            })
            .collect();
        ends.sort_unstable();
        StableGraph::new(
            1..=order.len() as u32,
            ends.iter().enumerate().map(|(i, &(a, b))| (i as u32 + 1, a, b)),
            self.tails.values().map(|t| (t.num, pos[&t.end], t.num)),
        )
        .expect("canonical relabeling is well formed")
    }
}

impl fmt::Display for StableGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json_string())
    }
}

/// Validates raw JSON, separating structural errors from stability violations.
pub fn validate_json(json: &GraphJson) -> ValidationReport {
    match StableGraph::from_json(json) {
        Ok(g) => g.validate(),
        Err(GraphError::Structural(errs)) => ValidationReport {
            ok: false,
            structural_errors: errs,
            violations: Vec::new(),
        },
        Err(e) => ValidationReport {
            ok: false,
            structural_errors: vec![e.to_string()],
            violations: Vec::new(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    /// Row `i` is `[#labels, labels.., loops, mult to position 0, .., mult to i-1]`.
    pub rows: Vec<Vec<u32>>,
    pub vertex_order: Vec<VertexId>,
}

impl CanonicalForm {
    pub fn certificate(&self) -> String {
        self.rows
            .iter()
            .map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join("."))
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Lexicographically least row encoding over all vertex orders, found by
/// branch and bound: at every depth only vertices producing the least row
/// are explored. Returns the rows and the chosen order (as indices).
fn canonical_code(labels: &[Vec<u32>], mult: &[Vec<u32>]) -> (Vec<Vec<u32>>, Vec<usize>) {
    struct Search<'a> {
        labels: &'a [Vec<u32>],
        mult: &'a [Vec<u32>],
        best: Option<(Vec<Vec<u32>>, Vec<usize>)>,
    }
    impl Search<'_> {
        fn row(&self, order: &[usize], v: usize) -> Vec<u32> {
            let l = &self.labels[v];
            let mut r = Vec::with_capacity(l.len() + 2 + order.len());
            r.push(l.len() as u32);
            r.extend_from_slice(l);
            r.push(self.mult[v][v]);
            r.extend(order.iter().map(|&u| self.mult[v][u]));
            r
        }
        fn go(&mut self, rows: &mut Vec<Vec<u32>>, order: &mut Vec<usize>, used: &mut [bool]) {
            let n = self.labels.len();
            let depth = order.len();
            if depth == n {
                if self.best.as_ref().is_none_or(|(b, _)| rows[..] < b[..]) {
                    self.best = Some((rows.clone(), order.clone()));
                }
                return;
            }
            let cands: Vec<(Vec<u32>, usize)> = (0..n)
                .filter(|&v| !used[v])
                .map(|v| (self.row(order, v), v))
                .collect();
            let min = cands.iter().map(|(r, _)| r).min().expect("unused vertex").clone();
            // surviving prefixes are never worse than the best one, so only
            // equality with the best prefix needs the next-row comparison
            if let Some((b, _)) = &self.best {
                if b[..depth] == rows[..] && min > b[depth] {
                    return;
                }
            }
            for (r, v) in cands {
                if r != min {
                    continue;
                }
                used[v] = true;
                rows.push(r);
                order.push(v);
                self.go(rows, order, used);
                order.pop();
                rows.pop();
                used[v] = false;
            }
        }
    }
    let mut s = Search {
        labels,
        mult,
        best: None,
    };
    let n = labels.len();
    s.go(&mut Vec::with_capacity(n), &mut Vec::with_capacity(n), &mut vec![false; n]);
    s.best.unwrap_or_default()
}

/// Per-vertex injection `{0, 1, inf} -> branches`, stored as `[tau(0), tau(1), tau(inf)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rigidification {
    pub tau: BTreeMap<VertexId, [Branch; 3]>,
}

/// Names of the three marked values, in storage order.
pub const MARKED_POINTS: [&str; 3] = ["0", "1", "inf"];

impl Rigidification {
    /// Checks both rigidification invariants against `graph`.
    pub fn check(&self, graph: &StableGraph) -> Result<()> {
        let bad = |m: String| Err(GraphError::InvalidRigidification(m));
        for v in graph.vertices() {
            let Some(t) = self.tau.get(&v) else {
                return bad(format!("no injection at vertex {v}"));
            };
            let at_v = graph.branches_at(v);
            for (i, b) in t.iter().enumerate() {
                if !at_v.contains(b) {
                    return bad(format!("tau_{v}({}) = {b} is not a branch at {v}", MARKED_POINTS[i]));
                }
                if t[..i].contains(b) {
                    return bad(format!("tau_{v} is not injective"));
                }
            }
        }
        if self.tau.len() != graph.num_vertices() {
            return bad("injection given at a vertex not in the graph".into());
        }
        let vs: Vec<_> = self.tau.iter().collect();
        for (i, (v, tv)) in vs.iter().enumerate() {
            for (w, tw) in &vs[i + 1..] {
                for a in 0..3 {
                    if let (Branch::Half(x), Branch::Half(y)) = (tv[a], tw[a]) {
                        if x == y.reverse() {
                            return bad(format!(
                                "tau_{v}({m}) = -tau_{w}({m})",
                                m = MARKED_POINTS[a]
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Branch sent to `inf` at each vertex.
    pub fn at_infinity(&self) -> impl Iterator<Item = Branch> + '_ {
        self.tau.values().map(|t| t[2])
    }
}

/// First rigidification found by backtracking over vertices in id order,
/// trying ordered triples of branches in [`StableGraph::branches_at`] order.
pub fn find_rigidification(graph: &StableGraph) -> Result<Rigidification> {
    let vs: Vec<VertexId> = graph.vertices().collect();
    let branches: Vec<Vec<Branch>> = vs.iter().map(|&v| graph.branches_at(v)).collect();
    if let Some(i) = branches.iter().position(|b| b.len() < 3) {
        return Err(GraphError::Degree {
            vertex: vs[i],
            degree: branches[i].len() as u32,
            expected: ">= 3",
        });
    }
    fn ok(chosen: &[[Branch; 3]], t: &[Branch; 3]) -> bool {
        chosen.iter().all(|c| {
            (0..3).all(|a| match (c[a], t[a]) {
                (Branch::Half(x), Branch::Half(y)) => x != y.reverse(),
                _ => true,
            })
        })
    }
    fn go(i: usize, branches: &[Vec<Branch>], chosen: &mut Vec<[Branch; 3]>) -> bool {
        if i == branches.len() {
            return true;
        }
        let b = &branches[i];
        for x in 0..b.len() {
            for y in (0..b.len()).filter(|&y| y != x) {
                for z in (0..b.len()).filter(|&z| z != x && z != y) {
                    let t = [b[x], b[y], b[z]];
                    if ok(chosen, &t) {
                        chosen.push(t);
                        if go(i + 1, branches, chosen) {
                            return true;
                        }
                        chosen.pop();
                    }
                }
            }
        }
        false
    }
    let mut chosen = Vec::new();
    if !go(0, &branches, &mut chosen) {
        return Err(GraphError::RigidificationFailed);
    }
    Ok(Rigidification {
        tau: vs.into_iter().zip(chosen).collect(),
    })
}

/// Formal coordinates attached to a rigidified graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSystem {
    /// `E_tau`: branches not in the image of any `tau_v`, each carrying an alpha.
    pub alpha_vars: Vec<Branch>,
    /// One deformation parameter per edge.
    pub q_vars: Vec<EdgeId>,
}

impl CoordinateSystem {
    pub fn dimension(&self) -> usize {
        self.alpha_vars.len() + self.q_vars.len()
    }
}

pub fn coordinate_system(graph: &StableGraph, tau: &Rigidification) -> Result<CoordinateSystem> {
    tau.check(graph)?;
    let used: BTreeSet<Branch> = tau.tau.values().flatten().copied().collect();
    let mut all: Vec<Branch> = graph.half_edges().into_iter().map(Branch::Half).collect();
    all.extend(graph.tails().map(|(id, _)| Branch::Tail(id)));
    Ok(CoordinateSystem {
        alpha_vars: all.into_iter().filter(|b| !used.contains(b)).collect(),
        q_vars: graph.edges().map(|(id, _)| id).collect(),
    })
}

/// One of the two re-expansions of the 4-valent contraction of an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusingResult {
    pub graph: StableGraph,
    pub new_edge: EdgeId,
    /// The four branches `[a, b, c, d]` with `a, b` at the edge's tail vertex
    /// and `c, d` at its head, in branch order.
    pub branches: [Branch; 4],
    /// Which pairing: 0 is `(a,c | b,d)`, 1 is `(a,d | b,c)`.
    pub choice: usize,
    pub contraction: StableGraph,
}

/// Both fusing moves at `e`, with the new edge numbered one past the maximum.
pub fn fusing_rewrite(graph: &StableGraph, e: EdgeId) -> Result<[FusingResult; 2]> {
    let id = graph.max_edge_id().map_or(0, |m| m + 1);
    fusing_rewrite_with_id(graph, e, id)
}

/// Both fusing moves at `e`. The new edge gets id `new_id`, which may reuse
/// `e` but must not clash with any other edge. It is oriented from the
/// vertex that was the tail of `e`.
pub fn fusing_rewrite_with_id(graph: &StableGraph, e: EdgeId, new_id: EdgeId) -> Result<[FusingResult; 2]> {
    let edge = graph.edge(e).ok_or(GraphError::UnknownEdge(e))?;
    if edge.is_loop() {
        return Err(GraphError::LoopEdge(e));
    }
    if new_id != e && graph.has_edge(new_id) {
        return Err(GraphError::EdgeIdClash(new_id));
    }
    let (u, w) = (edge.tail, edge.head);
    for v in [u, w] {
        let d = graph.degree(v);
        if d != 3 {
            return Err(GraphError::Degree {
                vertex: v,
                degree: d,
                expected: "3",
            });
        }
    }
    let own = |b: &Branch| matches!(b, Branch::Half(h) if h.edge == e);
    let at_u: Vec<Branch> = graph.branches_at(u).into_iter().filter(|b| !own(b)).collect();
    let at_w: Vec<Branch> = graph.branches_at(w).into_iter().filter(|b| !own(b)).collect();
    let (a, b, c, d) = (at_u[0], at_u[1], at_w[0], at_w[1]);
    let contraction = graph.contract_edge(e)?;
    let build = |to_u: Branch, to_w: Branch, choice: usize| {
        let mut g = graph.clone();
        g.edges.remove(&e);
        g.move_branch(to_u, u);
        g.move_branch(to_w, w);
        g.edges.insert(new_id, Edge { tail: u, head: w });
        FusingResult {
            graph: g,
            new_edge: new_id,
            branches: [a, b, c, d],
            choice,
            contraction: contraction.clone(),
        }
    };
    // (a,c | b,d): c joins u and b joins w; (a,d | b,c): d joins u and b joins w
    Ok([build(c, b, 0), build(d, b, 1)])
}

/// Enumerates trivalent graphs of type `(g, n)` up to isomorphism preserving
/// tail numbers, as canonical graphs sorted by certificate.
pub fn enumerate_trivalent(g: u32, n: u32) -> Result<Vec<StableGraph>> {
    enumerate_trivalent_bounded(g, n, DEFAULT_ENUMERATION_BOUND)
}

pub fn enumerate_trivalent_bounded(g: u32, n: u32, bound: u32) -> Result<Vec<StableGraph>> {
    let size = 2 * g as i64 - 2 + n as i64;
    if size <= 0 {
        return Err(GraphError::UnstableType { g, n });
    }
    if size > bound as i64 {
        return Err(GraphError::BoundExceeded { g, n, bound });
    }
    let nv = size as usize;
    let mut found: BTreeMap<String, StableGraph> = BTreeMap::new();
    for skel in skeletons(nv, n as usize) {
        // distribute numbered tails over the tail slots of the skeleton
        let mut assign = vec![0usize; n as usize];
        let mut room = skel.tails.clone();
        place_tails(0, &mut assign, &mut room, &mut |assign| {
            let graph = skel.to_graph(assign);
            let cf = graph.canonical_form();
            found.entry(cf.certificate()).or_insert_with(|| graph.canonical_graph());
        });
    }
    Ok(found.into_values().collect())
}

fn place_tails(k: usize, assign: &mut Vec<usize>, room: &mut [u32], f: &mut impl FnMut(&[usize])) {
    if k == assign.len() {
        f(assign);
        return;
    }
    for v in 0..room.len() {
        if room[v] > 0 {
            room[v] -= 1;
            assign[k] = v;
            place_tails(k + 1, assign, room, f);
            room[v] += 1;
        }
    }
}

/// Tail-count-labelled multigraph with all degrees 3.
#[derive(Debug, Clone)]
struct Skeleton {
    tails: Vec<u32>,
    mult: Vec<Vec<u32>>,
}

impl Skeleton {
    fn to_graph(&self, tail_vertex: &[usize]) -> StableGraph {
        let n = self.tails.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i..n {
                for _ in 0..self.mult[i][j] {
                    edges.push((edges.len() as u32, i as u32, j as u32));
                }
            }
        }
        StableGraph::new(
            0..n as u32,
            edges,
            tail_vertex
                .iter()
                .enumerate()
                .map(|(k, &v)| (k as u32 + 1, v as u32, k as u32 + 1)),
        )
        .expect("skeleton graph is well formed")
    }
}

/// Connected degree-3 multigraphs on `nv` vertices with `nt` tails in total,
/// up to isomorphism preserving tail counts.
fn skeletons(nv: usize, nt: usize) -> Vec<Skeleton> {
    let mut out = BTreeMap::new();
    let mut counts = Vec::new();
    tail_counts(nv, nt as u32, 3, &mut counts, &mut |t| {
        let mut mult = vec![vec![0u32; nv]; nv];
        let mut rem: Vec<u32> = t.iter().map(|x| 3 - x).collect();
        fill(0, 0, &mut mult, &mut rem, &mut |m| {
            let labels: Vec<Vec<u32>> = t.iter().map(|&x| vec![x]).collect();
            if connected(m) {
                let (rows, _) = canonical_code(&labels, m);
                out.entry(rows).or_insert_with(|| Skeleton {
                    tails: t.to_vec(),
                    mult: m.clone(),
                });
            }
        });
    });
    out.into_values().collect()
}

/// Nonincreasing tail counts in `0..=3` summing to `left`.
fn tail_counts(nv: usize, left: u32, cap: u32, acc: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if acc.len() == nv {
        if left == 0 {
            f(acc);
        }
        return;
    }
    for t in (0..=cap.min(left)).rev() {
        acc.push(t);
        tail_counts(nv, left - t, t, acc, f);
        acc.pop();
    }
}

/// Fills the upper triangle of `mult` (loops on the diagonal) so every
/// remaining degree reaches zero; a loop uses two units of degree.
fn fill(i: usize, j: usize, mult: &mut Vec<Vec<u32>>, rem: &mut [u32], f: &mut impl FnMut(&Vec<Vec<u32>>)) {
    let n = rem.len();
    if i == n {
        f(mult);
        return;
    }
    if j == n {
        if rem[i] == 0 {
            fill(i + 1, i + 1, mult, rem, f);
        }
        return;
    }
    if i == j {
        for k in (0..=rem[i] / 2).rev() {
            rem[i] -= 2 * k;
            mult[i][i] = k;
            fill(i, j + 1, mult, rem, f);
            rem[i] += 2 * k;
        }
        mult[i][i] = 0;
        return;
    }
    for k in (0..=rem[i].min(rem[j])).rev() {
        rem[i] -= k;
        rem[j] -= k;
        mult[i][j] = k;
        mult[j][i] = k;
        fill(i, j + 1, mult, rem, f);
        rem[i] += k;
        rem[j] += k;
    }
    mult[i][j] = 0;
    mult[j][i] = 0;
}

fn connected(mult: &[Vec<u32>]) -> bool {
    let n = mult.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if mult[v][w] > 0 && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Kind of a groupoid generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MoveKind {
    HalfDehn { edge: EdgeId },
    Fusing { edge: EdgeId, target_edge: EdgeId },
    Simple { edge: EdgeId },
}

/// A generator together with its endpoint graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub source: StableGraph,
    pub target: StableGraph,
}

/// How to build a move from its source graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MoveSpec {
    HalfDehn {
        edge: EdgeId,
    },
    Fusing {
        edge: EdgeId,
        target_edge: EdgeId,
        #[serde(default)]
        choice: usize,
    },
    Simple {
        edge: EdgeId,
    },
}

impl Move {
    /// Half-Dehn twist along `edge`; source and target coincide.
    pub fn half_dehn(graph: &StableGraph, edge: EdgeId) -> Result<Move> {
        graph.require_trivalent()?;
        if !graph.has_edge(edge) {
            return Err(GraphError::UnknownEdge(edge));
        }
        Ok(Move {
            kind: MoveKind::HalfDehn { edge },
            source: graph.clone(),
            target: graph.clone(),
        })
    }

    /// Fusing move at `edge`, producing the new edge `target_edge`.
    pub fn fusing(graph: &StableGraph, edge: EdgeId, target_edge: EdgeId, choice: usize) -> Result<Move> {
        graph.require_trivalent()?;
        let results = fusing_rewrite_with_id(graph, edge, target_edge)?;
        let r = results
            .into_iter()
            .nth(choice)
            .ok_or_else(|| GraphError::InvalidRigidification(format!("fusing choice {choice} out of range")))?;
        Ok(Move {
            kind: MoveKind::Fusing { edge, target_edge },
            source: graph.clone(),
            target: r.graph,
        })
    }

    /// Simple move on a loop; the endpoint graph is unchanged.
    pub fn simple(graph: &StableGraph, edge: EdgeId) -> Result<Move> {
        graph.require_trivalent()?;
        let e = graph.edge(edge).ok_or(GraphError::UnknownEdge(edge))?;
        if !e.is_loop() {
            return Err(GraphError::NotALoop(edge));
        }
        Ok(Move {
            kind: MoveKind::Simple { edge },
            source: graph.clone(),
            target: graph.clone(),
        })
    }

    pub fn from_spec(graph: &StableGraph, spec: MoveSpec) -> Result<Move> {
        match spec {
            MoveSpec::HalfDehn { edge } => Move::half_dehn(graph, edge),
            MoveSpec::Fusing {
                edge,
                target_edge,
                choice,
            } => Move::fusing(graph, edge, target_edge, choice),
            MoveSpec::Simple { edge } => Move::simple(graph, edge),
        }
    }

    /// Re-derives the target from the source and compares.
    fn is_consistent(&self) -> Result<bool> {
        match self.kind {
            MoveKind::HalfDehn { edge } => Ok(Move::half_dehn(&self.source, edge)?.target == self.target),
            MoveKind::Simple { edge } => Ok(Move::simple(&self.source, edge)?.target == self.target),
            MoveKind::Fusing { edge, target_edge } => {
                let rs = fusing_rewrite_with_id(&self.source, edge, target_edge)?;
                Ok(rs.iter().any(|r| r.graph == self.target))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("move {index}: {reason}")]
pub struct WordError {
    pub index: usize,
    pub reason: String,
}

/// A composable sequence of moves starting at a basepoint graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupoidWord {
    pub basepoint: StableGraph,
    pub moves: Vec<Move>,
}

impl GroupoidWord {
    pub fn identity(basepoint: &StableGraph) -> Self {
        GroupoidWord {
            basepoint: basepoint.clone(),
            moves: Vec::new(),
        }
    }

    pub fn endpoint(&self) -> &StableGraph {
        self.moves.last().map_or(&self.basepoint, |m| &m.target)
    }
}

/// Checks that each move is well formed and starts where the previous one
/// ended, reporting the first offending index.
pub fn compose_word(basepoint: &StableGraph, moves: Vec<Move>) -> std::result::Result<GroupoidWord, WordError> {
    let mut at = basepoint;
    for (index, m) in moves.iter().enumerate() {
        if &m.source != at {
            return Err(WordError {
                index,
                reason: "source graph differs from the previous target".into(),
            });
        }
        match m.is_consistent() {
            Ok(true) => {}
            Ok(false) => {
                return Err(WordError {
                    index,
                    reason: "target graph is not produced by the move".into(),
                })
            }
            Err(e) => {
                return Err(WordError {
                    index,
                    reason: e.to_string(),
                })
            }
        }
        at = &m.target;
    }
    Ok(GroupoidWord {
        basepoint: basepoint.clone(),
        moves,
    })
}

/// Builds a word by applying move specifications in order from `basepoint`.
pub fn build_word(basepoint: &StableGraph, specs: &[MoveSpec]) -> std::result::Result<GroupoidWord, WordError> {
    let mut moves: Vec<Move> = Vec::with_capacity(specs.len());
    for (index, &spec) in specs.iter().enumerate() {
        let at = moves.last().map_or(basepoint, |m| &m.target);
        let m = Move::from_spec(at, spec).map_err(|e| WordError {
            index,
            reason: e.to_string(),
        })?;
        moves.push(m);
    }
    Ok(GroupoidWord {
        basepoint: basepoint.clone(),
        moves,
    })
}

/// Handy constructors for small named graphs.
pub mod examples {
    use super::*;

    /// One vertex carrying `n` tails and `g` loops.
    pub fn rose(g: u32, n: u32) -> StableGraph {
        StableGraph::new([0], (0..g).map(|e| (e, 0, 0)), (0..n).map(|t| (t, 0, t + 1))).expect("well formed")
    }

    /// Two trivalent vertices joined by edge 0, tails `a,b` at vertex 0 and `c,d` at vertex 1.
    pub fn four_holed(pairing: [u32; 4]) -> StableGraph {
        let [a, b, c, d] = pairing;
        StableGraph::new(
            [0, 1],
            [(0, 0, 1)],
            [(a, 0, a), (b, 0, b), (c, 1, c), (d, 1, d)],
        )
        .expect("well formed")
    }

    /// Two vertices joined by three parallel edges.
    pub fn theta() -> StableGraph {
        StableGraph::new([0, 1], [(0, 0, 1), (1, 0, 1), (2, 0, 1)], []).expect("well formed")
    }

    /// Two vertices each with a loop, joined by a bridge (genus 2).
    pub fn dumbbell() -> StableGraph {
        StableGraph::new([0, 1], [(0, 0, 0), (1, 0, 1), (2, 1, 1)], []).expect("well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;
    use proptest::prelude::*;

    fn json(s: &str) -> GraphJson {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn validate_small_graphs() {
        assert!(rose(0, 3).validate().ok);
        let r = rose(0, 2).validate();
        assert_eq!(r.violations, vec![Violation::Unstable { vertex: 0, degree: 2 }]);
        assert!(four_holed([1, 2, 3, 4]).validate().ok);
    }

    #[test]
    fn structural_errors_are_distinct() {
        let r = validate_json(&json(r#"{"vertices":[0],"edges":[{"id":0,"ends":[0,7]}],"tails":[]}"#));
        assert!(!r.ok);
        assert!(r.violations.is_empty());
        assert!(r.structural_errors[0].contains("missing vertex 7"));
        let r = validate_json(&json(
            r#"{"vertices":[0],"tails":[{"id":0,"end":0,"num":1},{"id":1,"end":0,"num":3}]}"#,
        ));
        assert!(r.structural_errors[0].contains("bijection"));
        let r = validate_json(&json(r#"{"vertices":[0,1],"tails":[{"id":0,"end":0},{"id":1,"end":1}]}"#));
        assert!(r.structural_errors.is_empty());
        assert!(r.violations.contains(&Violation::Disconnected { components: 2 }));
    }

    #[test]
    fn genus_and_type() {
        assert_eq!(rose(4, 1).genus().unwrap(), 4);
        assert_eq!(four_holed([1, 2, 3, 4]).genus().unwrap(), 0);
        assert_eq!(theta().genus().unwrap(), 2);
        let one_one = rose(1, 1);
        assert!(one_one.is_trivalent());
        assert_eq!(one_one.type_of().unwrap(), (1, 1));
        assert_eq!(rose(0, 3).type_of().unwrap(), (0, 3));
        let split = StableGraph::new([0, 1], [], [(0, 0, 1), (1, 1, 2)]).unwrap();
        assert_eq!(split.genus(), Err(GraphError::Disconnected(2)));
    }

    #[test]
    fn extension() {
        let x = rose(0, 3).extend();
        assert_eq!(x.num_vertices(), 4);
        assert_eq!(x.num_edges(), 6);
        assert_eq!(x.loops_of().len(), 3);
        assert_eq!(x.genus().unwrap(), 3);
        assert_eq!(x.num_tails(), 0);
        assert!(x.is_stable());
        assert_eq!(theta().extend(), theta());
        let y = rose(1, 1).extend();
        assert_eq!(y.type_of().unwrap(), (2, 0));
    }

    #[test]
    fn rigidification_of_tripod_uses_tails_in_order() {
        let g = rose(0, 3);
        let tau = find_rigidification(&g).unwrap();
        assert_eq!(tau.tau[&0], [Branch::Tail(0), Branch::Tail(1), Branch::Tail(2)]);
    }

    #[test]
    fn rigidification_four_holed() {
        // force both vertices to prefer the edge: tails are exhausted otherwise
        let g = StableGraph::new([0, 1], [(0, 0, 1), (1, 0, 1)], [(0, 0, 1), (1, 1, 2)]).unwrap();
        let tau = find_rigidification(&g).unwrap();
        tau.check(&g).unwrap();
        let bad = Rigidification {
            tau: [
                (0, [Branch::Half(HalfEdge::minus(0)), Branch::Tail(0), Branch::Half(HalfEdge::minus(1))]),
                (1, [Branch::Half(HalfEdge::plus(0)), Branch::Tail(1), Branch::Half(HalfEdge::plus(1))]),
            ]
            .into(),
        };
        assert!(bad.check(&g).is_err());
    }

    #[test]
    fn coordinate_counts() {
        let g = rose(0, 5);
        let tau = find_rigidification(&g).unwrap();
        let cs = coordinate_system(&g, &tau).unwrap();
        assert_eq!((cs.alpha_vars.len(), cs.q_vars.len()), (2, 0));
        let g = rose(1, 1);
        let cs = coordinate_system(&g, &find_rigidification(&g).unwrap()).unwrap();
        assert_eq!((cs.alpha_vars.len(), cs.q_vars.len()), (0, 1));
    }

    #[test]
    fn fusing_four_holed() {
        let g = four_holed([1, 2, 3, 4]);
        let [r0, r1] = fusing_rewrite(&g, 0).unwrap();
        assert!(r0.graph.is_isomorphic(&four_holed([1, 3, 2, 4])));
        assert!(r1.graph.is_isomorphic(&four_holed([1, 4, 2, 3])));
        assert_eq!(r0.new_edge, 1);
        assert_eq!(r0.contraction.num_vertices(), 1);
        let [back, _] = fusing_rewrite(&r0.graph, r0.new_edge).unwrap();
        assert!(back.graph.is_isomorphic(&g));
        assert_eq!(fusing_rewrite(&rose(1, 1), 0).unwrap_err(), GraphError::LoopEdge(0));
    }

    #[test]
    fn fusing_preserves_type_with_parallel_edges() {
        let g = theta();
        for e in 0..3 {
            for r in fusing_rewrite(&g, e).unwrap() {
                assert!(r.graph.is_trivalent());
                assert_eq!(r.graph.type_of().unwrap(), (2, 0));
            }
        }
    }

    #[test]
    fn enumeration_small_counts() {
        assert_eq!(enumerate_trivalent(0, 3).unwrap().len(), 1);
        assert_eq!(enumerate_trivalent(0, 4).unwrap().len(), 3);
        assert_eq!(enumerate_trivalent(1, 1).unwrap().len(), 1);
        assert_eq!(enumerate_trivalent(2, 0).unwrap().len(), 2);
        assert_eq!(enumerate_trivalent(1, 2).unwrap().len(), 2);
        assert_eq!(enumerate_trivalent(0, 5).unwrap().len(), 15);
        assert!(matches!(enumerate_trivalent(4, 1), Err(GraphError::BoundExceeded { .. })));
        assert!(matches!(enumerate_trivalent(1, 0), Err(GraphError::UnstableType { .. })));
    }

    #[test]
    fn enumerated_graphs_have_expected_shape() {
        for (g, n) in [(0, 3), (0, 4), (1, 1), (1, 2), (2, 0), (2, 1), (0, 6), (3, 0)] {
            for gr in enumerate_trivalent(g, n).unwrap() {
                assert!(gr.validate().ok);
                assert!(gr.is_trivalent());
                assert_eq!(gr.type_of().unwrap(), (g, n));
                assert_eq!(gr.num_vertices() as u32, 2 * g + n - 2);
                assert_eq!(gr.num_edges() as u32, 3 * g + n - 3);
            }
        }
    }

    #[test]
    fn words() {
        let g = four_holed([1, 2, 3, 4]);
        assert_eq!(build_word(&g, &[]).unwrap(), GroupoidWord::identity(&g));
        let ok = build_word(
            &g,
            &[
                MoveSpec::Fusing { edge: 0, target_edge: 5, choice: 0 },
                MoveSpec::HalfDehn { edge: 5 },
            ],
        )
        .unwrap();
        assert_eq!(ok.moves.len(), 2);
        let err = build_word(
            &g,
            &[
                MoveSpec::Fusing { edge: 0, target_edge: 5, choice: 0 },
                MoveSpec::HalfDehn { edge: 0 },
            ],
        )
        .unwrap_err();
        assert_eq!(err.index, 1);

        let m0 = Move::fusing(&g, 0, 5, 0).unwrap();
        let m1 = Move::half_dehn(&g, 0).unwrap();
        assert_eq!(compose_word(&g, vec![m0.clone(), m1]).unwrap_err().index, 1);
        let mut forged = m0;
        forged.target = g.clone();
        assert_eq!(compose_word(&g, vec![forged]).unwrap_err().index, 0);
    }

    #[test]
    fn json_roundtrip_and_loops() {
        let g = rose(1, 1);
        let j = g.to_json();
        assert_eq!(j.edges[0].ends, vec![0]);
        assert_eq!(StableGraph::from_json(&j).unwrap(), g);
        let s = r#"{"vertices":[1,2],"edges":[{"id":3,"ends":[1,2]}],"tails":[{"id":1,"end":1,"num":1},{"id":2,"end":1,"num":2},{"id":3,"end":2,"num":3},{"id":4,"end":2,"num":4}],"orientation":{"3":[2,1]}}"#;
        let g = StableGraph::from_json_str(s).unwrap();
        assert_eq!(g.edge(3), Some(Edge { tail: 2, head: 1 }));
        assert_eq!(g.target(HalfEdge::plus(3)), Some(1));
    }

    #[test]
    fn branch_parsing() {
        assert_eq!("+e3".parse::<Branch>().unwrap(), Branch::Half(HalfEdge::plus(3)));
        assert_eq!("-2".parse::<Branch>().unwrap(), Branch::Half(HalfEdge::minus(2)));
        assert_eq!("t4".parse::<Branch>().unwrap(), Branch::Tail(4));
        assert!("e4".parse::<Branch>().is_err());
        assert_eq!(HalfEdge::minus(7).to_string(), "-e7");
    }

    fn shuffled(g: &StableGraph, seed: u64) -> StableGraph {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut vs: Vec<u32> = (100..100 + g.num_vertices() as u32).collect();
        vs.shuffle(&mut rng);
        let vmap = g.vertices().zip(vs).collect();
        let mut es: Vec<u32> = (50..50 + g.num_edges() as u32).collect();
        es.shuffle(&mut rng);
        let emap = g.edges().map(|(id, _)| id).zip(es).collect();
        let flip = g.edges().map(|(id, _)| id).filter(|_| rng.gen_bool(0.5)).collect();
        g.relabeled(&vmap, &emap, &flip).unwrap()
    }

    proptest! {
        #[test]
        fn canonical_form_is_relabeling_invariant(seed in any::<u64>(), pick in 0usize..64) {
            let corpus: Vec<StableGraph> = [(0, 5), (1, 3), (2, 1), (3, 0)]
                .iter()
                .flat_map(|&(g, n)| enumerate_trivalent(g, n).unwrap())
                .collect();
            let g = &corpus[pick % corpus.len()];
            let h = shuffled(g, seed);
            prop_assert_eq!(g.certificate(), h.certificate());
            prop_assert_eq!(h.canonical_graph(), g.canonical_graph());
        }

        #[test]
        fn rigidification_count_identity(pick in 0usize..64) {
            let corpus: Vec<StableGraph> = [(0, 4), (1, 2), (2, 0), (0, 6), (1, 4), (2, 2)]
                .iter()
                .flat_map(|&(g, n)| enumerate_trivalent(g, n).unwrap())
                .collect();
            let g = &corpus[pick % corpus.len()];
            let tau = find_rigidification(g).unwrap();
            let cs = coordinate_system(g, &tau).unwrap();
            let (gg, n) = g.type_of().unwrap();
            prop_assert_eq!(cs.dimension() as u32, 3 * gg + n - 3);
        }

        #[test]
        fn extension_adds_tails_to_genus(pick in 0usize..64) {
            let corpus: Vec<StableGraph> = [(0, 4), (1, 2), (0, 5)]
                .iter()
                .flat_map(|&(g, n)| enumerate_trivalent(g, n).unwrap())
                .collect();
            let g = &corpus[pick % corpus.len()];
            let x = g.extend();
            prop_assert_eq!(x.genus().unwrap(), g.genus().unwrap() + g.num_tails() as u32);
            prop_assert!(x.is_stable());
            prop_assert_eq!(x.num_tails(), 0);
        }
    }
}
