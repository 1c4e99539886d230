//! Universal Schottky groups over truncated power series.
//!
//! Each oriented edge `h` of a tail-free graph gets a Möbius transformation
//! `phi_h` with attracting fixed point `alpha_h` and repelling fixed point
//! `alpha_{-h}`, depending on the deformation parameter `q_{|h|}`. A reduced
//! edge path `h(1), .., h(l)` is sent to `phi_{h(l)} .. phi_{h(1)}`.
//!
//! The representative matrices are chosen with determinant exactly `q_h`, so
//! `phi_{-h}` is the adjugate of `phi_h` and products have determinant equal
//! to the product of the `q`'s along the path.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graphs::{Branch, Dir, EdgeId, GraphError, HalfEdge, Rigidification, StableGraph, VertexId};
use crate::qseries::{format_rational, parse_rational, rat, BElement, QSeries, Rational, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchottkyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("Schottky data needs a tail-free graph")]
    HasTails,
    #[error("no alpha value for {0}")]
    MissingAlpha(HalfEdge),
    #[error("alpha constraint violated: {0}")]
    AlphaConstraint(String),
    #[error("cannot parse alpha assignment {0:?}")]
    AlphaParse(String),
    #[error("path step {index} does not start where the previous one ends")]
    NotComposable { index: usize },
    #[error("path is not reduced at step {index} (h followed by -h)")]
    NotReduced { index: usize },
    #[error("path is not closed")]
    NotClosed,
    #[error("word is empty or not cyclically reduced")]
    NotCyclicallyReduced,
    #[error("degenerate element: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, SchottkyError>;

/// Value of `alpha_h`: a rational point or infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alpha {
    Finite(Rational),
    Infinity,
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(r) => write!(f, "{}", format_rational(r)),
            Alpha::Infinity => write!(f, "inf"),
        }
    }
}

/// Parses `"+1=0,-1=inf,+2=3/4"` into an alpha assignment.
pub fn parse_alpha(s: &str) -> Result<BTreeMap<HalfEdge, Alpha>> {
    let mut out = BTreeMap::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (h, v) = item
            .split_once('=')
            .ok_or_else(|| SchottkyError::AlphaParse(item.to_string()))?;
        let h: HalfEdge = h.parse().map_err(|_| SchottkyError::AlphaParse(item.to_string()))?;
        let v = match v.trim() {
            "inf" | "infinity" | "∞" => Alpha::Infinity,
            x => Alpha::Finite(parse_rational(x).map_err(|_| SchottkyError::AlphaParse(item.to_string()))?),
        };
        out.insert(h, v);
    }
    Ok(out)
}

/// 2x2 matrix over the truncated series ring, up to unit scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjMat {
    pub m: [[QSeries; 2]; 2],
}

impl ProjMat {
    pub fn identity(vars: &[EdgeId], order: u32) -> Self {
        let o = QSeries::one(vars, order);
        let z = QSeries::zero(vars, order);
        ProjMat {
            m: [[o.clone(), z.clone()], [z, o]],
        }
    }

    pub fn mul(&self, other: &ProjMat) -> ProjMat {
        let a = &self.m;
        let b = &other.m;
        let e = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        ProjMat {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn det(&self) -> QSeries {
        &(&self.m[0][0] * &self.m[1][1]) - &(&self.m[0][1] * &self.m[1][0])
    }

    pub fn trace(&self) -> QSeries {
        &self.m[0][0] + &self.m[1][1]
    }

    pub fn adjugate(&self) -> ProjMat {
        let m = &self.m;
        ProjMat {
            m: [[m[1][1].clone(), -&m[0][1]], [-&m[1][0], m[0][0].clone()]],
        }
    }

    fn entries(&self) -> impl Iterator<Item = &QSeries> {
        self.m.iter().flatten()
    }

    /// Scalar matrix `c * I` for some series `c`.
    pub fn is_scalar(&self) -> bool {
        self.m[0][1].is_zero() && self.m[1][0].is_zero() && self.m[0][0] == self.m[1][1]
    }

    /// Position of the first entry (row-major) with a nonzero constant term.
    fn pivot(&self) -> Option<(usize, usize)> {
        (0..4)
            .map(|k| (k / 2, k % 2))
            .find(|&(i, j)| !self.m[i][j].constant_term().is_zero())
    }

    /// Representative scaled so the pivot entry is 1. Used for display; the
    /// determinant of the result is no longer the product of the `q`'s.
    pub fn normalized(&self) -> Result<ProjMat> {
        let (i, j) = self
            .pivot()
            .ok_or_else(|| SchottkyError::Degenerate("no unit entry".into()))?;
        let s = self.m[i][j].invert_unit()?;
        Ok(ProjMat {
            m: [
                [&self.m[0][0] * &s, &self.m[0][1] * &s],
                [&self.m[1][0] * &s, &self.m[1][1] * &s],
            ],
        })
    }

    /// Equality in PGL_2: `self = c * other` for a unit `c`.
    pub fn proj_eq(&self, other: &ProjMat) -> bool {
        let (Some(p), Some(q)) = (self.pivot(), other.pivot()) else {
            return false;
        };
        if p != q {
            return false;
        }
        let c = match other.m[q.0][q.1].invert_unit() {
            Ok(inv) => &self.m[p.0][p.1] * &inv,
            Err(_) => return false,
        };
        self.entries().zip(other.entries()).all(|(a, b)| *a == &c * b)
    }

    /// Reduction modulo all `q_e`.
    pub fn at_zero(&self) -> [[Rational; 2]; 2] {
        let c = |i: usize, j: usize| self.m[i][j].constant_term();
        [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]]
    }

    pub fn to_strings(&self) -> [[String; 2]; 2] {
        let s = |i: usize, j: usize| self.m[i][j].to_canonical_string();
        [[s(0, 0), s(0, 1)], [s(1, 0), s(1, 1)]]
    }
}

/// Point of the projective line over the series ring. `NearInfinity(w)` is
/// the point `z = 1/w` in the chart at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjPoint {
    Finite(QSeries),
    NearInfinity(QSeries),
}

impl ProjPoint {
    /// Homogeneous coordinates `[x : y]`.
    fn homogeneous(&self) -> (QSeries, QSeries) {
        match self {
            ProjPoint::Finite(p) => (p.clone(), QSeries::one(p.vars(), p.order())),
            ProjPoint::NearInfinity(w) => (QSeries::one(w.vars(), w.order()), w.clone()),
        }
    }

    pub fn to_canonical_string(&self) -> String {
        match self {
            ProjPoint::Finite(p) => p.to_canonical_string(),
            ProjPoint::NearInfinity(w) if w.is_zero() => "inf".into(),
            ProjPoint::NearInfinity(w) => format!("1/({w})"),
        }
    }
}

/// Result of a Möbius transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MobiusValue {
    Finite(BElement),
    Infinity,
}

/// `(m11 z + m12) / (m21 z + m22)` with the usual conventions at infinity.
pub fn mobius_apply(m: &ProjMat, z: &MobiusValue) -> Result<MobiusValue> {
    let (num, den) = match z {
        MobiusValue::Infinity => (
            BElement::from_series(m.m[0][0].clone()),
            BElement::from_series(m.m[1][0].clone()),
        ),
        MobiusValue::Finite(z) => {
            let b = |s: &QSeries| BElement::from_series(s.clone());
            (
                (&b(&m.m[0][0]) * z).checked_add(&b(&m.m[0][1]))?,
                (&b(&m.m[1][0]) * z).checked_add(&b(&m.m[1][1]))?,
            )
        }
    };
    if den.is_zero() {
        return Ok(MobiusValue::Infinity);
    }
    Ok(MobiusValue::Finite(num.checked_mul(&den.invert()?)?))
}

/// Attracting/repelling fixed points and multiplier of a group element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointData {
    pub attractive: ProjPoint,
    pub repulsive: ProjPoint,
    pub multiplier: QSeries,
    eigen_attractive: QSeries,
    eigen_repulsive: QSeries,
}

impl FixedPointData {
    /// Residual of `(g(z)-a)/(z-a) = b (g(z)-a')/(z-a')` after clearing
    /// denominators, as coefficients of a polynomial in a free variable `z`.
    /// All coefficients vanish exactly when the relation holds.
    pub fn cross_ratio_residual(&self, m: &ProjMat) -> Vec<QSeries> {
        let (xa, ya) = self.attractive.homogeneous();
        let (xr, yr) = self.repulsive.homogeneous();
        // N = m11 z + m12, D = m21 z + m22 as [const, z] coefficient pairs
        let n = [m.m[0][1].clone(), m.m[0][0].clone()];
        let d = [m.m[1][1].clone(), m.m[1][0].clone()];
        let lin = |y: &QSeries, x: &QSeries| [&(y * &n[0]) - &(x * &d[0]), &(y * &n[1]) - &(x * &d[1])];
        let la = lin(&ya, &xa);
        let lr = lin(&yr, &xr);
        // (y z - x) as [const, z]
        let pa = [-&xa, ya.clone()];
        let pr = [-&xr, yr.clone()];
        let mul2 = |p: &[QSeries; 2], q: &[QSeries; 2]| {
            vec![&p[0] * &q[0], &(&p[0] * &q[1]) + &(&p[1] * &q[0]), &p[1] * &q[1]]
        };
        let lhs = mul2(&la, &pr);
        let rhs = mul2(&lr, &pa);
        lhs.iter()
            .zip(&rhs)
            .map(|(l, r)| l - &(&self.multiplier * r))
            .collect()
    }

    /// Eigenvalues for the attracting and repelling eigenvectors.
    pub fn eigenvalues(&self) -> (&QSeries, &QSeries) {
        (&self.eigen_attractive, &self.eigen_repulsive)
    }
}

/// Fixed points and multiplier of `m`, which must reduce modulo `q` to a
/// rank-one matrix with nonzero trace (true for cyclically reduced words).
pub fn fixed_point_data(m: &ProjMat) -> Result<FixedPointData> {
    let g0 = m.at_zero();
    let det0 = &g0[0][0] * &g0[1][1] - &g0[0][1] * &g0[1][0];
    let tr0 = &g0[0][0] + &g0[1][1];
    if !det0.is_zero() {
        return Err(SchottkyError::Degenerate("not rank one modulo q".into()));
    }
    if tr0.is_zero() {
        return Err(SchottkyError::Degenerate("repeated fixed point modulo q".into()));
    }
    // g0 = u v^T: image point u is attracting, kernel point is repelling
    let col = if g0[0][0].is_zero() && g0[1][0].is_zero() { 1 } else { 0 };
    let u = [g0[0][col].clone(), g0[1][col].clone()];
    let row = if g0[0][0].is_zero() && g0[0][1].is_zero() { 1 } else { 0 };
    let v = [g0[row][0].clone(), g0[row][1].clone()];
    let attractive = solve_fixed_point(m, (&u[0], &u[1]))?;
    let repulsive = solve_fixed_point(m, (&(-v[1].clone()), &v[0]))?;
    let ea = eigenvalue(m, &attractive);
    let er = eigenvalue(m, &repulsive);
    let multiplier = &er * &ea.invert_unit()?;
    Ok(FixedPointData {
        attractive,
        repulsive,
        multiplier,
        eigen_attractive: ea,
        eigen_repulsive: er,
    })
}

/// Lifts the fixed point with homogeneous reduction `[x0 : y0]` by Hensel.
fn solve_fixed_point(m: &ProjMat, (x0, y0): (&Rational, &Rational)) -> Result<ProjPoint> {
    let [[a, b], [c, d]] = &m.m;
    if !y0.is_zero() {
        // c z^2 + (d - a) z - b = 0
        let r = crate::qseries::hensel_solve_quadratic(c, &(d - a), &(-b), &(x0 / y0))
            .map_err(degenerate)?;
        Ok(ProjPoint::Finite(r))
    } else {
        // z = 1/w: b w^2 + (a - d) w - c = 0 near w = 0
        let r = crate::qseries::hensel_solve_quadratic(b, &(a - d), &(-c), &Rational::zero())
            .map_err(degenerate)?;
        Ok(ProjPoint::NearInfinity(r))
    }
}

fn degenerate(e: SeriesError) -> SchottkyError {
    match e {
        SeriesError::RepeatedRoot => SchottkyError::Degenerate("repeated fixed point modulo q".into()),
        other => SchottkyError::Series(other),
    }
}

fn eigenvalue(m: &ProjMat, p: &ProjPoint) -> QSeries {
    match p {
        ProjPoint::Finite(z) => &(&m.m[1][0] * z) + &m.m[1][1],
        ProjPoint::NearInfinity(w) => &m.m[0][0] + &(&m.m[0][1] * w),
    }
}

/// A tail-free graph with alpha values on all oriented edges, a truncation
/// order, a base vertex and a BFS spanning tree.
///
/// Stability is not required, so the one-vertex one-loop graph (the Tate
/// curve) is allowed.
#[derive(Debug, Clone)]
pub struct SchottkyContext {
    graph: StableGraph,
    alpha: BTreeMap<HalfEdge, Alpha>,
    vars: Vec<EdgeId>,
    order: u32,
    base: VertexId,
    /// Half-edge used to reach each non-base vertex from its BFS parent.
    parent: BTreeMap<VertexId, HalfEdge>,
}

impl SchottkyContext {
    pub fn new(graph: &StableGraph, alpha: BTreeMap<HalfEdge, Alpha>, order: u32) -> Result<Self> {
        if graph.num_tails() > 0 {
            return Err(SchottkyError::HasTails);
        }
        graph.genus()?;
        for h in graph.half_edges() {
            if !alpha.contains_key(&h) {
                return Err(SchottkyError::MissingAlpha(h));
            }
        }
        check_alpha(graph, &alpha)?;
        let base = graph.vertices().next().expect("connected graph has a vertex");
        let parent = bfs_tree(graph, base);
        Ok(SchottkyContext {
            graph: graph.clone(),
            alpha,
            vars: graph.edges().map(|(id, _)| id).collect(),
            order,
            base,
            parent,
        })
    }

    /// Alpha values `0, 1, inf` from a rigidification; the remaining
    /// oriented edges take the supplied values.
    pub fn from_rigidification(
        graph: &StableGraph,
        tau: &Rigidification,
        rest: &BTreeMap<HalfEdge, Rational>,
        order: u32,
    ) -> Result<Self> {
        tau.check(graph)?;
        let mut alpha: BTreeMap<HalfEdge, Alpha> = rest
            .iter()
            .map(|(h, r)| (*h, Alpha::Finite(r.clone())))
            .collect();
        for t in tau.tau.values() {
            let vals = [Alpha::Finite(Rational::zero()), Alpha::Finite(Rational::one()), Alpha::Infinity];
            for (b, v) in t.iter().zip(vals) {
                if let Branch::Half(h) = b {
                    alpha.insert(*h, v);
                }
            }
        }
        SchottkyContext::new(graph, alpha, order)
    }

    /// Random pairwise distinct finite alpha values with small numerators
    /// and denominators.
    pub fn random(graph: &StableGraph, order: u32, rng: &mut impl Rng) -> Result<Self> {
        SchottkyContext::new(graph, random_alpha(graph, rng), order)
    }

    pub fn graph(&self) -> &StableGraph {
        &self.graph
    }

    pub fn alpha(&self, h: HalfEdge) -> Option<&Alpha> {
        self.alpha.get(&h)
    }

    pub fn alphas(&self) -> &BTreeMap<HalfEdge, Alpha> {
        &self.alpha
    }

    pub fn vars(&self) -> &[EdgeId] {
        &self.vars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base(&self) -> VertexId {
        self.base
    }

    /// Oriented edges sent to infinity.
    pub fn e_infinity(&self) -> BTreeSet<HalfEdge> {
        self.alpha
            .iter()
            .filter(|(_, a)| **a == Alpha::Infinity)
            .map(|(h, _)| *h)
            .collect()
    }

    /// The variable `q_e`.
    pub fn q(&self, e: EdgeId) -> QSeries {
        QSeries::var(&self.vars, self.order, e).expect("edge variable")
    }

    /// Constant series in this context's ring.
    pub fn constant(&self, c: Rational) -> QSeries {
        QSeries::constant(&self.vars, self.order, c)
    }

    /// Generator matrix for an oriented edge, with determinant `q_{|h|}`.
    pub fn phi(&self, h: HalfEdge) -> Result<ProjMat> {
        if !self.graph.has_edge(h.edge) {
            return Err(GraphError::UnknownEdge(h.edge).into());
        }
        let q = self.q(h.edge);
        let one = self.constant(Rational::one());
        let one_minus_q = &one - &q;
        let c = |r: &Rational| self.constant(r.clone());
        let zero = QSeries::zero(&self.vars, self.order);
        let m = match (&self.alpha[&h], &self.alpha[&h.reverse()]) {
            (Alpha::Finite(a), Alpha::Finite(b)) => {
                let s = (a - b).recip();
                let sc = |x: QSeries| x.scale(&s);
                [
                    [sc(&c(a) - &q.scale(b)), sc(one_minus_q.scale(&-(a * b)))],
                    [sc(one_minus_q.clone()), sc(&q.scale(a) - &c(b))],
                ]
            }
            (Alpha::Finite(a), Alpha::Infinity) => [[q.clone(), one_minus_q.scale(a)], [zero, one]],
            (Alpha::Infinity, Alpha::Finite(b)) => [[one, one_minus_q.scale(&-b.clone())], [zero, q.clone()]],
            (Alpha::Infinity, Alpha::Infinity) => unreachable!("checked at construction"),
        };
        Ok(ProjMat { m })
    }

    /// Checks that `path` is a reduced edge path and returns its endpoints.
    pub fn check_path(&self, path: &[HalfEdge]) -> Result<Option<(VertexId, VertexId)>> {
        let mut prev: Option<HalfEdge> = None;
        for (index, &h) in path.iter().enumerate() {
            let start = self
                .graph
                .target(h.reverse())
                .ok_or(GraphError::UnknownEdge(h.edge))?;
            if let Some(p) = prev {
                if self.graph.target(p) != Some(start) {
                    return Err(SchottkyError::NotComposable { index });
                }
                if p == h.reverse() {
                    return Err(SchottkyError::NotReduced { index });
                }
            }
            prev = Some(h);
        }
        Ok(match (path.first(), path.last()) {
            (Some(f), Some(l)) => Some((
                self.graph.target(f.reverse()).expect("checked"),
                self.graph.target(*l).expect("checked"),
            )),
            _ => None,
        })
    }

    /// `phi_{h(l)} ... phi_{h(1)}` for a reduced path.
    pub fn word_to_element(&self, path: &[HalfEdge]) -> Result<ProjMat> {
        self.check_path(path)?;
        let mut acc = ProjMat::identity(&self.vars, self.order);
        for &h in path {
            acc = self.phi(h)?.mul(&acc);
        }
        Ok(acc)
    }

    /// Product of the `q`'s along a path, the expected determinant.
    pub fn path_monomial(&self, path: &[HalfEdge]) -> QSeries {
        path.iter()
            .fold(self.constant(Rational::one()), |acc, h| &acc * &self.q(h.edge))
    }

    /// Tree path from the base vertex to `v`.
    pub fn tree_path(&self, v: VertexId) -> Vec<HalfEdge> {
        let mut out = Vec::new();
        let mut at = v;
        while let Some(&h) = self.parent.get(&at) {
            out.push(h);
            at = self.graph.target(h.reverse()).expect("tree edge");
        }
        out.reverse();
        out
    }

    /// One closed path at the base vertex per edge outside the spanning tree.
    pub fn free_generators(&self) -> Vec<Vec<HalfEdge>> {
        let tree: BTreeSet<EdgeId> = self.parent.values().map(|h| h.edge).collect();
        self.graph
            .edges()
            .filter(|(id, _)| !tree.contains(id))
            .map(|(id, e)| {
                let mut p = self.tree_path(e.tail);
                p.push(HalfEdge::plus(id));
                p.extend(self.tree_path(e.head).into_iter().rev().map(HalfEdge::reverse));
                p
            })
            .collect()
    }

    /// Fixed-point data for a nonempty closed path that is cyclically reduced.
    pub fn fixed_points_of_word(&self, path: &[HalfEdge]) -> Result<(ProjMat, FixedPointData)> {
        let ends = self.check_path(path)?;
        match ends {
            None => return Err(SchottkyError::NotCyclicallyReduced),
            Some((s, t)) if s != t => return Err(SchottkyError::NotClosed),
            _ => {}
        }
        if path.len() > 1 && path[0] == path[path.len() - 1].reverse() {
            return Err(SchottkyError::NotCyclicallyReduced);
        }
        let m = self.word_to_element(path)?;
        let f = fixed_point_data(&m)?;
        Ok((m, f))
    }

    /// Random reduced path of `len` steps from `start`; the first step is
    /// never the reverse of `after`, so the result can follow a path ending in `after`.
    pub fn random_path(
        &self,
        rng: &mut impl Rng,
        start: VertexId,
        len: usize,
        after: Option<HalfEdge>,
    ) -> Vec<HalfEdge> {
        let hs = self.graph.half_edges();
        let mut out: Vec<HalfEdge> = Vec::with_capacity(len);
        let mut at = start;
        let mut prev = after;
        for _ in 0..len {
            let options: Vec<HalfEdge> = hs
                .iter()
                .copied()
                .filter(|h| self.graph.target(h.reverse()) == Some(at) && Some(h.reverse()) != prev)
                .collect();
            let h = options[rng.gen_range(0..options.len())];
            out.push(h);
            at = self.graph.target(h).expect("edge");
            prev = Some(h);
        }
        out
    }

    /// All cyclically reduced closed paths with at most `max_len` steps.
    pub fn closed_paths(&self, max_len: usize) -> Vec<Vec<HalfEdge>> {
        let mut out = Vec::new();
        let hs = self.graph.half_edges();
        fn go(
            ctx: &SchottkyContext,
            hs: &[HalfEdge],
            path: &mut Vec<HalfEdge>,
            max_len: usize,
            out: &mut Vec<Vec<HalfEdge>>,
        ) {
            let start = ctx.graph.target(path[0].reverse()).expect("edge");
            let last = *path.last().expect("nonempty");
            let at = ctx.graph.target(last).expect("edge");
            if at == start && (path.len() == 1 || path[0] != last.reverse()) {
                out.push(path.clone());
            }
            if path.len() == max_len {
                return;
            }
            for &h in hs {
                if h != last.reverse() && ctx.graph.target(h.reverse()) == Some(at) {
                    path.push(h);
                    go(ctx, hs, path, max_len, out);
                    path.pop();
                }
            }
        }
        if max_len == 0 {
            return out;
        }
        for &h in &hs {
            let mut p = vec![h];
            go(self, &hs, &mut p, max_len, &mut out);
        }
        out
    }
}

/// BFS from `base`, visiting neighbours through half-edges in id order.
fn bfs_tree(graph: &StableGraph, base: VertexId) -> BTreeMap<VertexId, HalfEdge> {
    let mut parent = BTreeMap::new();
    let mut seen = BTreeSet::from([base]);
    let mut queue = VecDeque::from([base]);
    let hs = graph.half_edges();
    while let Some(v) = queue.pop_front() {
        for &h in &hs {
            if graph.target(h.reverse()) == Some(v) {
                let w = graph.target(h).expect("edge");
                if seen.insert(w) {
                    parent.insert(w, h);
                    queue.push_back(w);
                }
            }
        }
    }
    parent
}

fn check_alpha(graph: &StableGraph, alpha: &BTreeMap<HalfEdge, Alpha>) -> Result<()> {
    let bad = |m: String| Err(SchottkyError::AlphaConstraint(m));
    for (h, a) in alpha {
        if !graph.has_edge(h.edge) {
            return bad(format!("alpha given for unknown edge {h}"));
        }
        if h.dir == Dir::Plus && *a == alpha[&h.reverse()] {
            return bad(format!("alpha_{h} = alpha_{}", h.reverse()));
        }
    }
    for v in graph.vertices() {
        let at_v: Vec<(HalfEdge, &Alpha)> = alpha
            .iter()
            .filter(|(h, _)| graph.target(**h) == Some(v))
            .map(|(h, a)| (*h, a))
            .collect();
        for (i, (h, a)) in at_v.iter().enumerate() {
            for (k, b) in &at_v[i + 1..] {
                if a == b {
                    return bad(format!("alpha_{h} = alpha_{k} at vertex {v}"));
                }
            }
        }
    }
    Ok(())
}

pub fn random_alpha(graph: &StableGraph, rng: &mut impl Rng) -> BTreeMap<HalfEdge, Alpha> {
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for h in graph.half_edges() {
        loop {
            let r = rat(rng.gen_range(-30..=30), rng.gen_range(1..=9));
            if used.insert(r.clone()) {
                out.insert(h, Alpha::Finite(r));
                break;
            }
        }
    }
    out
}

/// Frees a concatenation of paths of cancelling pairs `h, -h`.
pub fn free_reduce(path: &[HalfEdge]) -> Vec<HalfEdge> {
    let mut out: Vec<HalfEdge> = Vec::with_capacity(path.len());
    for &h in path {
        if out.last() == Some(&h.reverse()) {
            out.pop();
        } else {
            out.push(h);
        }
    }
    out
}

pub fn inverse_path(path: &[HalfEdge]) -> Vec<HalfEdge> {
    path.iter().rev().map(|h| h.reverse()).collect()
}

pub fn format_path(path: &[HalfEdge]) -> String {
    path.iter().map(HalfEdge::to_string).collect::<Vec<_>>().join(",")
}

/// Parses `"+1,-2"` (or `"+e1,-e2"`).
pub fn parse_path(s: &str) -> Result<Vec<HalfEdge>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<HalfEdge>().map_err(SchottkyError::from))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    pub matrix: [[String; 2]; 2],
    pub normalized: [[String; 2]; 2],
    pub det: String,
}

impl MatrixReport {
    pub fn new(m: &ProjMat) -> Result<Self> {
        Ok(MatrixReport {
            matrix: m.to_strings(),
            normalized: m.normalized()?.to_strings(),
            det: m.det().to_canonical_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::examples::{dumbbell, rose, theta};
    use crate::graphs::find_rigidification;
    use crate::qseries::rat_int;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;

    fn tate(order: u32) -> SchottkyContext {
        let g = rose(1, 0);
        let alpha = parse_alpha("+0=0,-0=inf").unwrap();
        SchottkyContext::new(&g, alpha, order).unwrap()
    }

    #[test]
    fn tate_curve() {
        let ctx = tate(4);
        let phi = ctx.phi(HalfEdge::plus(0)).unwrap();
        assert_eq!(phi.to_strings(), [["q0".to_string(), "0".into()], ["0".into(), "1".into()]]);
        let one = MobiusValue::Finite(BElement::from_series(QSeries::one(&[0], 4)));
        let MobiusValue::Finite(v) = mobius_apply(&phi, &one).unwrap() else { panic!() };
        assert_eq!(v.to_string(), "q0");
        let (_, f) = ctx.fixed_points_of_word(&[HalfEdge::plus(0)]).unwrap();
        assert_eq!(f.attractive, ProjPoint::Finite(QSeries::zero(&[0], 4)));
        assert_eq!(f.repulsive, ProjPoint::NearInfinity(QSeries::zero(&[0], 4)));
        assert_eq!(f.multiplier.to_string(), "q0");
    }

    #[test]
    fn determinant_and_fixed_points_of_generators() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let ctx = SchottkyContext::random(&theta(), 5, &mut rng).unwrap();
        for h in ctx.graph().half_edges() {
            let phi = ctx.phi(h).unwrap();
            assert_eq!(phi.det(), ctx.q(h.edge));
            let Alpha::Finite(a) = ctx.alpha(h).unwrap().clone() else { panic!() };
            let Alpha::Finite(b) = ctx.alpha(h.reverse()).unwrap().clone() else { panic!() };
            for x in [a.clone(), b.clone()] {
                let z = MobiusValue::Finite(BElement::from_series(ctx.constant(x.clone())));
                assert_eq!(mobius_apply(&phi, &z).unwrap(), z);
            }
            let f = fixed_point_data(&phi).unwrap();
            assert_eq!(f.attractive, ProjPoint::Finite(ctx.constant(a)));
            assert_eq!(f.repulsive, ProjPoint::Finite(ctx.constant(b)));
            assert_eq!(f.multiplier, ctx.q(h.edge));
            let sq = fixed_point_data(&phi.mul(&phi)).unwrap();
            assert_eq!(sq.multiplier, ctx.q(h.edge).pow(2));
            let inv = ctx.phi(h.reverse()).unwrap();
            assert!(inv.mul(&phi).is_scalar());
            assert_eq!(inv, phi.adjugate());
        }
    }

    #[test]
    fn closed_fiber_is_rank_one_with_image_alpha() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ctx = SchottkyContext::random(&dumbbell(), 3, &mut rng).unwrap();
        for h in ctx.graph().half_edges() {
            let m0 = ctx.phi(h).unwrap().at_zero();
            assert!((&m0[0][0] * &m0[1][1] - &m0[0][1] * &m0[1][0]).is_zero());
            let Alpha::Finite(a) = ctx.alpha(h).unwrap() else { panic!() };
            // image spanned by (alpha_h, 1)
            for j in 0..2 {
                assert_eq!(&m0[0][j], &(a * &m0[1][j]));
            }
        }
    }

    #[test]
    fn paths_are_checked() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let ctx = SchottkyContext::random(&theta(), 3, &mut rng).unwrap();
        assert_eq!(ctx.word_to_element(&[]).unwrap(), ProjMat::identity(ctx.vars(), 3));
        let h = HalfEdge::plus(0);
        assert_eq!(
            ctx.word_to_element(&[h, h.reverse()]).unwrap_err(),
            SchottkyError::NotReduced { index: 1 }
        );
        assert_eq!(ctx.word_to_element(&[h, h]).unwrap_err(), SchottkyError::NotComposable { index: 1 });
        let two = [HalfEdge::plus(0), HalfEdge::minus(1)];
        let m = ctx.word_to_element(&two).unwrap();
        assert_eq!(m.det(), ctx.path_monomial(&two));
        assert_eq!(ctx.path_monomial(&two).to_string(), "q0*q1");
    }

    #[test]
    fn generators_count_genus() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for g in [rose(3, 0), theta(), dumbbell(), rose(0, 3).extend()] {
            let ctx = SchottkyContext::random(&g, 2, &mut rng).unwrap();
            let gens = ctx.free_generators();
            assert_eq!(gens.len() as u32, g.genus().unwrap());
            for p in gens {
                assert_eq!(ctx.check_path(&p).unwrap().map(|(s, t)| (s, t)), Some((ctx.base(), ctx.base())));
            }
        }
        let ctx = SchottkyContext::random(&rose(3, 0), 2, &mut rng).unwrap();
        assert_eq!(ctx.free_generators(), vec![vec![HalfEdge::plus(0)], vec![HalfEdge::plus(1)], vec![HalfEdge::plus(2)]]);
    }

    #[test]
    fn rigidified_alpha_respects_constraints() {
        for g in [theta(), dumbbell(), rose(0, 3).extend()] {
            let tau = find_rigidification(&g).unwrap();
            let mut rest = BTreeMap::new();
            let mut k = 2;
            for h in g.half_edges() {
                rest.insert(h, rat_int(k));
                k += 1;
            }
            let ctx = SchottkyContext::from_rigidification(&g, &tau, &rest, 3).unwrap();
            assert_eq!(ctx.e_infinity().len(), g.num_vertices());
            for h in g.half_edges() {
                assert_eq!(ctx.phi(h).unwrap().det(), ctx.q(h.edge));
            }
        }
    }

    #[test]
    fn alpha_constraints_rejected() {
        let g = rose(1, 0);
        assert!(matches!(
            SchottkyContext::new(&g, parse_alpha("+0=1,-0=1").unwrap(), 2),
            Err(SchottkyError::AlphaConstraint(_))
        ));
        assert!(matches!(
            SchottkyContext::new(&g, parse_alpha("+0=inf,-0=inf").unwrap(), 2),
            Err(SchottkyError::AlphaConstraint(_))
        ));
        assert_eq!(
            SchottkyContext::new(&g, parse_alpha("+0=1").unwrap(), 2).unwrap_err(),
            SchottkyError::MissingAlpha(HalfEdge::minus(0))
        );
        assert_eq!(
            SchottkyContext::new(&rose(1, 1), BTreeMap::new(), 2).unwrap_err(),
            SchottkyError::HasTails
        );
    }

    #[test]
    fn projective_equality() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let ctx = SchottkyContext::random(&theta(), 3, &mut rng).unwrap();
        let m = ctx.phi(HalfEdge::plus(1)).unwrap();
        let scaled = ProjMat {
            m: m.m.clone().map(|r| r.map(|x| &x * &(&ctx.constant(rat_int(3)) + &ctx.q(0)))),
        };
        assert!(m.proj_eq(&scaled));
        assert!(!m.proj_eq(&ctx.phi(HalfEdge::plus(2)).unwrap()));
        assert_eq!(m.normalized().unwrap(), scaled.normalized().unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cross_ratio_identity_on_random_words(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = if seed % 2 == 0 { theta() } else { dumbbell() };
            let ctx = SchottkyContext::random(&g, 4, &mut rng).unwrap();
            let words = ctx.closed_paths(3);
            let w = &words[rng.gen_range(0..words.len())];
            let (m, f) = ctx.fixed_points_of_word(w).unwrap();
            prop_assert!(f.multiplier.constant_term().is_zero());
            for c in f.cross_ratio_residual(&m) {
                prop_assert!(c.is_zero());
            }
        }

        #[test]
        fn anti_homomorphism(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let ctx = SchottkyContext::random(&theta(), 4, &mut rng).unwrap();
            let start = rng.gen_range(0..2);
            let (l1, l2) = (rng.gen_range(1..4), rng.gen_range(1..4));
            let r = ctx.random_path(&mut rng, start, l1, None);
            let mid = ctx.graph().target(*r.last().unwrap()).unwrap();
            let s = ctx.random_path(&mut rng, mid, l2, r.last().copied());
            let rs = [r.clone(), s.clone()].concat();
            let lhs = ctx.word_to_element(&rs).unwrap();
            let rhs = ctx.word_to_element(&s).unwrap().mul(&ctx.word_to_element(&r).unwrap());
            prop_assert_eq!(&lhs, &rhs);
            prop_assert!(lhs.proj_eq(&rhs));
        }
    }
}
