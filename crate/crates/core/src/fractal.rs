//! p.c.f. fractal specifications, canonical vertex addresses and the graphs Γ_m.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::rational::{fmt_q, parse_q, q, qi, Q};

/// A word w = w₁…w_m. Ordered by length first, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn push(&self, c: u8) -> Word {
        let mut v = self.0.clone();
        v.push(c);
        Word(v)
    }
    pub fn chars(&self) -> &[u8] {
        &self.0
    }

    /// Digits when every character is below 10, otherwise '.'-prefixed and '.'-separated.
    pub fn parse(s: &str) -> Result<Word> {
        let bad = || Error::Parse(format!("bad word {s:?}"));
        if let Some(rest) = s.strip_prefix('.') {
            if rest.is_empty() {
                return Ok(Word::empty());
            }
            return rest.split('.').map(|t| t.parse::<u8>().map_err(|_| bad())).collect::<Result<Vec<_>>>().map(Word);
        }
        s.chars().map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad)).collect::<Result<Vec<_>>>().map(Word)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&c| c < 10) {
            for c in &self.0 {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            for c in &self.0 {
                write!(f, ".{c}")?;
            }
            Ok(())
        }
    }
}

/// Canonical representative (word, boundary index) of the point F_w q_n.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct VertexId {
    pub word: Word,
    pub index: u8,
}

impl VertexId {
    pub fn boundary(k: usize) -> Self {
        VertexId { word: Word::empty(), index: k as u8 }
    }
    pub fn depth(&self) -> usize {
        self.word.len()
    }
    pub fn is_boundary(&self) -> bool {
        self.word.is_empty()
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.word, self.index)
    }
}

/// Affine data for plotting: F_i(x, y) = (a x + b y + e, c x + d y + f).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Embedding {
    pub points: Vec<[f64; 2]>,
    pub maps: Vec<[f64; 6]>,
}

impl Embedding {
    pub fn apply(&self, i: usize, p: [f64; 2]) -> [f64; 2] {
        let [a, b, c, d, e, f] = self.maps[i];
        [a * p[0] + b * p[1] + e, c * p[0] + d * p[1] + f]
    }

    pub fn point(&self, w: &Word, n: usize) -> [f64; 2] {
        w.0.iter().rev().fold(self.points[n], |p, &i| self.apply(i as usize, p))
    }

    fn similarity(ratio: f64, fixed: [f64; 2]) -> [f64; 6] {
        [ratio, 0.0, 0.0, ratio, (1.0 - ratio) * fixed[0], (1.0 - ratio) * fixed[1]]
    }
}

#[derive(Clone, Debug)]
pub struct FractalSpec {
    pub name: String,
    pub n_maps: usize,
    pub n_boundary: usize,
    pub r: Vec<Q>,
    pub mu: Vec<Q>,
    pub conductances: Vec<(usize, usize, Q)>,
    pub identifications: Vec<((usize, usize), (usize, usize))>,
    pub embedding: Option<Embedding>,
    pub labels: Option<Vec<String>>,
    classes: HashMap<(u8, u8), Vec<(u8, u8)>>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut x = x;
    while parent[x] != r {
        let nx = parent[x];
        parent[x] = r;
        x = nx;
    }
    r
}

impl FractalSpec {
    /// Structural checks only (lengths, index ranges); the analytic invariants are
    /// left to [`validate_spec`] so that a broken spec can still be reported on.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        n_maps: usize,
        n_boundary: usize,
        r: Vec<Q>,
        mu: Vec<Q>,
        conductances: Vec<(usize, usize, Q)>,
        identifications: Vec<((usize, usize), (usize, usize))>,
        embedding: Option<Embedding>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_maps == 0 || n_boundary < 2 || n_boundary > n_maps {
            return Err(Error::Invalid(format!("need 2 <= n_boundary <= n_maps, got {n_boundary} and {n_maps}")));
        }
        if n_maps > 250 {
            return Err(Error::Invalid("at most 250 maps are supported".into()));
        }
        if r.len() != n_maps || mu.len() != n_maps {
            return Err(Error::Invalid("r and mu need one entry per map".into()));
        }
        for &(j, k, _) in &conductances {
            if j >= n_boundary || k >= n_boundary || j == k {
                return Err(Error::OutOfRange(format!("conductance pair ({j},{k})")));
            }
        }
        for &((i, n), (j, m)) in &identifications {
            if i >= n_maps || j >= n_maps || n >= n_boundary || m >= n_boundary {
                return Err(Error::OutOfRange(format!("identification F{i}q{n} = F{j}q{m}")));
            }
        }
        if let Some(e) = &embedding {
            if e.points.len() != n_boundary || e.maps.len() != n_maps {
                return Err(Error::Invalid("embedding needs one point per boundary vertex and one map per contraction".into()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n_maps {
                return Err(Error::Invalid("labels need one entry per map".into()));
            }
        }
        let nb = n_boundary;
        let mut parent: Vec<usize> = (0..n_maps * nb).collect();
        for &((i, n), (j, m)) in &identifications {
            let (a, b) = (find(&mut parent, i * nb + n), find(&mut parent, j * nb + m));
            parent[a] = b;
        }
        let mut groups: HashMap<usize, Vec<(u8, u8)>> = HashMap::new();
        for x in 0..n_maps * nb {
            let root = find(&mut parent, x);
            groups.entry(root).or_default().push(((x / nb) as u8, (x % nb) as u8));
        }
        let mut classes = HashMap::new();
        for g in groups.into_values().filter(|g| g.len() > 1) {
            for &a in &g {
                classes.insert(a, g.iter().copied().filter(|&b| b != a).collect());
            }
        }
        Ok(FractalSpec {
            name: name.to_string(),
            n_maps,
            n_boundary,
            r,
            mu,
            conductances,
            identifications,
            embedding,
            labels,
            classes,
        })
    }

    pub fn conductance(&self, j: usize, k: usize) -> Q {
        self.conductances
            .iter()
            .filter(|&&(a, b, _)| (a, b) == (j, k) || (a, b) == (k, j))
            .fold(Q::zero(), |s, (_, _, c)| s + c)
    }

    /// E₀(u) = Σ_{j<k} c_jk (u_j − u_k)².
    pub fn boundary_energy(&self, u: &[Q]) -> Q {
        self.conductances.iter().fold(Q::zero(), |s, (j, k, c)| {
            let d = &u[*j] - &u[*k];
            s + c * &d * &d
        })
    }

    pub fn mu_word(&self, w: &Word) -> Q {
        w.0.iter().fold(Q::one(), |p, &i| p * &self.mu[i as usize])
    }

    pub fn r_word(&self, w: &Word) -> Q {
        w.0.iter().fold(Q::one(), |p, &i| p * &self.r[i as usize])
    }

    pub fn label(&self, i: usize) -> String {
        self.labels.as_ref().map_or_else(|| i.to_string(), |l| l[i].clone())
    }

    fn collapse(mut w: Vec<u8>, n: u8) -> (Vec<u8>, u8) {
        while w.last() == Some(&n) {
            w.pop();
        }
        (w, n)
    }

    /// All collapsed representations (no trailing character equal to the index).
    pub fn collapsed_forms(&self, w: &[u8], n: u8) -> Vec<(Vec<u8>, u8)> {
        let start = Self::collapse(w.to_vec(), n);
        let mut seen: HashSet<(Vec<u8>, u8)> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some((u, k)) = queue.pop_front() {
            let mut next = Vec::new();
            if let Some(&i) = u.last() {
                if let Some(cls) = self.classes.get(&(i, k)) {
                    for &(j, m) in cls {
                        let mut v = u[..u.len() - 1].to_vec();
                        v.push(j);
                        next.push(Self::collapse(v, m));
                    }
                }
            }
            if let Some(cls) = self.classes.get(&(k, k)) {
                for &(j, m) in cls {
                    let mut v = u.clone();
                    v.push(j);
                    next.push(Self::collapse(v, m));
                }
            }
            for f in next {
                if seen.insert(f.clone()) {
                    queue.push_back(f);
                }
            }
        }
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort_by(|a, b| (a.0.len(), &a.0, a.1).cmp(&(b.0.len(), &b.0, b.1)));
        out
    }

    fn check_address(&self, w: &[u8], n: usize) -> Result<()> {
        if n >= self.n_boundary {
            return Err(Error::OutOfRange(format!("boundary index {n} >= {}", self.n_boundary)));
        }
        if let Some(&c) = w.iter().find(|&&c| c as usize >= self.n_maps) {
            return Err(Error::OutOfRange(format!("map index {c} >= {}", self.n_maps)));
        }
        Ok(())
    }

    pub fn canonicalize(&self, w: &Word, n: usize) -> Result<VertexId> {
        self.check_address(&w.0, n)?;
        let (u, k) = self.collapsed_forms(&w.0, n as u8).swap_remove(0);
        Ok(VertexId { word: Word(u), index: k })
    }

    /// Representations F_w q_n of `v` with |w| = depth (depth ≥ v.depth()).
    pub fn representations(&self, v: &VertexId, depth: usize) -> Vec<(Word, u8)> {
        let mut out: Vec<(Word, u8)> = self
            .collapsed_forms(&v.word.0, v.index)
            .into_iter()
            .filter(|(u, _)| u.len() <= depth)
            .map(|(mut u, k)| {
                u.resize(depth, k);
                (Word(u), k)
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn parse_vertex(&self, s: &str) -> Result<VertexId> {
        let (w, n) = s.trim().rsplit_once(':').ok_or_else(|| Error::Parse(format!("address {s:?} lacks ':'")))?;
        let n: usize = n.trim().parse().map_err(|_| Error::Parse(format!("bad index in {s:?}")))?;
        self.canonicalize(&Word::parse(w.trim())?, n)
    }

    pub fn address(&self, v: &VertexId) -> String {
        v.to_string()
    }
}

// ---------- graphs ----------

/// Γ_m: vertices of V_m in canonical order, cells in lexicographic word order.
#[derive(Clone, Debug)]
pub struct CellGraph {
    pub depth: usize,
    pub n_maps: usize,
    pub n_boundary: usize,
    pub vertices: Vec<VertexId>,
    pub index: HashMap<VertexId, usize>,
    cell_vertices: Vec<usize>,
    pub eta: Vec<u32>,
    pub mu_cell: Vec<Q>,
    pub r_cell: Vec<Q>,
    /// For each (i, n): index in Γ₁ of F_i q_n. Present on every graph for refinement.
    pub pattern: Vec<usize>,
}

impl CellGraph {
    pub fn n_cells(&self) -> usize {
        self.cell_vertices.len() / self.n_boundary
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cell_vertices[c * self.n_boundary..(c + 1) * self.n_boundary]
    }

    pub fn cell_word(&self, mut c: usize) -> Word {
        let mut w = vec![0u8; self.depth];
        for k in (0..self.depth).rev() {
            w[k] = (c % self.n_maps) as u8;
            c /= self.n_maps;
        }
        Word(w)
    }

    pub fn cell_of_word(&self, w: &Word) -> Option<usize> {
        (w.len() == self.depth).then(|| w.0.iter().fold(0usize, |c, &i| c * self.n_maps + i as usize))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_index(&self, v: &VertexId) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Per-cell edges F_w q_j – F_w q_k with conductance r_w⁻¹ c_jk, merged per vertex pair.
    pub fn edges(&self, spec: &FractalSpec) -> Vec<(usize, usize, Q)> {
        let base: Vec<(usize, usize, Q)> = spec.conductances.iter().filter(|c| !c.2.is_zero()).cloned().collect();
        let mut acc: std::collections::BTreeMap<(usize, usize), Q> = Default::default();
        for c in 0..self.n_cells() {
            let inv = self.r_cell[c].recip();
            let cv = self.cell(c);
            for (j, k, cjk) in &base {
                let (a, b) = (cv[*j].min(cv[*k]), cv[*j].max(cv[*k]));
                let e = acc.entry((a, b)).or_insert_with(Q::zero);
                *e += &inv * cjk;
            }
        }
        acc.into_iter().map(|((a, b), c)| (a, b, c)).collect()
    }

    pub fn network<S: crate::rational::Field>(&self, spec: &FractalSpec) -> Network<S> {
        let mut n = Network::new(self.len());
        for (a, b, c) in self.edges(spec) {
            n.add_edge(a, b, S::from_q(&c));
        }
        n
    }

    /// E_m(u) = Σ_w r_w⁻¹ Σ_{j<k} c_jk (u(F_w q_j) − u(F_w q_k))².
    pub fn energy(&self, spec: &FractalSpec, values: &[Q]) -> Result<Q> {
        if values.len() != self.len() {
            return Err(Error::Missing(format!("{} values for {} vertices", values.len(), self.len())));
        }
        let mut total = Q::zero();
        for c in 0..self.n_cells() {
            let cv = self.cell(c);
            let local: Vec<Q> = cv.iter().map(|&x| values[x].clone()).collect();
            total += spec.boundary_energy(&local) / &self.r_cell[c];
        }
        Ok(total)
    }

    pub fn energy_f64(&self, spec: &FractalSpec, values: &[f64]) -> f64 {
        let base: Vec<(usize, usize, f64)> = spec.conductances.iter().map(|(j, k, c)| (*j, *k, crate::rational::q_to_f64(c))).collect();
        (0..self.n_cells())
            .map(|c| {
                let cv = self.cell(c);
                let r = crate::rational::q_to_f64(&self.r_cell[c]);
                base.iter().map(|(j, k, w)| w * (values[cv[*j]] - values[cv[*k]]).powi(2)).sum::<f64>() / r
            })
            .sum()
    }
}

fn graph_from_cells(spec: &FractalSpec, depth: usize, canon: Vec<VertexId>, pattern: Vec<usize>) -> CellGraph {
    // canon: per (cell, n) canonical vertex; cells in lexicographic order
    let set: BTreeSet<VertexId> = canon.iter().cloned().collect();
    let vertices: Vec<VertexId> = set.into_iter().collect();
    let index: HashMap<VertexId, usize> = vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let cell_vertices: Vec<usize> = canon.iter().map(|v| index[v]).collect();
    finish_graph(spec, depth, vertices, index, cell_vertices, pattern)
}

fn finish_graph(
    spec: &FractalSpec,
    depth: usize,
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    cell_vertices: Vec<usize>,
    pattern: Vec<usize>,
) -> CellGraph {
    let nb = spec.n_boundary;
    let n_cells = cell_vertices.len() / nb;
    let mut eta = vec![0u32; vertices.len()];
    for c in 0..n_cells {
        let mut cv = cell_vertices[c * nb..(c + 1) * nb].to_vec();
        cv.sort_unstable();
        cv.dedup();
        for x in cv {
            eta[x] += 1;
        }
    }
    let mut mu_cell = vec![Q::one()];
    let mut r_cell = vec![Q::one()];
    for _ in 0..depth {
        mu_cell = mu_cell.iter().flat_map(|m| spec.mu.iter().map(move |x| m * x)).collect();
        r_cell = r_cell.iter().flat_map(|m| spec.r.iter().map(move |x| m * x)).collect();
    }
    CellGraph {
        depth,
        n_maps: spec.n_maps,
        n_boundary: nb,
        vertices,
        index,
        cell_vertices,
        eta,
        mu_cell,
        r_cell,
        pattern,
    }
}

/// Γ_m built by canonicalizing every (cell, boundary index) pair directly.
pub fn build_graph_direct(spec: &FractalSpec, m: usize) -> CellGraph {
    let n_cells = spec.n_maps.pow(m as u32);
    let mut canon = Vec::with_capacity(n_cells * spec.n_boundary);
    for c in 0..n_cells {
        let mut w = vec![0u8; m];
        let mut x = c;
        for k in (0..m).rev() {
            w[k] = (x % spec.n_maps) as u8;
            x /= spec.n_maps;
        }
        let w = Word(w);
        for n in 0..spec.n_boundary {
            canon.push(spec.canonicalize(&w, n).expect("indices in range"));
        }
    }
    let mut g = graph_from_cells(spec, m, canon, Vec::new());
    g.pattern = level_one_pattern(spec);
    g
}

fn level_one_pattern(spec: &FractalSpec) -> Vec<usize> {
    let mut canon = Vec::new();
    for i in 0..spec.n_maps {
        for n in 0..spec.n_boundary {
            canon.push(spec.canonicalize(&Word(vec![i as u8]), n).expect("indices in range"));
        }
    }
    let g = graph_from_cells(spec, 1, canon, Vec::new());
    g.cell_vertices
}

/// Γ_{m+1} from Γ_m: every point of V_{m+1} \ V_m is F_w x for exactly one m-cell w
/// and one x ∈ V₁ \ V₀, and its canonical word is w followed by that of x.
pub fn refine_graph(spec: &FractalSpec, g1: &CellGraph, prev: &CellGraph) -> CellGraph {
    let nb = spec.n_boundary;
    let n_int = g1.len() - nb;
    let mut vertices = prev.vertices.clone();
    let mut index = prev.index.clone();
    let offset = vertices.len();
    vertices.reserve(prev.n_cells() * n_int);
    for c in 0..prev.n_cells() {
        let w = prev.cell_word(c);
        for x in &g1.vertices[nb..] {
            let mut word = w.0.clone();
            word.extend_from_slice(&x.word.0);
            let v = VertexId { word: Word(word), index: x.index };
            index.insert(v.clone(), vertices.len());
            vertices.push(v);
        }
    }
    let mut cell_vertices = Vec::with_capacity(prev.n_cells() * spec.n_maps * nb);
    for c in 0..prev.n_cells() {
        let parent = prev.cell(c);
        for i in 0..spec.n_maps {
            for n in 0..nb {
                let p = g1.pattern[i * nb + n];
                cell_vertices.push(if p < nb { parent[p] } else { offset + c * n_int + (p - nb) });
            }
        }
    }
    finish_graph(spec, prev.depth + 1, vertices, index, cell_vertices, g1.pattern.clone())
}

pub fn build_graph(spec: &FractalSpec, m: usize) -> CellGraph {
    if m <= 1 {
        return build_graph_direct(spec, m);
    }
    let g1 = build_graph_direct(spec, 1);
    let mut g = g1.clone();
    for _ in 1..m {
        g = refine_graph(spec, &g1, &g);
    }
    g
}

/// Lazily built, shared graphs Γ_0, Γ_1, … for one spec.
#[derive(Debug, Default)]
pub struct GraphCache {
    graphs: Mutex<Vec<Arc<CellGraph>>>,
}

impl GraphCache {
    pub fn get(&self, spec: &FractalSpec, m: usize) -> Arc<CellGraph> {
        let mut gs = self.graphs.lock().expect("graph cache poisoned");
        if gs.is_empty() {
            gs.push(Arc::new(build_graph_direct(spec, 0)));
            gs.push(Arc::new(build_graph_direct(spec, 1)));
        }
        while gs.len() <= m {
            let next = refine_graph(spec, &gs[1], gs.last().unwrap());
            gs.push(Arc::new(next));
        }
        gs[m].clone()
    }
}

pub fn enumerate_vertices(spec: &FractalSpec, m: usize) -> Vec<VertexId> {
    build_graph(spec, m).vertices
}

// ---------- validation ----------

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in edges {
        let (x, y) = (find(&mut parent, a), find(&mut parent, b));
        parent[x] = y;
    }
    let r = find(&mut parent, 0);
    (0..n).all(|x| find(&mut parent, x) == r)
}

pub fn validate_spec(spec: &FractalSpec) -> ValidationReport {
    let mut v = Vec::new();
    let mut warn = Vec::new();
    let total: Q = spec.mu.iter().sum();
    if total != Q::one() {
        v.push(format!("measure weights do not sum to 1 (sum = {})", fmt_q(&total)));
    }
    for (i, m) in spec.mu.iter().enumerate() {
        if !m.is_positive() {
            v.push(format!("measure weight mu_{i} = {} is not positive", fmt_q(m)));
        }
    }
    for (i, r) in spec.r.iter().enumerate() {
        if !r.is_positive() || *r >= Q::one() {
            v.push(format!("resistance factor r_{i} = {} is outside (0, 1)", fmt_q(r)));
        }
    }
    for (j, k, c) in &spec.conductances {
        if c.is_negative() {
            v.push(format!("conductance c_{j}{k} = {} is negative", fmt_q(c)));
        }
    }
    for (a, b) in &spec.identifications {
        if a.0 == b.0 && a != b {
            v.push(format!("identification F{}q{} = F{}q{} glues two boundary points of one cell", a.0, a.1, b.0, b.1));
        }
    }
    for ((i, n), others) in &spec.classes {
        if others.iter().any(|(j, _)| j == i) {
            v.push(format!("identification classes glue two boundary points of cell {i} (via F{i}q{n})"));
        }
    }
    let nb = spec.n_boundary;
    let pos_edges: Vec<(usize, usize)> =
        spec.conductances.iter().filter(|c| c.2.is_positive()).map(|c| (c.0, c.1)).collect();
    if !connected(nb, &pos_edges) {
        v.push("boundary conductances do not connect V0".into());
    }
    if !v.is_empty() {
        v.sort();
        v.dedup();
        return ValidationReport { pass: false, violations: v, warnings: warn };
    }
    let g1 = build_graph_direct(spec, 1);
    let edges = g1.edges(spec);
    let e1: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
    let dangling: Vec<String> =
        (nb..g1.len()).filter(|&x| g1.eta[x] < 2).map(|x| format!("F_{}", g1.vertices[x])).collect();
    if !connected(g1.len(), &e1) {
        v.push("Gamma_1 is disconnected".into());
    } else {
        let order: Vec<usize> = (nb..g1.len()).collect();
        match g1.network::<Q>(spec).eliminate(&order) {
            None => v.push("Gamma_1 Dirichlet problem is singular".into()),
            Some(el) => {
                let bad: Vec<String> = (0..nb)
                    .flat_map(|j| (j + 1..nb).map(move |k| (j, k)))
                    .filter(|&(j, k)| el.reduced.conductance(j, k) != spec.conductance(j, k))
                    .map(|(j, k)| format!("c_{j}{k}: trace {} vs {}", fmt_q(&el.reduced.conductance(j, k)), fmt_q(&spec.conductance(j, k))))
                    .collect();
                if !bad.is_empty() {
                    v.push(format!("energy renormalization fails: trace of E_1 on V_0 differs from E_0 ({})", bad.join("; ")));
                    if !dangling.is_empty() {
                        v.push(format!(
                            "vertices of V_1 \\ V_0 lying in a single 1-cell (eta < 2), possibly a missing identification: {}",
                            dangling.join(", ")
                        ));
                    }
                }
            }
        }
    }
    if v.is_empty() && !dangling.is_empty() {
        warn.push(format!("vertices with eta = 1 in V_1 \\ V_0: {}", dangling.join(", ")));
    }
    ValidationReport { pass: v.is_empty(), violations: v, warnings: warn }
}

// ---------- built-in specs ----------

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

pub fn sierpinski_simplex(n: usize) -> FractalSpec {
    assert!(n >= 2);
    let ni = n as i64;
    let mut cond = Vec::new();
    let mut ident = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            cond.push((j, k, qi(1)));
            ident.push(((j, k), (k, j)));
        }
    }
    let points: Vec<[f64; 2]> = if n == 2 {
        vec![[0.0, 0.0], [1.0, 0.0]]
    } else {
        (0..n)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [0.5 + 0.5 * t.cos(), 0.5 + 0.5 * t.sin()]
            })
            .collect()
    };
    let maps = points.iter().map(|&p| Embedding::similarity(0.5, p)).collect();
    FractalSpec::new(
        &format!("nhedron:{n}"),
        n,
        n,
        vec![q(ni, ni + 2); n],
        vec![q(1, ni); n],
        cond,
        ident,
        Some(Embedding { points, maps }),
        None,
    )
    .expect("well-formed built-in")
}

pub fn interval() -> FractalSpec {
    let mut s = sierpinski_simplex(2);
    s.name = "interval".into();
    s
}

pub fn sierpinski_gasket() -> FractalSpec {
    let mut s = sierpinski_simplex(3);
    s.name = "sg".into();
    let points = vec![[0.5, SQRT3_2], [0.0, 0.0], [1.0, 0.0]];
    let maps = points.iter().map(|&p| Embedding::similarity(0.5, p)).collect();
    s.embedding = Some(Embedding { points, maps });
    s
}

pub fn sierpinski_tetrahedron() -> FractalSpec {
    let mut s = sierpinski_simplex(4);
    s.name = "st".into();
    let points = vec![[0.5, 0.95], [0.0, 0.1], [0.5, 0.0], [1.0, 0.1]];
    let maps = points.iter().map(|&p| Embedding::similarity(0.5, p)).collect();
    s.embedding = Some(Embedding { points, maps });
    s
}

/// The level-3 gasket: three corner maps and three edge-midpoint maps, ratio 1/3.
pub fn sg3() -> FractalSpec {
    let ident = vec![
        ((0, 1), (3, 0)),
        ((0, 2), (4, 0)),
        ((1, 0), (3, 1)),
        ((1, 2), (5, 1)),
        ((2, 0), (4, 2)),
        ((2, 1), (5, 2)),
        ((3, 2), (4, 1)),
        ((4, 1), (5, 0)),
    ];
    let points = vec![[0.5, SQRT3_2], [0.0, 0.0], [1.0, 0.0]];
    let third = |a: [f64; 2], b: [f64; 2]| [1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0, (a[0] + b[0]) / 3.0, (a[1] + b[1]) / 3.0];
    let mut maps: Vec<[f64; 6]> = points.iter().map(|&p| Embedding::similarity(1.0 / 3.0, p)).collect();
    maps.push(third(points[0], points[1]));
    maps.push(third(points[0], points[2]));
    maps.push(third(points[1], points[2]));
    FractalSpec::new(
        "sg3",
        6,
        3,
        vec![q(7, 15); 6],
        vec![q(1, 6); 6],
        vec![(0, 1, qi(1)), (0, 2, qi(1)), (1, 2, qi(1))],
        ident,
        Some(Embedding { points, maps }),
        Some(["0", "1", "2", "(01)", "(02)", "(12)"].iter().map(|s| s.to_string()).collect()),
    )
    .expect("well-formed built-in")
}

/// "sg", "st", "sg3", "interval" or "nhedron:<n>".
pub fn builtin(name: &str) -> Result<FractalSpec> {
    let name = name.trim().to_ascii_lowercase();
    match name.as_str() {
        "sg" => Ok(sierpinski_gasket()),
        "st" => Ok(sierpinski_tetrahedron()),
        "sg3" => Ok(sg3()),
        "interval" => Ok(interval()),
        _ => {
            if let Some(n) = name.strip_prefix("nhedron:") {
                let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad n-hedron size {n:?}")))?;
                if !(2..=60).contains(&n) {
                    return Err(Error::Invalid("n-hedron size must be in 2..=60".into()));
                }
                return Ok(sierpinski_simplex(n));
            }
            Err(Error::Invalid(format!("unknown built-in spec {name:?}")))
        }
    }
}

// ---------- spec files ----------

#[derive(Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(default)]
    pub name: Option<String>,
    pub n_maps: usize,
    pub n_boundary: usize,
    pub r: Vec<String>,
    pub mu: Vec<String>,
    pub conductances: Vec<(usize, usize, String)>,
    pub identifications: Vec<[[usize; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SpecFile {
    pub fn into_spec(self) -> Result<FractalSpec> {
        let r = self.r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        let mu = self.mu.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        let cond = self
            .conductances
            .iter()
            .map(|(j, k, c)| Ok((*j, *k, parse_q(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let ident = self.identifications.iter().map(|[a, b]| ((a[0], a[1]), (b[0], b[1]))).collect();
        FractalSpec::new(
            self.name.as_deref().unwrap_or("custom"),
            self.n_maps,
            self.n_boundary,
            r,
            mu,
            cond,
            ident,
            self.embedding,
            self.labels,
        )
    }

    pub fn from_spec(s: &FractalSpec) -> SpecFile {
        SpecFile {
            name: Some(s.name.clone()),
            n_maps: s.n_maps,
            n_boundary: s.n_boundary,
            r: s.r.iter().map(fmt_q).collect(),
            mu: s.mu.iter().map(fmt_q).collect(),
            conductances: s.conductances.iter().map(|(j, k, c)| (*j, *k, fmt_q(c))).collect(),
            identifications: s.identifications.iter().map(|(a, b)| [[a.0, a.1], [b.0, b.1]]).collect(),
            embedding: s.embedding.clone(),
            labels: s.labels.clone(),
        }
    }
}

pub fn parse_spec_json(text: &str) -> Result<FractalSpec> {
    serde_json::from_str::<SpecFile>(text)?.into_spec()
}
