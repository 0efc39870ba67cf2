//! Harmonic extension, measure integrals of harmonic functions and harmonic splines.

use std::collections::HashSet;
use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fractal::{validate_spec, CellGraph, FractalSpec, GraphCache, VertexId, Word};
use crate::linalg::{inverse, nullspace, Matrix};
use crate::network::{Elimination, Network};
use crate::rational::{Field, Q};

/// Splines on graphs larger than this are solved in f64 unless exact mode is forced.
pub const EXACT_VERTEX_LIMIT: usize = 3000;

/// (A_i)_{n,k} = h_k(F_i q_n).
#[derive(Clone, Debug)]
pub struct ExtensionTable {
    pub a: Vec<Matrix<Q>>,
}

/// A spec together with everything derived from its harmonic structure.
#[derive(Debug)]
pub struct Model {
    pub spec: FractalSpec,
    pub ext: ExtensionTable,
    pub iota: Vec<Q>,
    graphs: GraphCache,
}

impl Model {
    pub fn new(spec: FractalSpec) -> Result<Self> {
        let report = validate_spec(&spec);
        if !report.pass {
            return Err(Error::Invalid(report.violations.join("; ")));
        }
        let graphs = GraphCache::default();
        let ext = extension_matrices_on(&spec, &graphs.get(&spec, 1))?;
        let iota = harmonic_measure_integrals_from(&spec, &ext)?;
        Ok(Model { spec, ext, iota, graphs })
    }

    pub fn graph(&self, m: usize) -> Arc<CellGraph> {
        self.graphs.get(&self.spec, m)
    }

    pub fn n0(&self) -> usize {
        self.spec.n_boundary
    }

    pub fn n_maps(&self) -> usize {
        self.spec.n_maps
    }

    pub fn vertex(&self, w: &[u8], n: usize) -> Result<VertexId> {
        self.spec.canonicalize(&Word(w.to_vec()), n)
    }

    /// Index of `v` in Γ_m, for any m ≥ depth(v).
    pub fn index_at(&self, v: &VertexId, m: usize) -> Result<usize> {
        if v.depth() > m {
            return Err(Error::Invalid(format!("vertex {v} is not in V_{m}")));
        }
        self.graph(m).vertex_index(v).ok_or_else(|| Error::Invalid(format!("vertex {v} not found in V_{m}")))
    }

    /// β_x = ∫ψ_x dμ for the depth-m hat functions, ψ_x = indicator spline of x on V_m.
    pub fn hat_integrals(&self, m: usize) -> Vec<Q> {
        let g = self.graph(m);
        let mut beta = vec![Q::zero(); g.len()];
        for c in 0..g.n_cells() {
            for (n, &x) in g.cell(c).iter().enumerate() {
                beta[x] += &g.mu_cell[c] * &self.iota[n];
            }
        }
        beta
    }

    /// Integral against μ of the depth-m piecewise harmonic interpolant of `values`.
    pub fn integrate_mu<S: Field>(&self, m: usize, values: &[S]) -> S {
        let g = self.graph(m);
        let iota: Vec<S> = self.iota.iter().map(S::from_q).collect();
        let mut total = S::zero();
        for c in 0..g.n_cells() {
            let local = g.cell(c).iter().zip(&iota).fold(S::zero(), |a, (&x, i)| a + values[x].clone() * i.clone());
            total = total + S::from_q(&g.mu_cell[c]) * local;
        }
        total
    }
}

fn extension_matrices_on(spec: &FractalSpec, g1: &CellGraph) -> Result<ExtensionTable> {
    let nb = spec.n_boundary;
    let interior: Vec<usize> = (nb..g1.len()).collect();
    let el = g1
        .network::<Q>(spec)
        .eliminate(&interior)
        .ok_or_else(|| Error::Singular("Gamma_1 Dirichlet problem".into()))?;
    let mut h: Vec<Vec<Q>> = Vec::with_capacity(nb);
    for k in 0..nb {
        let mut vals = vec![Q::zero(); g1.len()];
        vals[k] = Q::one();
        el.back_substitute(&mut vals);
        h.push(vals);
    }
    let a = (0..spec.n_maps)
        .map(|i| {
            let cell = g1.cell(i);
            let mut m = Matrix::zeros(nb, nb);
            for n in 0..nb {
                for k in 0..nb {
                    m[(n, k)] = h[k][cell[n]].clone();
                }
            }
            m
        })
        .collect();
    Ok(ExtensionTable { a })
}

/// Level-1 harmonic extension matrices by an exact Γ₁ Dirichlet solve.
pub fn extension_matrices(spec: &FractalSpec) -> Result<ExtensionTable> {
    extension_matrices_on(spec, &crate::fractal::build_graph_direct(spec, 1))
}

fn harmonic_measure_integrals_from(spec: &FractalSpec, ext: &ExtensionTable) -> Result<Vec<Q>> {
    let nb = spec.n_boundary;
    let mut t = Matrix::<Q>::zeros(nb, nb);
    for (i, a) in ext.a.iter().enumerate() {
        for n in 0..nb {
            for k in 0..nb {
                t[(n, k)] += &spec.mu[i] * &a[(k, n)];
            }
        }
    }
    let ns = nullspace(&t.sub(&Matrix::identity(nb)));
    if ns.len() != 1 {
        return Err(Error::Degenerate(format!("fixed-point space of the averaging operator has dimension {}", ns.len())));
    }
    let s: Q = ns[0].iter().sum();
    if s.is_zero() {
        return Err(Error::Degenerate("fixed point has zero total mass".into()));
    }
    Ok(ns[0].iter().map(|x| x / &s).collect())
}

/// ι_n = ∫h_n dμ as the normalized fixed point of the self-similar averaging operator.
pub fn harmonic_measure_integrals(spec: &FractalSpec) -> Result<Vec<Q>> {
    harmonic_measure_integrals_from(spec, &extension_matrices(spec)?)
}

/// h = Σ a_n h_n.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicFunction {
    pub coeffs: Vec<Q>,
}

impl HarmonicFunction {
    pub fn basis(n0: usize, k: usize) -> Self {
        let mut coeffs = vec![Q::zero(); n0];
        coeffs[k] = Q::one();
        HarmonicFunction { coeffs }
    }

    /// Coefficients of h ∘ F_w.
    pub fn restrict(&self, model: &Model, w: &Word) -> HarmonicFunction {
        let coeffs = w.0.iter().fold(self.coeffs.clone(), |c, &i| model.ext.a[i as usize].mul_vec(&c));
        HarmonicFunction { coeffs }
    }

    pub fn eval(&self, model: &Model, v: &VertexId) -> Q {
        self.restrict(model, &v.word).coeffs[v.index as usize].clone()
    }

    pub fn values(&self, model: &Model, m: usize) -> Vec<Q> {
        refine_values(model, 0, &self.coeffs, m, None)
    }

    pub fn integral_mu(&self, model: &Model) -> Q {
        self.coeffs.iter().zip(&model.iota).map(|(a, i)| a * i).sum()
    }

    pub fn energy(&self, model: &Model) -> Q {
        model.spec.boundary_energy(&self.coeffs)
    }
}

/// Extends values on V_k to V_m cell by cell. With `source = Some(g1)` (values on Γ₁),
/// each new point of a cell F_w also gets μ_w r_w g1(pattern point): this is how
/// g_{V₀}-type functions refine.
pub fn refine_values<S: Field>(model: &Model, k: usize, values: &[S], m: usize, source: Option<&[S]>) -> Vec<S> {
    assert!(k <= m);
    let nb = model.n0();
    let nm = model.n_maps();
    let a: Vec<Matrix<S>> = model.ext.a.iter().map(|x| x.map(S::from_q)).collect();
    let mut cur = values.to_vec();
    for j in k..m {
        let gj = model.graph(j);
        let gn = model.graph(j + 1);
        assert_eq!(cur.len(), gj.len());
        let mut next: Vec<Option<S>> = vec![None; gn.len()];
        for c in 0..gj.n_cells() {
            let b: Vec<S> = gj.cell(c).iter().map(|&x| cur[x].clone()).collect();
            let t = source.map(|_| S::from_q(&(&gj.mu_cell[c] * &gj.r_cell[c])));
            for i in 0..nm {
                let cv = gn.cell(c * nm + i);
                for n in 0..nb {
                    let x = cv[n];
                    if next[x].is_some() {
                        continue;
                    }
                    let p = gn.pattern[i * nb + n];
                    let val = if p < nb {
                        b[p].clone()
                    } else {
                        let h = (0..nb).fold(S::zero(), |acc, kk| acc + a[i][(n, kk)].clone() * b[kk].clone());
                        match (source, &t) {
                            (Some(g1), Some(t)) => h + t.clone() * g1[p].clone(),
                            _ => h,
                        }
                    };
                    next[x] = Some(val);
                }
            }
        }
        cur = next.into_iter().map(|x| x.expect("every vertex lies in some cell")).collect();
    }
    cur
}

/// Elimination of every vertex of Γ_{m*} outside E, reusable for many right-hand sides.
pub struct SplineSystem<S> {
    pub graph: Arc<CellGraph>,
    pub nodes: Vec<VertexId>,
    pub node_index: Vec<usize>,
    elim: Elimination<S>,
}

impl<S: Field> SplineSystem<S> {
    pub fn new(model: &Model, nodes: &[VertexId]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Invalid("spline node set is empty".into()));
        }
        let mut seen = HashSet::new();
        for v in nodes {
            if !seen.insert(v) {
                return Err(Error::Invalid(format!("duplicate node {v}")));
            }
        }
        let depth = nodes.iter().map(|v| v.depth()).max().unwrap_or(0);
        Self::at_depth(model, nodes, depth)
    }

    pub fn at_depth(model: &Model, nodes: &[VertexId], depth: usize) -> Result<Self> {
        let graph = model.graph(depth);
        let node_index = nodes.iter().map(|v| model.index_at(v, depth)).collect::<Result<Vec<_>>>()?;
        let known: HashSet<usize> = node_index.iter().copied().collect();
        let mut order: Vec<usize> = (0..graph.len()).filter(|x| !known.contains(x)).collect();
        order.sort_by_key(|&x| (std::cmp::Reverse(graph.vertices[x].depth()), std::cmp::Reverse(x)));
        let net: Network<S> = graph.network(&model.spec);
        let elim = net.eliminate(&order).ok_or_else(|| Error::Singular("spline system".into()))?;
        Ok(SplineSystem { graph, nodes: nodes.to_vec(), node_index, elim })
    }

    pub fn depth(&self) -> usize {
        self.graph.depth
    }

    pub fn solve(&self, node_values: &[S]) -> Result<Vec<S>> {
        if node_values.len() != self.nodes.len() {
            return Err(Error::Invalid(format!("{} node values for {} nodes", node_values.len(), self.nodes.len())));
        }
        let mut vals = vec![S::zero(); self.graph.len()];
        for (&x, v) in self.node_index.iter().zip(node_values) {
            vals[x] = v.clone();
        }
        self.elim.back_substitute(&mut vals);
        Ok(vals)
    }

    /// Integrals of the node indicator splines against a measure given by its
    /// depth-m* loads (load of x = integral of the hat function of x).
    pub fn push(&self, loads: &[S]) -> Vec<S> {
        let mut b = loads.to_vec();
        self.elim.push_loads(&mut b);
        self.node_index.iter().map(|&x| b[x].clone()).collect()
    }
}

/// A piecewise harmonic spline with nodes E, solved on V_{m*}.
#[derive(Clone, Debug)]
pub struct Spline<S> {
    pub nodes: Vec<VertexId>,
    pub node_values: Vec<S>,
    pub graph: Arc<CellGraph>,
    pub values: Vec<S>,
    /// True when V₀ ⊄ E: the missing boundary points carry the vanishing normal derivative.
    pub neumann: bool,
}

impl<S: Field> Spline<S> {
    pub fn depth(&self) -> usize {
        self.graph.depth
    }

    pub fn value(&self, v: &VertexId) -> Option<&S> {
        self.graph.vertex_index(v).map(|i| &self.values[i])
    }

    pub fn refine_to(&self, model: &Model, m: usize) -> Vec<S> {
        refine_values(model, self.depth(), &self.values, m, None)
    }

    pub fn integrate_mu(&self, model: &Model) -> S {
        model.integrate_mu(self.depth(), &self.values)
    }
}

pub fn solve_spline<S: Field>(model: &Model, nodes: &[VertexId], node_values: &[S]) -> Result<Spline<S>> {
    let sys = SplineSystem::<S>::new(model, nodes)?;
    let values = sys.solve(node_values)?;
    let neumann = (0..model.n0()).any(|k| !nodes.contains(&VertexId::boundary(k)));
    Ok(Spline { nodes: nodes.to_vec(), node_values: node_values.to_vec(), graph: sys.graph.clone(), values, neumann })
}

/// v_x for every x ∈ E (v_x(y) = δ_xy on E).
pub fn indicator_splines<S: Field>(model: &Model, nodes: &[VertexId]) -> Result<Vec<Spline<S>>> {
    let sys = SplineSystem::<S>::new(model, nodes)?;
    let neumann = (0..model.n0()).any(|k| !nodes.contains(&VertexId::boundary(k)));
    (0..nodes.len())
        .map(|j| {
            let nv: Vec<S> = (0..nodes.len()).map(|i| if i == j { S::one() } else { S::zero() }).collect();
            let values = sys.solve(&nv)?;
            Ok(Spline { nodes: nodes.to_vec(), node_values: nv, graph: sys.graph.clone(), values, neumann })
        })
        .collect()
}

/// Δ_m f(x) = Σ_y c_xy (f(y) − f(x)) / ∫ψ_x dμ on Γ_m (an estimator, exact only in special cases).
pub fn graph_laplacian_estimate<S: Field>(model: &Model, m: usize, values: &[S]) -> Vec<S> {
    let g = model.graph(m);
    let beta = model.hat_integrals(m);
    let mut acc = vec![S::zero(); g.len()];
    for (a, b, c) in g.edges(&model.spec) {
        let c = S::from_q(&c);
        let d = values[b].clone() - values[a].clone();
        acc[a] = acc[a].clone() + c.clone() * d.clone();
        acc[b] = acc[b].clone() - c * d;
    }
    acc.into_iter().zip(&beta).map(|(x, b)| x / S::from_q(b)).collect()
}

#[derive(Clone, Debug)]
pub struct ResistanceEstimate {
    pub depth: usize,
    pub radius: f64,
    pub center: VertexId,
}

/// min over x₀ ∈ V_m of max over y ∈ V_m of R_m(x₀, y), from the grounded Laplacian of Γ_m.
pub fn estimate_resistance_radius(model: &Model, m: usize) -> Result<ResistanceEstimate> {
    let g = model.graph(m);
    let n = g.len();
    if n > 1500 {
        return Err(Error::Unsupported(format!("resistance estimate limited to 1500 vertices, V_{m} has {n}")));
    }
    let mut lap = Matrix::<f64>::zeros(n - 1, n - 1);
    for (a, b, c) in g.edges(&model.spec) {
        let c = c.as_f64();
        for (x, y) in [(a, b), (b, a)] {
            if x > 0 {
                lap[(x - 1, x - 1)] += c;
                if y > 0 {
                    lap[(x - 1, y - 1)] -= c;
                }
            }
        }
    }
    let inv = inverse(&lap)?;
    let entry = |x: usize, y: usize| if x == 0 || y == 0 { 0.0 } else { inv[(x - 1, y - 1)] };
    let mut best = (f64::INFINITY, 0usize);
    for x in 0..n {
        let worst = (0..n).map(|y| entry(x, x) + entry(y, y) - 2.0 * entry(x, y)).fold(0.0, f64::max);
        if worst < best.0 - 1e-15 {
            best = (worst, x);
        }
    }
    Ok(ResistanceEstimate { depth: m, radius: best.0.max(0.0), center: g.vertices[best.1].clone() })
}

/// True when every extension coefficient is nonnegative (needed by the sup bounds).
pub fn extension_is_nonnegative(model: &Model) -> bool {
    model.ext.a.iter().all(|a| a.to_rows().iter().flatten().all(|x| !x.is_negative()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{sg3, sierpinski_gasket, sierpinski_tetrahedron};
    use crate::rational::{q, qi};

    #[test]
    fn sg_one_fifth_two_fifths() {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let h0 = HarmonicFunction::basis(3, 0);
        assert_eq!(h0.eval(&m, &m.vertex(&[0], 1).unwrap()), q(2, 5));
        assert_eq!(h0.eval(&m, &m.vertex(&[1], 2).unwrap()), q(1, 5));
        assert_eq!(m.iota, vec![q(1, 3); 3]);
    }

    #[test]
    fn st_values() {
        let m = Model::new(sierpinski_tetrahedron()).unwrap();
        let a = &m.ext.a;
        assert_eq!(a[1][(2, 1)], q(1, 3)); // h_1(F_1 q_2)
        assert_eq!(a[0][(2, 1)], q(1, 6)); // all distinct
        assert_eq!(m.iota, vec![q(1, 4); 4]);
    }

    #[test]
    fn sg3_h0_on_v1() {
        let m = Model::new(sg3()).unwrap();
        let h0 = HarmonicFunction::basis(3, 0);
        let vals = h0.values(&m, 1);
        let g = m.graph(1);
        let get = |s: &str| vals[g.vertex_index(&m.spec.parse_vertex(s).unwrap()).unwrap()].clone();
        assert_eq!(get("0:1"), q(8, 15));
        assert_eq!(get("1:0"), q(4, 15));
        assert_eq!(get("3:2"), q(5, 15));
        assert_eq!(get("1:2"), q(3, 15));
        assert_eq!(m.iota, vec![q(1, 3); 3]);
    }

    #[test]
    fn energy_is_preserved_by_extension() {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let h0 = HarmonicFunction::basis(3, 0);
        for d in 0..4 {
            assert_eq!(m.graph(d).energy(&m.spec, &h0.values(&m, d)).unwrap(), qi(2));
        }
    }

    #[test]
    fn spline_example_values() {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let nodes: Vec<VertexId> = (0..3).map(VertexId::boundary).chain([m.vertex(&[0], 1).unwrap()]).collect();
        let s = solve_spline(&m, &nodes, &[qi(0), qi(0), qi(0), q(1, 15)]).unwrap();
        assert_eq!(s.value(&m.vertex(&[0], 2).unwrap()).unwrap(), &q(1, 45));
        assert_eq!(s.integrate_mu(&m), q(2, 81));
        assert!(!s.neumann);
    }

    #[test]
    fn float_and_exact_agree() {
        let m = Model::new(sg3()).unwrap();
        let nodes = vec![VertexId::boundary(0), m.vertex(&[3], 2).unwrap()];
        let e = solve_spline(&m, &nodes, &[qi(1), q(1, 3)]).unwrap();
        let f = solve_spline(&m, &nodes, &[1.0, 1.0 / 3.0]).unwrap();
        for (a, b) in e.values.iter().zip(&f.values) {
            assert!((a.as_f64() - b).abs() < 1e-12);
        }
        assert!(e.neumann);
    }

    #[test]
    fn interval_resistance_radius() {
        let m = Model::new(crate::fractal::interval()).unwrap();
        for depth in 2..=5 {
            // path of 2^m unit-length edges with resistance 2^-m each: series sum from the midpoint
            let n = 1usize << depth;
            let half: f64 = (0..n / 2).map(|_| 1.0 / n as f64).sum();
            let est = estimate_resistance_radius(&m, depth).unwrap();
            assert!((est.radius - half).abs() < 1e-12 && (est.radius - 0.5).abs() < 1e-12);
        }
        let sg = Model::new(sierpinski_gasket()).unwrap();
        let radii: Vec<f64> = (1..=4).map(|d| estimate_resistance_radius(&sg, d).unwrap().radius).collect();
        assert!(radii.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
