//! g_{V₀} and g_E on V_m, the discrepancies δ₀ and δ₁, and composition over m-cells.

use std::collections::{BTreeMap, HashMap, HashSet};

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractal::{VertexId, Word};
use crate::harmonic::{extension_is_nonnegative, refine_values, solve_spline, Model, Spline, SplineSystem};
use crate::multiharmonic::{green_identity_g1, multiharmonic_tables};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum G1Path {
    F1k,
    GreenIdentity,
}

impl std::str::FromStr for G1Path {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1k" => Ok(G1Path::F1k),
            "green-identity" => Ok(G1Path::GreenIdentity),
            _ => Err(Error::Parse(format!("g1 path must be f1k or green-identity, got {s:?}"))),
        }
    }
}

/// g_{V₀} on Γ₁ from the chosen path.
pub fn g1_values(model: &Model, path: G1Path) -> Result<Vec<Q>> {
    match path {
        G1Path::F1k => Ok(multiharmonic_tables(model)?.g1),
        G1Path::GreenIdentity => green_identity_g1(model),
    }
}

pub fn g_v0_values(model: &Model, m: usize, g1: &[Q]) -> Vec<Q> {
    let zeros = vec![Q::zero(); model.n0()];
    refine_values(model, 0, &zeros, m, Some(g1))
}

fn require_v0(model: &Model, set: &[VertexId]) -> Result<()> {
    for k in 0..model.n0() {
        if !set.contains(&VertexId::boundary(k)) {
            return Err(Error::Unsupported(format!(
                "sample set must contain V_0 (q_{k} missing); Green's functions with Neumann data are not computed"
            )));
        }
    }
    Ok(())
}

fn set_depth(set: &[VertexId]) -> usize {
    set.iter().map(|v| v.depth()).max().unwrap_or(0)
}

/// g_E on V_m together with the correction spline s = g_{V₀} − g_E.
#[derive(Clone, Debug)]
pub struct GreenFunctionSlice {
    pub set: Vec<VertexId>,
    pub depth: usize,
    pub values: Vec<Q>,
    pub correction: Spline<Q>,
    pub contains_v0: bool,
}

pub fn g_e_values(model: &Model, set: &[VertexId], m: usize, g1: &[Q]) -> Result<GreenFunctionSlice> {
    require_v0(model, set)?;
    let ms = set_depth(set);
    if m < ms {
        return Err(Error::Invalid(format!("depth {m} is below the sample set depth {ms}")));
    }
    let gv = g_v0_values(model, ms, g1);
    let graph = model.graph(ms);
    let node_vals: Vec<Q> = set.iter().map(|v| gv[graph.vertex_index(v).expect("node in its own depth")].clone()).collect();
    let s = solve_spline(model, set, &node_vals)?;
    let base: Vec<Q> = gv.iter().zip(&s.values).map(|(a, b)| a - b).collect();
    let values = refine_values(model, ms, &base, m, Some(g1));
    Ok(GreenFunctionSlice { set: set.to_vec(), depth: m, values, correction: s, contains_v0: true })
}

/// ∫g_{V₀} dμ = T / (1 − Σ μ_i² r_i) with T = Σ_{q ∈ V₁\V₀} g₁(q) ∫ψ_q dμ.
pub fn integral_g_v0(model: &Model, g1: &[Q]) -> Q {
    let beta = model.hat_integrals(1);
    let t: Q = g1.iter().zip(&beta).map(|(a, b)| a * b).sum();
    let rho: Q = model.spec.mu.iter().zip(&model.spec.r).map(|(m, r)| m * m * r).sum();
    t / (Q::one() - rho)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesCheck {
    /// ∫ of the V_k interpolant of g_{V₀}, integrated directly, k = 0..=kmax.
    #[serde(skip)]
    pub direct: Vec<Q>,
    /// T (1 − ρ^k) / (1 − ρ).
    #[serde(skip)]
    pub closed: Vec<Q>,
    #[serde(skip)]
    pub limit: Q,
    pub consistent: bool,
}

pub fn integral_series_check(model: &Model, g1: &[Q], kmax: usize) -> SeriesCheck {
    let beta = model.hat_integrals(1);
    let t: Q = g1.iter().zip(&beta).map(|(a, b)| a * b).sum();
    let rho: Q = model.spec.mu.iter().zip(&model.spec.r).map(|(m, r)| m * m * r).sum();
    let mut direct = Vec::new();
    let mut closed = Vec::new();
    let mut rho_k = Q::one();
    for k in 0..=kmax {
        direct.push(model.integrate_mu(k, &g_v0_values(model, k, g1)));
        closed.push(&t * (Q::one() - &rho_k) / (Q::one() - &rho));
        rho_k *= &rho;
    }
    let consistent = direct == closed;
    SeriesCheck { direct, closed, limit: t / (Q::one() - rho), consistent }
}

#[derive(Clone, Debug)]
pub struct Delta0 {
    pub sq: Q,
    pub integral_g_v0: Q,
    pub integral_correction: Q,
}

pub fn delta0(model: &Model, set: &[VertexId], g1: &[Q]) -> Result<Delta0> {
    require_v0(model, set)?;
    let ms = set_depth(set);
    let gv = g_v0_values(model, ms, g1);
    let graph = model.graph(ms);
    let node_vals: Vec<Q> = set.iter().map(|v| gv[graph.vertex_index(v).expect("node present")].clone()).collect();
    let s = solve_spline(model, set, &node_vals)?;
    let ig = integral_g_v0(model, g1);
    let is = s.integrate_mu(model);
    Ok(Delta0 { sq: &ig - &is, integral_g_v0: ig, integral_correction: is })
}

/// Certified enclosure of δ₁(E) = sup g_E.
#[derive(Clone, Debug)]
pub struct Delta1Interval {
    pub lower: Q,
    pub upper: Q,
    pub depth: usize,
    pub argmax: VertexId,
    /// lower + (max_{|w|=depth} μ_w r_w) max g₁ / (1 − max_i μ_i r_i): the cruder global tail.
    pub upper_global: Q,
    /// Cells still open when refinement stopped (0 for a plain uniform evaluation).
    pub active_cells: usize,
}

impl Delta1Interval {
    pub fn width(&self) -> Q {
        &self.upper - &self.lower
    }
    pub fn contains(&self, x: &Q) -> bool {
        &self.lower <= x && x <= &self.upper
    }
    pub fn scaled(&self, t: &Q) -> Delta1Interval {
        Delta1Interval {
            lower: &self.lower * t,
            upper: &self.upper * t,
            depth: self.depth,
            argmax: self.argmax.clone(),
            upper_global: &self.upper_global * t,
            active_cells: self.active_cells,
        }
    }
}

/// Upper bound for sup g_{V₀}: Σ_k ρ_max^k max g₁ with ρ_max = max_i μ_i r_i.
fn sup_tail(model: &Model, g1: &[Q]) -> Result<Q> {
    if !extension_is_nonnegative(model) {
        return Err(Error::Unsupported("sup bounds need nonnegative harmonic extension coefficients".into()));
    }
    if g1.iter().any(|x| x.is_negative()) {
        return Err(Error::Unsupported("sup bounds need g1 >= 0".into()));
    }
    let g1_max = g1.iter().cloned().fold(Q::zero(), |a, b| if b > a { b } else { a });
    let rho_max = model.spec.mu.iter().zip(&model.spec.r).map(|(m, r)| m * r).fold(Q::zero(), |a, b| if b > a { b } else { a });
    Ok(g1_max / (Q::one() - rho_max))
}

fn max_with_index(vals: &[Q]) -> (Q, usize) {
    let mut best = (Q::zero(), 0);
    for (i, v) in vals.iter().enumerate() {
        if *v > best.0 {
            best = (v.clone(), i);
        }
    }
    best
}

/// Inside a depth-d cell F_w (d ≥ depth of E), g_E ∘ F_w = harmonic + μ_w r_w g_{V₀}, so
/// sup over the cell ≤ max over its corners + μ_w r_w sup g_{V₀}.
pub fn delta1(model: &Model, set: &[VertexId], depth: usize, g1: &[Q]) -> Result<Delta1Interval> {
    let tail = sup_tail(model, g1)?;
    let slice = g_e_values(model, set, depth.max(set_depth(set)), g1)?;
    let d = slice.depth;
    let g = model.graph(d);
    let (lower, arg) = max_with_index(&slice.values);
    let mut upper = lower.clone();
    let mut t_max = Q::zero();
    for c in 0..g.n_cells() {
        let t = &g.mu_cell[c] * &g.r_cell[c];
        let corner = g.cell(c).iter().map(|&x| &slice.values[x]).max().cloned().unwrap_or_else(Q::zero);
        let ub = corner + &t * &tail;
        if ub > upper {
            upper = ub;
        }
        if t > t_max {
            t_max = t;
        }
    }
    let upper_global = &lower + &t_max * &tail;
    Ok(Delta1Interval { lower, upper, depth: d, argmax: g.vertices[arg].clone(), upper_global, active_cells: 0 })
}

/// Branch and bound on top of [`delta1`]: cells whose bound cannot exceed the running
/// lower bound are dropped, cells within `target` of it are retired, the rest are split.
pub fn delta1_refined(
    model: &Model,
    set: &[VertexId],
    depth: usize,
    g1: &[Q],
    target: &Q,
    max_cells: usize,
) -> Result<Delta1Interval> {
    let tail = sup_tail(model, g1)?;
    let slice = g_e_values(model, set, depth.max(set_depth(set)), g1)?;
    let d0 = slice.depth;
    let g = model.graph(d0);
    let nb = model.n0();
    let nm = model.n_maps();
    let (mut lower, arg) = max_with_index(&slice.values);
    let mut argmax = g.vertices[arg].clone();
    let upper_global = {
        let t_max = (0..g.n_cells()).map(|c| &g.mu_cell[c] * &g.r_cell[c]).max().unwrap_or_else(Q::zero);
        &lower + t_max * &tail
    };
    // (word, corner values, μ_w r_w)
    let mut active: Vec<(Word, Vec<Q>, Q)> = (0..g.n_cells())
        .map(|c| {
            (g.cell_word(c), g.cell(c).iter().map(|&x| slice.values[x].clone()).collect(), &g.mu_cell[c] * &g.r_cell[c])
        })
        .collect();
    let mut retired = lower.clone();
    let mut level = d0;
    let step: Vec<Q> = model.spec.mu.iter().zip(&model.spec.r).map(|(m, r)| m * r).collect();
    loop {
        let bound = |b: &[Q], t: &Q| b.iter().max().cloned().unwrap_or_else(Q::zero) + t * &tail;
        let mut keep = Vec::new();
        for (w, b, t) in active.drain(..) {
            let ub = bound(&b, &t);
            if ub <= lower {
                continue;
            }
            if ub <= &lower + target {
                if ub > retired {
                    retired = ub;
                }
                continue;
            }
            keep.push((w, b, t));
        }
        active = keep;
        if active.is_empty() || active.len() * nm > max_cells {
            break;
        }
        let mut next = Vec::with_capacity(active.len() * nm);
        for (w, b, t) in &active {
            for i in 0..nm {
                let mut cb = Vec::with_capacity(nb);
                for n in 0..nb {
                    let p = g.pattern[i * nb + n];
                    let v = if p < nb {
                        b[p].clone()
                    } else {
                        let h: Q = (0..nb).map(|k| &model.ext.a[i][(n, k)] * &b[k]).sum();
                        h + t * &g1[p]
                    };
                    if v > lower {
                        lower = v.clone();
                        argmax = model.spec.canonicalize(&w.push(i as u8), n)?;
                    }
                    cb.push(v);
                }
                next.push((w.push(i as u8), cb, t * &step[i]));
            }
        }
        active = next;
        level += 1;
    }
    let open = active.iter().map(|(_, b, t)| b.iter().max().cloned().unwrap_or_else(Q::zero) + t * &tail).max();
    let mut upper = if retired > lower { retired } else { lower.clone() };
    if let Some(o) = open {
        if o > upper {
            upper = o;
        }
    }
    Ok(Delta1Interval { lower, upper, depth: level, argmax, upper_global, active_cells: active.len() })
}

/// E_w = F_w⁻¹(E ∩ F_w K) for every m-cell w, in cell order.
pub fn cell_preimages(model: &Model, set: &[VertexId], m: usize) -> Result<Vec<Vec<VertexId>>> {
    let g = model.graph(m);
    let members: HashSet<&VertexId> = set.iter().collect();
    for v in &g.vertices {
        if !members.contains(v) {
            return Err(Error::Invalid(format!("V_{m} is not contained in the sample set ({v} missing)")));
        }
    }
    let mut per_cell: Vec<Vec<VertexId>> = vec![Vec::new(); g.n_cells()];
    for x in set {
        let d = x.depth().max(m);
        for (w, k) in model.spec.representations(x, d) {
            let prefix = Word(w.0[..m].to_vec());
            let c = g.cell_of_word(&prefix).expect("prefix has length m");
            let pre = model.spec.canonicalize(&Word(w.0[m..].to_vec()), k as usize)?;
            if !per_cell[c].contains(&pre) {
                per_cell[c].push(pre);
            }
        }
    }
    for e in per_cell.iter_mut() {
        e.sort();
    }
    Ok(per_cell)
}

/// Natural μ-weights of E: p(x) = ∫v_x dμ, by pushing hat integrals through the elimination.
pub fn natural_weights_mu(model: &Model, set: &[VertexId]) -> Result<Vec<Q>> {
    let sys = SplineSystem::<Q>::new(model, set)?;
    Ok(sys.push(&model.hat_integrals(sys.depth())))
}

#[derive(Clone, Debug)]
pub struct Composition {
    pub delta0_sq: Q,
    pub delta1: Delta1Interval,
    pub weights: BTreeMap<VertexId, Q>,
    pub distinct_cells: usize,
}

/// δ₀² = Σ μ_w² r_w δ₀(E_w)², δ₁ = max μ_w r_w δ₁(E_w), p(x) = Σ μ_w p_{E_w}(F_w⁻¹x).
pub fn compose_scaling(model: &Model, set: &[VertexId], m: usize, delta1_depth: usize, g1: &[Q]) -> Result<Composition> {
    require_v0(model, set)?;
    let pre = cell_preimages(model, set, m)?;
    let g = model.graph(m);
    type Local = (Q, Delta1Interval, Vec<Q>);
    let mut cache: HashMap<Vec<VertexId>, Local> = HashMap::new();
    let mut d0 = Q::zero();
    let mut d1: Option<Delta1Interval> = None;
    let mut weights: BTreeMap<VertexId, Q> = BTreeMap::new();
    for (c, ew) in pre.iter().enumerate() {
        if !cache.contains_key(ew) {
            let a = delta0(model, ew, g1)?.sq;
            let b = delta1(model, ew, delta1_depth.max(set_depth(ew)), g1)?;
            let p = natural_weights_mu(model, ew)?;
            cache.insert(ew.clone(), (a, b, p));
        }
        let (a, b, p) = &cache[ew];
        let t = &g.mu_cell[c] * &g.r_cell[c];
        d0 += &g.mu_cell[c] * &t * a;
        let w = g.cell_word(c);
        let mut scaled = b.scaled(&t);
        let mut word = w.0.clone();
        word.extend_from_slice(&scaled.argmax.word.0);
        scaled.argmax = model.spec.canonicalize(&Word(word), scaled.argmax.index as usize)?;
        d1 = Some(match d1 {
            None => scaled,
            Some(mut cur) => {
                if scaled.lower > cur.lower {
                    cur.lower = scaled.lower.clone();
                    cur.argmax = scaled.argmax.clone();
                }
                if scaled.upper > cur.upper {
                    cur.upper = scaled.upper.clone();
                }
                if scaled.upper_global > cur.upper_global {
                    cur.upper_global = scaled.upper_global.clone();
                }
                cur
            }
        });
        for (y, py) in ew.iter().zip(p) {
            let mut word = w.0.clone();
            word.extend_from_slice(&y.word.0);
            let x = model.spec.canonicalize(&Word(word), y.index as usize)?;
            *weights.entry(x).or_insert_with(Q::zero) += &g.mu_cell[c] * py;
        }
    }
    let mut delta1 = d1.expect("at least one cell");
    delta1.depth += m;
    Ok(Composition { delta0_sq: d0, delta1, weights, distinct_cells: cache.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::sierpinski_gasket;
    use crate::rational::q;

    fn sg() -> (Model, Vec<Q>) {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
        (m, g1)
    }

    fn v0() -> Vec<VertexId> {
        (0..3).map(VertexId::boundary).collect()
    }

    #[test]
    fn sg_integral_and_series() {
        let (m, g1) = sg();
        assert_eq!(integral_g_v0(&m, &g1), q(1, 18));
        let s = integral_series_check(&m, &g1, 4);
        assert!(s.consistent);
        assert_eq!(s.direct[1], q(2, 45));
    }

    #[test]
    fn sg_examples() {
        let (m, g1) = sg();
        assert_eq!(delta0(&m, &v0(), &g1).unwrap().sq, q(1, 18));
        let mut e = v0();
        e.push(m.vertex(&[0], 1).unwrap());
        assert_eq!(delta0(&m, &e, &g1).unwrap().sq, q(5, 162));
        let w = natural_weights_mu(&m, &e).unwrap();
        assert_eq!(w, vec![q(5, 27), q(5, 27), q(7, 27), q(10, 27)]);
    }

    #[test]
    fn delta1_v0_encloses_one_fifteenth() {
        let (m, g1) = sg();
        let d = delta1(&m, &v0(), 5, &g1).unwrap();
        assert!(d.contains(&q(1, 15)));
        assert_eq!(d.lower, q(1, 15));
    }

    #[test]
    fn composition_v2() {
        let (m, g1) = sg();
        let v2 = m.graph(2).vertices.clone();
        let direct = delta0(&m, &v2, &g1).unwrap().sq;
        let direct_w = natural_weights_mu(&m, &v2).unwrap();
        for lvl in [1, 2] {
            let c = compose_scaling(&m, &v2, lvl, 3, &g1).unwrap();
            assert_eq!(c.delta0_sq, direct);
            for (x, p) in v2.iter().zip(&direct_w) {
                assert_eq!(&c.weights[x], p);
            }
        }
        assert_eq!(direct, q(1, 18 * 25));
    }
}
