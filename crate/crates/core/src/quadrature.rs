//! Weighted sample sets, δ(E,w), and assembled integration-error bounds.

use num::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::energy::{EnergyMeasure, EnergyTables};
use crate::error::{Error, Result};
use crate::fractal::VertexId;
use crate::green::{delta0, delta1, g_e_values, Delta1Interval};
use crate::harmonic::{graph_laplacian_estimate, Model};
use crate::rational::{q_to_f64, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Natural,
    Uniform,
    User,
}

#[derive(Clone, Debug)]
pub struct WeightedSampleSet {
    pub points: Vec<VertexId>,
    pub weights: Vec<Q>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

impl WeightedSampleSet {
    pub fn total(&self) -> Q {
        self.weights.iter().sum()
    }

    pub fn weight(&self, v: &VertexId) -> Option<&Q> {
        self.points.iter().position(|x| x == v).map(|i| &self.weights[i])
    }
}

pub enum Measure<'a> {
    SelfSimilar,
    Energy(&'a EnergyTables, &'a EnergyMeasure),
}

/// p(x) = ∫v_x d(measure) for the indicator splines of E.
pub fn natural_weights(model: &Model, set: &[VertexId], measure: Measure) -> Result<WeightedSampleSet> {
    let (weights, warnings) = match measure {
        Measure::SelfSimilar => (crate::green::natural_weights_mu(model, set)?, Vec::new()),
        Measure::Energy(t, nu) => t.energy_weights(model, set, nu)?,
    };
    Ok(WeightedSampleSet { points: set.to_vec(), weights, provenance: Provenance::Natural, warnings })
}

pub fn uniform_weights(set: &[VertexId]) -> Result<WeightedSampleSet> {
    if set.is_empty() {
        return Err(Error::Invalid("empty sample set".into()));
    }
    let w = Q::new(1.into(), set.len().into());
    Ok(WeightedSampleSet { points: set.to_vec(), weights: vec![w; set.len()], provenance: Provenance::Uniform, warnings: Vec::new() })
}

pub fn user_weights(points: Vec<VertexId>, weights: Vec<Q>) -> Result<WeightedSampleSet> {
    if points.len() != weights.len() {
        return Err(Error::Invalid(format!("{} weights for {} points", weights.len(), points.len())));
    }
    let total: Q = weights.iter().sum();
    if !total.is_one() {
        return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
    }
    Ok(WeightedSampleSet { points, weights, provenance: Provenance::User, warnings: Vec::new() })
}

/// Σ_x |p(x) − w(x)|, the coefficient of R^{1/2} in δ(E,w).
pub fn delta_ew(p: &WeightedSampleSet, w: &WeightedSampleSet) -> Result<Q> {
    if p.points.len() != w.points.len() {
        return Err(Error::Invalid("weight maps have different supports".into()));
    }
    let mut total = Q::zero();
    for (x, px) in p.points.iter().zip(&p.weights) {
        let wx = w.weight(x).ok_or_else(|| Error::Invalid(format!("{x} has no weight in the second map")))?;
        total += (px - wx).abs();
    }
    Ok(total)
}

pub fn integrate(ws: &WeightedSampleSet, values: &[Q]) -> Result<Q> {
    if values.len() != ws.points.len() {
        return Err(Error::Invalid(format!("{} values for {} sample points", values.len(), ws.points.len())));
    }
    Ok(ws.weights.iter().zip(values).map(|(w, f)| w * f).sum())
}

pub fn integrate_with<F>(ws: &WeightedSampleSet, mut f: F) -> Result<Q>
where
    F: FnMut(&VertexId) -> Result<Q>,
{
    let mut total = Q::zero();
    for (x, w) in ws.points.iter().zip(&ws.weights) {
        total += w * f(x)?;
    }
    Ok(total)
}

/// A bound of the form `base + r_coeff · R^{1/2}`; `value` is filled when R is known.
#[derive(Clone, Debug, Serialize)]
pub struct Bound {
    pub name: &'static str,
    pub base: f64,
    pub r_coeff: f64,
    pub value: Option<f64>,
    /// False when some factor is an estimate from finite data.
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Factor<T> {
    pub value: T,
    pub exact: bool,
    pub note: &'static str,
}

#[derive(Clone, Debug)]
pub struct ErrorBudget {
    pub delta0_sq: Q,
    pub delta1: Delta1Interval,
    pub delta_ew_coeff: Q,
    pub r: Option<f64>,
    pub energy: Factor<Q>,
    pub laplacian_l1: Factor<Q>,
    /// (q, ‖g_E‖_q, ‖Δf‖_p) for the Hölder form, when requested.
    pub holder: Option<(f64, f64, f64)>,
    pub bounds: Vec<Bound>,
    pub quadrature: Q,
}

/// Known exact values that replace the finite-data estimates.
#[derive(Clone, Debug, Default)]
pub struct KnownFactors {
    pub energy: Option<Q>,
    pub laplacian_l1: Option<Q>,
}

pub struct BudgetRequest<'a> {
    pub ws: &'a WeightedSampleSet,
    /// f on every vertex of V_depth, in graph order.
    pub values: &'a [Q],
    pub depth: usize,
    pub g1: &'a [Q],
    pub r: Option<f64>,
    pub holder_q: Option<f64>,
    pub known: KnownFactors,
}

fn sqrt_f(x: &Q) -> f64 {
    q_to_f64(x).max(0.0).sqrt()
}

/// ‖Δ_m f‖_1 ≈ Σ_{x ∉ V₀} |Δ_m f(x)| ∫ψ_x dμ.
pub fn laplacian_l1_estimate(model: &Model, m: usize, values: &[Q]) -> Q {
    let lap = graph_laplacian_estimate(model, m, values);
    let beta = model.hat_integrals(m);
    lap.iter().zip(&beta).skip(model.n0()).map(|(l, b)| l.abs() * b).sum()
}

fn laplacian_lp_estimate(model: &Model, m: usize, values: &[Q], p: f64) -> f64 {
    let lap = graph_laplacian_estimate(model, m, values);
    let beta = model.hat_integrals(m);
    let it = lap.iter().zip(&beta).skip(model.n0());
    if p.is_infinite() {
        return it.map(|(l, _)| q_to_f64(&l.abs())).fold(0.0, f64::max);
    }
    it.map(|(l, b)| q_to_f64(&l.abs()).powf(p) * q_to_f64(b)).sum::<f64>().powf(1.0 / p)
}

pub fn error_budget(model: &Model, req: BudgetRequest) -> Result<ErrorBudget> {
    let ws = req.ws;
    let g = model.graph(req.depth);
    if req.values.len() != g.len() {
        return Err(Error::Invalid(format!("expected {} values on V_{}, got {}", g.len(), req.depth, req.values.len())));
    }
    let at = |x: &VertexId| -> Result<Q> { Ok(req.values[model.index_at(x, req.depth)?].clone()) };
    let quadrature = integrate_with(ws, at)?;
    let d0 = delta0(model, &ws.points, req.g1)?.sq;
    let d1 = delta1(model, &ws.points, req.depth, req.g1)?;
    let p = natural_weights(model, &ws.points, Measure::SelfSimilar)?;
    let dew = delta_ew(&p, ws)?;

    let energy = match req.known.energy {
        Some(e) => Factor { value: e, exact: true, note: "supplied" },
        None => Factor { value: g.energy(&model.spec, req.values)?, exact: false, note: "graph energy on V_depth (lower estimate)" },
    };
    let laplacian_l1 = match req.known.laplacian_l1 {
        Some(l) => Factor { value: l, exact: true, note: "supplied" },
        None => Factor { value: laplacian_l1_estimate(model, req.depth, req.values), exact: false, note: "graph Laplacian on V_depth" },
    };

    let e_half = sqrt_f(&energy.value);
    let l1 = q_to_f64(&laplacian_l1.value);
    let d0f = sqrt_f(&d0);
    let d1f = q_to_f64(&d1.upper);
    let dewf = q_to_f64(&dew);
    let with_r = |base: f64, rc: f64| req.r.map(|r| base + rc * r.max(0.0).sqrt());
    let natural = dew.is_zero();
    let mut bounds = Vec::new();
    let mut push = |name, base: f64, rc: f64, certified: bool, applies: bool| {
        if applies {
            bounds.push(Bound { name, base, r_coeff: rc, value: if rc == 0.0 { Some(base) } else { with_r(base, rc) }, certified });
        }
    };
    push("energy", d0f * e_half, 0.0, energy.exact, natural);
    push("laplacian", d1f * l1, 0.0, laplacian_l1.exact, natural);
    push("energy_w", d0f * e_half, dewf * e_half, energy.exact, true);
    push("laplacian_w", d1f * l1, dewf * e_half, energy.exact && laplacian_l1.exact, true);

    let holder = match req.holder_q {
        Some(qn) => {
            let gq = ge_norm_q(model, &ws.points, qn, req.depth, req.g1)?;
            let pn = if qn == 1.0 {
                f64::INFINITY
            } else if qn.is_infinite() {
                1.0
            } else {
                qn / (qn - 1.0)
            };
            let lp = if pn == 1.0 { l1 } else { laplacian_lp_estimate(model, req.depth, req.values, pn) };
            bounds.push(Bound {
                name: "holder",
                base: gq * lp,
                r_coeff: dewf * e_half,
                value: with_r(gq * lp, dewf * e_half),
                certified: false,
            });
            Some((qn, gq, lp))
        }
        None => None,
    };
    Ok(ErrorBudget { delta0_sq: d0, delta1: d1, delta_ew_coeff: dew, r: req.r, energy, laplacian_l1, holder, bounds, quadrature })
}

/// (∫ g_E^q dμ)^{1/q} from the depth-m piecewise harmonic interpolant of g_E^q;
/// q = ∞ gives the midpoint of the δ₁ enclosure.
pub fn ge_norm_q(model: &Model, set: &[VertexId], q: f64, depth: usize, g1: &[Q]) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::OutOfRange(format!("q must lie in [1, inf], got {q}")));
    }
    if q.is_infinite() {
        let d = delta1(model, set, depth, g1)?;
        return Ok(q_to_f64(&((&d.lower + &d.upper) / Q::from_integer(2.into()))));
    }
    let slice = g_e_values(model, set, depth, g1)?;
    let beta = model.hat_integrals(slice.depth);
    if q == 1.0 {
        let s: Q = slice.values.iter().zip(&beta).map(|(a, b)| a * b).sum();
        return Ok(q_to_f64(&s));
    }
    let s: f64 = slice.values.iter().zip(&beta).map(|(a, b)| q_to_f64(a).max(0.0).powf(q) * q_to_f64(b)).sum();
    Ok(s.powf(1.0 / q))
}

/// Weight totals are 1 for μ; any nonpositive natural weight is worth flagging.
pub fn weights_positive(ws: &WeightedSampleSet) -> bool {
    ws.weights.iter().all(|w| w.is_positive())
}

pub fn to_f64s(ws: &WeightedSampleSet) -> Vec<f64> {
    ws.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::sierpinski_gasket;
    use crate::green::{g1_values, g_v0_values, G1Path};
    use crate::rational::q;

    fn setup() -> (Model, Vec<Q>) {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
        (m, g1)
    }

    fn ex32(m: &Model) -> Vec<VertexId> {
        let mut e: Vec<VertexId> = (0..3).map(VertexId::boundary).collect();
        e.push(m.vertex(&[0], 1).unwrap());
        e
    }

    #[test]
    fn uniform_discrepancy_coefficient() {
        let (m, _) = setup();
        let e = ex32(&m);
        let p = natural_weights(&m, &e, Measure::SelfSimilar).unwrap();
        let u = uniform_weights(&e).unwrap();
        assert_eq!(delta_ew(&p, &u).unwrap(), q(7, 27));
        assert_eq!(delta_ew(&p, &p).unwrap(), Q::zero());
    }

    #[test]
    fn green_budget_dominates() {
        let (m, g1) = setup();
        for depth in 1..=3 {
            let e = m.graph(depth).vertices.clone();
            let ws = natural_weights(&m, &e, Measure::SelfSimilar).unwrap();
            let vals = g_v0_values(&m, depth, &g1);
            let b = error_budget(
                &m,
                BudgetRequest {
                    ws: &ws,
                    values: &vals,
                    depth,
                    g1: &g1,
                    r: None,
                    holder_q: Some(1.0),
                    known: KnownFactors { energy: Some(q(1, 18)), laplacian_l1: Some(Q::one()) },
                },
            )
            .unwrap();
            let actual = q_to_f64(&(q(1, 18) - &b.quadrature).abs());
            let lap = b.bounds.iter().find(|x| x.name == "laplacian").unwrap();
            assert!(actual <= lap.base, "{actual} vs {}", lap.base);
            assert!(lap.base <= 1.0 / (15.0 * 5f64.powi(depth as i32)) * 1.5);
        }
    }

    #[test]
    fn norm_q_ordering() {
        let (m, g1) = setup();
        let v0: Vec<VertexId> = (0..3).map(VertexId::boundary).collect();
        assert!((ge_norm_q(&m, &v0, 1.0, 7, &g1).unwrap() - 1.0 / 18.0).abs() < 1e-6);
        let n1 = ge_norm_q(&m, &v0, 1.0, 5, &g1).unwrap();
        let n2 = ge_norm_q(&m, &v0, 2.0, 5, &g1).unwrap();
        let ni = ge_norm_q(&m, &v0, f64::INFINITY, 5, &g1).unwrap();
        assert!(n1 <= n2 && n2 <= ni, "{n1} {n2} {ni}");
    }
}
