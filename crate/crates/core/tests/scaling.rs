use fraquad_core::fractal::{builtin, VertexId, Word};
use fraquad_core::green::{compose_scaling, delta0, delta1, g1_values, G1Path};
use fraquad_core::harmonic::Model;
use fraquad_core::quadrature::{delta_ew, natural_weights, uniform_weights, user_weights, Measure};
use fraquad_core::rational::{q, q_to_f64, Q};
use fraquad_core::verify::sg3_uniform_coefficient;
use num::Signed;

fn model(name: &str) -> Model {
    Model::new(builtin(name).unwrap()).unwrap()
}

/// V_m plus the three innermost points of V_{m+2} in every m-cell.
fn tilde(m: &Model, level: usize) -> Vec<VertexId> {
    let mut e = m.graph(level).vertices.clone();
    let g = m.graph(level);
    for c in 0..g.n_cells() {
        let w = g.cell_word(c);
        for (a, b, n) in [(0u8, 1u8, 2usize), (1, 2, 0), (2, 0, 1)] {
            let v = m.spec.canonicalize(&Word([w.chars(), &[a, b]].concat()), n).unwrap();
            if !e.contains(&v) {
                e.push(v);
            }
        }
    }
    e
}

#[test]
fn composition_matches_direct_on_v2() {
    let m = model("sg");
    let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
    let v2 = m.graph(2).vertices.clone();
    let d0 = delta0(&m, &v2, &g1).unwrap().sq;
    let w = natural_weights(&m, &v2, Measure::SelfSimilar).unwrap();
    for level in [1, 2] {
        let c = compose_scaling(&m, &v2, level, 4, &g1).unwrap();
        assert_eq!(c.delta0_sq, d0);
        for (x, p) in w.points.iter().zip(&w.weights) {
            assert_eq!(&c.weights[x], p);
        }
    }
}

#[test]
fn tilde_sets_scale_like_next_level() {
    let m = model("sg");
    let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
    for level in 1..=3 {
        let et = tilde(&m, level);
        let vn = m.graph(level + 1).vertices.clone();
        assert_eq!(et.len(), vn.len());
        let c = compose_scaling(&m, &et, level, level + 3, &g1).unwrap();
        assert_eq!(c.delta0_sq, delta0(&m, &vn, &g1).unwrap().sq);
        assert_eq!(delta0(&m, &et, &g1).unwrap().sq, c.delta0_sq);
        let a = delta1(&m, &et, level + 3, &g1).unwrap();
        let b = delta1(&m, &vn, level + 3, &g1).unwrap();
        assert_eq!(a.lower, b.lower);
        assert_eq!(a.upper, b.upper);
    }
}

#[test]
fn sg3_eta_counts_and_weights() {
    let m = model("sg3");
    for level in 1..=5u32 {
        let g = m.graph(level as usize);
        let six = 6usize.pow(level);
        let twos = g.eta.iter().filter(|&&e| e == 2).count();
        let threes = g.eta.iter().filter(|&&e| e == 3).count();
        assert_eq!(5 * twos, 6 * (six - 1));
        assert_eq!(5 * threes, six - 1);
        let beta = m.hat_integrals(level as usize);
        for (b, &e) in beta.iter().zip(&g.eta) {
            assert_eq!(*b, Q::from_integer(e.into()) / Q::from_integer((3 * six).into()));
        }
    }
    let w = natural_weights(&m, &m.graph(2).vertices, Measure::SelfSimilar).unwrap();
    assert_eq!(w.weights, m.hat_integrals(2));
    let c6 = sg3_uniform_coefficient(&m, 6);
    assert!((q_to_f64(&c6) - 4.0 / 35.0).abs() < 1e-3);
}

#[test]
fn st_weights_compose() {
    let m = model("st");
    let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
    let v2 = m.graph(2).vertices.clone();
    let w = natural_weights(&m, &v2, Measure::SelfSimilar).unwrap();
    let c = compose_scaling(&m, &v2, 2, 3, &g1).unwrap();
    for (x, p) in w.points.iter().zip(&w.weights) {
        assert_eq!(&c.weights[x], p);
    }
}

#[test]
fn delta_ew_triangle() {
    let m = model("sg");
    let e = m.graph(2).vertices.clone();
    let p = natural_weights(&m, &e, Measure::SelfSimilar).unwrap();
    let w = uniform_weights(&e).unwrap();
    // an intermediate weighting: halfway, then skewed onto the boundary
    let mut mid: Vec<Q> = p.weights.iter().zip(&w.weights).map(|(a, b)| (a + b) / Q::from_integer(2.into())).collect();
    let shift = q(1, 100);
    mid[0] += &shift;
    mid[1] -= &shift;
    let mid = user_weights(e.clone(), mid).unwrap();
    let lhs = delta_ew(&p, &w).unwrap();
    let via: Q = p.weights.iter().zip(&mid.weights).map(|(a, b)| (a - b).abs()).sum::<Q>() + delta_ew(&mid, &w).unwrap();
    assert!(lhs <= via);
}
