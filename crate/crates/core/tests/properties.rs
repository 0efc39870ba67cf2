use fraquad_core::energy::{decompose_pair, energy_tables};
use fraquad_core::fractal::{builtin, VertexId, Word};
use fraquad_core::green::{g1_values, g_v0_values, integral_g_v0, G1Path};
use fraquad_core::harmonic::{indicator_splines, solve_spline, HarmonicFunction, Model};
use fraquad_core::multiharmonic::multiharmonic_tables;
use fraquad_core::quadrature::{error_budget, natural_weights, BudgetRequest, KnownFactors, Measure};
use fraquad_core::rational::{q, q_to_f64, Q};
use num::{One, Signed, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn model(name: &str) -> Model {
    Model::new(builtin(name).unwrap()).unwrap()
}

fn random_set(m: &Model, rng: &mut StdRng, max_depth: usize, extra: usize) -> Vec<VertexId> {
    let depth = rng.gen_range(1..=max_depth);
    let mut e: Vec<VertexId> = (0..m.n0()).map(VertexId::boundary).collect();
    let mut pool: Vec<VertexId> = m.graph(depth).vertices.iter().filter(|v| !v.is_boundary()).cloned().collect();
    pool.shuffle(rng);
    e.extend(pool.into_iter().take(extra));
    e
}

fn random_q(rng: &mut StdRng) -> Q {
    q(rng.gen_range(-20..=20), rng.gen_range(1..=9))
}

#[test]
fn natural_weights_integrate_splines_exactly() {
    let models = [model("sg"), model("st"), model("sg3")];
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for case in 0..200 {
        let m = &models[case % 3];
        let extra = rng.gen_range(0..=12 - m.n0());
        let e = random_set(m, &mut rng, 3, extra);
        let w = natural_weights(m, &e, Measure::SelfSimilar).unwrap();
        let vals: Vec<Q> = e.iter().map(|_| random_q(&mut rng)).collect();
        let quad: Q = w.weights.iter().zip(&vals).map(|(p, v)| p * v).sum();
        // oracle: cell-by-cell integral of the solved spline
        let s = solve_spline(m, &e, &vals).unwrap();
        assert_eq!(quad, s.integrate_mu(m), "case {case}, spec {}", m.spec.name);
    }
}

#[test]
fn indicator_splines_partition_unity() {
    let mut rng = StdRng::seed_from_u64(7);
    for name in ["sg", "st", "sg3"] {
        let m = model(name);
        for _ in 0..5 {
            let e = random_set(&m, &mut rng, 2, 5);
            let splines = indicator_splines::<Q>(&m, &e).unwrap();
            let n = splines[0].values.len();
            for x in 0..n {
                let s: Q = splines.iter().map(|sp| sp.values[x].clone()).sum();
                assert!(s.is_one());
            }
            let w = natural_weights(&m, &e, Measure::SelfSimilar).unwrap();
            assert!(w.total().is_one());
        }
    }
}

fn words(n_maps: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    for _ in 0..len {
        out = out.iter().flat_map(|w| (0..n_maps).map(move |i| w.push(i as u8))).collect();
    }
    out
}

fn polar(m: &Model, a: &[Q], b: &[Q]) -> Q {
    let plus: Vec<Q> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let minus: Vec<Q> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (m.spec.boundary_energy(&plus) - m.spec.boundary_energy(&minus)) / Q::from_integer(4.into())
}

/// ν_{a,b}(F_w K) = r_w⁻¹ E(a∘F_w, b∘F_w).
fn cell_mass(m: &Model, a: &HarmonicFunction, b: &HarmonicFunction, w: &Word) -> Q {
    polar(m, &a.restrict(m, w).coeffs, &b.restrict(m, w).coeffs) / m.spec.r_word(w)
}

#[test]
fn energy_cell_integrals_add_up() {
    let mut rng = StdRng::seed_from_u64(11);
    for name in ["sg", "st", "sg3", "interval"] {
        let m = model(name);
        let t = energy_tables(&m).unwrap();
        for _ in 0..4 {
            let a: Vec<Q> = (0..m.n0()).map(|_| random_q(&mut rng)).collect();
            let b: Vec<Q> = (0..m.n0()).map(|_| random_q(&mut rng)).collect();
            let nu = decompose_pair(&a, &b);
            let f = HarmonicFunction { coeffs: (0..m.n0()).map(|_| random_q(&mut rng)).collect() };
            let whole = t.integral(&f, &nu);
            for len in 1..=2 {
                let sum: Q = words(m.n_maps(), len).iter().map(|w| t.cell_integral(&m, &f, w, &nu)).sum();
                assert_eq!(sum, whole, "{name} level {len}");
            }
        }
    }
}

#[test]
fn m_word_products_match_refinement() {
    for name in ["sg", "st", "sg3"] {
        let m = model(name);
        let t = energy_tables(&m).unwrap();
        let n0 = m.n0();
        let one = HarmonicFunction { coeffs: vec![Q::one(); n0] };
        let h: Vec<HarmonicFunction> = (0..n0).map(|k| HarmonicFunction::basis(n0, k)).collect();
        let maxlen = if name == "sg3" { 2 } else { 3 };
        for len in 0..=maxlen {
            for w in words(m.n_maps(), len) {
                // masses: exact energy of the restricted pair
                for j in 0..n0 {
                    for k in j..n0 {
                        let nu = decompose_pair(&h[j].coeffs, &h[k].coeffs);
                        assert_eq!(t.cell_integral(&m, &one, &w, &nu), cell_mass(&m, &h[j], &h[k], &w), "{name} {w}");
                    }
                }
                if len > 2 {
                    continue;
                }
                // ∫_{F_w} h_l dν_{h_0,h_0}: bracket by min/max over subcells three levels down
                let nu = decompose_pair(&h[0].coeffs, &h[0].coeffs);
                for f in &h {
                    let val = t.cell_integral(&m, f, &w, &nu);
                    let (mut lo, mut hi) = (Q::zero(), Q::zero());
                    for u in words(m.n_maps(), 3) {
                        let mut v = w.clone();
                        for &c in u.chars() {
                            v = v.push(c);
                        }
                        let mass = cell_mass(&m, &h[0], &h[0], &v);
                        let local = f.restrict(&m, &v).coeffs;
                        lo += local.iter().min().unwrap() * &mass;
                        hi += local.iter().max().unwrap() * &mass;
                    }
                    assert!(lo <= val && val <= hi, "{name} {w}");
                }
            }
        }
    }
}

struct Case {
    name: &'static str,
    values: Vec<Q>,
    integral: Q,
    known: KnownFactors,
}

fn suite(m: &Model, depth: usize, g1: &[Q]) -> Vec<Case> {
    let n0 = m.n0();
    let tables = multiharmonic_tables(m).unwrap();
    let mut out = Vec::new();
    for k in 0..n0 {
        let h = HarmonicFunction::basis(n0, k);
        out.push(Case {
            name: "harmonic",
            values: h.values(m, depth),
            integral: h.integral_mu(m),
            known: KnownFactors { energy: Some(h.energy(m)), laplacian_l1: Some(Q::zero()) },
        });
    }
    let ig = integral_g_v0(m, g1);
    out.push(Case {
        name: "green",
        values: g_v0_values(m, depth, g1),
        integral: ig.clone(),
        known: KnownFactors { energy: Some(ig), laplacian_l1: Some(Q::one()) },
    });
    let h0 = HarmonicFunction::basis(n0, 0).values(m, depth);
    let h1 = HarmonicFunction::basis(n0, 1).values(m, depth);
    out.push(Case {
        name: "product",
        values: h0.iter().zip(&h1).map(|(a, b)| a * b).collect(),
        integral: tables.i[1].clone(),
        known: KnownFactors::default(),
    });
    out
}

#[test]
fn error_bounds_dominate() {
    let plans: [(&str, &[&str], usize); 3] = [("sg", &["", "0:1", "0:1,0:2", "01:2,12:0,20:1"], 6), ("st", &["", "0:1"], 5), ("sg3", &["", "3:2"], 4)];
    for (name, sets, max_depth) in plans {
        let m = model(name);
        let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
        for extra in sets {
            let mut e: Vec<VertexId> = (0..m.n0()).map(VertexId::boundary).collect();
            for a in extra.split(',').filter(|s| !s.is_empty()) {
                e.push(m.spec.parse_vertex(a).unwrap());
            }
            let ws = natural_weights(&m, &e, Measure::SelfSimilar).unwrap();
            for depth in 2..=max_depth {
                for case in suite(&m, depth, &g1) {
                    let b = error_budget(
                        &m,
                        BudgetRequest { ws: &ws, values: &case.values, depth, g1: &g1, r: None, holder_q: None, known: case.known.clone() },
                    )
                    .unwrap();
                    let actual = q_to_f64(&(&b.quadrature - &case.integral).abs());
                    for bound in &b.bounds {
                        let v = bound.value.expect("natural weights need no R");
                        if bound.certified {
                            assert!(actual <= v * (1.0 + 1e-12) + 1e-15, "{name} E={extra:?} depth {depth} {}: {actual} > {v} ({})", case.name, bound.name);
                        } else {
                            assert_eq!(case.name, "product", "only the product case uses estimated factors");
                        }
                    }
                }
            }
        }
    }
}
