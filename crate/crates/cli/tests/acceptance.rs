//! One PASS/FAIL line per acceptance criterion. Lines go straight to stderr so they
//! show up even when the harness captures output.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use fraquad_core::energy::{decompose_pair, energy_tables, xi_matrices};
use fraquad_core::fractal::{builtin, VertexId, Word};
use fraquad_core::green::{
    compose_scaling, delta0, delta1, delta1_refined, g1_values, g_v0_values, integral_g_v0, G1Path,
};
use fraquad_core::harmonic::{indicator_splines, solve_spline, HarmonicFunction, Model};
use fraquad_core::multiharmonic::multiharmonic_tables;
use fraquad_core::quadrature::{delta_ew, error_budget, natural_weights, uniform_weights, BudgetRequest, KnownFactors, Measure};
use fraquad_core::rational::{fmt_q, q, q_to_f64, to_decimal, Q};
use fraquad_core::verify::{sg3_uniform_coefficient, verify_paper, Scope, Status};
use num::{One, Signed, Zero};

type Outcome = (bool, String);

fn model(name: &str) -> Model {
    Model::new(builtin(name).unwrap()).unwrap()
}

fn set(m: &Model, extra: &[&str]) -> Vec<VertexId> {
    let mut e: Vec<VertexId> = (0..m.n0()).map(VertexId::boundary).collect();
    e.extend(extra.iter().map(|a| m.spec.parse_vertex(a).unwrap()));
    e
}

fn line(n: usize, (ok, detail): &Outcome) {
    let status = if *ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2}: {status}  {detail}");
}

fn c1_delta0() -> Outcome {
    let m = model("sg");
    let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
    let cases = [(vec![], q(1, 18)), (vec!["0:1"], q(5, 162)), (vec!["0:1", "0:2"], q(1, 54)), (vec!["01:2", "12:0", "20:1"], q(1, 90))];
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    for (extra, want) in &cases {
        let t = Instant::now();
        let got = delta0(&m, &set(&m, extra), &g1).unwrap().sq;
        slowest = slowest.max(t.elapsed());
        ok &= got == *want;
    }
    ok &= slowest < Duration::from_secs(1);
    (ok, format!("SG delta0^2 = 1/18, 5/162, 1/54, 1/90 exactly; slowest {:.1} ms", slowest.as_secs_f64() * 1e3))
}

fn c2_delta1() -> Outcome {
    let m = model("sg");
    let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
    let v0 = set(&m, &[]);
    let d9 = delta1(&m, &v0, 9, &g1).unwrap();
    let width_ok = d9.contains(&q(1, 15)) && d9.width() < q(1, 1_000_000_000_000);
    let tol = q(1, 1_000_000_000_000);
    let inner = delta1_refined(&m, &set(&m, &["01:2", "12:0", "20:1"]), 6, &g1, &tol, 200_000).unwrap();
    let one = delta1_refined(&m, &set(&m, &["0:1"]), 6, &g1, &tol, 200_000).unwrap();
    let two = delta1_refined(&m, &set(&m, &["0:1", "0:2"]), 6, &g1, &tol, 200_000).unwrap();
    let rest = inner.contains(&q(1, 75)) && one.contains(&q(11, 225)) && two.contains(&q(1, 30));
    let adaptive = delta1_refined(&m, &v0, 9, &g1, &q(1, 10_000_000_000_000), 2_000_000).unwrap();
    let supplementary = format!(
        "\n              supplementary: adaptive refinement from depth 9 gives width {} at depth {} (contains 1/15: {})",
        to_decimal(&adaptive.width(), 3),
        adaptive.depth,
        adaptive.contains(&q(1, 15))
    );
    (
        width_ok && rest,
        format!(
            "V0 at depth 9: [1/15 + {}] width {} (needs < 1e-12); 1/75 contained: {}; conjectures 11/225, 1/30 contained: {}",
            to_decimal(&(&d9.lower - q(1, 15)), 3),
            to_decimal(&d9.width(), 3),
            inner.contains(&q(1, 75)),
            one.contains(&q(11, 225)) && two.contains(&q(1, 30))
        ) + &supplementary,
    )
}

fn c3_weights() -> Outcome {
    let m = model("sg");
    let w = |extra: &[&str]| natural_weights(&m, &set(&m, extra), Measure::SelfSimilar).unwrap();
    let mut ok = w(&["0:1"]).weights == vec![q(5, 27), q(5, 27), q(7, 27), q(10, 27)];
    ok &= w(&["0:1", "0:2"]).weights == vec![q(1, 9), q(1, 6), q(1, 6), q(5, 18), q(5, 18)];
    let inner = w(&["01:2", "12:0", "20:1"]);
    ok &= inner.weights == vec![q(1, 9), q(1, 9), q(1, 9), q(2, 9), q(2, 9), q(2, 9)];
    for level in 1..=5u32 {
        let vm = m.graph(level as usize).vertices.clone();
        let ws = natural_weights(&m, &vm, Measure::SelfSimilar).unwrap();
        let base = Q::new(1.into(), 3i64.pow(level + 1).into());
        ok &= ws.points.iter().zip(&ws.weights).all(|(x, p)| *p == if x.is_boundary() { base.clone() } else { &base * Q::from_integer(2.into()) });
    }
    let coeff = |extra: &[&str]| {
        let e = set(&m, extra);
        delta_ew(&natural_weights(&m, &e, Measure::SelfSimilar).unwrap(), &uniform_weights(&e).unwrap()).unwrap()
    };
    ok &= coeff(&["0:1"]) == q(7, 27) && coeff(&["0:1", "0:2"]) == q(14, 45) && coeff(&["01:2", "12:0", "20:1"]) == q(1, 3);
    (ok, "SG natural weights for the four sample sets and V_m (m <= 5); delta(E,w) = 7/27, 14/45, 1/3".into())
}

fn tilde(m: &Model, level: usize) -> Vec<VertexId> {
    let g = m.graph(level);
    let mut e = g.vertices.clone();
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

fn c4_scaling() -> Outcome {
    let m = model("sg");
    let g1 = g1_values(&m, G1Path::GreenIdentity).unwrap();
    let v2 = m.graph(2).vertices.clone();
    let d0 = delta0(&m, &v2, &g1).unwrap().sq;
    let w = natural_weights(&m, &v2, Measure::SelfSimilar).unwrap();
    let mut ok = true;
    for level in [1, 2] {
        let c = compose_scaling(&m, &v2, level, 4, &g1).unwrap();
        ok &= c.delta0_sq == d0 && w.points.iter().zip(&w.weights).all(|(x, p)| &c.weights[x] == p);
    }
    for level in 1..=3 {
        let et = tilde(&m, level);
        let vn = m.graph(level + 1).vertices.clone();
        ok &= delta0(&m, &et, &g1).unwrap().sq == delta0(&m, &vn, &g1).unwrap().sq;
        let a = delta1(&m, &et, level + 3, &g1).unwrap();
        let b = delta1(&m, &vn, level + 3, &g1).unwrap();
        ok &= a.lower == b.lower && a.upper == b.upper;
    }
    (ok, "V2 direct = composition at m = 1, 2; tilde E_m = V_(m+1) in delta0 and delta1 for m <= 3".into())
}

fn c5_tables() -> Outcome {
    let st = multiharmonic_tables(&model("st")).unwrap();
    let sg3 = multiharmonic_tables(&model("sg3")).unwrap();
    let i_ok = st.i[..2] == [q(7, 80), q(13, 240)] && sg3.i[..2] == [q(551, 3735), q(347, 3735)];
    let report = verify_paper(Scope::St).unwrap();
    let report3 = verify_paper(Scope::Sg3).unwrap();
    let matched = |ids: &[&str]| {
        ids.iter().all(|id| report.items.iter().chain(&report3.items).any(|it| it.id == *id && it.status == Status::Match))
    };
    let xg = matched(&["st.x", "st.g", "st.a", "sg3.x", "sg3.g", "sg3.a"]);
    (i_ok && xg, "I = (7/80, 13/240) for ST and (551/3735, 347/3735) for SG3; A, X, G equal the reference matrices".into())
}

fn c6_audit() -> Outcome {
    let sg = model("sg");
    let ok_sg = g1_values(&sg, G1Path::F1k).unwrap() == g1_values(&sg, G1Path::GreenIdentity).unwrap();
    let st = verify_paper(Scope::St).unwrap();
    let sg3 = verify_paper(Scope::Sg3).unwrap();
    let status = |r: &fraquad_core::verify::VerificationReport, id: &str| r.items.iter().find(|i| i.id == id).map(|i| i.status);
    let series = ["st.series.algorithm_g1", "st.series.printed_g1"].iter().all(|id| status(&st, id) == Some(Status::Match))
        && ["sg3.series.algorithm_g1", "sg3.series.printed_g1"].iter().all(|id| status(&sg3, id) == Some(Status::Match));
    let conflicts = status(&st, "st.g1.midpoint") == Some(Status::PaperInternalConflict)
        && ["sg3.g1.side", "sg3.g1.center", "sg3.v0.delta0_sq", "sg3.v0.delta1"].iter().all(|id| status(&sg3, id) == Some(Status::PaperInternalConflict));
    // exact ratios between the two g1 choices
    let st_m = model("st");
    let sg3_m = model("sg3");
    let r_st = integral_g_v0(&st_m, &g1_values(&st_m, G1Path::GreenIdentity).unwrap()) / q(9, 160);
    let r_sg3 = integral_g_v0(&sg3_m, &g1_values(&sg3_m, G1Path::GreenIdentity).unwrap()) / q(13, 249);
    let ratios = r_st == q(2, 3) && r_sg3 == q(7, 6);
    (
        ok_sg && series && conflicts && ratios,
        format!(
            "SG paths agree (1/15); series = closed form on both g1 choices; conflicts reported, ratios ST {} and SG3 {}",
            fmt_q(&r_st),
            fmt_q(&r_sg3)
        ),
    )
}

fn c7_sg3() -> Outcome {
    let m = model("sg3");
    let mut ok = true;
    for level in 1..=5u32 {
        let g = m.graph(level as usize);
        let six = 6usize.pow(level);
        ok &= 5 * g.eta.iter().filter(|&&e| e == 2).count() == 6 * (six - 1);
        ok &= 5 * g.eta.iter().filter(|&&e| e == 3).count() == six - 1;
        if level <= 3 {
            let w = natural_weights(&m, &g.vertices, Measure::SelfSimilar).unwrap();
            ok &= w.weights.iter().zip(&g.eta).all(|(p, &e)| *p == Q::from_integer(e.into()) / Q::from_integer((3 * six).into()));
        }
    }
    let c6 = sg3_uniform_coefficient(&m, 6);
    let gap = (q_to_f64(&c6) - 4.0 / 35.0).abs();
    ok &= gap < 1e-3;
    (ok, format!("eta counts for m <= 5, weights eta/(3*6^m); coefficient at m = 6 is {} (|diff from 4/35| = {gap:.2e})", to_decimal(&c6, 6)))
}

fn c8_energy() -> Outcome {
    let mut ok = true;
    let mut misprints = Vec::new();
    for scope in [Scope::Interval, Scope::Sg, Scope::St, Scope::Sg3] {
        for it in verify_paper(scope).unwrap().items.into_iter().filter(|i| i.id.contains(".energy.")) {
            match it.status {
                Status::Match => {}
                Status::PaperInternalConflict => {
                    ok = false;
                    misprints.push(it.id);
                }
                _ => {
                    ok = false;
                    misprints.push(format!("{} ({})", it.id, it.status.as_str()));
                }
            }
        }
    }
    for n in 3..=10 {
        let m = model(&format!("nhedron:{n}"));
        let t = energy_tables(&m).unwrap();
        ok &= t.m == xi_matrices(n);
        let half = q(1, 2);
        ok &= t.d.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, x)| *x == if i == j { q(n as i64 - 1, 2) } else { half.clone() }));
    }
    let detail = if misprints.is_empty() {
        "all reference M tables, basic integrals and D values match; n-hedron closed form for n = 3..10".to_string()
    } else {
        format!(
            "closed form (n = 3..10), basic integrals and D values match; reference tables differ from the generated ones in {} (see the ledger)",
            misprints.join(", ")
        )
    };
    (ok, detail)
}

fn c9_properties() -> Outcome {
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let models = [model("sg"), model("st"), model("sg3")];
    let mut rng = StdRng::seed_from_u64(2024);
    let mut ok = true;
    for case in 0..200 {
        let m = &models[case % 3];
        let depth = rng.gen_range(1..=3);
        let mut pool: Vec<VertexId> = m.graph(depth).vertices.iter().filter(|v| !v.is_boundary()).cloned().collect();
        pool.shuffle(&mut rng);
        let mut e: Vec<VertexId> = (0..m.n0()).map(VertexId::boundary).collect();
        e.extend(pool.into_iter().take(rng.gen_range(0..=12 - m.n0())));
        let vals: Vec<Q> = e.iter().map(|_| q(rng.gen_range(-30..=30), rng.gen_range(1..=7))).collect();
        let w = natural_weights(m, &e, Measure::SelfSimilar).unwrap();
        let quad: Q = w.weights.iter().zip(&vals).map(|(p, v)| p * v).sum();
        ok &= quad == solve_spline(m, &e, &vals).unwrap().integrate_mu(m);
        if case < 15 {
            let s = indicator_splines::<Q>(m, &e).unwrap();
            ok &= (0..s[0].values.len()).all(|x| s.iter().map(|sp| sp.values[x].clone()).sum::<Q>().is_one());
        }
    }
    // additivity and M_w against cell energies
    for m in &models {
        let t = energy_tables(m).unwrap();
        let n0 = m.n0();
        let a: Vec<Q> = (0..n0).map(|k| q(k as i64 + 1, 3)).collect();
        let b: Vec<Q> = (0..n0).map(|k| q(2 - k as i64, 5)).collect();
        let nu = decompose_pair(&a, &b);
        let f = HarmonicFunction { coeffs: (0..n0).map(|k| q((k * k) as i64, 2)).collect() };
        let mut words = vec![Word::empty()];
        for len in 1..=3 {
            words = words.iter().flat_map(|w| (0..m.n_maps()).map(move |i| w.push(i as u8))).collect();
            if len <= 2 {
                ok &= words.iter().map(|w| t.cell_integral(m, &f, w, &nu)).sum::<Q>() == t.integral(&f, &nu);
            }
            let one = HarmonicFunction { coeffs: vec![Q::one(); n0] };
            for w in &words {
                let (ra, rb) = (HarmonicFunction { coeffs: a.clone() }.restrict(m, w).coeffs, HarmonicFunction { coeffs: b.clone() }.restrict(m, w).coeffs);
                let plus: Vec<Q> = ra.iter().zip(&rb).map(|(x, y)| x + y).collect();
                let minus: Vec<Q> = ra.iter().zip(&rb).map(|(x, y)| x - y).collect();
                let mass = (m.spec.boundary_energy(&plus) - m.spec.boundary_energy(&minus)) / Q::from_integer(4.into()) / m.spec.r_word(w);
                ok &= t.cell_integral(m, &one, w, &nu) == mass;
            }
        }
    }
    // certified bounds dominate actual errors
    let m = &models[0];
    let g1 = g1_values(m, G1Path::GreenIdentity).unwrap();
    for extra in [&[][..], &["0:1"][..], &["01:2", "12:0", "20:1"][..]] {
        let ws = natural_weights(m, &set(m, extra), Measure::SelfSimilar).unwrap();
        for depth in 2..=6 {
            let ig = integral_g_v0(m, &g1);
            let mut cases = vec![(g_v0_values(m, depth, &g1), ig.clone(), KnownFactors { energy: Some(ig), laplacian_l1: Some(Q::one()) })];
            for k in 0..3 {
                let h = HarmonicFunction::basis(3, k);
                cases.push((h.values(m, depth), h.integral_mu(m), KnownFactors { energy: Some(h.energy(m)), laplacian_l1: Some(Q::zero()) }));
            }
            for (values, exact, known) in cases {
                let b = error_budget(m, BudgetRequest { ws: &ws, values: &values, depth, g1: &g1, r: None, holder_q: None, known }).unwrap();
                let err = q_to_f64(&(&b.quadrature - &exact).abs());
                ok &= b.bounds.iter().filter(|x| x.certified).all(|x| err <= x.value.unwrap() * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
    (ok, "200 random spline cases exact, partition of unity, additivity, M_w vs cell energies (|w| <= 3), certified bounds dominate (depth <= 6)".into())
}

fn c10_cli() -> Outcome {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_fraquad")).args(["verify-paper", "--scope", "all", "--format", "text"]).output().unwrap();
    let elapsed = t.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let documented = ["st.g1.midpoint", "st.v0.delta0_sq", "sg3.g1.side", "sg3.g1.center", "sg3.v0.delta0_sq", "sg3.v0.delta1"];
    let listed = documented.iter().all(|id| text.lines().any(|l| l.starts_with("paper-internal-conflict") && l.contains(id)));
    let summary = text.lines().last().unwrap_or("").to_string();
    (
        out.status.success() && elapsed < Duration::from_secs(120) && listed,
        format!("verify-paper --scope all: exit {:?} in {:.1} s; {summary}", out.status.code(), elapsed.as_secs_f64()),
    )
}

#[test]
fn acceptance_criteria() {
    let checks: [fn() -> Outcome; 10] = [c1_delta0, c2_delta1, c3_weights, c4_scaling, c5_tables, c6_audit, c7_sg3, c8_energy, c9_properties, c10_cli];
    let mut failed = Vec::new();
    for (i, check) in checks.iter().enumerate() {
        let outcome = check();
        line(i + 1, &outcome);
        if !outcome.0 {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "criteria not met: {failed:?}");
}
