//! Products of harmonic functions and the level-1 Green data used to seed g_{V₀}.

use num::Zero;

use crate::error::{Error, Result};
use crate::fractal::VertexId;
use crate::harmonic::Model;
use crate::linalg::{inverse, nullspace, solve_unique_exact, Matrix};
use crate::rational::Q;

#[derive(Clone, Debug)]
pub struct MultiharmonicTables {
    /// A((k,k'),(n,n')), pairs in lexicographic order.
    pub a: Matrix<Q>,
    /// I(k,k') = ∫h_k h_k' dμ.
    pub i: Vec<Q>,
    /// V₁ \ V₀ in canonical order; rows and columns of X and G.
    pub interior: Vec<VertexId>,
    pub x: Matrix<Q>,
    pub g: Matrix<Q>,
    /// f1[k][v] for every vertex v of Γ₁.
    pub f1: Vec<Vec<Q>>,
    /// −Σ_k f1[k] on Γ₁.
    pub g1: Vec<Q>,
    /// Σ_q G_pq ∫ψ_q dμ on Γ₁, computed without f1.
    pub g1_check: Vec<Q>,
}

pub fn gram_matrix_a(model: &Model) -> Matrix<Q> {
    let nb = model.n0();
    let mut a = Matrix::zeros(nb * nb, nb * nb);
    for (i, ai) in model.ext.a.iter().enumerate() {
        let mu = &model.spec.mu[i];
        for k in 0..nb {
            for k2 in 0..nb {
                for n in 0..nb {
                    for n2 in 0..nb {
                        a[(k * nb + k2, n * nb + n2)] += mu * &ai[(n, k)] * &ai[(n2, k2)];
                    }
                }
            }
        }
    }
    a
}

/// The eigenvector of A for eigenvalue 1, normalized to total sum 1.
pub fn harmonic_gram_i(a: &Matrix<Q>) -> Result<Vec<Q>> {
    let n = a.rows;
    let shifted = a.sub(&Matrix::identity(n));
    if n <= 64 {
        let ns = nullspace(&shifted);
        if ns.len() != 1 {
            return Err(Error::Degenerate(format!("eigenvalue 1 of A has a {}-dimensional eigenspace", ns.len())));
        }
        let s: Q = ns[0].iter().sum();
        if s.is_zero() {
            return Err(Error::Degenerate("eigenvector of A has zero sum".into()));
        }
        return Ok(ns[0].iter().map(|x| x / &s).collect());
    }
    // append the normalization row; full column rank certifies a one-dimensional eigenspace
    let mut stacked = Matrix::zeros(n + 1, n);
    for r in 0..n {
        for c in 0..n {
            stacked[(r, c)] = shifted[(r, c)].clone();
        }
    }
    for c in 0..n {
        stacked[(n, c)] = Q::from_integer(1.into());
    }
    let mut rhs = vec![Q::zero(); n + 1];
    rhs[n] = Q::from_integer(1.into());
    solve_unique_exact(&stacked, &rhs)
}

/// X_pq = E(v_p, v_q) for the interior indicator 1-splines: the interior block of the Γ₁ Laplacian.
pub fn spline_energy_matrix_x(model: &Model) -> Matrix<Q> {
    let g = model.graph(1);
    let nb = model.n0();
    let n = g.len() - nb;
    let mut x = Matrix::zeros(n, n);
    for (a, b, c) in g.edges(&model.spec) {
        if a >= nb {
            x[(a - nb, a - nb)] += &c;
        }
        if b >= nb {
            x[(b - nb, b - nb)] += &c;
        }
        if a >= nb && b >= nb {
            x[(a - nb, b - nb)] -= &c;
            x[(b - nb, a - nb)] -= &c;
        }
    }
    x
}

pub fn multiharmonic_tables(model: &Model) -> Result<MultiharmonicTables> {
    let nb = model.n0();
    let g1 = model.graph(1);
    let a = gram_matrix_a(model);
    let i = harmonic_gram_i(&a)?;
    let x = spline_energy_matrix_x(model);
    let g = inverse(&x)?;
    let nv = g1.len();
    let interior: Vec<VertexId> = g1.vertices[nb..].to_vec();

    // f_{1k}(p) = −Σ_{(i',n') interior} G[p, F_i' q_n'] μ_i' Σ_k' I(k',n') h_k(F_i' q_k')
    let mut f1 = vec![vec![Q::zero(); nv]; nb];
    for (k, fk) in f1.iter_mut().enumerate() {
        for (i2, a2) in model.ext.a.iter().enumerate() {
            for n2 in 0..nb {
                let q_idx = g1.pattern[i2 * nb + n2];
                if q_idx < nb {
                    continue;
                }
                let weight: Q = (0..nb).map(|k2| &i[k2 * nb + n2] * &a2[(k2, k)]).sum::<Q>() * &model.spec.mu[i2];
                if weight.is_zero() {
                    continue;
                }
                for p in nb..nv {
                    fk[p] -= &g[(p - nb, q_idx - nb)] * &weight;
                }
            }
        }
    }
    let mut g1v = vec![Q::zero(); nv];
    for fk in &f1 {
        for (s, v) in g1v.iter_mut().zip(fk) {
            *s -= v;
        }
    }
    let beta = model.hat_integrals(1);
    let mut check = vec![Q::zero(); nv];
    for p in nb..nv {
        check[p] = (nb..nv).map(|q| &g[(p - nb, q - nb)] * &beta[q]).sum();
    }
    Ok(MultiharmonicTables { a, i, interior, x, g, f1, g1: g1v, g1_check: check })
}

/// g_{V₀} on Γ₁ by the Green identity alone (no f1 table).
pub fn green_identity_g1(model: &Model) -> Result<Vec<Q>> {
    let nb = model.n0();
    let g = inverse(&spline_energy_matrix_x(model))?;
    let beta = model.hat_integrals(1);
    let nv = beta.len();
    let mut out = vec![Q::zero(); nv];
    for p in nb..nv {
        out[p] = (nb..nv).map(|q| &g[(p - nb, q - nb)] * &beta[q]).sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{sg3, sierpinski_gasket, sierpinski_tetrahedron};
    use crate::rational::{q, qi};

    #[test]
    fn sg_tables() {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let t = multiharmonic_tables(&m).unwrap();
        assert_eq!(t.a.mul_vec(&t.i), t.i);
        assert_eq!(t.x.mul(&t.g), Matrix::identity(3));
        assert_eq!(t.x[(0, 0)], q(20, 3));
        assert_eq!(t.x[(0, 1)], q(-5, 3));
        for p in 3..6 {
            assert_eq!(t.g1[p], q(1, 15));
            assert_eq!(t.g1_check[p], q(1, 15));
        }
        let g = m.graph(1);
        let f = |k: usize, s: &str| t.f1[k][g.vertex_index(&m.spec.parse_vertex(s).unwrap()).unwrap()].clone();
        assert_eq!(f(0, "1:0"), q(-9, 375)); // F_1 q_0, i != k
        assert_eq!(f(0, "1:2"), q(-7, 375)); // all distinct
    }

    #[test]
    fn st_and_sg3_i() {
        let st = Model::new(sierpinski_tetrahedron()).unwrap();
        let t = multiharmonic_tables(&st).unwrap();
        assert_eq!(t.i[0], q(7, 80));
        assert_eq!(t.i[1], q(13, 240));
        assert_eq!(t.a[(0, 0)], q(48, 144));
        assert_eq!(t.x[(0, 0)], qi(9));
        assert_eq!(t.g[(0, 0)], q(10, 72));
        let s3 = Model::new(sg3()).unwrap();
        let t = multiharmonic_tables(&s3).unwrap();
        assert_eq!(t.i[0], q(551, 3735));
        assert_eq!(t.i[1], q(347, 3735));
        assert_eq!(t.a[(0, 0)], q(410, 1350));
    }
}
