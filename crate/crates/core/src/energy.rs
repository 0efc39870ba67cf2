//! Harmonic energy measures in the basis ν_jk = ν_{h_j,h_k} (j < k).

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fractal::{VertexId, Word};
use crate::harmonic::{HarmonicFunction, Model, Spline, SplineSystem};
use crate::linalg::{solve_unique, solve_unique_exact, Matrix};
use crate::rational::{qi, Q};

pub fn pairs(n0: usize) -> Vec<(usize, usize)> {
    (0..n0).flat_map(|j| (j + 1..n0).map(move |k| (j, k))).collect()
}

pub fn pair_index(n0: usize, j: usize, k: usize) -> usize {
    let (j, k) = (j.min(k), j.max(k));
    assert!(j != k && k < n0);
    // pairs before row j: Σ_{t<j} (n0 − 1 − t)
    j * (2 * n0 - j - 1) / 2 + (k - j - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSource {
    Coefficients,
    Pair { h: Vec<Q>, big_h: Vec<Q> },
    NuBasis(Vec<Q>),
    Kusuoka,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMeasure {
    pub coeffs: Vec<Q>,
    pub source: MeasureSource,
    /// Factor applied by [`EnergyMeasure::normalized`], 1 otherwise.
    pub scale: Q,
}

impl EnergyMeasure {
    pub fn from_coeffs(coeffs: Vec<Q>) -> Self {
        EnergyMeasure { coeffs, source: MeasureSource::Coefficients, scale: Q::one() }
    }

    pub fn basis(n0: usize, j: usize, k: usize) -> Self {
        let mut c = vec![Q::zero(); n0 * (n0 - 1) / 2];
        c[pair_index(n0, j, k)] = Q::one();
        Self::from_coeffs(c)
    }

    /// ν_h = ν_{h,h} for h = h_i.
    pub fn nu_i(n0: usize, i: usize) -> Self {
        let mut x = vec![Q::zero(); n0];
        x[i] = Q::one();
        Self::from_nu_basis(&x)
    }

    pub fn from_nu_basis(x: &[Q]) -> Self {
        EnergyMeasure { coeffs: nu_i_to_jk(x), source: MeasureSource::NuBasis(x.to_vec()), scale: Q::one() }
    }

    pub fn kusuoka(n0: usize) -> Self {
        let x = vec![Q::one(); n0];
        EnergyMeasure { coeffs: nu_i_to_jk(&x), source: MeasureSource::Kusuoka, scale: Q::one() }
    }

    /// ν(K) = Σ c_jk E(h_j, h_k) = −Σ c_jk c^{(0)}_jk.
    pub fn total_mass(&self, model: &Model) -> Q {
        let n0 = model.n0();
        pairs(n0).iter().enumerate().map(|(p, &(j, k))| -(&self.coeffs[p] * model.spec.conductance(j, k))).sum()
    }

    pub fn normalized(&self, model: &Model) -> Result<Self> {
        let m = self.total_mass(model);
        if m.is_zero() {
            return Err(Error::Degenerate("energy measure has zero total mass".into()));
        }
        Ok(EnergyMeasure {
            coeffs: self.coeffs.iter().map(|c| c / &m).collect(),
            source: self.source.clone(),
            scale: &self.scale / m,
        })
    }

    /// Known nonnegative: a pair (h, h), the Kusuoka sum, or a nonnegative ν_i combination.
    pub fn known_nonnegative(&self) -> bool {
        let s = !self.scale.is_negative();
        s && match &self.source {
            MeasureSource::Pair { h, big_h } => h == big_h,
            MeasureSource::Kusuoka => true,
            MeasureSource::NuBasis(x) => x.iter().all(|v| !v.is_negative()),
            MeasureSource::Coefficients => false,
        }
    }
}

/// c_jk = a_j b_k + a_k b_j − a_j b_j − a_k b_k for ν_{h,H}, h = Σ a h, H = Σ b h.
pub fn decompose_pair(a: &[Q], b: &[Q]) -> EnergyMeasure {
    assert_eq!(a.len(), b.len());
    let coeffs = pairs(a.len())
        .into_iter()
        .map(|(j, k)| &a[j] * &b[k] + &a[k] * &b[j] - &a[j] * &b[j] - &a[k] * &b[k])
        .collect();
    EnergyMeasure { coeffs, source: MeasureSource::Pair { h: a.to_vec(), big_h: b.to_vec() }, scale: Q::one() }
}

/// Σ x_i ν_i in the ν_jk basis, from ν_i = −Σ_{j≠i} ν_ij.
pub fn nu_i_to_jk(x: &[Q]) -> Vec<Q> {
    pairs(x.len()).into_iter().map(|(j, k)| -(&x[j] + &x[k])).collect()
}

/// Inverse of [`nu_i_to_jk`] where it exists (unique only for three boundary points).
pub fn jk_to_nu_i(c: &[Q], n0: usize) -> Result<Vec<Q>> {
    let ps = pairs(n0);
    if c.len() != ps.len() {
        return Err(Error::Invalid("coefficient vector has the wrong length".into()));
    }
    let mut a = Matrix::<Q>::zeros(ps.len(), n0);
    for (r, &(j, k)) in ps.iter().enumerate() {
        a[(r, j)] = qi(-1);
        a[(r, k)] = qi(-1);
    }
    solve_unique(&a, c).map_err(|e| Error::Unsupported(format!("no unique nu_i representation: {e}")))
}

/// (M_i)_{(jk),(lm)} = r_i⁻¹ [A_l j A_m k + A_m j A_l k − A_l j A_l k − A_m j A_m k] with A = A_i.
pub fn m_matrices(model: &Model) -> Vec<Matrix<Q>> {
    let n0 = model.n0();
    let ps = pairs(n0);
    model
        .ext
        .a
        .iter()
        .zip(&model.spec.r)
        .map(|(a, r)| {
            let inv = r.recip();
            let mut m = Matrix::zeros(ps.len(), ps.len());
            for (row, &(j, k)) in ps.iter().enumerate() {
                for (col, &(l, mm)) in ps.iter().enumerate() {
                    let v = &a[(l, j)] * &a[(mm, k)] + &a[(mm, j)] * &a[(l, k)] - &a[(l, j)] * &a[(l, k)] - &a[(mm, j)] * &a[(mm, k)];
                    m[(row, col)] = v * &inv;
                }
            }
            m
        })
        .collect()
}

/// Closed form for the Sierpiński n-hedron.
pub fn xi_matrices(n: usize) -> Vec<Matrix<Q>> {
    let xi = |a: usize, b: usize, c: usize| -> i64 {
        if a == b && b == c {
            n as i64 + 2
        } else if (a == b) ^ (a == c) {
            2
        } else if b == c {
            0
        } else {
            1
        }
    };
    let ps = pairs(n);
    let denom = Q::from_integer(((n * (n + 2)) as i64).into());
    (0..n)
        .map(|i| {
            let mut m = Matrix::zeros(ps.len(), ps.len());
            for (row, &(j, k)) in ps.iter().enumerate() {
                for (col, &(l, mm)) in ps.iter().enumerate() {
                    let v = xi(j, i, l) * xi(k, i, mm) + xi(j, i, mm) * xi(k, i, l) - xi(j, i, l) * xi(k, i, l) - xi(j, i, mm) * xi(k, i, mm);
                    m[(row, col)] = qi(v) / &denom;
                }
            }
            m
        })
        .collect()
}

pub fn m_word(m: &[Matrix<Q>], w: &Word) -> Matrix<Q> {
    let p = m.first().map_or(0, |x| x.rows);
    w.0.iter().fold(Matrix::identity(p), |acc, &i| acc.mul(&m[i as usize]))
}

#[derive(Clone, Debug)]
pub struct EnergyTables {
    pub m: Vec<Matrix<Q>>,
    /// basic[i][p] = ∫h_i dν_p, p a pair index.
    pub basic: Vec<Vec<Q>>,
    /// d[i][j] = ∫h_i dν_j.
    pub d: Vec<Vec<Q>>,
}

/// Solves ∫h_i dν_jk = Σ_l Σ_pq (M_l)_{jk,pq} Σ_n (A_l)_{n,i} ∫h_n dν_pq with Σ_i ∫h_i dν_jk = E(h_j,h_k).
pub fn basic_integrals(model: &Model, m: &[Matrix<Q>]) -> Result<Vec<Vec<Q>>> {
    let n0 = model.n0();
    let ps = pairs(n0);
    let np = ps.len();
    let unknown = |n: usize, p: usize| n * np + p;
    let nu = n0 * np;
    let mut a = Matrix::<Q>::zeros(nu + np, nu);
    let mut b = vec![Q::zero(); nu + np];
    for i in 0..n0 {
        for jk in 0..np {
            let row = unknown(i, jk);
            a[(row, row)] += Q::one();
            for (l, ml) in m.iter().enumerate() {
                let al = &model.ext.a[l];
                for pq in 0..np {
                    let mv = &ml[(jk, pq)];
                    if mv.is_zero() {
                        continue;
                    }
                    for n in 0..n0 {
                        let c = &al[(n, i)];
                        if !c.is_zero() {
                            a[(row, unknown(n, pq))] -= mv * c;
                        }
                    }
                }
            }
        }
    }
    for (jk, &(j, k)) in ps.iter().enumerate() {
        for i in 0..n0 {
            a[(nu + jk, unknown(i, jk))] = Q::one();
        }
        b[nu + jk] = -model.spec.conductance(j, k);
    }
    let x = solve_unique_exact(&a, &b).map_err(|e| match e {
        Error::Degenerate(s) => Error::Degenerate(format!("basic-integral system is rank deficient: {s}")),
        other => other,
    })?;
    Ok((0..n0).map(|i| x[i * np..(i + 1) * np].to_vec()).collect())
}

pub fn energy_tables(model: &Model) -> Result<EnergyTables> {
    let m = m_matrices(model);
    let basic = basic_integrals(model, &m)?;
    let n0 = model.n0();
    let d = (0..n0)
        .map(|i| (0..n0).map(|j| -(0..n0).filter(|&k| k != j).map(|k| basic[i][pair_index(n0, j, k)].clone()).sum::<Q>()).collect())
        .collect();
    Ok(EnergyTables { m, basic, d })
}

impl EnergyTables {
    /// Vector (∫h dν_pq)_pq for h with coefficient vector `v`.
    pub fn harmonic_vector(&self, v: &[Q]) -> Vec<Q> {
        let np = self.basic[0].len();
        (0..np).map(|p| v.iter().zip(&self.basic).map(|(a, row)| a * &row[p]).sum()).collect()
    }

    /// ∫_{F_w K} h dν = cᵀ M_w (∫ h∘F_w dν_pq)_pq.
    pub fn cell_integral(&self, model: &Model, h: &HarmonicFunction, w: &Word, nu: &EnergyMeasure) -> Q {
        let local = h.restrict(model, w);
        let row = m_word(&self.m, w).transpose().mul_vec(&nu.coeffs);
        row.iter().zip(self.harmonic_vector(&local.coeffs)).map(|(a, b)| a * b).sum()
    }

    pub fn integral(&self, h: &HarmonicFunction, nu: &EnergyMeasure) -> Q {
        nu.coeffs.iter().zip(self.harmonic_vector(&h.coeffs)).map(|(a, b)| a * b).sum()
    }

    /// κ[c][n] = ∫_{F_w K} h_n∘F_w⁻¹ dν for every depth-m cell w.
    pub fn cell_loads(&self, model: &Model, nu: &EnergyMeasure, m: usize) -> Vec<Vec<Q>> {
        let mut rows = vec![nu.coeffs.clone()];
        for _ in 0..m {
            rows = rows.iter().flat_map(|r| self.m.iter().map(move |mi| mi.transpose().mul_vec(r))).collect();
        }
        let n0 = model.n0();
        rows.iter()
            .map(|r| (0..n0).map(|n| r.iter().zip(&self.basic[n]).map(|(a, b)| a * b).sum()).collect())
            .collect()
    }

    pub fn vertex_loads(&self, model: &Model, nu: &EnergyMeasure, m: usize) -> Vec<Q> {
        let g = model.graph(m);
        let kappa = self.cell_loads(model, nu, m);
        let mut beta = vec![Q::zero(); g.len()];
        for (c, k) in kappa.iter().enumerate() {
            for (&x, v) in g.cell(c).iter().zip(k) {
                beta[x] += v;
            }
        }
        beta
    }

    pub fn integrate_spline(&self, model: &Model, spline: &Spline<Q>, nu: &EnergyMeasure) -> Q {
        let beta = self.vertex_loads(model, nu, spline.depth());
        spline.values.iter().zip(&beta).map(|(a, b)| a * b).sum()
    }

    /// p(x) = ∫v_x dν for x ∈ E, with warnings when ν is not known to be a measure.
    pub fn energy_weights(&self, model: &Model, set: &[VertexId], nu: &EnergyMeasure) -> Result<(Vec<Q>, Vec<String>)> {
        let sys = SplineSystem::<Q>::new(model, set)?;
        let p = sys.push(&self.vertex_loads(model, nu, sys.depth()));
        let mut warnings = Vec::new();
        if !nu.known_nonnegative() {
            warnings.push("energy measure is not known to be nonnegative; the error bounds assume a measure".to_string());
        }
        if p.iter().any(|x| x.is_negative()) {
            warnings.push("some weights are negative".to_string());
        }
        Ok((p, warnings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{interval, sierpinski_gasket};
    use crate::rational::q;

    #[test]
    fn pair_indexing() {
        let ps = pairs(5);
        for (i, &(j, k)) in ps.iter().enumerate() {
            assert_eq!(pair_index(5, j, k), i);
            assert_eq!(pair_index(5, k, j), i);
        }
    }

    #[test]
    fn interval_half() {
        let m = Model::new(interval()).unwrap();
        let ms = m_matrices(&m);
        assert_eq!(ms[0][(0, 0)], q(1, 2));
        assert_eq!(ms[1][(0, 0)], q(1, 2));
    }

    #[test]
    fn sg_tables() {
        let m = Model::new(sierpinski_gasket()).unwrap();
        let t = energy_tables(&m).unwrap();
        let m0: Vec<Vec<Q>> = [[6, 3, 0], [3, 6, 0], [-2, -2, 1]].iter().map(|r| r.iter().map(|&x| q(x, 15)).collect()).collect();
        assert_eq!(t.m[0].to_rows(), m0);
        for i in 0..3 {
            for (p, &(j, k)) in pairs(3).iter().enumerate() {
                let want = if i == j || i == k { q(-1, 2) } else { Q::zero() };
                assert_eq!(t.basic[i][p], want);
            }
            for j in 0..3 {
                assert_eq!(t.d[i][j], if i == j { qi(1) } else { q(1, 2) });
            }
        }
        assert_eq!(t.m, xi_matrices(3));
    }

    #[test]
    fn kusuoka_mass() {
        let m = Model::new(sierpinski_gasket()).unwrap();
        assert_eq!(EnergyMeasure::kusuoka(3).total_mass(&m), qi(6));
        let d = decompose_pair(&[qi(1), qi(0), qi(0)], &[qi(0), qi(1), qi(0)]);
        assert_eq!(jk_to_nu_i(&d.coeffs, 3).unwrap(), vec![q(-1, 2), q(-1, 2), q(1, 2)]);
    }
}
