//! Dense linear algebra over exact rationals or f64.
//!
//! Large exact systems go through a multi-modular solve with rational
//! reconstruction; the candidate is always re-checked exactly before it is returned.

use std::ops::{Index, IndexMut};

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{Field, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Field> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn scale(&self, s: &S) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.clone() * s.clone()).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn map<T: Field>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

fn negligible<S: Field>(x: &S, scale: f64) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.magnitude() <= 1e-13 * scale
    }
}

/// Reduced row echelon form in place over the first `limit` columns; returns pivot columns.
pub fn rref<S: Field>(m: &mut Matrix<S>, limit: usize) -> Vec<usize> {
    let scale = (0..m.rows * m.cols).map(|k| m.data[k].magnitude()).fold(0.0, f64::max).max(1e-300);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..limit.min(m.cols) {
        if r == m.rows {
            break;
        }
        let pick = if S::EXACT {
            (r..m.rows).find(|&i| !m[(i, c)].is_zero())
        } else {
            (r..m.rows)
                .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()))
                .filter(|&i| !negligible(&m[(i, c)], scale))
        };
        let Some(p) = pick else { continue };
        m.swap_rows(r, p);
        let inv = S::one() / m[(r, c)].clone();
        for j in c..m.cols {
            m[(r, j)] = m[(r, j)].clone() * inv.clone();
        }
        for i in 0..m.rows {
            if i == r || m[(i, c)].is_zero() {
                continue;
            }
            let f = m[(i, c)].clone();
            for j in c..m.cols {
                if !m[(r, j)].is_zero() {
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                }
            }
            if !S::EXACT {
                m[(i, c)] = S::zero();
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<S: Field>(a: &Matrix<S>) -> usize {
    let mut m = a.clone();
    rref(&mut m, a.cols).len()
}

/// Basis of the right nullspace.
pub fn nullspace<S: Field>(a: &Matrix<S>) -> Vec<Vec<S>> {
    let mut m = a.clone();
    let pivots = rref(&mut m, a.cols);
    let free: Vec<usize> = (0..a.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); a.cols];
            v[f] = S::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[(r, f)].clone();
            }
            v
        })
        .collect()
}

fn augmented<S: Field>(a: &Matrix<S>, b: &[S]) -> Matrix<S> {
    assert_eq!(a.rows, b.len());
    let mut m = Matrix::zeros(a.rows, a.cols + 1);
    for i in 0..a.rows {
        for j in 0..a.cols {
            m[(i, j)] = a[(i, j)].clone();
        }
        m[(i, a.cols)] = b[i].clone();
    }
    m
}

/// Unique solution of a (possibly overdetermined) consistent system.
pub fn solve_unique<S: Field>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    let mut m = augmented(a, b);
    let pivots = rref(&mut m, a.cols + 1);
    if pivots.last() == Some(&a.cols) {
        return Err(Error::Singular("inconsistent linear system".into()));
    }
    if pivots.len() < a.cols {
        return Err(Error::Degenerate(format!("rank {} < {} unknowns", pivots.len(), a.cols)));
    }
    Ok((0..a.cols).map(|r| m[(r, a.cols)].clone()).collect())
}

pub fn solve<S: Field>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    if a.rows != a.cols {
        return Err(Error::Invalid(format!("solve expects a square matrix, got {}x{}", a.rows, a.cols)));
    }
    solve_unique(a, b)
}

pub fn inverse<S: Field>(a: &Matrix<S>) -> Result<Matrix<S>> {
    if a.rows != a.cols {
        return Err(Error::Invalid("inverse of a non-square matrix".into()));
    }
    let n = a.rows;
    let mut m = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(i, j)].clone();
        }
        m[(i, n + i)] = S::one();
    }
    let pivots = rref(&mut m, n);
    if pivots.len() < n {
        return Err(Error::Singular(format!("matrix of size {n} has rank {}", pivots.len())));
    }
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] = m[(i, n + j)].clone();
        }
    }
    Ok(inv)
}

// ---------- multi-modular exact solve ----------

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn primes_below(mut start: u64) -> impl Iterator<Item = u64> {
    std::iter::from_fn(move || {
        while start > 2 {
            start -= 1;
            if is_prime_u64(start) {
                return Some(start);
            }
        }
        None
    })
}

enum ModOutcome {
    Solution(Vec<u64>),
    RankDeficient,
    Inconsistent,
}

fn solve_mod(rows: &[Vec<BigInt>], cols: usize, p: u64) -> ModOutcome {
    let pb = BigInt::from(p);
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.mod_floor(&pb).to_u64().unwrap()).collect())
        .collect();
    let n = m.len();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..n).find(|&i| m[i][c] != 0) else {
            return ModOutcome::RankDeficient;
        };
        m.swap(r, piv);
        let inv = pow_mod(m[r][c], p - 2, p);
        for j in c..=cols {
            m[r][j] = mul_mod(m[r][j], inv, p);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for j in c..=cols {
                if pivot_row[j] != 0 {
                    row[j] = (row[j] + p - mul_mod(f, pivot_row[j], p)) % p;
                }
            }
        }
        r += 1;
    }
    if m[r..].iter().any(|row| row[cols] != 0) {
        return ModOutcome::Inconsistent;
    }
    ModOutcome::Solution((0..cols).map(|i| m[i][cols]).collect())
}

/// Rational reconstruction of `a` modulo `m` with |num|, den below sqrt(m/2).
fn reconstruct(a: &BigInt, m: &BigInt) -> Option<Q> {
    let bound: BigInt = (m / 2u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let qt = &r0 / &r1;
        let r2 = &r0 - &qt * &r1;
        let t2 = &t0 - &qt * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    let x = Q::new(r1, t1);
    (x.denom().gcd(m).is_one()).then_some(x)
}

/// Exact unique solution of `a x = b` for larger rational systems.
///
/// Full column rank modulo one prime certifies uniqueness over Q; the reconstructed
/// candidate is verified exactly, so the answer never depends on luck. Systems the
/// modular path cannot settle fall back to rational elimination.
pub fn solve_unique_exact(a: &Matrix<Q>, b: &[Q]) -> Result<Vec<Q>> {
    if a.cols <= 40 {
        return solve_unique(a, b);
    }
    let rows: Vec<Vec<BigInt>> = (0..a.rows)
        .map(|i| {
            let lcm = a.row(i).iter().chain(std::iter::once(&b[i])).fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            a.row(i)
                .iter()
                .chain(std::iter::once(&b[i]))
                .map(|x| (x * Q::from_integer(lcm.clone())).to_integer())
                .collect()
        })
        .collect();
    let mut modulus = BigInt::one();
    let mut residues: Vec<BigInt> = vec![BigInt::zero(); a.cols];
    let mut previous: Option<Vec<Q>> = None;
    let mut failures = 0;
    for p in primes_below(1u64 << 62).take(400) {
        let sol = match solve_mod(&rows, a.cols, p) {
            ModOutcome::Solution(s) => s,
            ModOutcome::RankDeficient | ModOutcome::Inconsistent => {
                failures += 1;
                if failures >= 3 {
                    break;
                }
                continue;
            }
        };
        // CRT merge
        let pb = BigInt::from(p);
        let m_inv = BigInt::from(pow_mod((&modulus % &pb).to_u64().unwrap(), p - 2, p));
        for (res, s) in residues.iter_mut().zip(&sol) {
            let diff = (BigInt::from(*s) - &*res).mod_floor(&pb);
            let t = (diff * &m_inv).mod_floor(&pb);
            *res += &modulus * t;
        }
        modulus *= &pb;
        let cand: Option<Vec<Q>> = residues.iter().map(|r| reconstruct(r, &modulus)).collect();
        if let Some(c) = cand {
            if previous.as_ref() == Some(&c) && a.mul_vec(&c).as_slice() == b {
                return Ok(c);
            }
            previous = Some(c);
        }
    }
    solve_unique(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn qm(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect())
    }

    #[test]
    fn inverse_roundtrip() {
        let a = qm(&[&[4, -1, -1], &[-1, 4, -1], &[-1, -1, 4]]);
        let inv = inverse(&a).unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(3));
        assert_eq!(inv[(0, 0)], q(3, 10));
    }

    #[test]
    fn singular_detected() {
        let a = qm(&[&[1, 2], &[2, 4]]);
        assert!(inverse(&a).is_err());
        assert_eq!(rank(&a), 1);
        let ns = nullspace(&a);
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn overdetermined() {
        let a = qm(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(solve_unique(&a, &[qi(1), qi(2), qi(3)]).unwrap(), vec![qi(1), qi(2)]);
        assert!(solve_unique(&a, &[qi(1), qi(2), qi(4)]).is_err());
    }

    #[test]
    fn float_path_pivots() {
        let a = Matrix::from_rows(vec![vec![1e-20, 1.0], vec![1.0, 1.0]]);
        let x = solve(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modular_agrees_with_elimination() {
        // diagonally dominant 60x60 with small rational entries
        let n = 60;
        let mut a = Matrix::<Q>::zeros(n + 3, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = if i == j { qi(50) } else { q(((i * 7 + j * 3) % 5) as i64 - 2, 1 + (i + j) as i64 % 4) };
            }
        }
        let x_true: Vec<Q> = (0..n).map(|i| q(i as i64 - 17, 1 + (i % 6) as i64)).collect();
        for k in 0..3 {
            for j in 0..n {
                a[(n + k, j)] = a[(k, j)].clone() + a[(k + 1, j)].clone();
            }
        }
        let b = a.mul_vec(&x_true);
        assert_eq!(solve_unique_exact(&a, &b).unwrap(), x_true);
        assert_eq!(solve_unique(&a, &b).unwrap(), x_true);
    }

    #[test]
    fn primality() {
        assert!(is_prime_u64(2_305_843_009_213_693_951));
        assert!(!is_prime_u64(2_305_843_009_213_693_953));
    }
}
