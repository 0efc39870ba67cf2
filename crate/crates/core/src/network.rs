//! Weighted-graph Dirichlet problems by star-mesh elimination.
//!
//! Eliminating a vertex y with total conductance c_y replaces its star by a mesh
//! with conductances c_yz c_yz' / c_y (a Schur complement step). The recorded
//! steps give harmonic values by back substitution, and pushing a load vector
//! through the same steps gives the natural quadrature weights.

use std::collections::BTreeMap;

use crate::rational::Field;

#[derive(Clone, Debug)]
pub struct Network<S> {
    adj: Vec<BTreeMap<usize, S>>,
}

#[derive(Clone, Debug)]
struct Step<S> {
    vertex: usize,
    total: S,
    nbrs: Vec<(usize, S)>,
}

/// The eliminated steps, in order, plus the reduced network on the kept vertices.
#[derive(Clone, Debug)]
pub struct Elimination<S> {
    steps: Vec<Step<S>>,
    pub reduced: Network<S>,
}

impl<S: Field> Network<S> {
    pub fn new(n: usize) -> Self {
        Network { adj: vec![BTreeMap::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize, c: S) {
        if a == b || c.is_zero() {
            return;
        }
        let e = self.adj[a].entry(b).or_insert_with(S::zero);
        *e = e.clone() + c.clone();
        let e = self.adj[b].entry(a).or_insert_with(S::zero);
        *e = e.clone() + c;
    }

    pub fn conductance(&self, a: usize, b: usize) -> S {
        self.adj[a].get(&b).cloned().unwrap_or_else(S::zero)
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, &S)> {
        self.adj[a].iter().map(|(&k, v)| (k, v))
    }

    /// Eliminates `order` one vertex at a time. Vertices with no remaining edges are
    /// reported as `None` since the Dirichlet problem would be singular there.
    pub fn eliminate(mut self, order: &[usize]) -> Option<Elimination<S>> {
        let mut steps = Vec::with_capacity(order.len());
        for &y in order {
            let star = std::mem::take(&mut self.adj[y]);
            let total = star.values().fold(S::zero(), |a, c| a + c.clone());
            if total.is_zero() || (!S::EXACT && total.magnitude() == 0.0) {
                return None;
            }
            let nbrs: Vec<(usize, S)> = star.into_iter().collect();
            for (z, _) in &nbrs {
                self.adj[*z].remove(&y);
            }
            for (i, (z, cz)) in nbrs.iter().enumerate() {
                for (z2, cz2) in &nbrs[i + 1..] {
                    self.add_edge(*z, *z2, cz.clone() * cz2.clone() / total.clone());
                }
            }
            steps.push(Step { vertex: y, total, nbrs });
        }
        Some(Elimination { steps, reduced: self })
    }
}

impl<S: Field> Elimination<S> {
    /// Fills in eliminated vertices from the kept ones, in reverse elimination order.
    pub fn back_substitute(&self, values: &mut [S]) {
        for st in self.steps.iter().rev() {
            let acc = st.nbrs.iter().fold(S::zero(), |a, (z, c)| a + c.clone() * values[*z].clone());
            values[st.vertex] = acc / st.total.clone();
        }
    }

    /// Moves each eliminated vertex's load onto its neighbours at elimination time.
    /// Afterwards the kept entries hold the integrals of the kept vertices' splines.
    pub fn push_loads(&self, loads: &mut [S]) {
        for st in &self.steps {
            let b = std::mem::replace(&mut loads[st.vertex], S::zero());
            if b.is_zero() {
                continue;
            }
            for (z, c) in &st.nbrs {
                loads[*z] = loads[*z].clone() + b.clone() * c.clone() / st.total.clone();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi, Q};

    #[test]
    fn series_resistors() {
        // path 0 - 1 - 2 with unit conductances, 1 eliminated
        let mut n = Network::<Q>::new(3);
        n.add_edge(0, 1, qi(1));
        n.add_edge(1, 2, qi(1));
        let el = n.eliminate(&[1]).unwrap();
        assert_eq!(el.reduced.conductance(0, 2), q(1, 2));
        let mut v = vec![qi(1), qi(0), qi(0)];
        el.back_substitute(&mut v);
        assert_eq!(v[1], q(1, 2));
        let mut loads = vec![qi(0), qi(1), qi(0)];
        el.push_loads(&mut loads);
        assert_eq!(loads, vec![q(1, 2), qi(0), q(1, 2)]);
    }

    #[test]
    fn isolated_vertex_is_reported() {
        let n = Network::<Q>::new(2);
        assert!(n.eliminate(&[0]).is_none());
    }
}
