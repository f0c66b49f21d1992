//! Vertex cover and multicut on trees as covering instances.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::instance::{index_ids, SetCoverInstance};
use super::oracle::ExplicitOracle;
use super::scenario::{ExplicitDistribution, Scenario};

#[derive(Debug, Clone)]
pub struct Graph<T> {
    /// `(id, stage-I cost)`
    pub vertices: Vec<(String, T)>,
    pub edges: Vec<(String, String)>,
}

/// Active edges (indices into `Graph::edges`) with per-vertex stage-II costs.
#[derive(Debug, Clone)]
pub struct EdgeScenario<T> {
    pub edges: Vec<usize>,
    pub w2: Vec<T>,
    pub p: T,
}

fn inflation<T: Scalar>(w1: &[T], scenarios: impl Iterator<Item = impl AsRef<[T]>>) -> Result<T> {
    let mut lambda = T::one();
    for w2 in scenarios {
        for (k, (&a, &b)) in w2.as_ref().iter().zip(w1).enumerate() {
            if a > T::zero() && b == T::zero() {
                return Err(Error::InvalidParameter(format!("action #{k} is free in stage I but not in stage II")));
            }
            if b > T::zero() {
                lambda = lambda.max(a / b);
            }
        }
    }
    Ok(lambda)
}

/// Elements are edges, sets are vertices; a vertex covers its incident edges.
pub fn reduce_vertex_cover<T: Scalar>(
    g: &Graph<T>,
    scenarios: &[EdgeScenario<T>],
    budget: T,
) -> Result<(SetCoverInstance<T>, ExplicitOracle<T>)> {
    let vids: Vec<String> = g.vertices.iter().map(|(v, _)| v.clone()).collect();
    let vidx = index_ids(&vids)?;
    let mut members = vec![Vec::new(); vids.len()];
    let mut element_ids = Vec::with_capacity(g.edges.len());
    for (k, (u, v)) in g.edges.iter().enumerate() {
        let a = *vidx.get(u).ok_or_else(|| Error::UnknownId(format!("edge endpoint `{u}`")))?;
        let b = *vidx.get(v).ok_or_else(|| Error::UnknownId(format!("edge endpoint `{v}`")))?;
        members[a].push(k);
        members[b].push(k);
        element_ids.push(format!("{u}-{v}"));
    }
    let w1: Vec<T> = g.vertices.iter().map(|(_, w)| *w).collect();
    let lambda = inflation(&w1, scenarios.iter().map(|s| s.w2.as_slice()))?;
    let sets = vids.into_iter().zip(members).zip(&w1).map(|((id, m), &w)| (id, m, w)).collect();
    let inst = SetCoverInstance::new(element_ids, sets, lambda, budget)?;
    let mut entries = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        if let Some(&e) = s.edges.iter().find(|&&e| e >= g.edges.len()) {
            return Err(Error::UnknownId(format!("edge #{e}")));
        }
        if s.w2.len() != w1.len() {
            return Err(Error::InvalidParameter("edge scenario needs one stage-II cost per vertex".into()));
        }
        entries.push((Scenario::new(s.edges.clone(), s.w2.clone(), None), s.p));
    }
    Ok((inst, ExplicitOracle::new(ExplicitDistribution::new(entries)?)))
}

#[derive(Debug, Clone)]
pub struct Tree<T> {
    pub vertices: Vec<String>,
    /// `(u, v, stage-I cost)`
    pub edges: Vec<(String, String, T)>,
}

/// Terminal pairs to separate, with per-edge stage-II costs.
#[derive(Debug, Clone)]
pub struct PairScenario<T> {
    pub pairs: Vec<(String, String)>,
    pub w2: Vec<T>,
    pub p: T,
}

impl<T: Scalar> Tree<T> {
    /// Edge indices on the unique path between `s` and `t`.
    pub fn path(&self, s: &str, t: &str) -> Result<Vec<usize>> {
        let vidx = index_ids(&self.vertices)?;
        let si = *vidx.get(s).ok_or_else(|| Error::UnknownId(s.to_string()))?;
        let ti = *vidx.get(t).ok_or_else(|| Error::UnknownId(t.to_string()))?;
        let adj = self.adjacency(&vidx)?;
        let mut via: Vec<Option<(usize, usize)>> = vec![None; self.vertices.len()];
        let mut seen = vec![false; self.vertices.len()];
        seen[si] = true;
        let mut queue = VecDeque::from([si]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    via[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        if !seen[ti] {
            return Err(Error::InvalidParameter(format!("`{s}` and `{t}` are not connected")));
        }
        let mut out = Vec::new();
        let mut cur = ti;
        while let Some((prev, e)) = via[cur] {
            out.push(e);
            cur = prev;
        }
        out.sort_unstable();
        Ok(out)
    }

    fn adjacency(&self, vidx: &HashMap<String, usize>) -> Result<Vec<Vec<(usize, usize)>>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (k, (u, v, _)) in self.edges.iter().enumerate() {
            let a = *vidx.get(u).ok_or_else(|| Error::UnknownId(u.clone()))?;
            let b = *vidx.get(v).ok_or_else(|| Error::UnknownId(v.clone()))?;
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        Ok(adj)
    }

    fn check(&self) -> Result<()> {
        let vidx = index_ids(&self.vertices)?;
        let adj = self.adjacency(&vidx)?;
        if self.vertices.is_empty() {
            return Ok(());
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(Error::InvalidParameter("a tree on k vertices has k - 1 edges".into()));
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("tree is not connected".into()));
        }
        Ok(())
    }
}

/// Elements are the terminal pairs occurring in any scenario, sets are tree
/// edges; an edge covers a pair iff it lies on the pair's path.
pub fn reduce_tree_multicut<T: Scalar>(
    tree: &Tree<T>,
    scenarios: &[PairScenario<T>],
    budget: T,
) -> Result<(SetCoverInstance<T>, ExplicitOracle<T>)> {
    tree.check()?;
    let norm = |a: &str, b: &str| if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
    let mut pairs = BTreeSet::new();
    for s in scenarios {
        for (a, b) in &s.pairs {
            if a == b {
                return Err(Error::InvalidParameter(format!("degenerate pair ({a}, {b})")));
            }
            pairs.insert(norm(a, b));
        }
    }
    let pairs: Vec<(String, String)> = pairs.into_iter().collect();
    let mut members = vec![Vec::new(); tree.edges.len()];
    for (k, (a, b)) in pairs.iter().enumerate() {
        for e in tree.path(a, b)? {
            members[e].push(k);
        }
    }
    let w1: Vec<T> = tree.edges.iter().map(|e| e.2).collect();
    let lambda = inflation(&w1, scenarios.iter().map(|s| s.w2.as_slice()))?;
    let element_ids = pairs.iter().map(|(a, b)| format!("{a}|{b}")).collect();
    let sets = tree
        .edges
        .iter()
        .zip(members)
        .map(|((u, v, w), m)| (format!("{u}-{v}"), m, *w))
        .collect();
    let inst = SetCoverInstance::new(element_ids, sets, lambda, budget)?;
    let pos: HashMap<(String, String), usize> = pairs.iter().cloned().enumerate().map(|(k, p)| (p, k)).collect();
    let mut entries = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        if s.w2.len() != w1.len() {
            return Err(Error::InvalidParameter("pair scenario needs one stage-II cost per edge".into()));
        }
        let active = s.pairs.iter().map(|(a, b)| pos[&norm(a, b)]).collect();
        entries.push((Scenario::new(active, s.w2.clone(), None), s.p));
    }
    Ok((inst, ExplicitOracle::new(ExplicitDistribution::new(entries)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &str) -> String {
        v.to_string()
    }

    #[test]
    fn triangle_vertex_cover() {
        let g = Graph {
            vertices: vec![(s("a"), 1.0), (s("b"), 1.0), (s("c"), 1.0)],
            edges: vec![(s("a"), s("b")), (s("b"), s("c")), (s("a"), s("c"))],
        };
        let sc = [EdgeScenario { edges: vec![0, 1, 2], w2: vec![2.0; 3], p: 1.0 }];
        let (inst, _) = reduce_vertex_cover(&g, &sc, 1.0).unwrap();
        assert_eq!((inst.n(), inst.m()), (3, 3));
        assert!(inst.members.iter().all(|m| m.len() == 2));
        assert_eq!(inst.lambda, 2.0);
    }

    #[test]
    fn bad_endpoint() {
        let g = Graph { vertices: vec![(s("a"), 1.0)], edges: vec![(s("a"), s("z"))] };
        assert!(matches!(reduce_vertex_cover(&g, &[], 0.0), Err(Error::UnknownId(_))));
    }

    #[test]
    fn path_and_star_multicut() {
        let path = Tree { vertices: vec![s("a"), s("b"), s("c")], edges: vec![(s("a"), s("b"), 1.0), (s("b"), s("c"), 1.0)] };
        let sc = [PairScenario { pairs: vec![(s("a"), s("c"))], w2: vec![1.0, 1.0], p: 1.0 }];
        let (inst, _) = reduce_tree_multicut(&path, &sc, 0.0).unwrap();
        assert_eq!(inst.covering(0), &[0, 1]);

        let star = Tree {
            vertices: vec![s("h"), s("x"), s("y"), s("z")],
            edges: vec![(s("h"), s("x"), 1.0), (s("h"), s("y"), 1.0), (s("h"), s("z"), 1.0)],
        };
        let pairs = vec![(s("x"), s("y")), (s("y"), s("z")), (s("x"), s("z"))];
        let sc = [PairScenario { pairs, w2: vec![1.0; 3], p: 1.0 }];
        let (inst, _) = reduce_tree_multicut(&star, &sc, 0.0).unwrap();
        assert!((0..3).all(|e| inst.covering(e).len() == 2));

        let bad = [PairScenario { pairs: vec![(s("a"), s("a"))], w2: vec![1.0, 1.0], p: 1.0 }];
        assert!(reduce_tree_multicut(&path, &bad, 0.0).is_err());
        let unknown = [PairScenario { pairs: vec![(s("a"), s("q"))], w2: vec![1.0, 1.0], p: 1.0 }];
        assert!(reduce_tree_multicut(&path, &unknown, 0.0).is_err());
    }
}
