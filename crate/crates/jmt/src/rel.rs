//! Finite binary relations over ordered element types.
//!
//! Backed by a `BTreeSet` of pairs so iteration order — and therefore every
//! downstream enumeration — is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A binary relation over `T`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation<T: Ord + Clone> {
    pairs: BTreeSet<(T, T)>,
}

impl<T: Ord + Clone> Default for Relation<T> {
    fn default() -> Self {
        Relation::new()
    }
}

impl<T: Ord + Clone> Relation<T> {
    pub fn new() -> Self {
        Relation { pairs: BTreeSet::new() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Self {
        Relation { pairs: pairs.into_iter().collect() }
    }

    /// Identity relation on `universe`.
    pub fn identity(universe: impl IntoIterator<Item = T>) -> Self {
        Relation::from_pairs(universe.into_iter().map(|x| (x.clone(), x)))
    }

    /// Full cartesian product `a * b`.
    pub fn cross(
        a: impl IntoIterator<Item = T> + Clone,
        b: impl IntoIterator<Item = T> + Clone,
    ) -> Self {
        let bs: Vec<T> = b.into_iter().collect();
        let mut pairs = BTreeSet::new();
        for x in a {
            for y in &bs {
                pairs.insert((x.clone(), y.clone()));
            }
        }
        Relation { pairs }
    }

    pub fn insert(&mut self, from: T, to: T) -> bool {
        self.pairs.insert((from, to))
    }

    pub fn contains(&self, from: &T, to: &T) -> bool {
        // avoid cloning: range query on the pair
        self.pairs.contains(&(from.clone(), to.clone()))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(T, T)> {
        self.pairs.iter()
    }

    pub fn union(&self, other: &Self) -> Self {
        Relation { pairs: self.pairs.union(&other.pairs).cloned().collect() }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Relation { pairs: self.pairs.intersection(&other.pairs).cloned().collect() }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Relation { pairs: self.pairs.difference(&other.pairs).cloned().collect() }
    }

    pub fn inverse(&self) -> Self {
        Relation {
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut by_from: BTreeMap<&T, Vec<&T>> = BTreeMap::new();
        for (a, b) in &other.pairs {
            by_from.entry(a).or_default().push(b);
        }
        let mut out = BTreeSet::new();
        for (a, b) in &self.pairs {
            if let Some(cs) = by_from.get(b) {
                for c in cs {
                    out.insert((a.clone(), (*c).clone()));
                }
            }
        }
        Relation { pairs: out }
    }

    pub fn domain(&self) -> BTreeSet<T> {
        self.pairs.iter().map(|(a, _)| a.clone()).collect()
    }

    pub fn range(&self) -> BTreeSet<T> {
        self.pairs.iter().map(|(_, b)| b.clone()).collect()
    }

    /// Successors of `x` under the relation.
    pub fn image(&self, x: &T) -> BTreeSet<T> {
        self.pairs
            .iter()
            .filter(|(a, _)| a == x)
            .map(|(_, b)| b.clone())
            .collect()
    }

    /// Predecessors of `x` under the relation.
    pub fn preimage(&self, x: &T) -> BTreeSet<T> {
        self.pairs
            .iter()
            .filter(|(_, b)| b == x)
            .map(|(a, _)| a.clone())
            .collect()
    }

    /// Restrict both sides to `set`.
    pub fn restrict(&self, set: &BTreeSet<T>) -> Self {
        Relation {
            pairs: self
                .pairs
                .iter()
                .filter(|(a, b)| set.contains(a) && set.contains(b))
                .cloned()
                .collect(),
        }
    }

    /// Keep pairs whose source satisfies `p` and target satisfies `q`
    /// (`[P] ; self ; [Q]` in cat notation).
    pub fn filter_sides(&self, p: impl Fn(&T) -> bool, q: impl Fn(&T) -> bool) -> Self {
        Relation {
            pairs: self
                .pairs
                .iter()
                .filter(|(a, b)| p(a) && q(b))
                .cloned()
                .collect(),
        }
    }

    /// Transitive closure (`r^+`).
    pub fn transitive_closure(&self) -> Self {
        let mut cur = self.clone();
        loop {
            let step = cur.compose(self);
            let next = cur.union(&step);
            if next.len() == cur.len() {
                return next;
            }
            cur = next;
        }
    }

    /// Reflexive-transitive closure over `universe` (`r^*`). The universe
    /// matters: reflexivity is added for every element of it, including
    /// elements not mentioned by the relation.
    pub fn reflexive_transitive_closure(&self, universe: impl IntoIterator<Item = T>) -> Self {
        self.transitive_closure().union(&Relation::identity(universe))
    }

    pub fn is_irreflexive(&self) -> bool {
        self.pairs.iter().all(|(a, b)| a != b)
    }

    pub fn is_acyclic(&self) -> bool {
        self.transitive_closure().is_irreflexive()
    }

    pub fn is_transitive(&self) -> bool {
        self.compose(self).pairs.is_subset(&self.pairs)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Transitive reduction. Only meaningful for acyclic relations: removes
    /// every pair implied by a longer path.
    pub fn transitive_reduction(&self) -> Self {
        debug_assert!(self.is_acyclic());
        let closure = self.transitive_closure();
        let mut out = BTreeSet::new();
        for (a, b) in &self.pairs {
            // (a, b) is redundant if a reaches b through some intermediate c
            let redundant = closure
                .pairs
                .iter()
                .any(|(x, c)| x == a && c != b && closure.contains(c, b));
            if !redundant {
                out.insert((a.clone(), b.clone()));
            }
        }
        Relation { pairs: out }
    }

    /// All linear extensions of the relation restricted to `set`, returned as
    /// total (strict) orders on `set`. Empty result means the restriction has
    /// a cycle.
    pub fn linearisations(&self, set: &BTreeSet<T>) -> Vec<Relation<T>> {
        let base = self.restrict(set).transitive_closure();
        if !base.is_irreflexive() {
            return Vec::new();
        }
        let mut result = Vec::new();
        let mut prefix: Vec<T> = Vec::new();
        let mut remaining: Vec<T> = set.iter().cloned().collect();
        Self::linearise_rec(&base, &mut prefix, &mut remaining, &mut result);
        result
    }

    fn linearise_rec(
        base: &Relation<T>,
        prefix: &mut Vec<T>,
        remaining: &mut Vec<T>,
        result: &mut Vec<Relation<T>>,
    ) {
        if remaining.is_empty() {
            let mut rel = Relation::new();
            for i in 0..prefix.len() {
                for j in (i + 1)..prefix.len() {
                    rel.insert(prefix[i].clone(), prefix[j].clone());
                }
            }
            result.push(rel);
            return;
        }
        for i in 0..remaining.len() {
            // minimal elements only: nothing still remaining may precede it
            let candidate = remaining[i].clone();
            if remaining.iter().any(|r| *r != candidate && base.contains(r, &candidate)) {
                continue;
            }
            let x = remaining.remove(i);
            prefix.push(x);
            Self::linearise_rec(base, prefix, remaining, result);
            let x = prefix.pop().unwrap();
            remaining.insert(i, x);
        }
    }
}

impl<T: Ord + Clone> FromIterator<(T, T)> for Relation<T> {
    fn from_iter<I: IntoIterator<Item = (T, T)>>(iter: I) -> Self {
        Relation::from_pairs(iter)
    }
}

impl<T: Ord + Clone + fmt::Display> fmt::Display for Relation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({a}, {b})")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(u32, u32)]) -> Relation<u32> {
        Relation::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn compose_and_closure() {
        let r = rel(&[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(r.compose(&r), rel(&[(1, 3), (2, 4)]));
        assert_eq!(
            r.transitive_closure(),
            rel(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])
        );
        assert!(r.is_acyclic());
        assert!(!rel(&[(1, 2), (2, 1)]).is_acyclic());
    }

    #[test]
    fn reduction_inverts_closure_on_chains() {
        let r = rel(&[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(r.transitive_closure().transitive_reduction(), r);
    }

    #[test]
    fn linearisations_of_antichain() {
        // 3 unordered elements: 3! = 6 total orders
        let set: BTreeSet<u32> = [1, 2, 3].into_iter().collect();
        let lins = Relation::new().linearisations(&set);
        assert_eq!(lins.len(), 6);
        for lin in &lins {
            assert_eq!(lin.len(), 3); // strict total order on 3 elements
            assert!(lin.is_irreflexive());
            assert!(lin.is_transitive());
        }
    }

    #[test]
    fn linearisations_respect_base_order() {
        let set: BTreeSet<u32> = [1, 2, 3].into_iter().collect();
        let lins = rel(&[(1, 2)]).linearisations(&set);
        assert_eq!(lins.len(), 3);
        assert!(lins.iter().all(|l| l.contains(&1, &2)));
    }

    #[test]
    fn linearisations_of_cycle_is_empty() {
        let set: BTreeSet<u32> = [1, 2].into_iter().collect();
        assert!(rel(&[(1, 2), (2, 1)]).linearisations(&set).is_empty());
    }

    #[test]
    fn restrict_and_filter() {
        let r = rel(&[(1, 2), (2, 3), (1, 3)]);
        let set: BTreeSet<u32> = [1, 2].into_iter().collect();
        assert_eq!(r.restrict(&set), rel(&[(1, 2)]));
        assert_eq!(r.filter_sides(|a| *a == 1, |b| *b == 3), rel(&[(1, 3)]));
    }
}
