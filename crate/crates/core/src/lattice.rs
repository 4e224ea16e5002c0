//! Finite lattices: explicit partial orders with computed meets and joins,
//! plus an implicit powerset representation for large set-of-points carriers.
//!
//! Elements are dense integer ids. For explicit lattices the order is stored
//! as full up-set/down-set bit rows computed from covering pairs, so `leq` is
//! O(1); for powersets the id *is* the subset mask and order tests are mask
//! arithmetic.

use crate::bits::BitSet;
use std::fmt::Write as _;
use thiserror::Error;

pub type ElemId = usize;

/// Why a candidate order fails to be a (complete) lattice.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeDefect {
    #[error("lattice has no elements")]
    Empty,
    #[error("order is not reflexive at {0}")]
    NotReflexive(String),
    #[error("order is not antisymmetric on pair ({0}, {1})")]
    NotAntisymmetric(String, String),
    #[error("order is not transitive via {0} <= {1} <= {2}")]
    NotTransitive(String, String, String),
    #[error("pair ({0}, {1}) has no least upper bound")]
    NoLub(String, String),
    #[error("pair ({0}, {1}) has no greatest lower bound")]
    NoGlb(String, String),
    #[error("order has no top element")]
    NoTop,
    #[error("order has no bottom element")]
    NoBottom,
}

/// Errors from the `elem`/`cover` text format.
#[derive(Debug, Error)]
pub enum LatticeParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown element {name:?}")]
    UnknownElement { line: usize, name: String },
    #[error("line {line}: duplicate element {name:?}")]
    DuplicateElement { line: usize, name: String },
    #[error("not a lattice: {0}")]
    Invalid(#[from] LatticeDefect),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Order {
    /// `up[x]` = all y with x <= y, `down[y]` = all x with x <= y.
    Dense { up: Vec<BitSet>, down: Vec<BitSet>, names: Vec<String> },
    /// Subsets of `atoms`; element id is the membership mask.
    Powerset { atoms: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    order: Order,
    len: usize,
    top: Option<ElemId>,
    bottom: Option<ElemId>,
}

impl Lattice {
    /// Builds from covering pairs `(lower, upper)` by reflexive-transitive
    /// closure. The result is not checked; call [`Lattice::validate`].
    pub fn from_covers(names: Vec<String>, covers: &[(ElemId, ElemId)]) -> Lattice {
        let n = names.len();
        let mut up: Vec<BitSet> = (0..n).map(|i| BitSet::from_iter(n, [i])).collect();
        for &(lo, hi) in covers {
            assert!(lo < n && hi < n, "cover pair out of range");
            up[lo].insert(hi);
        }
        // Warshall closure over the reachability rows.
        for k in 0..n {
            for i in 0..n {
                if up[i].contains(k) {
                    let row = up[k].clone();
                    up[i].union_with(&row);
                }
            }
        }
        Lattice::from_up_rows(names, up)
    }

    /// Builds from an explicit `leq` relation given as row sets
    /// (`rows[x]` contains y iff x <= y). Unchecked, like `from_covers`.
    pub fn from_up_rows(names: Vec<String>, up: Vec<BitSet>) -> Lattice {
        let n = names.len();
        assert_eq!(up.len(), n);
        let mut down: Vec<BitSet> = vec![BitSet::new(n); n];
        for x in 0..n {
            for y in up[x].iter() {
                down[y].insert(x);
            }
        }
        let top = (0..n).find(|&t| down[t].count() == n);
        let bottom = (0..n).find(|&b| up[b].count() == n);
        Lattice { order: Order::Dense { up, down, names }, len: n, top, bottom }
    }

    /// The powerset of the given atoms ordered by inclusion, with element ids
    /// equal to subset masks. Valid by construction.
    pub fn powerset(atoms: Vec<String>) -> Lattice {
        assert!(atoms.len() <= 20, "powerset carrier limited to 2^20 elements");
        let len = 1usize << atoms.len();
        Lattice { order: Order::Powerset { atoms }, len, top: Some(len - 1), bottom: Some(0) }
    }

    pub fn element_count(&self) -> usize {
        self.len
    }

    pub fn is_powerset(&self) -> bool {
        matches!(self.order, Order::Powerset { .. })
    }

    /// Atom count for powerset lattices.
    pub fn atom_count(&self) -> Option<usize> {
        match &self.order {
            Order::Powerset { atoms } => Some(atoms.len()),
            Order::Dense { .. } => None,
        }
    }

    pub fn name(&self, x: ElemId) -> String {
        match &self.order {
            Order::Dense { names, .. } => names[x].clone(),
            Order::Powerset { atoms } => {
                let mut s = String::from("{");
                let mut first = true;
                for (i, a) in atoms.iter().enumerate() {
                    if x & (1 << i) != 0 {
                        if !first {
                            s.push(',');
                        }
                        let _ = write!(s, "{a}");
                        first = false;
                    }
                }
                s.push('}');
                s
            }
        }
    }

    /// Comma-separated names of a set's members, in id order.
    pub fn set_names(&self, s: &BitSet) -> String {
        s.iter().map(|x| self.name(x)).collect::<Vec<_>>().join(", ")
    }

    pub fn element_by_name(&self, name: &str) -> Option<ElemId> {
        match &self.order {
            Order::Dense { names, .. } => names.iter().position(|n| n == name),
            Order::Powerset { .. } => (0..self.len).find(|&x| self.name(x) == name),
        }
    }

    pub fn leq(&self, a: ElemId, b: ElemId) -> bool {
        match &self.order {
            Order::Dense { up, .. } => up[a].contains(b),
            Order::Powerset { .. } => a & !b == 0,
        }
    }

    pub fn top(&self) -> ElemId {
        self.top.expect("lattice has no top element")
    }

    pub fn bottom(&self) -> ElemId {
        self.bottom.expect("lattice has no bottom element")
    }

    /// All y with x <= y.
    pub fn upset(&self, x: ElemId) -> BitSet {
        match &self.order {
            Order::Dense { up, .. } => up[x].clone(),
            Order::Powerset { .. } => {
                BitSet::from_iter(self.len, (0..self.len).filter(|&y| self.leq(x, y)))
            }
        }
    }

    /// All x with x <= y.
    pub fn downset(&self, y: ElemId) -> BitSet {
        match &self.order {
            Order::Dense { down, .. } => down[y].clone(),
            Order::Powerset { .. } => {
                BitSet::from_iter(self.len, (0..self.len).filter(|&x| self.leq(x, y)))
            }
        }
    }

    pub fn glb2(&self, a: ElemId, b: ElemId) -> ElemId {
        match &self.order {
            Order::Powerset { .. } => a & b,
            Order::Dense { down, .. } => {
                let cone = down[a].intersection(&down[b]);
                let glb = cone.iter().find(|&m| down[m] == cone);
                glb.expect("no greatest lower bound; lattice not validated")
            }
        }
    }

    pub fn lub2(&self, a: ElemId, b: ElemId) -> ElemId {
        match &self.order {
            Order::Powerset { .. } => a | b,
            Order::Dense { up, .. } => {
                let cone = up[a].intersection(&up[b]);
                let lub = cone.iter().find(|&m| up[m] == cone);
                lub.expect("no least upper bound; lattice not validated")
            }
        }
    }

    /// Greatest lower bound of a set; the empty set yields top.
    pub fn glb(&self, s: &BitSet) -> ElemId {
        s.iter().fold(self.top(), |acc, x| self.glb2(acc, x))
    }

    /// Least upper bound of a set; the empty set yields bottom.
    pub fn lub(&self, s: &BitSet) -> ElemId {
        s.iter().fold(self.bottom(), |acc, x| self.lub2(acc, x))
    }

    /// Closure of `s` under all meets. Always contains top (the empty meet).
    pub fn meet_closure(&self, s: &BitSet) -> BitSet {
        self.binop_closure(s, |a, b| self.glb2(a, b), self.top())
    }

    /// Closure of `s` under all joins. Always contains bottom (the empty join).
    pub fn join_closure(&self, s: &BitSet) -> BitSet {
        self.binop_closure(s, |a, b| self.lub2(a, b), self.bottom())
    }

    fn binop_closure(&self, s: &BitSet, op: impl Fn(ElemId, ElemId) -> ElemId, unit: ElemId) -> BitSet {
        let mut out = s.clone();
        out.insert(unit);
        let mut work: Vec<ElemId> = out.iter().collect();
        while let Some(x) = work.pop() {
            // Pairing x against a snapshot is enough: new elements are pushed
            // and will themselves be paired against everything later.
            let members: Vec<ElemId> = out.iter().collect();
            for y in members {
                let z = op(x, y);
                if !out.contains(z) {
                    out.insert(z);
                    work.push(z);
                }
            }
        }
        out
    }

    /// Elements of `s` not strictly below another element of `s`.
    pub fn maximal(&self, s: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.len);
        for x in s.iter() {
            if !s.iter().any(|y| y != x && self.leq(x, y)) {
                out.insert(x);
            }
        }
        out
    }

    /// Covering pairs `(lower, upper)` of the order (the Hasse diagram).
    pub fn covers(&self) -> Vec<(ElemId, ElemId)> {
        let mut out = Vec::new();
        for x in 0..self.len {
            for y in self.cover_uppers(x) {
                out.push((x, y));
            }
        }
        out
    }

    fn cover_uppers(&self, x: ElemId) -> Vec<ElemId> {
        match &self.order {
            Order::Powerset { atoms } => {
                (0..atoms.len()).filter(|i| x & (1 << i) == 0).map(|i| x | (1 << i)).collect()
            }
            Order::Dense { up, .. } => {
                let mut strict: Vec<ElemId> = up[x].iter().filter(|&y| y != x).collect();
                strict.retain(|&y| !up[x].iter().any(|z| z != x && z != y && self.leq(z, y)));
                strict
            }
        }
    }

    /// Checks the complete-lattice invariants, reporting the first violation
    /// found in a fixed scan order. Powerset lattices are valid by construction.
    pub fn validate(&self) -> Result<(), LatticeDefect> {
        if self.len == 0 {
            return Err(LatticeDefect::Empty);
        }
        let (up, down) = match &self.order {
            Order::Powerset { .. } => return Ok(()),
            Order::Dense { up, down, .. } => (up, down),
        };
        for x in 0..self.len {
            if !up[x].contains(x) {
                return Err(LatticeDefect::NotReflexive(self.name(x)));
            }
        }
        for x in 0..self.len {
            for y in x + 1..self.len {
                if up[x].contains(y) && up[y].contains(x) {
                    return Err(LatticeDefect::NotAntisymmetric(self.name(x), self.name(y)));
                }
            }
        }
        for x in 0..self.len {
            for y in up[x].iter() {
                if !up[y].is_subset(&up[x]) {
                    let z = up[y].iter().find(|z| !up[x].contains(*z)).unwrap();
                    return Err(LatticeDefect::NotTransitive(
                        self.name(x),
                        self.name(y),
                        self.name(z),
                    ));
                }
            }
        }
        for x in 0..self.len {
            for y in x..self.len {
                // A least element of the upper cone is an m with the whole
                // cone above it; uniqueness follows from antisymmetry.
                let upper = up[x].intersection(&up[y]);
                if !upper.iter().any(|m| upper.is_subset(&up[m])) {
                    return Err(LatticeDefect::NoLub(self.name(x), self.name(y)));
                }
                let lower = down[x].intersection(&down[y]);
                if !lower.iter().any(|m| lower.is_subset(&down[m])) {
                    return Err(LatticeDefect::NoGlb(self.name(x), self.name(y)));
                }
            }
        }
        if self.top.is_none() {
            return Err(LatticeDefect::NoTop);
        }
        if self.bottom.is_none() {
            return Err(LatticeDefect::NoBottom);
        }
        Ok(())
    }

    /// Parses the `elem`/`cover` text format and validates the result.
    /// `map` lines are tolerated here; they belong to the function loader.
    pub fn parse(text: &str) -> Result<Lattice, LatticeParseError> {
        let mut names: Vec<String> = Vec::new();
        let mut covers: Vec<(ElemId, ElemId)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            match words.next() {
                Some("elem") => {
                    let name = words
                        .next()
                        .ok_or_else(|| syntax(line, "elem needs a name"))?
                        .to_string();
                    if words.next().is_some() {
                        return Err(syntax(line, "elem takes exactly one name"));
                    }
                    if names.contains(&name) {
                        return Err(LatticeParseError::DuplicateElement { line, name });
                    }
                    names.push(name);
                }
                Some("cover") => {
                    let lo = words.next().ok_or_else(|| syntax(line, "cover needs two names"))?;
                    let hi = words.next().ok_or_else(|| syntax(line, "cover needs two names"))?;
                    if words.next().is_some() {
                        return Err(syntax(line, "cover takes exactly two names"));
                    }
                    let find = |n: &str| {
                        names.iter().position(|x| x == n).ok_or_else(|| {
                            LatticeParseError::UnknownElement { line, name: n.to_string() }
                        })
                    };
                    covers.push((find(lo)?, find(hi)?));
                }
                Some("map") => continue,
                Some(other) => {
                    return Err(syntax(line, &format!("unknown directive {other:?}")));
                }
                None => unreachable!(),
            }
        }
        let lattice = Lattice::from_covers(names, &covers);
        lattice.validate()?;
        Ok(lattice)
    }

    /// Serializes to the `elem`/`cover` text format (Hasse edges only).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for x in 0..self.len {
            let _ = writeln!(out, "elem {}", self.name(x));
        }
        for (lo, hi) in self.covers() {
            let _ = writeln!(out, "cover {} {}", self.name(lo), self.name(hi));
        }
        out
    }
}

fn syntax(line: usize, msg: &str) -> LatticeParseError {
    LatticeParseError::Syntax { line, msg: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn sign_lattice_shape() {
        let l = fixtures::sign_lattice();
        assert_eq!(l.element_count(), 8);
        l.validate().unwrap();
        let (bot, top) = (l.bottom(), l.top());
        assert_eq!(l.name(bot), "∅");
        assert_eq!(l.name(top), "ℤ");
        let le0 = l.element_by_name("ℤ≤0").unwrap();
        let ge0 = l.element_by_name("ℤ≥0").unwrap();
        let zero = l.element_by_name("0").unwrap();
        assert_eq!(l.glb2(le0, ge0), zero);
        let lt0 = l.element_by_name("ℤ<0").unwrap();
        let gt0 = l.element_by_name("ℤ>0").unwrap();
        let ne0 = l.element_by_name("ℤ≠0").unwrap();
        assert_eq!(l.lub2(lt0, gt0), ne0);
        assert!(!l.leq(le0, ge0));
        assert!(l.leq(zero, le0));
    }

    #[test]
    fn glb_lub_of_empty_set() {
        let l = fixtures::sign_lattice();
        assert_eq!(l.glb(&BitSet::new(8)), l.top());
        assert_eq!(l.lub(&BitSet::new(8)), l.bottom());
    }

    #[test]
    fn sign_meet_closure_is_fixed() {
        let l = fixtures::sign_lattice();
        let ids: Vec<ElemId> = ["∅", "ℤ>0", "0", "ℤ≥0", "ℤ≠0", "ℤ"]
            .iter()
            .map(|n| l.element_by_name(n).unwrap())
            .collect();
        let s = BitSet::from_iter(8, ids);
        assert_eq!(l.meet_closure(&s), {
            let mut with_top = s.clone();
            with_top.insert(l.top());
            with_top
        });
    }

    #[test]
    fn kite_meet_closure_adds_meet_and_top() {
        let l = fixtures::kite_lattice();
        let three = l.element_by_name("3").unwrap();
        let four = l.element_by_name("4").unwrap();
        let closed = l.meet_closure(&BitSet::from_iter(5, [three, four]));
        let expected: Vec<ElemId> =
            ["2", "3", "4", "5"].iter().map(|n| l.element_by_name(n).unwrap()).collect();
        assert_eq!(closed, BitSet::from_iter(5, expected));
        assert_eq!(l.glb2(three, four), l.element_by_name("2").unwrap());
    }

    #[test]
    fn maximal_picks_top_of_preimage() {
        let l = fixtures::sign_lattice();
        let ids: Vec<ElemId> =
            ["ℤ<0", "ℤ>0", "ℤ≠0"].iter().map(|n| l.element_by_name(n).unwrap()).collect();
        let m = l.maximal(&BitSet::from_iter(8, ids));
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![l.element_by_name("ℤ≠0").unwrap()]);
    }

    #[test]
    fn downset_of_zero() {
        let l = fixtures::sign_lattice();
        let zero = l.element_by_name("0").unwrap();
        let d = l.downset(zero);
        assert_eq!(d, BitSet::from_iter(8, [l.bottom(), zero]));
    }

    #[test]
    fn two_element_antichain_has_no_lub() {
        let l = Lattice::from_covers(vec!["a".into(), "b".into()], &[]);
        assert_eq!(l.validate(), Err(LatticeDefect::NoLub("a".into(), "b".into())));
    }

    #[test]
    fn butterfly_reports_offending_pair() {
        // a and b share two incomparable upper bounds c, d.
        let names = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let l = Lattice::from_covers(names, &[(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(l.validate(), Err(LatticeDefect::NoLub("a".into(), "b".into())));
    }

    #[test]
    fn cycle_breaks_antisymmetry() {
        let names = vec!["a".into(), "b".into()];
        let l = Lattice::from_covers(names, &[(0, 1), (1, 0)]);
        assert_eq!(l.validate(), Err(LatticeDefect::NotAntisymmetric("a".into(), "b".into())));
    }

    #[test]
    fn singleton_is_a_lattice() {
        let l = Lattice::from_covers(vec!["x".into()], &[]);
        l.validate().unwrap();
        assert_eq!(l.top(), l.bottom());
    }

    #[test]
    fn empty_is_rejected() {
        let l = Lattice::from_covers(vec![], &[]);
        assert_eq!(l.validate(), Err(LatticeDefect::Empty));
    }

    #[test]
    fn parse_round_trip() {
        let l = fixtures::sign_lattice();
        let reparsed = Lattice::parse(&l.to_text()).unwrap();
        assert_eq!(reparsed.element_count(), 8);
        for x in 0..8 {
            assert_eq!(l.name(x), reparsed.name(x));
            for y in 0..8 {
                assert_eq!(l.leq(x, y), reparsed.leq(x, y));
            }
        }
    }

    #[test]
    fn parse_rejects_unknown_name_and_bad_directive() {
        let err = Lattice::parse("elem a\ncover a b\n").unwrap_err();
        assert!(matches!(err, LatticeParseError::UnknownElement { line: 2, .. }));
        let err = Lattice::parse("vertex a\n").unwrap_err();
        assert!(matches!(err, LatticeParseError::Syntax { line: 1, .. }));
        let err = Lattice::parse("elem a\nelem a\n").unwrap_err();
        assert!(matches!(err, LatticeParseError::DuplicateElement { line: 2, .. }));
    }

    #[test]
    fn parse_requires_top_and_bottom() {
        // Two incomparable elements over a shared bottom: no top.
        let err = Lattice::parse("elem bot\nelem a\nelem b\ncover bot a\ncover bot b\n");
        assert!(err.is_err());
    }

    #[test]
    fn powerset_masks_are_order() {
        let l = Lattice::powerset(vec!["x".into(), "y".into(), "z".into()]);
        assert_eq!(l.element_count(), 8);
        l.validate().unwrap();
        assert!(l.leq(0b001, 0b011));
        assert!(!l.leq(0b011, 0b001));
        assert_eq!(l.glb2(0b011, 0b110), 0b010);
        assert_eq!(l.lub2(0b011, 0b110), 0b111);
        assert_eq!(l.name(0b101), "{x,z}");
        assert_eq!(l.element_by_name("{x,z}"), Some(0b101));
        assert_eq!(l.top(), 0b111);
        assert_eq!(l.bottom(), 0);
    }

    #[test]
    fn powerset_covers_add_one_atom() {
        let l = Lattice::powerset(vec!["a".into(), "b".into()]);
        let mut covers = l.covers();
        covers.sort_unstable();
        assert_eq!(covers, vec![(0b00, 0b01), (0b00, 0b10), (0b01, 0b11), (0b10, 0b11)]);
    }

    #[test]
    fn dense_covers_match_hasse() {
        let l = fixtures::kite_lattice();
        let name = |x: ElemId| l.name(x);
        let mut covers: Vec<(String, String)> =
            l.covers().into_iter().map(|(a, b)| (name(a), name(b))).collect();
        covers.sort();
        assert_eq!(
            covers,
            vec![
                ("1".to_string(), "2".to_string()),
                ("2".to_string(), "3".to_string()),
                ("2".to_string(), "4".to_string()),
                ("3".to_string(), "5".to_string()),
                ("4".to_string(), "5".to_string()),
            ]
        );
    }
}
