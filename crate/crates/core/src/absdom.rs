//! Abstract domains over a finite carrier lattice, represented by their
//! meet-closed images, together with monotone functions and best correct
//! approximations (b.c.a.).
//!
//! A domain stands for the closure operator mapping each carrier element to
//! the least image element above it; two domains over one carrier compare by
//! precision through image inclusion.

use crate::bits::BitSet;
use crate::lattice::{ElemId, Lattice};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Carriers up to this size get exhaustive b.c.a. comparison; larger ones are
/// sampled (images, atoms, and a fixed-seed draw).
pub(crate) const EXHAUSTIVE_LIMIT: usize = 1 << 12;
const SAMPLE_DRAWS: usize = 1 << 12;

#[derive(Debug, Error)]
pub enum FunctionError {
    #[error("function {fname:?} table has {got} entries for a {want}-element lattice")]
    WrongLength { fname: String, got: usize, want: usize },
    #[error("function {fname:?} is not monotone: {lower} <= {upper} but {flower} !<= {fupper}")]
    NotMonotone { fname: String, lower: String, upper: String, flower: String, fupper: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown element {name:?}")]
    UnknownElement { line: usize, name: String },
    #[error("function {fname:?} maps {elem} twice")]
    DuplicateEntry { fname: String, elem: String },
    #[error("function {fname:?} has no entry for {elem}")]
    MissingEntry { fname: String, elem: String },
}

/// A total monotone self-map of the carrier, stored as a full table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneFn {
    lattice: Arc<Lattice>,
    name: String,
    table: Vec<ElemId>,
}

impl MonotoneFn {
    /// Validates totality and monotonicity. Explicit lattices are checked on
    /// all pairs; powersets on covering pairs, which suffices by transitivity.
    pub fn from_table(
        lattice: &Arc<Lattice>,
        name: &str,
        table: Vec<ElemId>,
    ) -> Result<MonotoneFn, FunctionError> {
        let n = lattice.element_count();
        if table.len() != n {
            return Err(FunctionError::WrongLength {
                fname: name.to_string(),
                got: table.len(),
                want: n,
            });
        }
        let check = |lo: ElemId, hi: ElemId| -> Result<(), FunctionError> {
            if !lattice.leq(table[lo], table[hi]) {
                return Err(FunctionError::NotMonotone {
                    fname: name.to_string(),
                    lower: lattice.name(lo),
                    upper: lattice.name(hi),
                    flower: lattice.name(table[lo]),
                    fupper: lattice.name(table[hi]),
                });
            }
            Ok(())
        };
        if lattice.is_powerset() {
            for (lo, hi) in lattice.covers() {
                check(lo, hi)?;
            }
        } else {
            for lo in 0..n {
                for hi in 0..n {
                    if lattice.leq(lo, hi) {
                        check(lo, hi)?;
                    }
                }
            }
        }
        Ok(MonotoneFn { lattice: Arc::clone(lattice), name: name.to_string(), table })
    }

    pub fn identity(lattice: &Arc<Lattice>, name: &str) -> MonotoneFn {
        MonotoneFn {
            lattice: Arc::clone(lattice),
            name: name.to_string(),
            table: (0..lattice.element_count()).collect(),
        }
    }

    pub fn eval(&self, x: ElemId) -> ElemId {
        self.table[x]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Image of the whole carrier under this function.
    pub fn image(&self) -> BitSet {
        BitSet::from_iter(self.lattice.element_count(), self.table.iter().copied())
    }
}

/// An abstract domain: a meet-closed subset of the carrier containing top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractDomain {
    lattice: Arc<Lattice>,
    image: BitSet,
}

impl AbstractDomain {
    /// Least domain whose image contains `generators`: the meet closure
    /// (which always adds top).
    pub fn from_image(lattice: &Arc<Lattice>, generators: &BitSet) -> AbstractDomain {
        AbstractDomain { lattice: Arc::clone(lattice), image: lattice.meet_closure(generators) }
    }

    /// The identity abstraction: every carrier element is its own image.
    pub fn identity(lattice: &Arc<Lattice>) -> AbstractDomain {
        AbstractDomain {
            lattice: Arc::clone(lattice),
            image: BitSet::full(lattice.element_count()),
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn image(&self) -> &BitSet {
        &self.image
    }

    /// The closure map: least image element above `c`.
    pub fn apply(&self, c: ElemId) -> ElemId {
        let mut acc = self.lattice.top();
        for y in self.image.iter() {
            if self.lattice.leq(c, y) {
                acc = self.lattice.glb2(acc, y);
            }
        }
        acc
    }

    /// More precise or equal: every element `other` can express, we can too.
    pub fn precision_leq(&self, other: &AbstractDomain) -> bool {
        assert_carrier(&self.lattice, &other.lattice);
        other.image.is_subset(&self.image)
    }
}

fn assert_carrier(a: &Arc<Lattice>, b: &Arc<Lattice>) {
    assert!(Arc::ptr_eq(a, b), "domains built over different carrier lattices");
}

/// Least upper bound in the precision order: the common abstraction given by
/// image intersection.
pub fn abs_lub(domains: &[&AbstractDomain]) -> AbstractDomain {
    let first = domains.first().expect("abs_lub of no domains");
    let mut image = first.image.clone();
    for d in &domains[1..] {
        assert_carrier(&first.lattice, &d.lattice);
        image.intersect_with(&d.image);
    }
    AbstractDomain { lattice: Arc::clone(&first.lattice), image }
}

/// Greatest lower bound in the precision order: meet closure of the union of
/// images (the reduced product).
pub fn abs_glb(domains: &[&AbstractDomain]) -> AbstractDomain {
    let first = domains.first().expect("abs_glb of no domains");
    let mut gens = first.image.clone();
    for d in &domains[1..] {
        assert_carrier(&first.lattice, &d.lattice);
        gens.union_with(&d.image);
    }
    AbstractDomain::from_image(&first.lattice, &gens)
}

/// B.c.a. table of `f` on a domain: image element -> image element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BcaTable {
    entries: Vec<(ElemId, ElemId)>,
}

impl BcaTable {
    pub fn get(&self, a: ElemId) -> ElemId {
        self.entries
            .binary_search_by_key(&a, |&(k, _)| k)
            .map(|i| self.entries[i].1)
            .expect("element not in the domain image")
    }

    /// Entries in ascending input order.
    pub fn iter(&self) -> impl Iterator<Item = (ElemId, ElemId)> + '_ {
        self.entries.iter().copied()
    }

    /// Set of output elements.
    pub fn image(&self, universe: usize) -> BitSet {
        BitSet::from_iter(universe, self.entries.iter().map(|&(_, v)| v))
    }
}

/// Best correct approximation of `f` in `dom`, tabulated on the image.
pub fn bca(dom: &AbstractDomain, f: &MonotoneFn) -> BcaTable {
    assert_carrier(&dom.lattice, &f.lattice);
    BcaTable {
        entries: dom.image.iter().map(|a| (a, dom.apply(f.eval(a)))).collect(),
    }
}

/// The b.c.a. extended to the whole carrier: the closure of `f` through the
/// domain on both sides.
pub fn bca_extended(dom: &AbstractDomain, f: &MonotoneFn) -> MonotoneFn {
    assert_carrier(&dom.lattice, &f.lattice);
    let n = dom.lattice.element_count();
    // Memoize per image element: the outer closure only sees f of image points.
    let inner = bca(dom, f);
    let table = (0..n).map(|c| inner.get(dom.apply(c))).collect();
    MonotoneFn {
        lattice: Arc::clone(&dom.lattice),
        name: format!("{}.bca", f.name),
        table,
    }
}

/// Do two domains induce the same b.c.a. of `f`? Exhaustive on carriers up to
/// 2^12 elements; beyond that, checked on both images, all powerset atoms,
/// and a fixed-seed random sample.
pub fn bca_equal(a: &AbstractDomain, b: &AbstractDomain, f: &MonotoneFn) -> bool {
    bca_equal_on(a, b, f, &[])
}

/// `bca_equal` with extra caller-chosen sample points (used by large-carrier
/// fixtures that know their interesting elements).
pub fn bca_equal_on(
    a: &AbstractDomain,
    b: &AbstractDomain,
    f: &MonotoneFn,
    extra: &[ElemId],
) -> bool {
    assert_carrier(&a.lattice, &b.lattice);
    assert_carrier(&a.lattice, &f.lattice);
    let n = a.lattice.element_count();
    let fa = |c: ElemId| a.apply(f.eval(a.apply(c)));
    let fb = |c: ElemId| b.apply(f.eval(b.apply(c)));
    if n <= EXHAUSTIVE_LIMIT {
        return (0..n).all(|c| fa(c) == fb(c));
    }
    let mut points: Vec<ElemId> = a.image.iter().chain(b.image.iter()).collect();
    if let Some(atoms) = a.lattice.atom_count() {
        points.extend((0..atoms).map(|i| 1usize << i));
    }
    points.extend_from_slice(extra);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    points.extend((0..SAMPLE_DRAWS).map(|_| rng.gen_range(0..n)));
    points.iter().all(|&c| fa(c) == fb(c))
}

/// Loads `map <fname> <elem> <elem>` rows accompanying a lattice file into
/// validated monotone functions, keyed by name.
pub fn parse_functions(
    text: &str,
    lattice: &Arc<Lattice>,
) -> Result<BTreeMap<String, MonotoneFn>, FunctionError> {
    let n = lattice.element_count();
    let mut tables: BTreeMap<String, Vec<Option<ElemId>>> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        if words.next() != Some("map") {
            continue;
        }
        let (fname, from, to) = match (words.next(), words.next(), words.next(), words.next()) {
            (Some(f), Some(a), Some(b), None) => (f, a, b),
            _ => {
                return Err(FunctionError::Syntax {
                    line,
                    msg: "map takes a function name and two elements".into(),
                })
            }
        };
        let resolve = |name: &str| {
            lattice.element_by_name(name).ok_or_else(|| FunctionError::UnknownElement {
                line,
                name: name.to_string(),
            })
        };
        let (from, to) = (resolve(from)?, resolve(to)?);
        let table = tables.entry(fname.to_string()).or_insert_with(|| vec![None; n]);
        if table[from].is_some() {
            return Err(FunctionError::DuplicateEntry {
                fname: fname.to_string(),
                elem: lattice.name(from),
            });
        }
        table[from] = Some(to);
    }
    let mut out = BTreeMap::new();
    for (fname, table) in tables {
        let mut full = Vec::with_capacity(n);
        for (x, entry) in table.into_iter().enumerate() {
            full.push(entry.ok_or_else(|| FunctionError::MissingEntry {
                fname: fname.clone(),
                elem: lattice.name(x),
            })?);
        }
        out.insert(fname.clone(), MonotoneFn::from_table(lattice, &fname, full)?);
    }
    Ok(out)
}
