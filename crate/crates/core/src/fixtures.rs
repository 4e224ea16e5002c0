//! Built-in example structures shared by tests, docs, and the CLI fixtures.

use crate::absdom::{AbstractDomain, MonotoneFn};
use crate::ats::{Partition, TransitionSystem};
use crate::bits::BitSet;
use crate::lattice::Lattice;
use std::collections::BTreeMap;
use std::sync::Arc;

/// The eight-element sign lattice over sets of integers.
pub fn sign_lattice() -> Arc<Lattice> {
    let names: Vec<String> =
        ["∅", "ℤ<0", "0", "ℤ>0", "ℤ≤0", "ℤ≠0", "ℤ≥0", "ℤ"].map(String::from).into();
    let covers = [
        (0, 1), // ∅ < ℤ<0
        (0, 2), // ∅ < 0
        (0, 3), // ∅ < ℤ>0
        (1, 4), // ℤ<0 < ℤ≤0
        (1, 5), // ℤ<0 < ℤ≠0
        (2, 4), // 0 < ℤ≤0
        (2, 6), // 0 < ℤ≥0
        (3, 5), // ℤ>0 < ℤ≠0
        (3, 6), // ℤ>0 < ℤ≥0
        (4, 7), // ℤ≤0 < ℤ
        (5, 7), // ℤ≠0 < ℤ
        (6, 7), // ℤ≥0 < ℤ
    ];
    let l = Lattice::from_covers(names, &covers);
    l.validate().expect("sign fixture is a lattice");
    Arc::new(l)
}

/// Sign lattice plus its squaring map `sq`.
pub fn sign_with_functions() -> (Arc<Lattice>, BTreeMap<String, MonotoneFn>) {
    let l = sign_lattice();
    let sq_pairs = [
        ("∅", "∅"),
        ("ℤ<0", "ℤ>0"),
        ("0", "0"),
        ("ℤ>0", "ℤ>0"),
        ("ℤ≤0", "ℤ≥0"),
        ("ℤ≠0", "ℤ>0"),
        ("ℤ≥0", "ℤ≥0"),
        ("ℤ", "ℤ≥0"),
    ];
    let mut table = vec![0; 8];
    for (from, to) in sq_pairs {
        table[l.element_by_name(from).unwrap()] = l.element_by_name(to).unwrap();
    }
    let sq = MonotoneFn::from_table(&l, "sq", table).expect("sq is monotone");
    let mut fns = BTreeMap::new();
    fns.insert("sq".to_string(), sq);
    (l, fns)
}

/// Five-element lattice shaped like a kite: a chain 1 < 2 splitting into
/// incomparable 3, 4 that rejoin at top 5.
pub fn kite_lattice() -> Arc<Lattice> {
    let names: Vec<String> = ["1", "2", "3", "4", "5"].map(String::from).into();
    let l = Lattice::from_covers(names, &[(0, 1), (1, 2), (1, 3), (2, 4), (3, 4)]);
    l.validate().expect("kite fixture is a lattice");
    Arc::new(l)
}

/// Kite lattice with the map whose b.c.a. admits two incomparable equally
/// precise refinements, so no most concrete one exists.
pub fn kite_with_function() -> (Arc<Lattice>, MonotoneFn) {
    let l = kite_lattice();
    let pairs = [("1", "1"), ("2", "1"), ("3", "5"), ("4", "5"), ("5", "5")];
    let mut table = vec![0; 5];
    for (from, to) in pairs {
        table[l.element_by_name(from).unwrap()] = l.element_by_name(to).unwrap();
    }
    let f = MonotoneFn::from_table(&l, "f", table).expect("kite map is monotone");
    (l, f)
}

/// Powerset of the integer range [-8, 8] with a saturating increment, plus
/// two abstractions of it that induce the same increment b.c.a.
pub struct IntervalFixture {
    pub lattice: Arc<Lattice>,
    /// Pointwise x+1 capped at the range top.
    pub increment: MonotoneFn,
    /// Image {0}, [-8,0], [0,8], [-8,8].
    pub sign4: AbstractDomain,
    /// Image [0,8], [-8,8].
    pub nonneg: AbstractDomain,
}

pub fn interval_fixture() -> IntervalFixture {
    const LO: i32 = -8;
    const HI: i32 = 8;
    let atoms: Vec<String> = (LO..=HI).map(|v| v.to_string()).collect();
    let bit = |v: i32| (v - LO) as usize;
    let lattice = Arc::new(Lattice::powerset(atoms));
    let n = lattice.element_count();

    let step: Vec<usize> = (LO..=HI).map(|v| 1usize << bit((v + 1).min(HI))).collect();
    let table: Vec<usize> = (0..n)
        .map(|mask| {
            let mut out = 0usize;
            let mut rest = mask;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                out |= step[i];
                rest &= rest - 1;
            }
            out
        })
        .collect();
    let increment =
        MonotoneFn::from_table(&lattice, "inc", table).expect("pointwise maps are monotone");

    let range_mask = |a: i32, b: i32| (a..=b).fold(0usize, |m, v| m | 1 << bit(v));
    let sign4 = AbstractDomain::from_image(
        &lattice,
        &BitSet::from_iter(
            n,
            [range_mask(0, 0), range_mask(LO, 0), range_mask(0, HI), range_mask(LO, HI)],
        ),
    );
    let nonneg = AbstractDomain::from_image(
        &lattice,
        &BitSet::from_iter(n, [range_mask(0, HI), range_mask(LO, HI)]),
    );
    IntervalFixture { lattice, increment, sign4, nonneg }
}

/// Nine-state system whose given partition has two pairs of blocks with
/// identical existential pre/post behavior, so the partition kernel merges
/// them. States are labeled 1..9.
pub fn merge_demo() -> (TransitionSystem, Partition) {
    let mut ts = TransitionSystem::new(9);
    for i in 0..9 {
        ts.set_label(i, &(i + 1).to_string());
    }
    for (a, b) in [(0, 1), (0, 3), (1, 5), (2, 6), (3, 5), (4, 6), (5, 7), (6, 8)] {
        ts.add_edge(a, b);
    }
    let p = Partition::new(
        9,
        &[vec![0], vec![1, 2], vec![3, 4], vec![5], vec![6], vec![7, 8]],
    )
    .expect("merge demo partition is well formed");
    (ts, p)
}

/// Seven-state system used to exercise failure-block splitting: the abstract
/// counterexample through the middle block is spurious. States are labeled
/// 1..7; init {1,2}, error {6}.
pub fn split_demo() -> (TransitionSystem, Partition) {
    let mut ts = TransitionSystem::new(7);
    for i in 0..7 {
        ts.set_label(i, &(i + 1).to_string());
    }
    for (a, b) in [(0, 4), (1, 3), (1, 4), (2, 5), (3, 6), (4, 6)] {
        ts.add_edge(a, b);
    }
    ts.mark_init(0);
    ts.mark_init(1);
    ts.mark_error(5);
    let p = Partition::new(7, &[vec![0], vec![1], vec![2, 3, 4], vec![5], vec![6]])
        .expect("split demo partition is well formed");
    (ts, p)
}
