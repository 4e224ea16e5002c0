//! Seeded random structures for property tests.
//!
//! Random lattices are built as meet-closed families of subsets over a few
//! atoms, which makes every sample a genuine complete lattice: binary meets
//! are intersections (kept by closure), and joins exist as the least family
//! member above the union. Random monotone functions are assigned along a
//! linear extension of the order, choosing each value from the upset of the
//! join of the already-fixed values below.

use crate::absdom::{AbstractDomain, MonotoneFn};
use crate::ats::{Partition, TransitionSystem};
use crate::bits::BitSet;
use crate::lattice::Lattice;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// A random lattice with at most `max_size` elements (and at least 2).
pub fn random_lattice(rng: &mut ChaCha8Rng, max_size: usize) -> Arc<Lattice> {
    assert!(max_size >= 2);
    loop {
        let atoms = rng.gen_range(2..=4usize);
        let full = (1usize << atoms) - 1;
        let mut masks = vec![full];
        for _ in 0..rng.gen_range(1..=6usize) {
            let m = rng.gen_range(0..=full);
            if !masks.contains(&m) {
                masks.push(m);
            }
        }
        // Meet closure: intersections of family members stay in the family.
        let mut frontier = 0;
        while frontier < masks.len() {
            let x = masks[frontier];
            frontier += 1;
            for i in 0..frontier {
                let meet = x & masks[i];
                if !masks.contains(&meet) {
                    masks.push(meet);
                }
            }
        }
        if masks.len() < 2 || masks.len() > max_size {
            continue;
        }
        masks.sort();
        let names = masks.iter().map(|m| format!("s{m}")).collect();
        let n = masks.len();
        let up = (0..n)
            .map(|i| BitSet::from_iter(n, (0..n).filter(|&j| masks[i] & !masks[j] == 0)))
            .collect();
        let lattice = Lattice::from_up_rows(names, up);
        lattice.validate().expect("meet-closed families are lattices");
        return Arc::new(lattice);
    }
}

/// A random domain over `lattice` with image size at most `max_image`.
pub fn random_domain(
    rng: &mut ChaCha8Rng,
    lattice: &Arc<Lattice>,
    max_image: usize,
) -> AbstractDomain {
    assert!(max_image >= 1);
    let n = lattice.element_count();
    for _ in 0..64 {
        let picks = rng.gen_range(1..=max_image);
        let seeds = BitSet::from_iter(n, (0..picks).map(|_| rng.gen_range(0..n)));
        let dom = AbstractDomain::from_image(lattice, &seeds);
        if dom.image().count() <= max_image {
            return dom;
        }
    }
    AbstractDomain::from_image(lattice, &BitSet::from_iter(n, [lattice.top()]))
}

/// A random monotone self-map: values are fixed bottom-up along a linear
/// extension, each drawn from the upset of the join of the values already
/// assigned strictly below.
pub fn random_monotone_fn(
    rng: &mut ChaCha8Rng,
    lattice: &Arc<Lattice>,
    name: &str,
) -> MonotoneFn {
    let n = lattice.element_count();
    // Sorting by downset size linearizes the order; random keys break ties.
    let mut order: Vec<usize> = (0..n).collect();
    let keys: Vec<(usize, u64)> =
        (0..n).map(|x| (lattice.downset(x).count(), rng.gen())).collect();
    order.sort_by_key(|&x| keys[x]);
    let mut table = vec![usize::MAX; n];
    for &x in &order {
        let mut floor = lattice.bottom();
        for y in lattice.downset(x).iter() {
            if y != x {
                floor = lattice.lub2(floor, table[y]);
            }
        }
        let candidates: Vec<usize> = lattice.upset(floor).iter().collect();
        table[x] = candidates[rng.gen_range(0..candidates.len())];
    }
    MonotoneFn::from_table(lattice, name, table).expect("construction preserves monotonicity")
}

/// A random system with 2..=max_states states and edge density around 1/4.
/// With `marked`, nonempty init and error sets are chosen as well.
pub fn random_system(rng: &mut ChaCha8Rng, max_states: usize, marked: bool) -> TransitionSystem {
    let n = rng.gen_range(2..=max_states);
    let mut ts = TransitionSystem::new(n);
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(0.25) {
                ts.add_edge(a, b);
            }
        }
    }
    if marked {
        for s in 0..n {
            if rng.gen_bool(0.3) {
                ts.mark_init(s);
            }
            if rng.gen_bool(0.2) {
                ts.mark_error(s);
            }
        }
        if ts.init().is_empty() {
            ts.mark_init(rng.gen_range(0..n));
        }
        if ts.error().is_empty() {
            ts.mark_error(rng.gen_range(0..n));
        }
    }
    ts
}

/// A random partition of `n` states into at most `max_blocks` blocks.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, max_blocks: usize) -> Partition {
    let k = rng.gen_range(1..=max_blocks.min(n));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for s in 0..n {
        members[rng.gen_range(0..k)].push(s);
    }
    members.retain(|b| !b.is_empty());
    Partition::new(n, &members).expect("assignment covers every state once")
}
