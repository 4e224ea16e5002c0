//! Finite transition systems, state partitions viewed as abstract domains,
//! existential abstract transitions, and the partition form of the
//! correctness kernel.
//!
//! A partition P of the state space is an abstract domain: a set of states is
//! approximated by the set of blocks it touches (`alpha`), and a set of
//! blocks concretizes to the union of its members (`gamma`). The induced best
//! correct approximations of the successor and predecessor maps are exactly
//! the existential block transitions (`pre_ee`, `post_ee`), which is what
//! makes the kernel construction effective: two blocks can be merged without
//! changing either approximation precisely when their singleton pre/post
//! images coincide.

use crate::absdom::{AbstractDomain, MonotoneFn};
use crate::bits::BitSet;
use crate::lattice::Lattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Block-set size above which correspondence checks switch to sampling.
const EXHAUSTIVE_BLOCK_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("block {index} is empty")]
    EmptyBlock { index: usize },
    #[error("state {state} appears in more than one block")]
    Overlap { state: usize },
    #[error("state {state} is not covered by any block")]
    Uncovered { state: usize },
    #[error("state {state} is out of range for a {n}-state system")]
    OutOfRange { state: usize, n: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("label {name:?} is used by more than one state")]
    DuplicateLabel { name: String },
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// A finite directed transition system with optional init and error markings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    n: usize,
    succ: Vec<BitSet>,
    pred: Vec<BitSet>,
    init: BitSet,
    error: BitSet,
    labels: Vec<String>,
}

impl TransitionSystem {
    pub fn new(n: usize) -> TransitionSystem {
        TransitionSystem {
            n,
            succ: vec![BitSet::new(n); n],
            pred: vec![BitSet::new(n); n],
            init: BitSet::new(n),
            error: BitSet::new(n),
            labels: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.succ[from].insert(to);
        self.pred[to].insert(from);
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(to)
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in self.succ[a].iter() {
                out.push((a, b));
            }
        }
        out
    }

    pub fn set_label(&mut self, state: usize, label: &str) {
        self.labels[state] = label.to_string();
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn state_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn mark_init(&mut self, state: usize) {
        self.init.insert(state);
    }

    pub fn mark_error(&mut self, state: usize) {
        self.error.insert(state);
    }

    pub fn init(&self) -> &BitSet {
        &self.init
    }

    pub fn error(&self) -> &BitSet {
        &self.error
    }

    pub fn succ(&self, state: usize) -> &BitSet {
        &self.succ[state]
    }

    pub fn pred(&self, state: usize) -> &BitSet {
        &self.pred[state]
    }

    /// States reachable in one step from `s`. Additive in `s`.
    pub fn post(&self, s: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.n);
        for x in s.iter() {
            out.union_with(&self.succ[x]);
        }
        out
    }

    /// States with a one-step edge into `s`. Additive in `s`.
    pub fn pre(&self, s: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.n);
        for y in s.iter() {
            out.union_with(&self.pred[y]);
        }
        out
    }

    /// Renders a state set through labels, e.g. `{2,3}`.
    pub fn render_states(&self, s: &BitSet) -> String {
        let names: Vec<&str> = s.iter().map(|x| self.label(x)).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Parses the `states/label/edge/init/error/block` format. Returns the
    /// system and, when any `block` lines are present, the partition they
    /// describe.
    pub fn parse(text: &str) -> Result<(TransitionSystem, Option<Partition>), SystemParseError> {
        let syntax = |line: usize, msg: &str| SystemParseError::Syntax { line, msg: msg.into() };
        let mut ts: Option<TransitionSystem> = None;
        let mut blocks: Vec<(String, Vec<usize>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let keyword = words.next().unwrap();
            let rest: Vec<&str> = words.collect();
            if keyword == "states" {
                if ts.is_some() {
                    return Err(syntax(line_no, "repeated states line"));
                }
                let n = rest
                    .first()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| syntax(line_no, "expected: states <n>"))?;
                ts = Some(TransitionSystem::new(n));
                continue;
            }
            let sys = ts
                .as_mut()
                .ok_or_else(|| syntax(line_no, "states line must come first"))?;
            let n = sys.n;
            let parse_id = move |w: &str| -> Result<usize, SystemParseError> {
                let id = w
                    .parse::<usize>()
                    .map_err(|_| syntax(line_no, &format!("bad state id {w:?}")))?;
                if id >= n {
                    return Err(syntax(line_no, &format!("state {id} out of range for {n} states")));
                }
                Ok(id)
            };
            match keyword {
                "label" => {
                    if rest.len() != 2 {
                        return Err(syntax(line_no, "expected: label <id> <name>"));
                    }
                    let id = parse_id(rest[0])?;
                    sys.set_label(id, rest[1]);
                }
                "edge" => {
                    if rest.len() != 2 {
                        return Err(syntax(line_no, "expected: edge <from> <to>"));
                    }
                    let a = parse_id(rest[0])?;
                    let b = parse_id(rest[1])?;
                    sys.add_edge(a, b);
                }
                "init" => {
                    for w in &rest {
                        let id = parse_id(w)?;
                        sys.mark_init(id);
                    }
                }
                "error" => {
                    for w in &rest {
                        let id = parse_id(w)?;
                        sys.mark_error(id);
                    }
                }
                "block" => {
                    if rest.len() < 2 {
                        return Err(syntax(line_no, "expected: block <name> <id>..."));
                    }
                    let mut members = Vec::new();
                    for w in &rest[1..] {
                        members.push(parse_id(w)?);
                    }
                    blocks.push((rest[0].to_string(), members));
                }
                other => {
                    return Err(syntax(line_no, &format!("unknown directive {other:?}")));
                }
            }
        }
        let ts = ts.ok_or_else(|| syntax(0, "missing states line"))?;
        let mut seen = BTreeMap::new();
        for (i, l) in ts.labels.iter().enumerate() {
            if seen.insert(l.clone(), i).is_some() {
                return Err(SystemParseError::DuplicateLabel { name: l.clone() });
            }
        }
        let partition = if blocks.is_empty() {
            None
        } else {
            Some(Partition::new_named(ts.n, &blocks)?)
        };
        Ok((ts, partition))
    }

    /// Serializes back to the parse format; `parse(to_text(..))` is identity.
    pub fn to_text(&self, partition: Option<&Partition>) -> String {
        let mut out = format!("states {}\n", self.n);
        for i in 0..self.n {
            out.push_str(&format!("label {} {}\n", i, self.labels[i]));
        }
        for (a, b) in self.edges() {
            out.push_str(&format!("edge {a} {b}\n"));
        }
        if !self.init.is_empty() {
            let ids: Vec<String> = self.init.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("init {}\n", ids.join(" ")));
        }
        if !self.error.is_empty() {
            let ids: Vec<String> = self.error.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("error {}\n", ids.join(" ")));
        }
        if let Some(p) = partition {
            for b in 0..p.block_count() {
                let ids: Vec<String> = p.block(b).iter().map(|i| i.to_string()).collect();
                out.push_str(&format!("block {} {}\n", p.block_name(b), ids.join(" ")));
            }
        }
        out
    }
}

/// A partition of the states `0..n` into named, nonempty, disjoint blocks.
/// Blocks are kept sorted by least member, so block indices are canonical.
#[derive(Debug, Clone)]
pub struct Partition {
    n: usize,
    blocks: Vec<BitSet>,
    names: Vec<String>,
    block_of: Vec<usize>,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Partition) -> bool {
        self.n == other.n && self.blocks == other.blocks
    }
}

impl Eq for Partition {}

impl Partition {
    pub fn new(n: usize, blocks: &[Vec<usize>]) -> Result<Partition, PartitionError> {
        let named: Vec<(String, Vec<usize>)> = blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (format!("B{i}"), b.clone()))
            .collect();
        Partition::new_named(n, &named)
    }

    pub fn new_named(n: usize, blocks: &[(String, Vec<usize>)]) -> Result<Partition, PartitionError> {
        let mut sets = Vec::with_capacity(blocks.len());
        for (index, (name, members)) in blocks.iter().enumerate() {
            if members.is_empty() {
                return Err(PartitionError::EmptyBlock { index });
            }
            let mut set = BitSet::new(n);
            for &s in members {
                if s >= n {
                    return Err(PartitionError::OutOfRange { state: s, n });
                }
                set.insert(s);
            }
            sets.push((name.clone(), set));
        }
        sets.sort_by_key(|(_, set)| set.min().unwrap());
        let mut block_of = vec![usize::MAX; n];
        for (b, (_, set)) in sets.iter().enumerate() {
            for s in set.iter() {
                if block_of[s] != usize::MAX {
                    return Err(PartitionError::Overlap { state: s });
                }
                block_of[s] = b;
            }
        }
        if let Some(state) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(PartitionError::Uncovered { state });
        }
        let names = sets.iter().map(|(name, _)| name.clone()).collect();
        let blocks = sets.into_iter().map(|(_, set)| set).collect();
        Ok(Partition { n, blocks, names, block_of })
    }

    /// One singleton block per state.
    pub fn discrete(n: usize) -> Partition {
        let blocks: Vec<Vec<usize>> = (0..n).map(|s| vec![s]).collect();
        Partition::new(n, &blocks).expect("singletons partition the states")
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, b: usize) -> &BitSet {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[BitSet] {
        &self.blocks
    }

    pub fn block_name(&self, b: usize) -> &str {
        &self.names[b]
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    /// Blocks that intersect `states`; the abstraction map of the partition
    /// domain. Returns a set over block indices.
    pub fn alpha(&self, states: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.blocks.len());
        for (b, block) in self.blocks.iter().enumerate() {
            if block.intersects(states) {
                out.insert(b);
            }
        }
        out
    }

    /// Union of the given blocks; the concretization map.
    pub fn gamma(&self, blocks: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.n);
        for b in blocks.iter() {
            out.union_with(&self.blocks[b]);
        }
        out
    }

    /// True if every block of `finer` is contained in some block of `self`.
    pub fn is_coarsening_of(&self, finer: &Partition) -> bool {
        self.n == finer.n
            && finer
                .blocks
                .iter()
                .all(|fb| fb.is_subset(&self.blocks[self.block_of[fb.min().unwrap()]]))
    }

    /// Replaces block `b` with the given nonempty parts. The parts must
    /// partition exactly that block.
    pub fn split_block(&self, b: usize, parts: &[BitSet]) -> Result<Partition, PartitionError> {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, block) in self.blocks.iter().enumerate() {
            if i != b {
                blocks.push(block.iter().collect());
            }
        }
        for part in parts {
            blocks.push(part.iter().collect());
        }
        Partition::new(self.n, &blocks)
    }

    /// Unions the blocks of each group. The groups must cover every block
    /// index exactly once.
    pub fn merge_groups(&self, groups: &[Vec<usize>]) -> Partition {
        let mut seen = vec![false; self.blocks.len()];
        let mut blocks = Vec::with_capacity(groups.len());
        for group in groups {
            let mut set = BitSet::new(self.n);
            for &b in group {
                assert!(!seen[b], "block {b} appears in two merge groups");
                seen[b] = true;
                set.union_with(&self.blocks[b]);
            }
            blocks.push(set.iter().collect::<Vec<usize>>());
        }
        assert!(seen.iter().all(|&s| s), "merge groups must cover all blocks");
        Partition::new(self.n, &blocks).expect("merging blocks preserves the partition laws")
    }

    /// The partition as an abstract domain of the powerset lattice of states
    /// built by [`state_lattice`]: the image is every union of blocks.
    pub fn as_domain(&self, lattice: &Arc<Lattice>) -> AbstractDomain {
        assert!(lattice.is_powerset() && lattice.atom_count() == Some(self.n));
        assert!(self.blocks.len() <= EXHAUSTIVE_BLOCK_LIMIT, "too many blocks to materialize");
        let masks: Vec<usize> = self.blocks.iter().map(mask_of).collect();
        let mut image = BitSet::new(lattice.element_count());
        for choice in 0usize..1 << masks.len() {
            let mut union = 0usize;
            for (b, mask) in masks.iter().enumerate() {
                if choice >> b & 1 == 1 {
                    union |= mask;
                }
            }
            image.insert(union);
        }
        AbstractDomain::from_image(lattice, &image)
    }

    /// Block display via state labels, e.g. `[2,3]`.
    pub fn render_block(&self, b: usize, ts: &TransitionSystem) -> String {
        let names: Vec<&str> = self.blocks[b].iter().map(|s| ts.label(s)).collect();
        format!("[{}]", names.join(","))
    }

    /// Whole-partition display, e.g. `{[1],[2,3],[4,5]}`.
    pub fn render(&self, ts: &TransitionSystem) -> String {
        let parts: Vec<String> =
            (0..self.blocks.len()).map(|b| self.render_block(b, ts)).collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// The existential abstraction of a system by a partition: one abstract
/// state per block, with an edge between two blocks exactly when some member
/// of the first steps into some member of the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractTransitionSystem {
    partition: Partition,
    succ: Vec<BitSet>,
    pred: Vec<BitSet>,
}

/// Builds the existential abstraction of `ts` by `p`.
pub fn build_ats(ts: &TransitionSystem, p: &Partition) -> AbstractTransitionSystem {
    assert_eq!(ts.state_count(), p.state_count(), "partition is over a different state space");
    let k = p.block_count();
    let mut succ = vec![BitSet::new(k); k];
    let mut pred = vec![BitSet::new(k); k];
    for (a, b) in ts.edges() {
        let (ba, bb) = (p.block_of(a), p.block_of(b));
        succ[ba].insert(bb);
        pred[bb].insert(ba);
    }
    AbstractTransitionSystem { partition: p.clone(), succ, pred }
}

impl AbstractTransitionSystem {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn block_count(&self) -> usize {
        self.partition.block_count()
    }

    pub fn has_abs_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(to)
    }

    /// Abstract edges in lexicographic block order.
    pub fn abs_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.block_count() {
            for b in self.succ[a].iter() {
                out.push((a, b));
            }
        }
        out
    }

    pub fn block_succ(&self, b: usize) -> &BitSet {
        &self.succ[b]
    }

    pub fn block_pred(&self, b: usize) -> &BitSet {
        &self.pred[b]
    }

    /// Blocks with an abstract edge into some block of `blocks`.
    pub fn pre_ee(&self, blocks: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.block_count());
        for c in blocks.iter() {
            out.union_with(&self.pred[c]);
        }
        out
    }

    /// Blocks reachable by one abstract edge from some block of `blocks`.
    pub fn post_ee(&self, blocks: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.block_count());
        for b in blocks.iter() {
            out.union_with(&self.succ[b]);
        }
        out
    }
}

/// Outcome of [`partition_kernel`]: the merged partition together with the
/// signature classes of the original blocks (each class lists original block
/// indices; classes align with the blocks of the merged partition).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionKernel {
    pub partition: Partition,
    pub groups: Vec<Vec<usize>>,
}

/// Merges the blocks of `p` that have identical singleton pre/post images in
/// the abstraction of `ts` by `p`. Signatures are computed once over the
/// original partition; the merge is a single simultaneous pass.
pub fn partition_kernel(ts: &TransitionSystem, p: &Partition) -> PartitionKernel {
    let ats = build_ats(ts, p);
    let mut classes: BTreeMap<(Vec<usize>, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for b in 0..p.block_count() {
        let singleton = BitSet::from_iter(p.block_count(), [b]);
        let signature = (
            ats.pre_ee(&singleton).iter().collect::<Vec<usize>>(),
            ats.post_ee(&singleton).iter().collect::<Vec<usize>>(),
        );
        classes.entry(signature).or_default().push(b);
    }
    let mut groups: Vec<Vec<usize>> = classes.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    let partition = p.merge_groups(&groups);
    PartitionKernel { partition, groups }
}

/// The family of state sets that the partition kernel must keep expressible:
/// the closure under binary union and intersection of the concretized
/// singleton pre/post images, seeded with the empty set and the full space.
/// Cross-validates [`partition_kernel`]: states unseparated by the family
/// are exactly the states sharing a merged block.
pub fn kernel_family_oracle(ts: &TransitionSystem, p: &Partition) -> Vec<BitSet> {
    assert!(p.block_count() <= EXHAUSTIVE_BLOCK_LIMIT, "too many blocks for the family oracle");
    let ats = build_ats(ts, p);
    let n = ts.state_count();
    let mut family: Vec<BitSet> = vec![BitSet::new(n), BitSet::full(n)];
    let add = |family: &mut Vec<BitSet>, s: BitSet| {
        if !family.contains(&s) {
            family.push(s);
        }
    };
    for b in 0..p.block_count() {
        let singleton = BitSet::from_iter(p.block_count(), [b]);
        add(&mut family, p.gamma(&ats.pre_ee(&singleton)));
        add(&mut family, p.gamma(&ats.post_ee(&singleton)));
    }
    let mut frontier = 0;
    while frontier < family.len() {
        let x = family[frontier].clone();
        frontier += 1;
        for i in 0..frontier {
            let y = family[i].clone();
            add(&mut family, x.union(&y));
            add(&mut family, x.intersection(&y));
        }
    }
    family.sort();
    family
}

/// Groups states by their membership pattern across the family sets.
pub fn family_partition(n: usize, family: &[BitSet]) -> Partition {
    let mut classes: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for s in 0..n {
        let pattern: Vec<bool> = family.iter().map(|set| set.contains(s)).collect();
        classes.entry(pattern).or_default().push(s);
    }
    let blocks: Vec<Vec<usize>> = classes.into_values().collect();
    Partition::new(n, &blocks).expect("membership classes partition the states")
}

/// Checks that the block-level pre/post maps are the best correct
/// approximations of the concrete ones: for every block set B,
/// `alpha(pre(gamma(B))) = pre_ee(B)` and dually for post. Exhaustive up to
/// 16 blocks, sampled with a fixed seed beyond that.
pub fn bca_correspondence_check(ts: &TransitionSystem, p: &Partition) -> bool {
    let ats = build_ats(ts, p);
    let k = p.block_count();
    let check = |blocks: &BitSet| {
        ats.pre_ee(blocks) == p.alpha(&ts.pre(&p.gamma(blocks)))
            && ats.post_ee(blocks) == p.alpha(&ts.post(&p.gamma(blocks)))
    };
    if k <= EXHAUSTIVE_BLOCK_LIMIT {
        (0usize..1 << k).all(|mask| {
            let blocks = BitSet::from_iter(k, (0..k).filter(|b| mask >> b & 1 == 1));
            check(&blocks)
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (0..4096).all(|_| {
            let blocks = BitSet::from_iter(k, (0..k).filter(|_| rng.gen::<bool>()));
            check(&blocks)
        })
    }
}

/// Mask form of a state set, for powerset-lattice element ids.
fn mask_of(s: &BitSet) -> usize {
    assert!(s.universe() <= EXHAUSTIVE_BLOCK_LIMIT, "state space too large for mask ids");
    s.iter().fold(0usize, |m, x| m | 1 << x)
}

/// Powerset lattice of the system's states, with atoms named by state
/// labels. Element ids are state-set masks. Glue for cross-validating
/// partition operations against the general domain machinery.
pub fn state_lattice(ts: &TransitionSystem) -> Arc<Lattice> {
    assert!(ts.state_count() <= EXHAUSTIVE_BLOCK_LIMIT, "state space too large to materialize");
    let atoms: Vec<String> = (0..ts.state_count()).map(|s| ts.label(s).to_string()).collect();
    Arc::new(Lattice::powerset(atoms))
}

/// The successor map as a monotone function on [`state_lattice`].
pub fn post_fn(ts: &TransitionSystem, lattice: &Arc<Lattice>) -> MonotoneFn {
    set_fn(ts, lattice, "post", |ts, s| ts.post(s))
}

/// The predecessor map as a monotone function on [`state_lattice`].
pub fn pre_fn(ts: &TransitionSystem, lattice: &Arc<Lattice>) -> MonotoneFn {
    set_fn(ts, lattice, "pre", |ts, s| ts.pre(s))
}

fn set_fn(
    ts: &TransitionSystem,
    lattice: &Arc<Lattice>,
    name: &str,
    apply: fn(&TransitionSystem, &BitSet) -> BitSet,
) -> MonotoneFn {
    let n = ts.state_count();
    assert!(lattice.is_powerset() && lattice.atom_count() == Some(n));
    let table: Vec<usize> = (0..lattice.element_count())
        .map(|mask| {
            let s = BitSet::from_iter(n, (0..n).filter(|x| mask >> x & 1 == 1));
            mask_of(&apply(ts, &s))
        })
        .collect();
    MonotoneFn::from_table(lattice, name, table).expect("additive set maps are monotone")
}
