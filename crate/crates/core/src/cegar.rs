//! Counterexample-guided refinement of partition abstractions.
//!
//! An abstract counterexample is a block path from an initial block to an
//! error block. Forward propagation of reachable sets along the path either
//! certifies a concrete witness or pinpoints the first block where the path
//! breaks; that block is then split, either coarsely (reached part against
//! the rest) or by the finer split that also separates states relevant to
//! the failure from states relevant to the dead end.

use crate::ats::{build_ats, AbstractTransitionSystem, Partition, TransitionSystem};
use crate::bits::BitSet;
use std::collections::VecDeque;
use thiserror::Error;

/// Block index sequence through an abstract transition system.
pub type AbstractPath = Vec<usize>;

/// Longest path accepted by the concrete-path enumerator.
pub const CONCRETE_PATH_BOUND: usize = 12;

/// Largest state space accepted by [`spurious_preimage_check`].
pub const PREIMAGE_STATE_LIMIT: usize = 12;

/// Longest walk explored by [`spurious_preimage_check`].
pub const PREIMAGE_LENGTH_LIMIT: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CegarError {
    #[error("the system has no initial states")]
    MissingInit,
    #[error("the system has no error states")]
    MissingError,
    #[error("the path is not spurious at position {k}")]
    NotSpuriousAt { k: usize },
    #[error("no member of block at position {k} steps into the next block")]
    EmptyBadSet { k: usize },
    #[error("the coarse partition does not coarsen the fine one")]
    NotACoarsening,
    #[error("{states} states exceed the exhaustive walk limit of {limit}")]
    SystemTooLarge { states: usize, limit: usize },
    #[error("walk length {requested} exceeds the limit of {limit}")]
    WalkTooLong { requested: usize, limit: usize },
}

/// Forward propagation of [`spu`]: `sets[i]` holds the states of the i-th
/// block reachable along the path prefix. `failure_index` is the least
/// 1-based k whose successor set is empty, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpuResult {
    pub sets: Vec<BitSet>,
    pub failure_index: Option<usize>,
}

/// Propagates reachability along `path`: the first set is the whole first
/// block, and each following set is the image of the previous one inside the
/// next block. The path is spurious exactly when some set comes out empty.
pub fn spu(ts: &TransitionSystem, p: &Partition, path: &[usize]) -> SpuResult {
    assert!(!path.is_empty(), "paths have at least one block");
    let mut sets = Vec::with_capacity(path.len());
    sets.push(p.block(path[0]).clone());
    for &b in &path[1..] {
        let mut next = ts.post(sets.last().unwrap());
        next.intersect_with(p.block(b));
        sets.push(next);
    }
    let failure_index = sets.iter().position(|s| s.is_empty());
    SpuResult { sets, failure_index }
}

/// All concrete state sequences that follow `path` block by block, in
/// lexicographic order. Exact but exponential, hence the length bound.
pub fn enumerate_concrete_paths(
    ts: &TransitionSystem,
    p: &Partition,
    path: &[usize],
) -> Vec<Vec<usize>> {
    assert!(!path.is_empty() && path.len() <= CONCRETE_PATH_BOUND);
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(path.len());
    fn extend(
        ts: &TransitionSystem,
        p: &Partition,
        path: &[usize],
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let pos = prefix.len();
        if pos == path.len() {
            out.push(prefix.clone());
            return;
        }
        let block = p.block(path[pos]);
        let candidates = match prefix.last() {
            None => block.clone(),
            Some(&prev) => ts.succ(prev).intersection(block),
        };
        for s in candidates.iter() {
            prefix.push(s);
            extend(ts, p, path, prefix, out);
            prefix.pop();
        }
    }
    extend(ts, p, path, &mut prefix, &mut out);
    out
}

/// Dissection of the block where a spurious path fails.
///
/// `dead` are the states reached along the prefix (they cannot continue),
/// `bad` are the states with a step into the next block (they cannot be
/// reached), and the rest is `irrelevant`. The irrelevant states are further
/// classified by whether they share both a predecessor block and a successor
/// block with the bad states (`bad_irr`), with the dead states (`dead_irr`),
/// with both (`both_irr`), or with neither (`fully_irr`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub block: usize,
    pub dead: BitSet,
    pub bad: BitSet,
    pub irrelevant: BitSet,
    pub bad_irr: BitSet,
    pub dead_irr: BitSet,
    pub both_irr: BitSet,
    pub fully_irr: BitSet,
}

/// Dissects the failure block of `path`, which must be spurious at the
/// 1-based position `k` under [`spu`].
pub fn split_failure_block(
    ts: &TransitionSystem,
    p: &Partition,
    path: &[usize],
    k: usize,
) -> Result<SplitResult, CegarError> {
    let run = spu(ts, p, path);
    if run.failure_index != Some(k) {
        return Err(CegarError::NotSpuriousAt { k });
    }
    let block = path[k - 1];
    let members = p.block(block);
    let dead = run.sets[k - 1].clone();
    let bad = members.intersection(&ts.pre(p.block(path[k])));
    if bad.is_empty() {
        return Err(CegarError::EmptyBadSet { k });
    }
    assert!(!dead.intersects(&bad), "reached states cannot step into the next block");
    let mut irrelevant = members.clone();
    irrelevant.difference_with(&dead);
    irrelevant.difference_with(&bad);
    // A state is tied to a part if it can be reached from the blocks that
    // reach the part and can reach the blocks the part reaches.
    let tied = |part: &BitSet| {
        let mut t = ts.post(&p.gamma(&p.alpha(&ts.pre(part))));
        t.intersect_with(&ts.pre(&p.gamma(&p.alpha(&ts.post(part)))));
        t.intersect_with(&irrelevant);
        t
    };
    let bad_irr = tied(&bad);
    let dead_irr = tied(&dead);
    let both_irr = bad_irr.intersection(&dead_irr);
    let mut fully_irr = irrelevant.clone();
    fully_irr.difference_with(&bad_irr.union(&dead_irr));
    Ok(SplitResult { block, dead, bad, irrelevant, bad_irr, dead_irr, both_irr, fully_irr })
}

/// Coarse refinement: the failure block is split into the reached part and
/// everything else.
pub fn refine_basic(p: &Partition, split: &SplitResult) -> Partition {
    let rest = split.bad.union(&split.irrelevant);
    p.split_block(split.block, &[split.dead.clone(), rest])
        .expect("the dissection partitions the block")
}

/// Guided refinement: irrelevant states tied to the dead part stay with it,
/// those tied to the bad part or to neither go with the bad part, and those
/// tied to both stay with the dead part.
pub fn refine_egas(p: &Partition, split: &SplitResult) -> Partition {
    let dead_side = split.dead.union(&split.dead_irr);
    let mut bad_side = split.bad.union(&split.fully_irr);
    let mut bad_only = split.bad_irr.clone();
    bad_only.difference_with(&split.both_irr);
    bad_side.union_with(&bad_only);
    p.split_block(split.block, &[dead_side, bad_side])
        .expect("the dissection partitions the block")
}

/// Shortest block path from an initial block to an error block, with ties
/// broken by the least block index at every step. `None` when no error block
/// is reachable.
pub fn find_counterexample(
    ats: &AbstractTransitionSystem,
    init_blocks: &BitSet,
    error_blocks: &BitSet,
) -> Option<AbstractPath> {
    let n = ats.block_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for b in error_blocks.iter() {
        dist[b] = 0;
        queue.push_back(b);
    }
    while let Some(b) = queue.pop_front() {
        for q in ats.block_pred(b).iter() {
            if dist[q] == usize::MAX {
                dist[q] = dist[b] + 1;
                queue.push_back(q);
            }
        }
    }
    let start = init_blocks
        .iter()
        .filter(|&b| dist[b] != usize::MAX)
        .min_by_key(|&b| (dist[b], b))?;
    let mut path = vec![start];
    let mut cur = start;
    while dist[cur] > 0 {
        let next = ats
            .block_succ(cur)
            .iter()
            .find(|&q| dist[q] == dist[cur] - 1)
            .expect("a block at distance d has a successor at distance d-1");
        path.push(next);
        cur = next;
    }
    Some(path)
}

/// Which refinement to apply to the failure block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    Basic,
    Egas,
}

impl Heuristic {
    pub fn label(self) -> &'static str {
        match self {
            Heuristic::Basic => "basic",
            Heuristic::Egas => "egas",
        }
    }
}

/// What a refinement iteration did to the abstraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefineStep {
    /// The failure block was split by the chosen heuristic at position `k`.
    Heuristic { k: usize },
    /// A non-spurious path had no witness starting in an initial state, so
    /// the first block was split along the initial set.
    EndpointInit { block: usize },
    /// A non-spurious path had no witness ending in an error state, so the
    /// last block was split along the error set.
    EndpointError { block: usize },
}

/// One refinement iteration: the abstraction it started from, the abstract
/// counterexample found there, its propagation, and the applied split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub partition: Partition,
    pub path: AbstractPath,
    pub propagation: SpuResult,
    pub split: Option<SplitResult>,
    pub step: RefineStep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// No abstract path from an initial block to an error block remains.
    Safe,
    /// A concrete path from an initial state to an error state.
    RealCounterexample(Vec<usize>),
    /// The iteration budget ran out with an abstract counterexample left.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CegarOutcome {
    pub verdict: Verdict,
    pub trace: Vec<IterationRecord>,
    pub final_partition: Partition,
}

/// Lexicographically least concrete witness of `path` that starts in an
/// initial state and ends in an error state, if one exists.
fn concrete_witness(ts: &TransitionSystem, p: &Partition, path: &[usize]) -> Option<Vec<usize>> {
    let n = ts.state_count();
    let mut failed = vec![vec![false; n]; path.len()];
    fn search(
        ts: &TransitionSystem,
        p: &Partition,
        path: &[usize],
        failed: &mut Vec<Vec<bool>>,
        prefix: &mut Vec<usize>,
    ) -> bool {
        let pos = prefix.len();
        if pos == path.len() {
            return true;
        }
        let block = p.block(path[pos]);
        let mut candidates = match prefix.last() {
            None => block.intersection(ts.init()),
            Some(&prev) => ts.succ(prev).intersection(block),
        };
        if pos == path.len() - 1 {
            candidates.intersect_with(ts.error());
        }
        for s in candidates.iter() {
            if failed[pos][s] {
                continue;
            }
            prefix.push(s);
            if search(ts, p, path, failed, prefix) {
                return true;
            }
            prefix.pop();
            failed[pos][s] = true;
        }
        false
    }
    let mut prefix = Vec::with_capacity(path.len());
    if search(ts, p, path, &mut failed, &mut prefix) {
        Some(prefix)
    } else {
        None
    }
}

/// Refines `p0` until the abstraction proves the error states unreachable,
/// a concrete counterexample is extracted, or `max_iters` refinements have
/// been spent while a counterexample is still present.
pub fn cegar_loop(
    ts: &TransitionSystem,
    p0: &Partition,
    heuristic: Heuristic,
    max_iters: Option<usize>,
) -> Result<CegarOutcome, CegarError> {
    if ts.init().is_empty() {
        return Err(CegarError::MissingInit);
    }
    if ts.error().is_empty() {
        return Err(CegarError::MissingError);
    }
    let mut p = p0.clone();
    let mut trace: Vec<IterationRecord> = Vec::new();
    loop {
        let ats = build_ats(ts, &p);
        let init_blocks = p.alpha(ts.init());
        let error_blocks = p.alpha(ts.error());
        let path = match find_counterexample(&ats, &init_blocks, &error_blocks) {
            None => {
                return Ok(CegarOutcome { verdict: Verdict::Safe, trace, final_partition: p })
            }
            Some(path) => path,
        };
        let propagation = spu(ts, &p, &path);
        if let Some(k) = propagation.failure_index {
            if max_iters.is_some_and(|m| trace.len() >= m) {
                return Ok(CegarOutcome { verdict: Verdict::Exhausted, trace, final_partition: p });
            }
            let split = split_failure_block(ts, &p, &path, k)
                .expect("a block path found in the abstraction has a nonempty bad set");
            let next = match heuristic {
                Heuristic::Basic => refine_basic(&p, &split),
                Heuristic::Egas => refine_egas(&p, &split),
            };
            trace.push(IterationRecord {
                partition: p,
                path,
                propagation,
                split: Some(split),
                step: RefineStep::Heuristic { k },
            });
            p = next;
        } else if let Some(witness) = concrete_witness(ts, &p, &path) {
            return Ok(CegarOutcome {
                verdict: Verdict::RealCounterexample(witness),
                trace,
                final_partition: p,
            });
        } else {
            // The path is realizable but no realization both starts in an
            // initial state and ends in an error state. Sharpening an
            // endpoint block against its mark either exposes a witness or
            // removes the path; when both endpoints are exact a witness
            // must have been found above.
            if max_iters.is_some_and(|m| trace.len() >= m) {
                return Ok(CegarOutcome { verdict: Verdict::Exhausted, trace, final_partition: p });
            }
            let first = path[0];
            let last = *path.last().unwrap();
            let init_part = p.block(first).intersection(ts.init());
            let (block, keep, step) = if !init_part.is_empty() && init_part != *p.block(first) {
                (first, init_part, RefineStep::EndpointInit { block: first })
            } else {
                let error_part = p.block(last).intersection(ts.error());
                assert!(
                    !error_part.is_empty() && error_part != *p.block(last),
                    "exact endpoints admit a witness"
                );
                (last, error_part, RefineStep::EndpointError { block: last })
            };
            let mut rest = p.block(block).clone();
            rest.difference_with(&keep);
            let next = p
                .split_block(block, &[keep, rest])
                .expect("a proper nonempty part splits the block");
            trace.push(IterationRecord { partition: p, path, propagation, split: None, step });
            p = next;
        }
        assert!(trace.len() <= ts.state_count(), "each refinement adds a block");
    }
}

/// Report of [`spurious_preimage_check`]: for every spurious walk of the
/// coarse abstraction, was there a componentwise finer spurious walk of the
/// fine abstraction of the same length?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreimageReport {
    pub holds: bool,
    pub walks_checked: usize,
    pub spurious_checked: usize,
    /// Spurious coarse walks paired with their least fine preimage.
    pub witnesses: Vec<(AbstractPath, AbstractPath)>,
    /// Spurious coarse walks with no spurious fine preimage.
    pub violations: Vec<AbstractPath>,
}

/// True if `fine_path` is a spurious preimage of `coarse_path`: same length,
/// componentwise block containment, consecutive blocks connected in the fine
/// abstraction, and both paths spurious.
pub fn is_spurious_preimage(
    ts: &TransitionSystem,
    fine: &Partition,
    coarse: &Partition,
    coarse_path: &[usize],
    fine_path: &[usize],
) -> bool {
    if fine_path.len() != coarse_path.len() || fine_path.is_empty() {
        return false;
    }
    let contained = fine_path
        .iter()
        .zip(coarse_path)
        .all(|(&fb, &cb)| fine.block(fb).is_subset(coarse.block(cb)));
    let connected = fine_path
        .windows(2)
        .all(|w| ts.post(fine.block(w[0])).intersects(fine.block(w[1])));
    contained
        && connected
        && spu(ts, fine, fine_path).failure_index.is_some()
        && spu(ts, coarse, coarse_path).failure_index.is_some()
}

/// Exhaustively checks that every spurious walk of the coarse abstraction of
/// length at most `max_len` has a spurious preimage walk in the fine one.
pub fn spurious_preimage_check(
    ts: &TransitionSystem,
    fine: &Partition,
    coarse: &Partition,
    max_len: usize,
) -> Result<PreimageReport, CegarError> {
    if !coarse.is_coarsening_of(fine) {
        return Err(CegarError::NotACoarsening);
    }
    if ts.state_count() > PREIMAGE_STATE_LIMIT {
        return Err(CegarError::SystemTooLarge {
            states: ts.state_count(),
            limit: PREIMAGE_STATE_LIMIT,
        });
    }
    if max_len == 0 || max_len > PREIMAGE_LENGTH_LIMIT {
        return Err(CegarError::WalkTooLong { requested: max_len, limit: PREIMAGE_LENGTH_LIMIT });
    }
    let coarse_ats = build_ats(ts, coarse);
    // Fine blocks of each coarse block, for the componentwise search.
    let mut fine_in: Vec<Vec<usize>> = vec![Vec::new(); coarse.block_count()];
    for fb in 0..fine.block_count() {
        let cb = coarse.block_of(fine.block(fb).min().unwrap());
        fine_in[cb].push(fb);
    }
    let mut report = PreimageReport {
        holds: true,
        walks_checked: 0,
        spurious_checked: 0,
        witnesses: Vec::new(),
        violations: Vec::new(),
    };
    let mut walk: Vec<usize> = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![(0..coarse.block_count()).collect()];
    while let Some(frame) = stack.last_mut() {
        let Some(b) = frame.pop() else {
            stack.pop();
            walk.pop();
            continue;
        };
        walk.push(b);
        report.walks_checked += 1;
        if spu(ts, coarse, &walk).failure_index.is_some() {
            report.spurious_checked += 1;
            match least_fine_preimage(ts, fine, &fine_in, &walk) {
                Some(preimage) => report.witnesses.push((walk.clone(), preimage)),
                None => {
                    report.holds = false;
                    report.violations.push(walk.clone());
                }
            }
        }
        if walk.len() < max_len {
            let mut next: Vec<usize> = coarse_ats.block_succ(b).iter().collect();
            next.reverse();
            stack.push(next);
        } else {
            walk.pop();
        }
    }
    Ok(report)
}

/// Lexicographically least spurious fine walk componentwise inside `walk`.
fn least_fine_preimage(
    ts: &TransitionSystem,
    fine: &Partition,
    fine_in: &[Vec<usize>],
    walk: &[usize],
) -> Option<Vec<usize>> {
    fn search(
        ts: &TransitionSystem,
        fine: &Partition,
        fine_in: &[Vec<usize>],
        walk: &[usize],
        prefix: &mut Vec<usize>,
    ) -> bool {
        let pos = prefix.len();
        if pos == walk.len() {
            return spu(ts, fine, prefix).failure_index.is_some();
        }
        for &fb in &fine_in[walk[pos]] {
            if let Some(&prev) = prefix.last() {
                if !ts.post(fine.block(prev)).intersects(fine.block(fb)) {
                    continue;
                }
            }
            prefix.push(fb);
            if search(ts, fine, fine_in, walk, prefix) {
                return true;
            }
            prefix.pop();
        }
        false
    }
    let mut prefix = Vec::with_capacity(walk.len());
    if search(ts, fine, fine_in, walk, &mut prefix) {
        Some(prefix)
    } else {
        None
    }
}

/// Path display via block member labels, e.g. `[1] -> [3,4,5] -> [6]`.
pub fn render_path(p: &Partition, ts: &TransitionSystem, path: &[usize]) -> String {
    let parts: Vec<String> = path.iter().map(|&b| p.render_block(b, ts)).collect();
    parts.join(" -> ")
}
