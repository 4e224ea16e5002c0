//! Predicate abstraction of small programs over bounded integers.
//!
//! Program states are tuples of variables modulo a fixed base. A predicate
//! set maps each state to a bit vector; sets of states abstract either to
//! sets of vectors (the Boolean abstraction, isomorphic to the powerset of
//! vectors) or to one three-valued vector (the Cartesian abstraction, which
//! loses relational information). The statement tables computed here are
//! best correct approximations by construction, so the kernel machinery
//! applies to them directly.

use crate::absdom::MonotoneFn;
use crate::bits::BitSet;
use crate::kernel::{correctness_kernel, KernelResult};
use crate::lattice::Lattice;
use std::sync::Arc;
use thiserror::Error;

/// Smallest accepted variable base. Below this some predicate vectors lose
/// all inhabitants and the abstraction degenerates.
pub const MIN_MODULUS: usize = 3;

/// Largest accepted variable base, keeping state spaces enumerable.
pub const MAX_MODULUS: usize = 16;

/// Most predicates a set may hold; vector sets are machine-word masks.
pub const MAX_PREDICATES: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredabsError {
    #[error("modulus {got} is outside {MIN_MODULUS}..={MAX_MODULUS}")]
    ModulusOutOfRange { got: usize },
    #[error("{got} predicates exceed the limit of {limit}")]
    TooManyPredicates { got: usize, limit: usize },
}

/// The finite space of variable tuples modulo a base. States are encoded as
/// indices with variable 0 as the least significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramSpace {
    vars: Vec<String>,
    modulus: usize,
    states: usize,
}

impl ProgramSpace {
    pub fn new(vars: &[&str], modulus: usize) -> Result<ProgramSpace, PredabsError> {
        if !(MIN_MODULUS..=MAX_MODULUS).contains(&modulus) {
            return Err(PredabsError::ModulusOutOfRange { got: modulus });
        }
        assert!(!vars.is_empty() && vars.len() <= 8, "state spaces must stay enumerable");
        let states = modulus.pow(vars.len() as u32);
        let vars = vars.iter().map(|v| v.to_string()).collect();
        Ok(ProgramSpace { vars, modulus, states })
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn index(&self, state: &[usize]) -> usize {
        assert_eq!(state.len(), self.vars.len());
        state.iter().rev().fold(0, |acc, &d| {
            assert!(d < self.modulus);
            acc * self.modulus + d
        })
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        assert!(index < self.states);
        let mut state = Vec::with_capacity(self.vars.len());
        for _ in 0..self.vars.len() {
            state.push(index % self.modulus);
            index /= self.modulus;
        }
        state
    }
}

/// A nondeterministic state transformer given by its successor sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    name: String,
    next: Vec<BitSet>,
}

impl Statement {
    /// A deterministic statement from a state function.
    pub fn deterministic(
        space: &ProgramSpace,
        name: &str,
        f: impl Fn(&[usize]) -> Vec<usize>,
    ) -> Statement {
        let n = space.state_count();
        let next = (0..n)
            .map(|i| BitSet::from_iter(n, [space.index(&f(&space.decode(i)))]))
            .collect();
        Statement { name: name.to_string(), next }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn post(&self, states: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.next.len());
        for s in states.iter() {
            out.union_with(&self.next[s]);
        }
        out
    }
}

/// Predicates evaluated over a program space. Each state gets a vector with
/// bit i set when predicate i holds; vector sets are masks with bit v for
/// vector v.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSet {
    names: Vec<String>,
    sat: Vec<BitSet>,
    vector_of: Vec<usize>,
    vector_states: Vec<BitSet>,
}

impl PredicateSet {
    pub fn from_fns(
        space: &ProgramSpace,
        preds: &[(&str, &dyn Fn(&[usize]) -> bool)],
    ) -> Result<PredicateSet, PredabsError> {
        let k = preds.len();
        if k == 0 || k > MAX_PREDICATES {
            return Err(PredabsError::TooManyPredicates { got: k, limit: MAX_PREDICATES });
        }
        let n = space.state_count();
        let names = preds.iter().map(|(name, _)| name.to_string()).collect();
        let mut sat = vec![BitSet::new(n); k];
        let mut vector_of = vec![0usize; n];
        let mut vector_states = vec![BitSet::new(n); 1 << k];
        for s in 0..n {
            let state = space.decode(s);
            let mut v = 0;
            for (i, (_, p)) in preds.iter().enumerate() {
                if p(&state) {
                    sat[i].insert(s);
                    v |= 1 << i;
                }
            }
            vector_of[s] = v;
            vector_states[v].insert(s);
        }
        Ok(PredicateSet { names, sat, vector_of, vector_states })
    }

    /// Number of predicates.
    pub fn count(&self) -> usize {
        self.names.len()
    }

    /// Number of predicate vectors.
    pub fn vector_count(&self) -> usize {
        1 << self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    /// States satisfying predicate i.
    pub fn sat(&self, i: usize) -> &BitSet {
        &self.sat[i]
    }

    pub fn vector_of(&self, state: usize) -> usize {
        self.vector_of[state]
    }

    /// Vector set mask holding every vector.
    pub fn top_mask(&self) -> usize {
        (1 << self.vector_count()) - 1
    }

    /// Vectors realized by some state of `states`.
    pub fn alpha(&self, states: &BitSet) -> usize {
        let mut mask = 0;
        for s in states.iter() {
            mask |= 1 << self.vector_of[s];
        }
        mask
    }

    /// States whose vector belongs to `mask`.
    pub fn gamma(&self, mask: usize) -> BitSet {
        let mut out = BitSet::new(self.vector_of.len());
        for v in 0..self.vector_count() {
            if mask >> v & 1 == 1 {
                out.union_with(&self.vector_states[v]);
            }
        }
        out
    }

    /// Vector display, one character per predicate: `10` sets the first
    /// predicate and clears the second.
    pub fn vector_name(&self, v: usize) -> String {
        (0..self.count()).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect()
    }

    /// Vector set display in vector order, e.g. `{00,11}`.
    pub fn render_mask(&self, mask: usize) -> String {
        let names: Vec<String> = (0..self.vector_count())
            .filter(|&v| mask >> v & 1 == 1)
            .map(|v| self.vector_name(v))
            .collect();
        format!("{{{}}}", names.join(","))
    }
}

/// Per-vector table of the best approximation of a statement: entry v is
/// the vector set reached from the states realizing v.
pub fn bca_post_table(preds: &PredicateSet, stmt: &Statement) -> Vec<usize> {
    (0..preds.vector_count())
        .map(|v| preds.alpha(&stmt.post(&preds.gamma(1 << v))))
        .collect()
}

/// Applies a per-vector table to a vector set additively.
pub fn apply_table(table: &[usize], mask: usize) -> usize {
    (0..table.len()).filter(|&v| mask >> v & 1 == 1).fold(0, |acc, v| acc | table[v])
}

/// Lifts a per-vector table to a monotone function on the powerset lattice
/// of vectors, whose element ids coincide with vector set masks.
pub fn lift_table(lattice: &Arc<Lattice>, name: &str, table: &[usize]) -> MonotoneFn {
    assert!(lattice.is_powerset() && lattice.atom_count() == Some(table.len()));
    let rows = (0..lattice.element_count()).map(|m| apply_table(table, m)).collect();
    MonotoneFn::from_table(lattice, name, rows).expect("additive lifts are monotone")
}

/// The powerset lattice of predicate vectors. Atom i is vector i, named by
/// [`PredicateSet::vector_name`], and element ids are vector set masks.
pub fn vector_lattice(preds: &PredicateSet) -> Result<Arc<Lattice>, PredabsError> {
    if preds.count() > 3 {
        // The carrier would hold 2^16 elements; keep the table closed.
        return Err(PredabsError::TooManyPredicates { got: preds.count(), limit: 3 });
    }
    let atoms = (0..preds.vector_count()).map(|v| preds.vector_name(v)).collect();
    Ok(Arc::new(Lattice::powerset(atoms)))
}

/// The correctness kernel of the full vector set domain for the given
/// statements, lifted through their best approximation tables.
pub fn boolean_kernel(
    preds: &PredicateSet,
    stmts: &[&Statement],
) -> Result<(Arc<Lattice>, KernelResult), PredabsError> {
    let lattice = vector_lattice(preds)?;
    let fns: Vec<MonotoneFn> = stmts
        .iter()
        .map(|s| lift_table(&lattice, s.name(), &bca_post_table(preds, s)))
        .collect();
    let full = crate::absdom::AbstractDomain::identity(&lattice);
    let refs: Vec<&MonotoneFn> = fns.iter().collect();
    Ok((lattice, correctness_kernel(&full, &refs)))
}

/// One component of a Cartesian vector: a forced bit or no information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trit {
    Zero,
    One,
    Any,
}

/// The Cartesian abstraction of a vector set: componentwise bits with `Any`
/// where both values occur, plus an explicit empty element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CartesianElem {
    Bottom,
    Tuple(Vec<Trit>),
}

impl CartesianElem {
    pub fn top(k: usize) -> CartesianElem {
        CartesianElem::Tuple(vec![Trit::Any; k])
    }

    pub fn leq(&self, other: &CartesianElem) -> bool {
        match (self, other) {
            (CartesianElem::Bottom, _) => true,
            (_, CartesianElem::Bottom) => false,
            (CartesianElem::Tuple(a), CartesianElem::Tuple(b)) => {
                a.iter().zip(b).all(|(x, y)| x == y || matches!(y, Trit::Any))
            }
        }
    }

    /// Display such as `(0,*)`; the empty element prints as `bottom`.
    pub fn render(&self) -> String {
        match self {
            CartesianElem::Bottom => "bottom".to_string(),
            CartesianElem::Tuple(ts) => {
                let parts: Vec<&str> = ts
                    .iter()
                    .map(|t| match t {
                        Trit::Zero => "0",
                        Trit::One => "1",
                        Trit::Any => "*",
                    })
                    .collect();
                format!("({})", parts.join(","))
            }
        }
    }
}

/// Componentwise abstraction of a state set: each predicate maps to its
/// forced value, or to `Any` when the set realizes both.
pub fn cart_alpha(preds: &PredicateSet, states: &BitSet) -> CartesianElem {
    if states.is_empty() {
        return CartesianElem::Bottom;
    }
    let trits = (0..preds.count())
        .map(|i| {
            let mut seen = [false, false];
            for s in states.iter() {
                seen[(preds.vector_of(s) >> i & 1) as usize] = true;
            }
            match seen {
                [true, false] => Trit::Zero,
                [false, true] => Trit::One,
                _ => Trit::Any,
            }
        })
        .collect();
    CartesianElem::Tuple(trits)
}

/// States compatible with every component.
pub fn cart_gamma(preds: &PredicateSet, elem: &CartesianElem) -> BitSet {
    let n = preds.sat[0].universe();
    match elem {
        CartesianElem::Bottom => BitSet::new(n),
        CartesianElem::Tuple(ts) => {
            let mut mask = 0usize;
            for v in 0..preds.vector_count() {
                let fits = ts
                    .iter()
                    .enumerate()
                    .all(|(i, t)| match t {
                        Trit::Zero => v >> i & 1 == 0,
                        Trit::One => v >> i & 1 == 1,
                        Trit::Any => true,
                    });
                if fits {
                    mask |= 1 << v;
                }
            }
            preds.gamma(mask)
        }
    }
}

/// Componentwise join; differing bits widen to `Any`.
pub fn cart_join(a: &CartesianElem, b: &CartesianElem) -> CartesianElem {
    match (a, b) {
        (CartesianElem::Bottom, x) | (x, CartesianElem::Bottom) => x.clone(),
        (CartesianElem::Tuple(xs), CartesianElem::Tuple(ys)) => CartesianElem::Tuple(
            xs.iter()
                .zip(ys)
                .map(|(x, y)| if x == y { *x } else { Trit::Any })
                .collect(),
        ),
    }
}

/// The two-statement loop used throughout: four variables, assignment
/// `x:=y; z:=0` and guarded increment `x:=x+1; z:=1`, observed through the
/// predicates `z=0` and `x=y`.
#[derive(Debug, Clone)]
pub struct LoopFixture {
    pub space: ProgramSpace,
    pub preds: PredicateSet,
    pub s1: Statement,
    pub s2: Statement,
}

pub fn loop_fixture(modulus: usize) -> Result<LoopFixture, PredabsError> {
    let space = ProgramSpace::new(&["x", "y", "z", "w"], modulus)?;
    let preds = PredicateSet::from_fns(
        &space,
        &[("z=0", &|s: &[usize]| s[2] == 0), ("x=y", &|s: &[usize]| s[0] == s[1])],
    )?;
    let s1 = Statement::deterministic(&space, "assign", |s| vec![s[1], s[1], 0, s[3]]);
    let s2 = Statement::deterministic(&space, "bump", move |s| {
        vec![(s[0] + 1) % modulus, s[1], 1, s[3]]
    });
    Ok(LoopFixture { space, preds, s1, s2 })
}

/// Which abstraction analyzes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopAbstraction {
    Boolean,
    Kernel,
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopVerdict {
    /// Every state reaching the exit check satisfies the target predicate.
    Unreachable,
    /// The abstraction cannot decide the exit check.
    Inconclusive,
}

impl LoopVerdict {
    pub fn label(self) -> &'static str {
        match self {
            LoopVerdict::Unreachable => "UNREACHABLE",
            LoopVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Iteration data of a vector set analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolRun {
    /// Successive loop values from bottom to the fixpoint.
    pub stages: Vec<usize>,
    pub lfp: usize,
    /// Fixpoint filtered through the exit condition.
    pub exit: usize,
}

/// Iteration data of a Cartesian analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CartRun {
    pub stages: Vec<CartesianElem>,
    pub lfp: CartesianElem,
    pub exit: CartesianElem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopRun {
    Boolean(BoolRun),
    Kernel {
        run: BoolRun,
        /// Masks of the kernel image, ascending.
        image: Vec<usize>,
    },
    Cartesian(CartRun),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopOutcome {
    pub modulus: usize,
    pub verdict: LoopVerdict,
    pub run: LoopRun,
}

/// Runs the loop to its fixpoint over vector sets, closing every value with
/// `close` (identity for the full Boolean domain, the closure of a kernel
/// for a simplified one).
pub fn bool_domain_run(
    preds: &PredicateSet,
    t1: &[usize],
    t2: &[usize],
    close: impl Fn(usize) -> usize,
) -> BoolRun {
    let top = close(preds.top_mask());
    let body = |w: usize| {
        let a = close(apply_table(t1, w));
        close(a | close(apply_table(t2, a)))
    };
    let mut x = close(0);
    let mut stages = vec![x];
    loop {
        let next = close(x | body(close(x | top)));
        if next == x {
            break;
        }
        stages.push(next);
        x = next;
    }
    let exit = close(preds.alpha(&preds.gamma(x).intersection(preds.sat(1))));
    BoolRun { stages, lfp: x, exit }
}

fn cart_run(fixture: &LoopFixture) -> CartRun {
    let preds = &fixture.preds;
    let post = |stmt: &Statement, e: &CartesianElem| {
        cart_alpha(preds, &stmt.post(&cart_gamma(preds, e)))
    };
    let top = CartesianElem::top(preds.count());
    let body = |w: &CartesianElem| {
        let a = post(&fixture.s1, w);
        let b = post(&fixture.s2, &a);
        cart_join(&a, &b)
    };
    let mut x = CartesianElem::Bottom;
    let mut stages = vec![x.clone()];
    loop {
        let next = cart_join(&x, &body(&cart_join(&x, &top)));
        if next == x {
            break;
        }
        stages.push(next.clone());
        x = next;
    }
    let exit = cart_alpha(preds, &cart_gamma(preds, &x).intersection(preds.sat(1)));
    CartRun { stages, lfp: x.clone(), exit }
}

/// True when every vector of `mask` sets bit `i`.
fn mask_entails(preds: &PredicateSet, mask: usize, i: usize) -> bool {
    (0..preds.vector_count()).filter(|&v| mask >> v & 1 == 1).all(|v| v >> i & 1 == 1)
}

/// Analyzes the loop fixture under the chosen abstraction and decides
/// whether the first predicate is entailed at the exit check.
pub fn verify_loop(
    abstraction: LoopAbstraction,
    modulus: usize,
) -> Result<LoopOutcome, PredabsError> {
    let fixture = loop_fixture(modulus)?;
    let preds = &fixture.preds;
    let t1 = bca_post_table(preds, &fixture.s1);
    let t2 = bca_post_table(preds, &fixture.s2);
    let (verdict, run) = match abstraction {
        LoopAbstraction::Boolean => {
            let run = bool_domain_run(preds, &t1, &t2, |m| m);
            let verdict = if mask_entails(preds, run.exit, 0) {
                LoopVerdict::Unreachable
            } else {
                LoopVerdict::Inconclusive
            };
            (verdict, LoopRun::Boolean(run))
        }
        LoopAbstraction::Kernel => {
            let (_lattice, kernel) = boolean_kernel(preds, &[&fixture.s1, &fixture.s2])?;
            let dom = kernel.kernel.clone();
            let run = bool_domain_run(preds, &t1, &t2, |m| dom.apply(m));
            let verdict = if mask_entails(preds, run.exit, 0) {
                LoopVerdict::Unreachable
            } else {
                LoopVerdict::Inconclusive
            };
            let image = dom.image().iter().collect();
            (verdict, LoopRun::Kernel { run, image })
        }
        LoopAbstraction::Cartesian => {
            let run = cart_run(&fixture);
            let verdict = match &run.exit {
                CartesianElem::Bottom => LoopVerdict::Unreachable,
                CartesianElem::Tuple(ts) => {
                    if ts[0] == Trit::One {
                        LoopVerdict::Unreachable
                    } else {
                        LoopVerdict::Inconclusive
                    }
                }
            };
            (verdict, LoopRun::Cartesian(run))
        }
    };
    Ok(LoopOutcome { modulus, verdict, run })
}
