//! Correctness kernels: given a domain A and a family F of monotone
//! functions, the most abstract domain that induces the same best correct
//! approximation of every f in F as A does.
//!
//! Two independent constructions are provided. [`kernel_oracle`] enumerates
//! the definition directly: every meet-closed subset of A's image is tested
//! for b.c.a. equality, and the survivors are joined. It is exponential in
//! the image size and exists to arbitrate. [`correctness_kernel`] computes
//! the same domain from a small generator set: the image of each b.c.a.
//! together with the maximal preimage of each of its values. The two must
//! agree; the test suite and the `--oracle` CLI flag compare them.

use crate::absdom::{
    bca, bca_equal, AbstractDomain, MonotoneFn, EXHAUSTIVE_LIMIT,
};
use crate::bits::BitSet;
use crate::lattice::ElemId;
use std::collections::BTreeMap;
use thiserror::Error;

/// The oracle enumerates all subsets of the image; refuse beyond this.
pub const ORACLE_IMAGE_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("domain image has {found} elements; the oracle handles at most {limit}")]
    ImageTooLarge { found: usize, limit: usize },
}

/// Direct enumeration of the kernel definition: the join of every domain
/// that is at least as abstract as... rather, of every subdomain of A's
/// image that induces the same b.c.a. of each function. Domains over a
/// finite carrier join by image intersection, so the result is the
/// intersection of all surviving images.
pub fn kernel_oracle(
    a: &AbstractDomain,
    fns: &[&MonotoneFn],
) -> Result<AbstractDomain, KernelError> {
    let members: Vec<ElemId> = a.image().iter().collect();
    let m = members.len();
    if m > ORACLE_IMAGE_LIMIT {
        return Err(KernelError::ImageTooLarge { found: m, limit: ORACLE_IMAGE_LIMIT });
    }
    let lattice = a.lattice();
    let top = lattice.top();
    let top_bit = members.iter().position(|&e| e == top).expect("image contains top");
    let n = lattice.element_count();
    let mut survivors = BitSet::full(n);
    for mask in 0usize..1 << m {
        if mask >> top_bit & 1 == 0 {
            continue;
        }
        let chosen: Vec<ElemId> =
            (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| members[i]).collect();
        let meet_closed = chosen
            .iter()
            .all(|&x| chosen.iter().all(|&y| chosen.contains(&lattice.glb2(x, y))));
        if !meet_closed {
            continue;
        }
        let image = BitSet::from_iter(n, chosen.iter().copied());
        let candidate = AbstractDomain::from_image(lattice, &image);
        if fns.iter().all(|f| bca_equal(&candidate, a, f)) {
            survivors.intersect_with(&image);
        }
    }
    Ok(AbstractDomain::from_image(lattice, &survivors))
}

/// Per-function kernel data: the b.c.a. image and, for each of its values,
/// the maximal domain elements mapped onto it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionGenerators {
    /// img(f^A): every value the b.c.a. takes on the domain image.
    pub bca_image: BitSet,
    /// For each b.c.a. value, the maximal elements of its preimage in A.
    pub max_preimages: BTreeMap<ElemId, BitSet>,
}

/// The generator set whose meet closure is the kernel: the b.c.a. image of
/// `f` on `a` united with the maximal preimage of each b.c.a. value.
pub fn function_generators(a: &AbstractDomain, f: &MonotoneFn) -> FunctionGenerators {
    let lattice = a.lattice();
    let n = lattice.element_count();
    let table = bca(a, f);
    let bca_image = table.image(n);
    let mut max_preimages = BTreeMap::new();
    for y in bca_image.iter() {
        let preimage =
            BitSet::from_iter(n, table.iter().filter(|&(_, v)| v == y).map(|(x, _)| x));
        max_preimages.insert(y, lattice.maximal(&preimage));
    }
    FunctionGenerators { bca_image, max_preimages }
}

/// Union of the per-function generators, before closure.
pub fn generator_set(a: &AbstractDomain, f: &MonotoneFn) -> BitSet {
    let gens = function_generators(a, f);
    let mut out = gens.bca_image;
    for maxima in gens.max_preimages.values() {
        out.union_with(maxima);
    }
    out
}

/// The relaxed generator set: like [`generator_set`], but collecting for
/// every domain element y the maximal x with f^A(x) <= y, not only for exact
/// b.c.a. values. Strictly larger in general; its meet closure coincides
/// with the exact set's, which the tests check.
pub fn generator_set_relaxed(a: &AbstractDomain, f: &MonotoneFn) -> BitSet {
    let lattice = a.lattice();
    let n = lattice.element_count();
    let table = bca(a, f);
    let mut out = table.image(n);
    for y in a.image().iter() {
        let below =
            BitSet::from_iter(n, table.iter().filter(|&(_, v)| lattice.leq(v, y)).map(|(x, _)| x));
        if !below.is_empty() {
            out.union_with(&lattice.maximal(&below));
        }
    }
    out
}

/// Result of [`correctness_kernel`].
#[derive(Debug, Clone)]
pub struct KernelResult {
    /// The kernel domain: meet closure of `required` (top included).
    pub kernel: AbstractDomain,
    /// The generator union across the family, before closure.
    pub required: BitSet,
    /// Generator breakdown per function, keyed by function name.
    pub per_function: BTreeMap<String, FunctionGenerators>,
    /// Whether the post-verification compared b.c.a.s on the whole carrier
    /// (false means the carrier was too large and sampling was used).
    pub exhaustive_verification: bool,
}

/// Computes the correctness kernel of `a` for the family `fns` from the
/// generator sets, then re-verifies b.c.a. equality for every function.
/// Verification failure is a panic: it would falsify the construction, not
/// the input.
pub fn correctness_kernel(a: &AbstractDomain, fns: &[&MonotoneFn]) -> KernelResult {
    let lattice = a.lattice();
    let mut required = BitSet::new(lattice.element_count());
    let mut per_function = BTreeMap::new();
    for f in fns {
        let gens = function_generators(a, f);
        required.union_with(&gens.bca_image);
        for maxima in gens.max_preimages.values() {
            required.union_with(maxima);
        }
        let previous = per_function.insert(f.name().to_string(), gens);
        assert!(previous.is_none(), "family has two functions named {:?}", f.name());
    }
    let kernel = AbstractDomain::from_image(lattice, &required);
    for f in fns {
        assert!(
            bca_equal(&kernel, a, f),
            "kernel failed to preserve the b.c.a. of {:?}",
            f.name()
        );
    }
    KernelResult {
        kernel,
        required,
        per_function,
        exhaustive_verification: lattice.element_count() <= EXHAUSTIVE_LIMIT,
    }
}

/// Report of [`most_concrete_counterexample`]: two refinements of one domain
/// that induce the same b.c.a. individually, while their reduced product
/// does not. No most concrete b.c.a.-preserving domain exists in general;
/// only the most abstract one (the kernel) is guaranteed.
#[derive(Debug, Clone)]
pub struct MostConcreteReport {
    pub f: MonotoneFn,
    pub mu: AbstractDomain,
    pub rho1: AbstractDomain,
    pub rho2: AbstractDomain,
    pub product: AbstractDomain,
    /// Element where the product's b.c.a. differs from mu's.
    pub witness: ElemId,
}

/// Demonstrates on the kite fixture that "most concrete domain with the same
/// b.c.a." is not a well-defined notion.
pub fn most_concrete_counterexample() -> MostConcreteReport {
    let (lattice, f) = crate::fixtures::kite_with_function();
    let by_names = |names: &[&str]| {
        let ids = names.iter().map(|n| lattice.element_by_name(n).unwrap());
        AbstractDomain::from_image(&lattice, &BitSet::from_iter(lattice.element_count(), ids))
    };
    let mu = by_names(&["1", "5"]);
    let rho1 = by_names(&["1", "3", "5"]);
    let rho2 = by_names(&["1", "4", "5"]);
    assert!(bca_equal(&rho1, &mu, &f) && bca_equal(&rho2, &mu, &f));
    let product = crate::absdom::abs_glb(&[&rho1, &rho2]);
    let witness = (0..lattice.element_count())
        .find(|&c| {
            product.apply(f.eval(product.apply(c))) != mu.apply(f.eval(mu.apply(c)))
        })
        .expect("the product must break b.c.a. equality");
    MostConcreteReport { f, mu, rho1, rho2, product, witness }
}
