//! DOT rendering of abstractions and lattices.
//!
//! Output is byte-deterministic: nodes appear in block or element id order,
//! edges in source-major order. Lattices and domain images are drawn as
//! Hasse diagrams, with only cover edges.

use crate::absdom::AbstractDomain;
use crate::ats::{AbstractTransitionSystem, TransitionSystem};
use crate::lattice::Lattice;

fn quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// An abstract transition system as a digraph: one box per block labeled
/// with its member states, an arrow per abstract edge. Blocks holding an
/// initial state get a double border; blocks holding an error state are
/// filled.
pub fn ats_dot(ats: &AbstractTransitionSystem, ts: &TransitionSystem) -> String {
    let p = ats.partition();
    let mut out = String::from("digraph abstraction {\n");
    if p.block_count() > 0 {
        out.push_str("  rankdir=LR;\n  node [shape=box];\n");
    }
    for b in 0..p.block_count() {
        let mut attrs = format!("label=\"{}\"", quote(&p.render_block(b, ts)));
        if p.block(b).intersects(ts.init()) {
            attrs.push_str(", peripheries=2");
        }
        if p.block(b).intersects(ts.error()) {
            attrs.push_str(", style=filled");
        }
        out.push_str(&format!("  b{b} [{attrs}];\n"));
    }
    for (from, to) in ats.abs_edges() {
        out.push_str(&format!("  b{from} -> b{to};\n"));
    }
    out.push_str("}\n");
    out
}

/// A lattice as a Hasse diagram: undirected-looking cover edges drawn
/// bottom-up.
pub fn lattice_dot(lattice: &Lattice) -> String {
    let mut out = String::from("digraph lattice {\n");
    if lattice.element_count() > 0 {
        out.push_str("  rankdir=BT;\n  node [shape=plaintext];\n  edge [dir=none];\n");
    }
    for e in 0..lattice.element_count() {
        out.push_str(&format!("  e{e} [label=\"{}\"];\n", quote(&lattice.name(e))));
    }
    for (lower, upper) in lattice.covers() {
        out.push_str(&format!("  e{lower} -> e{upper};\n"));
    }
    out.push_str("}\n");
    out
}

/// A domain image as the Hasse diagram of the induced subposet.
pub fn domain_dot(dom: &AbstractDomain) -> String {
    let lattice = dom.lattice();
    let members: Vec<usize> = dom.image().iter().collect();
    let mut out = String::from("digraph domain {\n");
    if !members.is_empty() {
        out.push_str("  rankdir=BT;\n  node [shape=plaintext];\n  edge [dir=none];\n");
    }
    for &e in &members {
        out.push_str(&format!("  e{e} [label=\"{}\"];\n", quote(&lattice.name(e))));
    }
    for &x in &members {
        for &y in &members {
            if x == y || !lattice.leq(x, y) {
                continue;
            }
            let covered = members
                .iter()
                .any(|&z| z != x && z != y && lattice.leq(x, z) && lattice.leq(z, y));
            if !covered {
                out.push_str(&format!("  e{x} -> e{y};\n"));
            }
        }
    }
    out.push_str("}\n");
    out
}
