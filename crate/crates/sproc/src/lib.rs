//! Total stream processors, built from two interlocking representations.
//!
//! A function that consumes an infinite input stream and produces a single
//! value, reading only finitely much input, can be represented by a
//! well-founded *reader tree* ([`Tree`]): each internal node reads one input
//! item and each leaf returns the result. A function that produces an infinite
//! *output* stream is represented by an infinite sequence of such trees, one
//! per output item, packaged as a coinductive processor ([`Proc`]): forcing a
//! processor yields a tree whose leaves carry an output item and the next
//! processor.
//!
//! On top of these two types the crate provides:
//!
//! - demand-driven infinite [`Stream`]s with structural sharing
//!   ([`streams`]),
//! - evaluators `eat` (tree on stream, [`tree`]) and `Proc::eat` (processor on
//!   stream, [`processor`]),
//! - extraction of tree and processor representations from executable stream
//!   functions by probing them on finite prefixes ([`represent`]),
//! - two composition operators for processors, output-driven and
//!   input-driven, which agree extensionally but consume input at different
//!   times ([`compose`]),
//! - a registry of byte-level processors and a seeded generator of random
//!   ones ([`combinators`]),
//! - a finite-depth agreement harness used by the test suite ([`harness`]),
//! - a small pipeline CLI over byte streams ([`cli`]).
//!
//! Totality is the organizing principle: trees are finite along every path,
//! processors produce each output after finitely many reads, and the
//! evaluators are loops, not unbounded recursions. Debug builds additionally
//! meter `fold` and `eat` with a step budget so that an accidentally circular
//! tree fails fast instead of hanging.

pub mod cli;
pub mod combinators;
pub mod compose;
pub mod harness;
mod lazy;
pub mod processor;
pub mod represent;
pub mod signal;
pub mod streams;
pub mod tree;

pub use compose::{compose, compose_greedy, compose_lazy, CompState, Mode};
pub use processor::Proc;
pub use represent::{probe, ProbeOutcome, StreamFn, StreamMap};
pub use streams::Stream;
pub use tree::{EatResult, Tree};

/// Bounds every item type must satisfy to flow through streams, trees, and
/// processors: values are cloned into lazily forced cells that may be shared
/// across threads.
pub trait Item: Clone + Send + Sync + 'static {}

impl<T: Clone + Send + Sync + 'static> Item for T {}
