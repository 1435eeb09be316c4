//! Extraction of tree and processor representatives from executable stream
//! functions.
//!
//! A demand-driven function out of streams reads its argument through
//! `head`/`tail` only, so its reads happen in prefix order. [`probe`] exploits
//! that: it runs the function on a *trap stream* that serves a finite prefix
//! and signals if the function demands more. Either the function returns,
//! proving its value is determined by the prefix, or the trap fires and a
//! longer prefix is needed.
//!
//! [`StreamFn::represent`] turns probing into a reader tree: at each prefix,
//! a determined value becomes a `Ret` leaf, and an undetermined one becomes a
//! `Rd` node whose branches extend the prefix. Branches are built lazily on
//! first demand per letter (and memoized), so infinite alphabets work; a
//! depth budget bounds the search so a discontinuous function fails with a
//! [`budget signal`](crate::signal::BudgetExceeded) instead of diverging.
//!
//! For stream-valued functions, [`split_head`] represents the first output
//! (a tree) and keeps the rest as a function; [`fast_forward`] pushes that
//! rest-function down the tree, specializing it with the path read so far;
//! [`StreamMap::represent`] unfolds the two into a processor, one layer per
//! output item.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, PoisonError};

use crate::signal::{self, Caught};
use crate::streams::Stream;
use crate::tree::Tree;
use crate::{Item, Proc};

/// What the input alphabet must support for representation extraction:
/// branch memo tables need `Eq + Hash`, diagnostics need `Debug`.
pub trait Alphabet: Item + Eq + Hash + fmt::Debug {}

impl<T: Item + Eq + Hash + fmt::Debug> Alphabet for T {}

/// Default depth budget per extracted leaf.
pub const DEFAULT_BUDGET: usize = 4096;

/// A discrete-valued stream function: total, pure, and reading its argument
/// only through `head`/`tail`. Calling it repeatedly is safe; it must not
/// install unwind handlers that would swallow probe traps.
pub struct StreamFn<A: Item, B>(Arc<dyn Fn(&Stream<A>) -> B + Send + Sync>);

/// A stream-valued stream function, under the same contract as [`StreamFn`].
pub struct StreamMap<A: Item, B: Item>(Arc<dyn Fn(&Stream<A>) -> Stream<B> + Send + Sync>);

impl<A: Item, B> Clone for StreamFn<A, B> {
    fn clone(&self) -> Self {
        StreamFn(Arc::clone(&self.0))
    }
}

impl<A: Item, B: Item> Clone for StreamMap<A, B> {
    fn clone(&self) -> Self {
        StreamMap(Arc::clone(&self.0))
    }
}

impl<A: Item, B> StreamFn<A, B> {
    pub fn new(f: impl Fn(&Stream<A>) -> B + Send + Sync + 'static) -> Self {
        StreamFn(Arc::new(f))
    }

    pub fn call(&self, input: &Stream<A>) -> B {
        (self.0)(input)
    }
}

impl<A: Item, B: Item> StreamMap<A, B> {
    pub fn new(f: impl Fn(&Stream<A>) -> Stream<B> + Send + Sync + 'static) -> Self {
        StreamMap(Arc::new(f))
    }

    pub fn call(&self, input: &Stream<A>) -> Stream<B> {
        (self.0)(input)
    }

    /// The head of the output, as a discrete-valued function.
    pub fn head_fn(&self) -> StreamFn<A, B> {
        let f = self.clone();
        StreamFn::new(move |input| f.call(input).head())
    }

    /// The tail of the output, still a stream function.
    pub fn tail_fn(&self) -> StreamMap<A, B> {
        let f = self.clone();
        StreamMap::new(move |input| f.call(input).tail())
    }

    /// Precomposition with prefixing: the function `α ↦ self(a ⊲ α)`.
    pub fn after_cons(&self, a: A) -> StreamMap<A, B> {
        let f = self.clone();
        StreamMap::new(move |input| f.call(&Stream::cons(a.clone(), input)))
    }
}

/// Result of probing a function on a finite prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome<B> {
    /// The function returned without reading past the prefix;
    /// `inputs_read ≤ prefix length` counts the items it actually demanded.
    Determined { value: B, inputs_read: usize },
    /// The function demanded an item beyond the supplied prefix.
    NeedsMore,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("stream function failed while being probed: {message}")]
    UserFunction { message: String },
}

static NEXT_PROBE_ID: AtomicU64 = AtomicU64::new(0);

/// Runs `f` on a trap stream serving `prefix`. Returns `Determined` when `f`
/// finished within the prefix, `NeedsMore` when the trap fired, and an error
/// when `f` itself panicked. Signals that are not ours to handle (a nested
/// probe's trap, end-of-source or budget signals from captured state) are
/// re-raised unchanged.
pub fn probe<A: Item, B>(
    f: &StreamFn<A, B>,
    prefix: &[A],
) -> Result<ProbeOutcome<B>, ProbeError> {
    let id = NEXT_PROBE_ID.fetch_add(1, Ordering::Relaxed);
    let reads = Arc::new(AtomicUsize::new(0));
    let trap = trap_stream(prefix.to_vec().into(), 0, id, reads.clone());
    match signal::catch(|| f.call(&trap)) {
        Ok(value) => Ok(ProbeOutcome::Determined {
            value,
            inputs_read: reads.load(Ordering::SeqCst),
        }),
        Err(Caught::Trap(t)) if t.probe_id == id => Ok(ProbeOutcome::NeedsMore),
        Err(Caught::Other(payload)) => Err(ProbeError::UserFunction {
            message: signal::describe_payload(payload.as_ref()),
        }),
        Err(foreign) => signal::resume(foreign),
    }
}

/// Serves `items` starting at `idx`, counting how far the consumer read,
/// then raises this probe's trap.
fn trap_stream<A: Item>(
    items: Arc<[A]>,
    idx: usize,
    probe_id: u64,
    reads: Arc<AtomicUsize>,
) -> Stream<A> {
    Stream::defer(move || {
        if idx < items.len() {
            reads.fetch_max(idx + 1, Ordering::SeqCst);
            (
                items[idx].clone(),
                trap_stream(items.clone(), idx + 1, probe_id, reads.clone()),
            )
        } else {
            signal::raise_probe_trap(probe_id)
        }
    })
}

impl<A: Alphabet, B: Item> StreamFn<A, B> {
    /// Extracts a reader tree computing the same function: for every input,
    /// `tree.eat(input).value == self.call(input)`. The tree need not be
    /// canonical, only extensionally equal.
    ///
    /// The root is probed eagerly; branches are probed on first demand per
    /// letter and memoized. When some path still needs more input at depth
    /// `budget`, forcing that branch raises the budget signal.
    ///
    /// # Panics
    ///
    /// If `self` panics while probed, construction panics with the rendered
    /// message; callers wanting a `Result` should use [`probe`] directly.
    pub fn represent(&self, budget: usize) -> Tree<A, B> {
        represent_at(self.clone(), Vec::new(), budget)
    }
}

fn represent_at<A: Alphabet, B: Item>(
    f: StreamFn<A, B>,
    prefix: Vec<A>,
    budget: usize,
) -> Tree<A, B> {
    match probe(&f, &prefix) {
        Ok(ProbeOutcome::Determined { value, .. }) => Tree::ret(value),
        Ok(ProbeOutcome::NeedsMore) => {
            if prefix.len() >= budget {
                signal::raise_budget_exceeded(prefix.len(), format!("{prefix:?}"));
            }
            let memo: Mutex<HashMap<A, Tree<A, B>>> = Mutex::new(HashMap::new());
            Tree::rd(move |a: A| {
                let mut table = memo.lock().unwrap_or_else(PoisonError::into_inner);
                if let Some(t) = table.get(&a) {
                    return t.clone();
                }
                let mut extended = prefix.clone();
                extended.push(a.clone());
                let t = represent_at(f.clone(), extended, budget);
                table.insert(a, t.clone());
                t
            })
        }
        Err(e) => panic!("cannot represent: {e}"),
    }
}

/// Splits a stream-valued function into the tree for its first output and
/// the function producing everything after it.
pub fn split_head<A: Alphabet, B: Item>(
    f: &StreamMap<A, B>,
    budget: usize,
) -> (Tree<A, B>, StreamMap<A, B>) {
    (f.head_fn().represent(budget), f.tail_fn())
}

/// Pushes `f` down the tree, tagging each leaf with `f` specialized by the
/// path read to reach it: a leaf under branches `a₀, …, a_{k−1}` carries
/// `α ↦ f(a₀ ⊲ … ⊲ a_{k−1} ⊲ α)`. The branching shape and the leaf values'
/// first coordinates are unchanged.
pub fn fast_forward<A: Item, B: Item, C: Item>(
    t: &Tree<A, B>,
    f: StreamMap<A, C>,
) -> Tree<A, (B, StreamMap<A, C>)> {
    match t {
        Tree::Ret(b) => Tree::ret((b.clone(), f)),
        Tree::Rd(read) => {
            let read = read.clone();
            Tree::rd(move |a: A| fast_forward(&read(a.clone()), f.after_cons(a)))
        }
    }
}

impl<A: Alphabet, B: Item> StreamMap<A, B> {
    /// Extracts a processor computing the same stream function, one layer
    /// per output item: `proc.eat(&input)` agrees with `self.call(&input)`
    /// at every depth reached. Layers are built on demand; a layer whose
    /// head is not determined within `budget` raises the budget signal when
    /// forced.
    pub fn represent(&self, budget: usize) -> Proc<A, B> {
        Proc::unfold(
            move |g: StreamMap<A, B>| {
                let (head_tree, rest) = split_head(&g, budget);
                fast_forward(&head_tree, rest)
            },
            self.clone(),
        )
    }
}
