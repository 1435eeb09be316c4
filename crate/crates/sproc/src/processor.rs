//! Coinductive stream processors.
//!
//! A [`Proc<A, B>`] is an infinite unrolling of reader trees: forcing one
//! layer ([`Proc::out`]) yields a well-founded `Tree<A, (B, Proc<A, B>)>`
//! whose leaf carries the next output item and the processor for the rest.
//! Because every layer is finite along every path, each output arrives after
//! finitely many reads: the processor is *productive*.
//!
//! Layers are built on demand and memoized; forcing is synchronized per
//! node, so one processor value can be shared and forced from several
//! threads, and repeated evaluation (the agreement harness forces the same
//! processors over many inputs) never recomputes a layer.
//!
//! [`Proc::unfold`] introduces processors from a coalgebra `S -> Tree<A, (B,
//! S)>`; [`Proc::eat`] runs a processor on an input stream and yields the
//! output stream, one layer per output item.

use std::sync::Arc;

use crate::lazy::ThunkCell;
use crate::streams::Stream;
use crate::tree::{EatResult, Tree};
use crate::Item;

/// One forced layer: a reader tree whose leaves hold an output and the
/// processor for everything after it.
pub type Layer<A, B> = Tree<A, (B, Proc<A, B>)>;

/// A productive stream processor from `A`-streams to `B`-streams.
pub struct Proc<A: Item, B: Item> {
    layer: Arc<ThunkCell<Layer<A, B>>>,
}

impl<A: Item, B: Item> Clone for Proc<A, B> {
    fn clone(&self) -> Self {
        Proc {
            layer: Arc::clone(&self.layer),
        }
    }
}

/// Opaque on purpose: rendering layers would force them.
impl<A: Item, B: Item> std::fmt::Debug for Proc<A, B> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Proc")
    }
}

impl<A: Item, B: Item> Proc<A, B> {
    /// A processor whose first layer is computed by `build` on first force.
    pub fn suspend(build: impl Fn() -> Layer<A, B> + Send + Sync + 'static) -> Self {
        Proc {
            layer: Arc::new(ThunkCell::suspend(build)),
        }
    }

    /// Wraps an already-computed layer; the inverse of [`Proc::out`].
    pub fn from_layer(layer: Layer<A, B>) -> Self {
        Proc {
            layer: Arc::new(ThunkCell::ready(layer)),
        }
    }

    /// Forces and returns the current layer. Repeated calls return the same
    /// memoized layer.
    pub fn out(&self) -> Layer<A, B> {
        self.layer.force().clone()
    }

    /// Coiteration: the processor that, at seed `s`, unrolls `step(s)` as
    /// its layer, with seeds in the leaves replaced by further unfoldings.
    /// `step` runs only when a layer is forced, once per reachable seed.
    pub fn unfold<S: Item>(
        step: impl Fn(S) -> Tree<A, (B, S)> + Send + Sync + 'static,
        seed: S,
    ) -> Self {
        fn from_seed<A: Item, B: Item, S: Item>(
            step: Arc<dyn Fn(S) -> Tree<A, (B, S)> + Send + Sync>,
            seed: S,
        ) -> Proc<A, B> {
            Proc::suspend(move || {
                let step_for_leaves = step.clone();
                step(seed.clone()).map(move |(b, next)| (b, from_seed(step_for_leaves.clone(), next)))
            })
        }
        from_seed(Arc::new(step), seed)
    }

    /// One-in-one-out machines: the layer at state `s` reads a single input
    /// `a` and returns `step(s, a)`'s output, continuing in the new state.
    pub fn mealy<S: Item>(
        step: impl Fn(S, A) -> (S, B) + Send + Sync + 'static,
        initial: S,
    ) -> Self {
        let step = Arc::new(step);
        Proc::unfold(
            move |s: S| {
                let step = step.clone();
                Tree::rd(move |a| {
                    let (next, b) = step(s.clone(), a);
                    Tree::ret((b, next))
                })
            },
            initial,
        )
    }

    /// Runs the processor on an input stream. Demanding the n-th output
    /// forces at most n layers and consumes finitely many inputs; the
    /// returned stream captures `(self, input)` and composes with every
    /// stream operation.
    pub fn eat(&self, input: &Stream<A>) -> Stream<B> {
        let p = self.clone();
        let input = input.clone();
        Stream::defer(move || {
            let EatResult { value, rest } = p.out().eat(&input);
            let (b, next) = value;
            (b, next.eat(&rest))
        })
    }
}
