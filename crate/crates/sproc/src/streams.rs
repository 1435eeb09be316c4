//! Demand-driven infinite streams with structural sharing.
//!
//! A [`Stream`] is a chain of lazily forced cells; each cell memoizes one
//! item and the handle to the rest. Handles are cheap to clone, `tail` is a
//! view rather than a mutation, and any retained handle keeps the positions
//! after it reachable. Forcing a cell is synchronized, so values may be sent
//! between threads, but concurrent demand on one handle is serialized rather
//! than parallel.
//!
//! Two kinds of backing exist: pure ones ([`Stream::from_function`],
//! [`Stream::unfold`], [`Stream::cons`]) which never fail, and pull sources
//! ([`Stream::from_source`]) which raise the distinguished
//! [`end-of-source`](crate::signal::EndOfSource) signal when the underlying
//! supply runs dry. `take_prefix` and `head` let that signal propagate; it is
//! caught at the driver that chose to use a finite source.

use std::sync::{Arc, Mutex, PoisonError};

use crate::lazy::ThunkCell;
use crate::signal;
use crate::Item;

type Cell<A> = ThunkCell<(A, Stream<A>)>;

/// An infinite sequence of `A`s, read through `head` and `tail`.
pub struct Stream<A: Item> {
    cell: Arc<Cell<A>>,
}

impl<A: Item> Clone for Stream<A> {
    fn clone(&self) -> Self {
        Stream {
            cell: Arc::clone(&self.cell),
        }
    }
}

impl<A: Item> Stream<A> {
    /// The general lazy constructor: `produce` runs on first demand and
    /// yields the head together with the rest of the stream.
    pub fn defer(produce: impl Fn() -> (A, Stream<A>) + Send + Sync + 'static) -> Self {
        Stream {
            cell: Arc::new(Cell::suspend(produce)),
        }
    }

    /// Prepends one item. The original stream is shared, not copied.
    pub fn cons(head: A, rest: &Stream<A>) -> Self {
        Stream {
            cell: Arc::new(Cell::ready((head, rest.clone()))),
        }
    }

    /// The stream whose item at position `n` is `g(n)`.
    pub fn from_function(g: impl Fn(u64) -> A + Send + Sync + 'static) -> Self {
        fn at<A: Item>(g: Arc<dyn Fn(u64) -> A + Send + Sync>, n: u64) -> Stream<A> {
            Stream::defer(move || (g(n), at(g.clone(), n + 1)))
        }
        at(Arc::new(g), 0)
    }

    /// Corecursion: each cell applies `step` to the seed to get the item and
    /// the next seed.
    pub fn unfold<S: Send + Sync + 'static>(
        seed: S,
        step: impl Fn(&S) -> (A, S) + Send + Sync + 'static,
    ) -> Self {
        fn at<A: Item, S: Send + Sync + 'static>(
            step: Arc<dyn Fn(&S) -> (A, S) + Send + Sync>,
            seed: S,
        ) -> Stream<A> {
            Stream::defer(move || {
                let (a, next) = step(&seed);
                (a, at(step.clone(), next))
            })
        }
        at(Arc::new(step), seed)
    }

    /// The constant stream.
    pub fn constant(value: A) -> Self {
        Stream::from_function(move |_| value.clone())
    }

    /// A stream pulled item by item from a stateful source. Items are
    /// memoized as they arrive, so every retained handle keeps its suffix
    /// readable; when the source returns `None` the cell raises
    /// end-of-source with the failing position, and does so again on every
    /// later demand.
    pub fn from_source(source: impl FnMut() -> Option<A> + Send + 'static) -> Self {
        fn at<A: Item>(
            source: Arc<Mutex<dyn FnMut() -> Option<A> + Send>>,
            position: u64,
        ) -> Stream<A> {
            Stream::defer(move || {
                let item = (source.lock().unwrap_or_else(PoisonError::into_inner))();
                match item {
                    Some(a) => (a, at(source.clone(), position + 1)),
                    None => signal::raise_end_of_source(position),
                }
            })
        }
        at(Arc::new(Mutex::new(source)), 0)
    }

    pub fn head(&self) -> A {
        self.cell.force().0.clone()
    }

    pub fn tail(&self) -> Stream<A> {
        self.cell.force().1.clone()
    }

    pub(crate) fn force_pair(&self) -> &(A, Stream<A>) {
        self.cell.force()
    }

    /// The first `n` items, in order. Demands exactly the cells it returns.
    pub fn take_prefix(&self, n: usize) -> Vec<A> {
        let mut out = Vec::with_capacity(n);
        let mut cur = self.clone();
        for _ in 0..n {
            let (a, rest) = cur.force_pair();
            out.push(a.clone());
            let rest = rest.clone();
            cur = rest;
        }
        out
    }

    /// True when both handles point at the same cell (sharing, not equality).
    pub fn same_cell(&self, other: &Stream<A>) -> bool {
        Arc::ptr_eq(&self.cell, &other.cell)
    }
}

// Long forced chains are unlinked iteratively; the derived drop would recurse
// once per cell and overflow the stack on chains of a few tens of thousands.
impl<A: Item> Drop for Stream<A> {
    fn drop(&mut self) {
        let mut cur = unlink(&mut self.cell);
        while let Some(mut s) = cur {
            cur = unlink(&mut s.cell);
        }
    }
}

fn unlink<A: Item>(cell: &mut Arc<Cell<A>>) -> Option<Stream<A>> {
    Arc::get_mut(cell)
        .and_then(|c| c.take_value())
        .map(|(_, tail)| tail)
}
