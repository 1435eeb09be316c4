//! Composition of processors into pipelines.
//!
//! `compose(mode, post, pre)` runs `pre` on the input stream and `post` on
//! `pre`'s output, fused into a single processor with no intermediate stream.
//! The state of the fused machine is a [`CompState`]: the part of `post`'s
//! current layer not yet satisfied, and the part of `pre`'s current layer not
//! yet run. One engine drives both variants; they differ only in which side
//! gets priority when either could make progress:
//!
//! - [`Mode::Lazy`] is output-driven: when `post` has reached a leaf, its
//!   output is emitted immediately, even if `pre` is mid-read. Input is
//!   touched only when `post` actually needs an item `pre` has not produced.
//! - [`Mode::Greedy`] is input-driven: while `pre` wants to read, the fused
//!   machine reads, finishing `pre`'s current step before any output is
//!   emitted.
//!
//! Both variants compute the same stream function; they differ in *when*
//! input is consumed. Laziness never consumes more: for any pair and any
//! output count, the lazy variant has read at most as many items as the
//! greedy one.

use std::sync::Arc;

use crate::processor::Layer;
use crate::tree::Tree;
use crate::{Item, Proc};

/// Which side of a fused pipeline gets priority; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Lazy,
    Greedy,
}

/// Mid-step state of a fused pipeline: what remains of the downstream
/// (`post`) layer, reading intermediate items, and of the upstream (`pre`)
/// layer, reading actual input.
pub struct CompState<A: Item, B: Item, C: Item> {
    pub post: Layer<B, C>,
    pub pre: Layer<A, B>,
}

impl<A: Item, B: Item, C: Item> Clone for CompState<A, B, C> {
    fn clone(&self) -> Self {
        CompState {
            post: self.post.clone(),
            pre: self.pre.clone(),
        }
    }
}

impl<A, B, C> std::fmt::Debug for CompState<A, B, C>
where
    A: Item,
    B: Item + std::fmt::Debug,
    C: Item + std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompState")
            .field("post", &self.post)
            .field("pre", &self.pre)
            .finish()
    }
}

/// One output-driven step; the coalgebra that [`compose`] unfolds under
/// [`Mode::Lazy`].
pub fn lazy_step<A: Item, B: Item, C: Item>(
    state: CompState<A, B, C>,
) -> Tree<A, (C, CompState<A, B, C>)> {
    advance(Mode::Lazy, state)
}

/// One input-driven step; the coalgebra that [`compose`] unfolds under
/// [`Mode::Greedy`].
pub fn greedy_step<A: Item, B: Item, C: Item>(
    state: CompState<A, B, C>,
) -> Tree<A, (C, CompState<A, B, C>)> {
    advance(Mode::Greedy, state)
}

/// How the engine packages an emitted item and its successor state into the
/// leaf of the tree it returns: [`advance`] pairs them up for the step
/// functions, while [`composite_layer`] builds the fused processor's layer
/// directly, so forcing a layer makes a single pass over it.
type Emit<A, B, C, L> = Arc<dyn Fn(C, CompState<A, B, C>) -> L + Send + Sync>;

/// Drives a [`CompState`] to its next output. Communication steps (handing a
/// `pre` leaf's item to a `post` read) happen in a loop, so fused pipelines
/// cost no stack per internal hand-off; an input read returns a `Rd` node
/// whose branch re-enters the engine, so depth of actual input reads costs
/// no stack either (the caller's `eat` loop walks it).
fn advance_into<A: Item, B: Item, C: Item, L: 'static>(
    mode: Mode,
    state: CompState<A, B, C>,
    emit: Emit<A, B, C, L>,
) -> Tree<A, L> {
    let CompState { mut post, mut pre } = state;
    #[cfg(debug_assertions)]
    let mut hand_offs: u64 = 0;
    loop {
        match mode {
            Mode::Lazy => match post {
                // Downstream finished its step: emit, leaving upstream as is.
                Tree::Ret((c, p_bc)) => {
                    return Tree::ret(emit(c, CompState { post: p_bc.out(), pre }));
                }
                Tree::Rd(read_post) => match pre {
                    // Upstream has an item ready: hand it over, no input touched.
                    Tree::Ret((b, p_ab)) => {
                        post = read_post(b);
                        pre = p_ab.out();
                    }
                    // Both sides want to read: consume one actual input.
                    Tree::Rd(read_pre) => {
                        return Tree::rd(move |a: A| {
                            advance_into(
                                mode,
                                CompState {
                                    post: Tree::Rd(read_post.clone()),
                                    pre: read_pre(a),
                                },
                                emit.clone(),
                            )
                        });
                    }
                },
            },
            Mode::Greedy => match pre {
                // Upstream wants input: read before anything is emitted.
                Tree::Rd(read_pre) => {
                    return Tree::rd(move |a: A| {
                        advance_into(
                            mode,
                            CompState {
                                post: post.clone(),
                                pre: read_pre(a),
                            },
                            emit.clone(),
                        )
                    });
                }
                Tree::Ret((b, p_ab)) => match post {
                    Tree::Rd(read_post) => {
                        post = read_post(b);
                        pre = p_ab.out();
                    }
                    // Both sides settled: emit, keeping the upstream leaf for
                    // the next hand-off.
                    Tree::Ret((c, p_bc)) => {
                        return Tree::ret(emit(
                            c,
                            CompState {
                                post: p_bc.out(),
                                pre: Tree::ret((b, p_ab)),
                            },
                        ));
                    }
                },
            },
        }
        #[cfg(debug_assertions)]
        {
            hand_offs += 1;
            assert!(
                hand_offs < crate::tree::DEFAULT_FUEL,
                "composition: {hand_offs} hand-offs without an output; \
                 the downstream layer is not well-founded"
            );
        }
    }
}

/// [`advance_into`] with plain pairing at the leaves: the coalgebra the two
/// step functions expose.
fn advance<A: Item, B: Item, C: Item>(
    mode: Mode,
    state: CompState<A, B, C>,
) -> Tree<A, (C, CompState<A, B, C>)> {
    advance_into(mode, state, Arc::new(|c, st| (c, st)))
}

/// One forced layer of the fused processor: leaves carry the emitted item
/// and a suspended processor for the successor state.
fn composite_layer<A: Item, B: Item, C: Item>(
    mode: Mode,
    state: CompState<A, B, C>,
) -> Layer<A, C> {
    advance_into(
        mode,
        state,
        Arc::new(move |c, st: CompState<A, B, C>| {
            (c, Proc::suspend(move || composite_layer(mode, st.clone())))
        }),
    )
}

/// Fuses `pre` (which reads the input) and `post` (which reads `pre`'s
/// output) into one processor. Extensionally, for every input stream,
/// `compose(mode, post, pre).eat(s)` equals `post.eat(&pre.eat(s))`.
/// Construction forces nothing; the first layers of both parts are forced
/// when the composite's first layer is.
pub fn compose<A: Item, B: Item, C: Item>(
    mode: Mode,
    post: &Proc<B, C>,
    pre: &Proc<A, B>,
) -> Proc<A, C> {
    let post = post.clone();
    let pre = pre.clone();
    Proc::suspend(move || {
        composite_layer(
            mode,
            CompState {
                post: post.out(),
                pre: pre.out(),
            },
        )
    })
}

/// [`compose`] under [`Mode::Lazy`].
pub fn compose_lazy<A: Item, B: Item, C: Item>(
    post: &Proc<B, C>,
    pre: &Proc<A, B>,
) -> Proc<A, C> {
    compose(Mode::Lazy, post, pre)
}

/// [`compose`] under [`Mode::Greedy`].
pub fn compose_greedy<A: Item, B: Item, C: Item>(
    post: &Proc<B, C>,
    pre: &Proc<A, B>,
) -> Proc<A, C> {
    compose(Mode::Greedy, post, pre)
}
