//! Well-founded reader trees and their evaluator.
//!
//! A [`Tree<A, B>`] either returns a `B` right away (`Ret`) or reads one `A`
//! from its input and continues with a subtree chosen by the value read
//! (`Rd`). Along every path of branch selections a `Ret` leaf must appear
//! after finitely many steps; such a tree denotes a total function from
//! streams of `A` to `B` that inspects only a finite prefix, and [`Tree::eat`]
//! computes that function, returning the result together with the unconsumed
//! suffix.
//!
//! Branches are total functions rather than tables, so the alphabet `A` may
//! be infinite; [`Tree::tabulate`] materializes a finite-alphabet view for
//! enumeration-style tests, and [`Tree::render`] produces the golden-test
//! text form `Ret(v)` / `Rd(a0:…, a1:…)`.
//!
//! The host type cannot enforce well-foundedness when branches are
//! functions. Debug builds meter [`Tree::fold`] and [`Tree::eat`] with a step
//! budget ([`DEFAULT_FUEL`] `Rd` steps per call) and panic on exhaustion;
//! release builds omit the check entirely.

use std::fmt;
use std::sync::Arc;

use crate::streams::Stream;
use crate::Item;

/// Total branch: one subtree per input letter.
pub type Branch<A, B> = Arc<dyn Fn(A) -> Tree<A, B> + Send + Sync>;

/// A well-founded reader tree: return a value or read one input and branch.
pub enum Tree<A, B> {
    Ret(B),
    Rd(Branch<A, B>),
}

/// What [`Tree::eat`] produces: the value at the leaf selected by the input,
/// and the suffix of the input that was not consumed.
pub struct EatResult<A: Item, B> {
    pub value: B,
    pub rest: Stream<A>,
}

/// Debug-build step budget for `fold` and `eat`. Exceeding it means the tree
/// is not well-founded along the explored path (or pathologically deep).
pub const DEFAULT_FUEL: u64 = 1 << 20;

/// Step meter compiled away in release builds.
struct Fuel(#[cfg(debug_assertions)] std::cell::Cell<u64>);

impl Fuel {
    fn new() -> Self {
        Fuel(
            #[cfg(debug_assertions)]
            std::cell::Cell::new(DEFAULT_FUEL),
        )
    }

    #[inline]
    fn tick(&self, operation: &str) {
        #[cfg(debug_assertions)]
        {
            let left = self.0.get();
            if left == 0 {
                panic!(
                    "{operation}: exceeded {DEFAULT_FUEL} Rd steps; \
                     the tree is not well-founded along this path"
                );
            }
            self.0.set(left - 1);
        }
        #[cfg(not(debug_assertions))]
        let _ = operation;
    }
}

impl<A, B: Clone> Clone for Tree<A, B> {
    fn clone(&self) -> Self {
        match self {
            Tree::Ret(b) => Tree::Ret(b.clone()),
            Tree::Rd(read) => Tree::Rd(read.clone()),
        }
    }
}

impl<A, B: fmt::Debug> fmt::Debug for Tree<A, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Ret(b) => f.debug_tuple("Ret").field(b).finish(),
            Tree::Rd(_) => f.write_str("Rd(<branch>)"),
        }
    }
}

impl<A, B> Tree<A, B> {
    pub fn ret(value: B) -> Self {
        Tree::Ret(value)
    }

    /// Builds a branching node. `read` is not called at construction time.
    pub fn rd(read: impl Fn(A) -> Tree<A, B> + Send + Sync + 'static) -> Self {
        Tree::Rd(Arc::new(read))
    }
}

impl<A: Item, B> Tree<A, B> {
    /// Structural recursion: replaces `Ret` by `leaf` and `Rd` by `node`
    /// applied to the function that folds each branch. `fold` is the unique
    /// such mapping on well-founded trees.
    pub fn fold<C>(&self, leaf: &dyn Fn(&B) -> C, node: &dyn Fn(&dyn Fn(A) -> C) -> C) -> C {
        let fuel = Fuel::new();
        fold_metered(self, leaf, node, &fuel)
    }

    /// Runs the tree on a stream: each `Rd` consumes one item, the `Ret`
    /// leaf supplies the value and the unconsumed suffix is returned. This
    /// is a loop, so arbitrarily deep paths cost no stack.
    pub fn eat(&self, input: &Stream<A>) -> EatResult<A, B>
    where
        B: Clone,
    {
        let fuel = Fuel::new();
        let mut tree = self.clone();
        let mut stream = input.clone();
        loop {
            match tree {
                Tree::Ret(value) => return EatResult { value, rest: stream },
                Tree::Rd(read) => {
                    fuel.tick("eat");
                    let (a, rest) = {
                        let pair = stream.force_pair();
                        (pair.0.clone(), pair.1.clone())
                    };
                    tree = read(a);
                    stream = rest;
                }
            }
        }
    }

    /// Relabels leaves, preserving the branching shape.
    pub fn map<C: 'static>(&self, f: impl Fn(B) -> C + Send + Sync + 'static) -> Tree<A, C>
    where
        B: Item,
    {
        let f: Arc<dyn Fn(B) -> C + Send + Sync> = Arc::new(f);
        map_shared(self, &f)
    }

    /// Grafts a tree onto every leaf: `bind(ret b, k) = k b` and
    /// `bind(rd φ, k) = rd(a ↦ bind(φ a, k))`.
    pub fn bind<C: 'static>(
        &self,
        k: impl Fn(B) -> Tree<A, C> + Send + Sync + 'static,
    ) -> Tree<A, C>
    where
        B: Item,
    {
        let k: Arc<dyn Fn(B) -> Tree<A, C> + Send + Sync> = Arc::new(k);
        bind_shared(self, &k)
    }

    /// Materializes branch tables over a finite alphabet, for enumeration
    /// tests and structural comparison.
    pub fn tabulate(&self, alphabet: &[A]) -> TableTree<B>
    where
        B: Clone,
    {
        self.fold(&|b| TableTree::Ret(b.clone()), &|path| {
            TableTree::Rd(alphabet.iter().map(|a| path(a.clone())).collect())
        })
    }

    /// Text form for golden tests: `Ret(v)` or `Rd(a0:…, a1:…)` with one
    /// entry per alphabet letter.
    pub fn render(&self, alphabet: &[A]) -> String
    where
        A: fmt::Debug,
        B: fmt::Debug,
    {
        self.fold(&|b| format!("Ret({b:?})"), &|path| {
            let entries: Vec<String> = alphabet
                .iter()
                .map(|a| format!("{a:?}:{}", path(a.clone())))
                .collect();
            format!("Rd({})", entries.join(", "))
        })
    }
}

fn fold_metered<A: Item, B, C>(
    t: &Tree<A, B>,
    leaf: &dyn Fn(&B) -> C,
    node: &dyn Fn(&dyn Fn(A) -> C) -> C,
    fuel: &Fuel,
) -> C {
    match t {
        Tree::Ret(b) => leaf(b),
        Tree::Rd(read) => {
            fuel.tick("fold");
            node(&|a| fold_metered(&read(a), leaf, node, fuel))
        }
    }
}

fn map_shared<A: Item, B: Item, C: 'static>(
    t: &Tree<A, B>,
    f: &Arc<dyn Fn(B) -> C + Send + Sync>,
) -> Tree<A, C> {
    match t {
        Tree::Ret(b) => Tree::Ret(f(b.clone())),
        Tree::Rd(read) => {
            let read = read.clone();
            let f = f.clone();
            Tree::rd(move |a| map_shared(&read(a), &f))
        }
    }
}

fn bind_shared<A: Item, B: Item, C: 'static>(
    t: &Tree<A, B>,
    k: &Arc<dyn Fn(B) -> Tree<A, C> + Send + Sync>,
) -> Tree<A, C> {
    match t {
        Tree::Ret(b) => k(b.clone()),
        Tree::Rd(read) => {
            let read = read.clone();
            let k = k.clone();
            Tree::rd(move |a| bind_shared(&read(a), &k))
        }
    }
}

/// A tree with branch tables materialized over some finite alphabet;
/// children are indexed by alphabet position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableTree<B> {
    Ret(B),
    Rd(Vec<TableTree<B>>),
}

impl<B: Item> TableTree<B> {
    /// Reconstructs a function-branch tree. Letters outside the alphabet the
    /// table was built over are a caller error and panic.
    pub fn to_tree<A: Item + PartialEq + fmt::Debug>(&self, alphabet: &[A]) -> Tree<A, B> {
        let alphabet: Arc<[A]> = alphabet.into();
        to_tree_shared(self, &alphabet)
    }

    pub fn depth(&self) -> usize {
        match self {
            TableTree::Ret(_) => 0,
            TableTree::Rd(children) => {
                1 + children.iter().map(TableTree::depth).max().unwrap_or(0)
            }
        }
    }

    /// Leaf values in left-to-right (alphabet order) traversal.
    pub fn leaves(&self) -> Vec<B> {
        match self {
            TableTree::Ret(b) => vec![b.clone()],
            TableTree::Rd(children) => children.iter().flat_map(TableTree::leaves).collect(),
        }
    }
}

fn to_tree_shared<A: Item + PartialEq + fmt::Debug, B: Item>(
    t: &TableTree<B>,
    alphabet: &Arc<[A]>,
) -> Tree<A, B> {
    match t {
        TableTree::Ret(b) => Tree::Ret(b.clone()),
        TableTree::Rd(children) => {
            let children: Arc<[TableTree<B>]> = children.clone().into();
            let alphabet = alphabet.clone();
            Tree::rd(move |a: A| {
                let i = alphabet
                    .iter()
                    .position(|x| *x == a)
                    .unwrap_or_else(|| panic!("letter {a:?} is outside the tabulated alphabet"));
                to_tree_shared(&children[i], &alphabet)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zeros() -> Stream<u8> {
        Stream::constant(0)
    }

    fn bit_stream(bits: &[u8]) -> Stream<u8> {
        let bits = bits.to_vec();
        Stream::from_function(move |n| bits.get(n as usize).copied().unwrap_or(0))
    }

    /// The three-level tree from the worked example: reads up to three bits,
    /// returning 0, 1, 0, 1 on the paths 0*, 10*, 110*, 111.
    fn example_tree() -> Tree<u8, u8> {
        Tree::rd(|a0| {
            if a0 == 0 {
                Tree::ret(0)
            } else {
                Tree::rd(|a1| {
                    if a1 == 0 {
                        Tree::ret(1)
                    } else {
                        Tree::rd(|a2| if a2 == 0 { Tree::ret(0) } else { Tree::ret(1) })
                    }
                })
            }
        })
    }

    /// Extensionally the same function as [`example_tree`], but the leaf
    /// reached after 1,1,0 is replaced by a further read whose branches both
    /// return 0.
    fn padded_example_tree() -> Tree<u8, u8> {
        Tree::rd(|a0| {
            if a0 == 0 {
                Tree::ret(0)
            } else {
                Tree::rd(|a1| {
                    if a1 == 0 {
                        Tree::ret(1)
                    } else {
                        Tree::rd(|a2| {
                            if a2 == 0 {
                                Tree::rd(|_| Tree::ret(0))
                            } else {
                                Tree::ret(1)
                            }
                        })
                    }
                })
            }
        })
    }

    /// Oracle for the example tree, written as the case split on leading
    /// bits rather than as a tree.
    fn example_oracle(bits: &[u8]) -> u8 {
        if bits[0] == 0 {
            0
        } else if bits[1] == 0 {
            1
        } else if bits[2] == 0 {
            0
        } else {
            1
        }
    }

    fn depth_over(t: &Tree<u8, u8>, alphabet: &'static [u8]) -> usize {
        t.fold(&|_| 0, &|path| {
            1 + alphabet.iter().map(|a| path(*a)).max().unwrap_or(0)
        })
    }

    #[test]
    fn constructors_are_inert() {
        assert!(matches!(Tree::<u8, u8>::ret(42), Tree::Ret(42)));
        let t: Tree<u8, u8> = Tree::rd(|a| Tree::ret(a));
        match t {
            Tree::Rd(read) => assert!(matches!(read(3), Tree::Ret(3))),
            Tree::Ret(_) => panic!("rd built a leaf"),
        }
    }

    #[test]
    fn eat_on_a_leaf_consumes_nothing() {
        let s = bit_stream(&[1, 2, 3]);
        let r = Tree::<u8, u8>::ret(5).eat(&s);
        assert_eq!(r.value, 5);
        assert!(r.rest.same_cell(&s));
    }

    #[test]
    fn eat_follows_the_selected_path() {
        assert_eq!(example_tree().eat(&bit_stream(&[1, 1, 0])).value, 0);

        let r = example_tree().eat(&bit_stream(&[1, 0, 9, 7]));
        assert_eq!(r.value, 1);
        assert_eq!(r.rest.take_prefix(2), vec![9, 7]);
    }

    #[test]
    fn eat_matches_the_oracle_on_all_three_bit_prefixes() {
        let t = example_tree();
        for bits in 0u8..8 {
            let prefix = [bits >> 2 & 1, bits >> 1 & 1, bits & 1];
            assert_eq!(
                t.eat(&bit_stream(&prefix)).value,
                example_oracle(&prefix),
                "prefix {prefix:?}"
            );
        }
    }

    #[test]
    fn eat_consumes_exactly_the_path_depth() {
        // Path 0…: one read; path 10…: two; 110… and 111…: three.
        for (prefix, consumed) in [
            ([0u8, 0, 0], 1usize),
            ([1, 0, 0], 2),
            ([1, 1, 0], 3),
            ([1, 1, 1], 3),
        ] {
            let marker = Stream::from_function(|n| 100 + n as u8);
            let mut input = marker.clone();
            for &b in prefix.iter().rev() {
                input = Stream::cons(b, &input);
            }
            let r = example_tree().eat(&input);
            // The rest begins where the prefix left off: position `consumed`.
            let expected_next = if consumed < 3 { prefix[consumed] } else { 100 };
            assert_eq!(r.rest.head(), expected_next, "prefix {prefix:?}");
        }
    }

    #[test]
    fn eat_is_deterministic() {
        let t = example_tree();
        let s = bit_stream(&[1, 1, 1, 0]);
        assert_eq!(t.eat(&s).value, t.eat(&s).value);
    }

    #[test]
    fn fold_on_a_leaf_applies_the_leaf_algebra() {
        let n: u32 = Tree::<u8, u32>::ret(9).fold(&|b| *b, &|_| unreachable!("leaf-only tree"));
        assert_eq!(n, 9);
    }

    #[test]
    fn fold_computes_depth_and_leaf_count_of_the_example() {
        let t = example_tree();
        assert_eq!(depth_over(&t, &[0, 1]), 3);
        let leaf_count: usize = t.fold(&|_| 1, &|path| path(0) + path(1));
        assert_eq!(leaf_count, 4);
        assert_eq!(t.tabulate(&[0, 1]).leaves(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn fold_is_the_unique_algebra_morphism() {
        // A hand-written recursion satisfying the same two equations must
        // agree with fold; checked for the leaf-sum algebra on enumerated
        // trees.
        fn by_hand(t: &TableTree<u8>) -> u64 {
            match t {
                TableTree::Ret(b) => *b as u64,
                TableTree::Rd(children) => children.iter().map(by_hand).sum(),
            }
        }
        for table in enumerate(2, &[0, 1, 7]) {
            let t = table.to_tree(&[0u8, 1]);
            let via_fold: u64 = t.fold(&|b| *b as u64, &|path| path(0) + path(1));
            assert_eq!(via_fold, by_hand(&table));
        }
    }

    #[test]
    fn map_relabels_and_preserves_shape() {
        assert!(matches!(
            Tree::<u8, u8>::ret(1).map(|b| b + 1),
            Tree::Ret(2)
        ));
        for table in enumerate_shapes(4) {
            let t = table.to_tree(&[0u8, 1]);
            let mapped = t.map(|b| (b as u16) * 3 + 1);
            assert_eq!(mapped.tabulate(&[0, 1]).depth(), table.depth());
            assert_eq!(
                mapped.tabulate(&[0, 1]).leaves().len(),
                table.leaves().len()
            );
        }
    }

    #[test]
    fn bind_grafts_at_leaves() {
        // Left unit on a leaf.
        let k = |b: u8| Tree::<u8, u8>::rd(move |a| Tree::ret(b.wrapping_add(a)));
        let grafted = Tree::ret(40).bind(k);
        assert_eq!(grafted.eat(&bit_stream(&[2])).value, k(40).eat(&bit_stream(&[2])).value);

        // Negating the example's leaves flips the value 0 to 1 on 1,1,0.
        let negated = example_tree().bind(|b| Tree::ret(1 - b));
        assert_eq!(negated.eat(&bit_stream(&[1, 1, 0])).value, 1);
    }

    #[test]
    fn monad_laws_hold_extensionally() {
        let k = |b: u8| -> Tree<u8, u8> {
            if b == 0 {
                Tree::rd(|a: u8| Tree::ret(a.wrapping_add(10)))
            } else {
                Tree::ret(b.wrapping_mul(2))
            }
        };
        let h = |b: u8| -> Tree<u8, u8> { Tree::ret(b.wrapping_add(1)) };

        let all_prefixes: Vec<[u8; 3]> = (0u8..8)
            .map(|n| [n >> 2 & 1, n >> 1 & 1, n & 1])
            .collect();
        for table in enumerate(1, &[0, 1]) {
            let t = table.to_tree(&[0u8, 1]);
            for prefix in &all_prefixes {
                let s = bit_stream(prefix);
                // Right unit: bind with ret changes nothing.
                assert_eq!(t.bind(Tree::ret).eat(&s).value, t.eat(&s).value);
                // Left unit: ret then bind is application.
                assert_eq!(
                    Tree::<u8, u8>::ret(prefix[0]).bind(k).eat(&s).value,
                    k(prefix[0]).eat(&s).value
                );
                // Associativity.
                assert_eq!(
                    t.bind(k).bind(h).eat(&s).value,
                    t.bind(move |b| k(b).bind(h)).eat(&s).value
                );
            }
        }
    }

    #[test]
    fn branch_functions_are_pure_under_repeated_forcing() {
        let t = example_tree();
        assert_eq!(t.render(&[0, 1]), t.render(&[0, 1]));
        assert_eq!(t.tabulate(&[0, 1]), t.tabulate(&[0, 1]));
    }

    #[test]
    fn the_two_example_trees_are_extensionally_equal() {
        let t0 = example_tree();
        let t1 = padded_example_tree();
        for n in 0u8..16 {
            let prefix = [n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1];
            let s = bit_stream(&prefix);
            assert_eq!(t0.eat(&s).value, t1.eat(&s).value, "prefix {prefix:?}");
        }
        // …and structurally different: the padded tree is deeper.
        assert_eq!(depth_over(&t1, &[0, 1]), 4);
    }

    #[test]
    fn render_golden() {
        assert_eq!(Tree::<u8, u8>::ret(42).render(&[0, 1]), "Ret(42)");
        assert_eq!(
            example_tree().render(&[0, 1]),
            "Rd(0:Ret(0), 1:Rd(0:Ret(1), 1:Rd(0:Ret(0), 1:Ret(1))))"
        );
    }

    #[test]
    fn tabulate_roundtrips_through_to_tree() {
        for table in enumerate(2, &[0, 1, 9]) {
            assert_eq!(table.to_tree(&[0u8, 1]).tabulate(&[0, 1]), table);
        }
    }

    #[cfg(debug_assertions)]
    #[test]
    #[should_panic(expected = "not well-founded")]
    fn fuel_catches_circular_trees() {
        fn looping() -> Tree<u8, u8> {
            Tree::rd(|_| looping())
        }
        looping().eat(&zeros());
    }

    /// All table trees over a binary alphabet up to `depth`, with leaf
    /// labels drawn from `labels`.
    fn enumerate(depth: usize, labels: &[u8]) -> Vec<TableTree<u8>> {
        let mut out: Vec<TableTree<u8>> =
            labels.iter().map(|&b| TableTree::Ret(b)).collect();
        if depth > 0 {
            let smaller = enumerate(depth - 1, labels);
            for left in &smaller {
                for right in &smaller {
                    out.push(TableTree::Rd(vec![left.clone(), right.clone()]));
                }
            }
        }
        out
    }

    /// All branching shapes up to `depth` with a single leaf label; label
    /// variety is irrelevant to shape-preservation checks and enumerating it
    /// would be exponential in the leaf count.
    fn enumerate_shapes(depth: usize) -> Vec<TableTree<u8>> {
        let mut out = vec![TableTree::Ret(7)];
        if depth > 0 {
            let smaller = enumerate_shapes(depth - 1);
            for left in &smaller {
                for right in &smaller {
                    out.push(TableTree::Rd(vec![left.clone(), right.clone()]));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn eat_rest_is_the_input_suffix(bits in proptest::collection::vec(0u8..2, 3..10), salt in any::<u64>()) {
            let picked = bits.clone();
            let input = Stream::from_function(move |n| {
                picked.get(n as usize).copied().unwrap_or(((n as u64).wrapping_mul(salt) % 2) as u8)
            });
            let r = example_tree().eat(&input);
            // The oracle says how many items the path consumes.
            let consumed = if bits[0] == 0 { 1 } else if bits[1] == 0 { 2 } else { 3 };
            let mut suffix = input.clone();
            for _ in 0..consumed { suffix = suffix.tail(); }
            prop_assert_eq!(r.rest.take_prefix(5), suffix.take_prefix(5));
        }
    }
}
