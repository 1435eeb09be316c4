//! Finite-depth agreement checking, consumption instrumentation, and the
//! function suites the theorem-level tests run over.
//!
//! Equality of infinite streams is not decidable, so every check here is a
//! bounded surrogate: compare prefixes to a configured depth over a batch of
//! trial streams. Trial batches always start with the adversarial streams
//! (all zeros, all 255s, alternating bits) and continue with seeded uniform
//! bytes, so runs are reproducible from `(trials, seed)`.
//!
//! Reports render as one `key=value` line per check for machine consumption;
//! a run passes iff every report's outcome is `Pass`. Conditions that are
//! not divergence proper are reported distinctly: a backing source running
//! dry is `SourceEnded`, a representation blowing its depth budget is
//! `BudgetExceeded`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinators;
use crate::compose::{compose, Mode};
use crate::represent::{StreamFn, StreamMap, DEFAULT_BUDGET};
use crate::signal::{self, Caught};
use crate::streams::Stream;
use crate::{Item, Proc};

/// Depth to which stream prefixes are compared unless a check says otherwise.
pub const DEFAULT_DEPTH: usize = 50;
/// Trial streams per check unless a check says otherwise.
pub const DEFAULT_TRIALS: u64 = 100;
/// Fixed seed so CI runs are reproducible.
pub const DEFAULT_SEED: u64 = 0x5EED_CAFE;

/// First position where two compared streams differed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub trial: u64,
    pub position: usize,
    pub left: String,
    pub right: String,
}

/// How a check ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// All compared prefixes were equal at the configured depth.
    Pass,
    Diverged(Divergence),
    /// A representation needed to read deeper than its budget.
    BudgetExceeded { trial: u64, depth: usize },
    /// A backing source ran out of items mid-comparison.
    SourceEnded { trial: u64, position: u64 },
}

/// The result of one bounded agreement check.
#[derive(Debug, Clone)]
pub struct AgreementReport {
    pub name: String,
    pub depth: usize,
    pub trials: u64,
    pub seed: u64,
    pub outcome: CheckOutcome,
}

impl AgreementReport {
    pub fn passed(&self) -> bool {
        self.outcome == CheckOutcome::Pass
    }
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} seed={} depth={} trials={} ",
            self.name, self.seed, self.depth, self.trials
        )?;
        match &self.outcome {
            CheckOutcome::Pass => write!(f, "result=pass"),
            CheckOutcome::Diverged(d) => write!(
                f,
                "result=diverged trial={} position={} left={} right={}",
                d.trial, d.position, d.left, d.right
            ),
            CheckOutcome::BudgetExceeded { trial, depth } => {
                write!(f, "result=budget-exceeded trial={trial} at-depth={depth}")
            }
            CheckOutcome::SourceEnded { trial, position } => {
                write!(f, "result=source-ended trial={trial} position={position}")
            }
        }
    }
}

/// Compares two streams item by item to `depth`, classifying any control
/// signal raised while pulling either side.
fn compare_prefixes<X: Item + PartialEq + fmt::Debug>(
    left: &Stream<X>,
    right: &Stream<X>,
    depth: usize,
    trial: u64,
) -> CheckOutcome {
    let mut l = left.clone();
    let mut r = right.clone();
    for position in 0..depth {
        let pull = |s: &Stream<X>| match signal::catch(|| s.head()) {
            Ok(v) => Ok(v),
            Err(Caught::EndOfSource(e)) => Err(CheckOutcome::SourceEnded {
                trial,
                position: e.position,
            }),
            Err(Caught::Budget(b)) => Err(CheckOutcome::BudgetExceeded {
                trial,
                depth: b.depth,
            }),
            Err(other) => signal::resume(other),
        };
        let lv = match pull(&l) {
            Ok(v) => v,
            Err(outcome) => return outcome,
        };
        let rv = match pull(&r) {
            Ok(v) => v,
            Err(outcome) => return outcome,
        };
        if lv != rv {
            return CheckOutcome::Diverged(Divergence {
                trial,
                position,
                left: format!("{lv:?}"),
                right: format!("{rv:?}"),
            });
        }
        l = l.tail();
        r = r.tail();
    }
    CheckOutcome::Pass
}

/// Compares two streams to depth `n`; the outcome is `Pass` iff the prefixes
/// of length `n` are equal.
pub fn agree<X: Item + PartialEq + fmt::Debug>(
    left: &Stream<X>,
    right: &Stream<X>,
    n: usize,
) -> AgreementReport {
    AgreementReport {
        name: "agree".into(),
        depth: n,
        trials: 1,
        seed: 0,
        outcome: compare_prefixes(left, right, n, 0),
    }
}

/// An infinite stream of uniform pseudo-random bytes, reproducible from the
/// seed.
pub fn seeded_stream(seed: u64) -> Stream<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Stream::from_source(move || Some(rng.next_u32() as u8))
}

/// The fixed edge-case streams every trial batch starts with.
pub fn adversarial_streams() -> Vec<Stream<u8>> {
    vec![
        Stream::constant(0),
        Stream::constant(255),
        Stream::from_function(|n| (n % 2) as u8),
    ]
}

/// `trials` streams: the adversarial ones first, then seeded random bytes.
pub fn trial_streams(trials: u64, seed: u64) -> Vec<Stream<u8>> {
    let mut streams = adversarial_streams();
    streams.truncate(trials as usize);
    for i in streams.len() as u64..trials {
        streams.push(seeded_stream(seed.wrapping_add(i)));
    }
    streams
}

/// Wraps a stream so that pulls are counted: the counter reports how many
/// distinct positions of `s` have been demanded so far.
pub fn counted<A: Item>(s: &Stream<A>) -> (Stream<A>, Arc<AtomicU64>) {
    fn wrap<A: Item>(s: Stream<A>, count: Arc<AtomicU64>) -> Stream<A> {
        Stream::defer(move || {
            let head = s.head();
            count.fetch_add(1, Ordering::SeqCst);
            (head, wrap(s.tail(), count.clone()))
        })
    }
    let count = Arc::new(AtomicU64::new(0));
    (wrap(s.clone(), count.clone()), count)
}

/// Inputs consumed before each of the first `n_outputs` outputs was
/// available; always non-decreasing for a deterministic processor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsumptionTrace(pub Vec<u64>);

impl ConsumptionTrace {
    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Runs `p` on a counted copy of `input` and records the consumption level
/// at which each output became available.
pub fn trace_consumption<A: Item, B: Item>(
    p: &Proc<A, B>,
    input: &Stream<A>,
    n_outputs: usize,
) -> ConsumptionTrace {
    let (wrapped, count) = counted(input);
    let mut cur = p.eat(&wrapped);
    let mut levels = Vec::with_capacity(n_outputs);
    for _ in 0..n_outputs {
        let _ = cur.head();
        levels.push(count.load(Ordering::SeqCst));
        cur = cur.tail();
    }
    ConsumptionTrace(levels)
}

/// Checks that a stream function and its extracted processor agree: for each
/// trial stream, `f.represent(budget).eat` and `f.call` are compared to
/// `depth`. The extracted side is pulled first (and is the `left` of any
/// divergence), so a function that would search an adversarial stream
/// forever surfaces as a distinct budget report rather than a hang.
pub fn check_extraction_with_budget(
    name: &str,
    f: &StreamMap<u8, u8>,
    trials: u64,
    depth: usize,
    seed: u64,
    budget: usize,
) -> AgreementReport {
    let extracted = f.represent(budget);
    let mut outcome = CheckOutcome::Pass;
    for (trial, input) in trial_streams(trials, seed).iter().enumerate() {
        let via_rep = extracted.eat(input);
        let direct = f.call(input);
        outcome = compare_prefixes(&via_rep, &direct, depth, trial as u64);
        if outcome != CheckOutcome::Pass {
            break;
        }
    }
    AgreementReport {
        name: name.into(),
        depth,
        trials,
        seed,
        outcome,
    }
}

/// [`check_extraction_with_budget`] at the default budget: the round-trip
/// law `eat ∘ represent = id` checked extensionally to finite depth.
pub fn check_theorem2(
    name: &str,
    f: &StreamMap<u8, u8>,
    trials: u64,
    depth: usize,
    seed: u64,
) -> AgreementReport {
    check_extraction_with_budget(name, f, trials, depth, seed, DEFAULT_BUDGET)
}

/// The discrete counterpart: a tree extracted from a discrete-valued stream
/// function computes the same value on every trial stream.
pub fn check_tree_extraction(
    name: &str,
    f: &StreamFn<u8, u64>,
    trials: u64,
    seed: u64,
    budget: usize,
) -> AgreementReport {
    let tree = f.represent(budget);
    let mut outcome = CheckOutcome::Pass;
    for (trial, input) in trial_streams(trials, seed).iter().enumerate() {
        let trial = trial as u64;
        let pair = signal::catch(|| (f.call(input), tree.eat(input).value));
        outcome = match pair {
            Ok((direct, via_tree)) if direct == via_tree => CheckOutcome::Pass,
            Ok((direct, via_tree)) => CheckOutcome::Diverged(Divergence {
                trial,
                position: 0,
                left: format!("{direct:?}"),
                right: format!("{via_tree:?}"),
            }),
            Err(Caught::Budget(b)) => CheckOutcome::BudgetExceeded {
                trial,
                depth: b.depth,
            },
            Err(Caught::EndOfSource(e)) => CheckOutcome::SourceEnded {
                trial,
                position: e.position,
            },
            Err(other) => signal::resume(other),
        };
        if outcome != CheckOutcome::Pass {
            break;
        }
    }
    AgreementReport {
        name: name.into(),
        depth: 1,
        trials,
        seed,
        outcome,
    }
}

/// Checks that fused composition equals running the two processors in
/// sequence: per trial, `compose(mode, post, pre).eat(α)` against
/// `post.eat(pre.eat(α))` to `depth`.
pub fn check_composition(
    post: &Proc<u8, u8>,
    pre: &Proc<u8, u8>,
    mode: Mode,
    trials: u64,
    depth: usize,
    seed: u64,
) -> AgreementReport {
    let fused = compose(mode, post, pre);
    let mut outcome = CheckOutcome::Pass;
    for (trial, input) in trial_streams(trials, seed).iter().enumerate() {
        let chained = post.eat(&pre.eat(input));
        outcome = compare_prefixes(&fused.eat(input), &chained, depth, trial as u64);
        if outcome != CheckOutcome::Pass {
            break;
        }
    }
    AgreementReport {
        name: format!("composition-{mode:?}"),
        depth,
        trials,
        seed,
        outcome,
    }
}

/// Named discrete-valued stream functions with varied read patterns: fixed
/// reads, input-dependent reads, and bounded searches.
pub fn discrete_suite() -> Vec<(String, StreamFn<u8, u64>)> {
    let nth = |k: usize| {
        StreamFn::new(move |s: &Stream<u8>| {
            let mut cur = s.clone();
            for _ in 0..k {
                cur = cur.tail();
            }
            u64::from(cur.head())
        })
    };
    vec![
        ("head".into(), nth(0)),
        ("third".into(), nth(2)),
        ("const-42".into(), StreamFn::new(|_| 42)),
        (
            "sum-first-4".into(),
            StreamFn::new(|s| s.take_prefix(4).iter().map(|&b| u64::from(b)).sum()),
        ),
        (
            "xor-first-5".into(),
            StreamFn::new(|s| {
                s.take_prefix(5)
                    .iter()
                    .fold(0u64, |acc, &b| acc ^ u64::from(b))
            }),
        ),
        (
            "max-first-3".into(),
            StreamFn::new(|s| s.take_prefix(3).into_iter().map(u64::from).max().unwrap()),
        ),
        (
            "find-zero-within-16".into(),
            StreamFn::new(|s| {
                s.take_prefix(16)
                    .iter()
                    .position(|&b| b == 0)
                    .map_or(16, |i| i as u64)
            }),
        ),
        (
            "branch-on-head-parity".into(),
            StreamFn::new(|s| {
                if s.head() % 2 == 0 {
                    u64::from(s.tail().head())
                } else {
                    u64::from(s.tail().tail().head())
                }
            }),
        ),
        (
            "low-bit-parity-first-6".into(),
            StreamFn::new(|s| {
                u64::from(s.take_prefix(6).iter().fold(0u8, |acc, &b| acc ^ (b & 1)))
            }),
        ),
        (
            "count-nonzero-first-8".into(),
            StreamFn::new(|s| s.take_prefix(8).iter().filter(|&&b| b != 0).count() as u64),
        ),
        (
            "head-plus-eighth".into(),
            StreamFn::new(|s| {
                let p = s.take_prefix(8);
                u64::from(p[0]) + u64::from(p[7])
            }),
        ),
    ]
}

/// Named stream-valued functions: every registry processor lifted through
/// evaluation, plus hand-written functions that are not registry shapes.
pub fn stream_suite() -> Vec<(String, StreamMap<u8, u8>)> {
    let mut suite: Vec<(String, StreamMap<u8, u8>)> = combinators::default_instances()
        .into_iter()
        .map(|instance| {
            let p = instance.proc.clone();
            (
                format!("eval-{}", instance.name),
                StreamMap::new(move |s: &Stream<u8>| p.eat(s)),
            )
        })
        .collect();
    suite.push(("tail-shift".into(), StreamMap::new(|s| s.tail())));
    suite.push((
        "swap-adjacent".into(),
        StreamMap::new(|s| {
            let s = s.clone();
            Stream::from_function(move |n| {
                let idx = if n % 2 == 0 { n + 1 } else { n - 1 };
                let mut cur = s.clone();
                for _ in 0..idx {
                    cur = cur.tail();
                }
                cur.head()
            })
        }),
    ));
    suite
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat_stream() -> Stream<u8> {
        Stream::from_function(|n| (n % 256) as u8)
    }

    #[test]
    fn identical_streams_agree() {
        let report = agree(&nat_stream(), &nat_stream(), 100);
        assert!(report.passed());
        assert_eq!(report.to_string(), "check=agree seed=0 depth=100 trials=1 result=pass");
    }

    #[test]
    fn first_difference_is_located() {
        let zeros = Stream::constant(0u8);
        let bumped = Stream::cons(1, &Stream::constant(0));
        let report = agree(&zeros, &bumped, 5);
        assert_eq!(
            report.outcome,
            CheckOutcome::Diverged(Divergence {
                trial: 0,
                position: 0,
                left: "0".into(),
                right: "1".into(),
            })
        );
        assert!(report.to_string().contains("result=diverged trial=0 position=0 left=0 right=1"));
    }

    #[test]
    fn difference_deeper_in_is_located_too() {
        let a = Stream::from_function(|n| (n % 7) as u8);
        let b = Stream::from_function(|n| if n == 13 { 99 } else { (n % 7) as u8 });
        match agree(&a, &b, 50).outcome {
            CheckOutcome::Diverged(d) => assert_eq!(d.position, 13),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_agrees_with_its_index_halving_oracle() {
        let input = nat_stream();
        let via_proc = combinators::dup().eat(&input);
        let oracle = {
            let input = input.clone();
            Stream::from_function(move |n| {
                let mut cur = input.clone();
                for _ in 0..(n / 2) {
                    cur = cur.tail();
                }
                cur.head()
            })
        };
        assert!(agree(&via_proc, &oracle, 64).passed());
    }

    #[test]
    fn a_dry_source_is_reported_not_diagnosed_as_divergence() {
        let mut left = vec![1u8, 2, 3].into_iter();
        let finite = Stream::from_source(move || left.next());
        // The other side continues 1, 2, 3, 4, …: the streams agree on the
        // whole available prefix, so the only finding is the dry source.
        let unbounded = Stream::from_function(|n| (n + 1) as u8);
        let report = agree(&finite, &unbounded, 10);
        assert_eq!(
            report.outcome,
            CheckOutcome::SourceEnded { trial: 0, position: 3 }
        );
    }

    #[test]
    fn seeded_streams_are_reproducible_and_spread_out() {
        assert_eq!(
            seeded_stream(7).take_prefix(32),
            seeded_stream(7).take_prefix(32)
        );
        assert_ne!(
            seeded_stream(7).take_prefix(32),
            seeded_stream(8).take_prefix(32)
        );
        let bytes = seeded_stream(7).take_prefix(256);
        let distinct: std::collections::HashSet<u8> = bytes.iter().copied().collect();
        assert!(distinct.len() > 100, "only {} distinct bytes", distinct.len());
    }

    #[test]
    fn trial_batches_start_with_the_adversaries() {
        let streams = trial_streams(5, DEFAULT_SEED);
        assert_eq!(streams.len(), 5);
        assert_eq!(streams[0].take_prefix(3), vec![0, 0, 0]);
        assert_eq!(streams[1].take_prefix(3), vec![255, 255, 255]);
        assert_eq!(streams[2].take_prefix(4), vec![0, 1, 0, 1]);
    }

    #[test]
    fn consumption_traces_match_the_catalog() {
        let alpha = nat_stream();
        assert_eq!(
            trace_consumption(&combinators::constant(9), &alpha, 5).0,
            vec![0, 0, 0, 0, 0]
        );
        assert_eq!(
            trace_consumption(&combinators::identity(), &alpha, 3).0,
            vec![1, 2, 3]
        );
        assert_eq!(
            trace_consumption(&combinators::dup(), &alpha, 4).0,
            vec![1, 1, 2, 2]
        );
    }

    #[test]
    fn traces_are_monotone_for_all_defaults() {
        let alpha = nat_stream();
        for instance in combinators::default_instances() {
            let trace = trace_consumption(&instance.proc, &alpha, 12);
            assert!(trace.is_monotone(), "{}: {:?}", instance.name, trace.0);
        }
    }

    #[test]
    fn extraction_check_passes_for_a_simple_function() {
        let incr_fn = StreamMap::new(|s: &Stream<u8>| {
            let s = s.clone();
            Stream::from_function(move |n| {
                let mut cur = s.clone();
                for _ in 0..n {
                    cur = cur.tail();
                }
                cur.head().wrapping_add(1)
            })
        });
        let report = check_theorem2("incr-fn", &incr_fn, 10, 30, DEFAULT_SEED);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn budget_overruns_are_reported_distinctly() {
        let searcher = StreamMap::new(|s: &Stream<u8>| {
            let s = s.clone();
            Stream::from_function(move |_| {
                let mut cur = s.clone();
                while cur.head() != 255 {
                    cur = cur.tail();
                }
                cur.head()
            })
        });
        // Trial 0 is all zeros: the head search never finds 255 within the
        // budget.
        let report = check_extraction_with_budget("searcher", &searcher, 3, 5, DEFAULT_SEED, 16);
        assert_eq!(
            report.outcome,
            CheckOutcome::BudgetExceeded { trial: 0, depth: 16 }
        );
        assert!(report.to_string().contains("result=budget-exceeded"));
    }

    #[test]
    fn composition_check_passes_for_a_sample_pair() {
        let report = check_composition(
            &combinators::dup(),
            &combinators::pairwise_sum(),
            Mode::Lazy,
            8,
            40,
            DEFAULT_SEED,
        );
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn suites_are_big_enough_and_named() {
        let discrete = discrete_suite();
        let streamy = stream_suite();
        assert!(discrete.len() >= 10);
        assert!(streamy.len() >= 10);
        for (name, _) in &discrete {
            assert!(!name.is_empty());
        }
        let names: std::collections::HashSet<&str> =
            streamy.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names.len(), streamy.len(), "duplicate suite names");
    }

    #[test]
    fn discrete_suite_functions_are_tree_extractable() {
        for (name, f) in discrete_suite() {
            let report = check_tree_extraction(&name, &f, 8, DEFAULT_SEED, 64);
            assert!(report.passed(), "{report}");
        }
    }
}
