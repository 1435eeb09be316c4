//! A standard library of byte processors, a named registry over them, and a
//! seeded generator of random processors.
//!
//! Everything here works over the byte alphabet so the CLI can wire
//! processors to raw I/O and tests can enumerate small prefixes exhaustively.
//! Every registered processor is productive with a recorded bound: its first
//! `n` outputs are available after at most `bound * n` inputs. A processor
//! that could stay silent for unboundedly long (a true `filter`) is not
//! expressible here, by design; [`drop_every`] is the bounded substitute.
//!
//! The [`registry`] names double as the pipeline vocabulary of the CLI:
//! [`lookup`] resolves a name plus integer parameters to a runnable
//! [`ProcessorInstance`].

use crate::tree::Tree;
use crate::Proc;

/// Identity: emits each input unchanged.
pub fn identity() -> Proc<u8, u8> {
    Proc::mealy(|(), a| ((), a), ())
}

/// Emits each input twice.
pub fn dup() -> Proc<u8, u8> {
    Proc::unfold(
        |pending: Option<u8>| match pending {
            Some(a) => Tree::ret((a, None)),
            None => Tree::rd(|a| Tree::ret((a, Some(a)))),
        },
        None,
    )
}

/// Adds one to each byte, wrapping.
pub fn incr() -> Proc<u8, u8> {
    Proc::mealy(|(), a: u8| ((), a.wrapping_add(1)), ())
}

/// Bitwise complement of each byte.
pub fn negate() -> Proc<u8, u8> {
    Proc::mealy(|(), a: u8| ((), !a), ())
}

/// Running parity: the n-th output is the XOR of the low bits of the first
/// n inputs.
pub fn parity_scan() -> Proc<u8, u8> {
    Proc::mealy(
        |acc: u8, a: u8| {
            let p = acc ^ (a & 1);
            (p, p)
        },
        0,
    )
}

/// Emits `k - 1` of every `k` inputs, dropping each k-th.
///
/// # Panics
///
/// If `k < 2`: dropping every input would never emit, which no productive
/// processor can do.
pub fn drop_every(k: u64) -> Proc<u8, u8> {
    assert!(k >= 2, "drop_every needs k >= 2 to stay productive");
    // State: how many items of the current k-block have been emitted.
    Proc::unfold(
        move |emitted: u64| {
            Tree::rd(move |a: u8| {
                if emitted == k - 1 {
                    // This input is the k-th of its block: drop it and emit
                    // the first item of the next block instead.
                    Tree::rd(|b: u8| Tree::ret((b, 1)))
                } else {
                    Tree::ret((a, emitted + 1))
                }
            })
        },
        0,
    )
}

/// Sliding-window sums: the n-th output is the wrapping sum of inputs
/// n .. n+k. The first output waits for `k` inputs; each later one needs a
/// single fresh input.
///
/// # Panics
///
/// If `k == 0`.
pub fn window_sum(k: u64) -> Proc<u8, u8> {
    assert!(k >= 1, "window_sum needs a non-empty window");
    let k = k as usize;
    fn fill(window: Vec<u8>, k: usize) -> Tree<u8, (u8, Vec<u8>)> {
        if window.len() == k {
            let sum = window.iter().fold(0u8, |s, &b| s.wrapping_add(b));
            let mut slid = window;
            slid.remove(0);
            Tree::ret((sum, slid))
        } else {
            Tree::rd(move |a: u8| {
                let mut grown = window.clone();
                grown.push(a);
                fill(grown, k)
            })
        }
    }
    Proc::unfold(move |w: Vec<u8>| fill(w, k), Vec::new())
}

/// Wrapping sums of non-overlapping input pairs: reads two, emits their sum.
pub fn pairwise_sum() -> Proc<u8, u8> {
    Proc::unfold(
        |()| Tree::rd(|a: u8| Tree::rd(move |b: u8| Tree::ret((a.wrapping_add(b), ())))),
        (),
    )
}

/// Emits `pad` for the first `d` outputs, then relays the input unchanged.
pub fn delay(d: u64, pad: u8) -> Proc<u8, u8> {
    Proc::unfold(
        move |remaining: u64| {
            if remaining > 0 {
                Tree::ret((pad, remaining - 1))
            } else {
                Tree::rd(|a| Tree::ret((a, 0)))
            }
        },
        d,
    )
}

/// Emits 0, 1, 2, … (wrapping), reading and ignoring one input per output.
pub fn counter() -> Proc<u8, u8> {
    Proc::mealy(|s: u8, _a: u8| (s.wrapping_add(1), s), 0)
}

/// Emits `c` forever without ever reading.
pub fn constant(c: u8) -> Proc<u8, u8> {
    Proc::unfold(move |()| Tree::ret((c, ())), ())
}

/// A registry entry: a processor name, how many integer parameters it takes,
/// and metadata enough to build and bound an instance.
pub struct NamedProcessor {
    pub name: &'static str,
    /// Number of integer parameters `build` expects.
    pub arity: usize,
    /// Productivity bound as a function of the parameters: any `n` outputs
    /// need at most `bound * n` inputs.
    bound: fn(&[u64]) -> u64,
    build: fn(&[u64]) -> Result<Proc<u8, u8>, RegistryError>,
}

/// A processor resolved from the registry, ready to run.
#[derive(Clone)]
pub struct ProcessorInstance {
    /// Rendered name including parameters, e.g. `window_sum(2)`.
    pub name: String,
    pub proc: Proc<u8, u8>,
    /// Any `n` outputs need at most `max_inputs_per_output * n` inputs.
    pub max_inputs_per_output: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown processor `{0}`")]
    UnknownProcessor(String),
    #[error("`{name}` takes {expected} parameter(s), got {got}")]
    BadArity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("`{name}`: {reason}")]
    BadParam { name: &'static str, reason: String },
}

fn byte_param(name: &'static str, value: u64, what: &str) -> Result<u8, RegistryError> {
    u8::try_from(value).map_err(|_| RegistryError::BadParam {
        name,
        reason: format!("{what} must be a byte (0..=255), got {value}"),
    })
}

/// All registered processors. The names are the stage vocabulary of the
/// pipeline CLI.
pub fn registry() -> &'static [NamedProcessor] {
    &[
        NamedProcessor {
            name: "id",
            arity: 0,
            bound: |_| 1,
            build: |_| Ok(identity()),
        },
        NamedProcessor {
            name: "dup",
            arity: 0,
            bound: |_| 1,
            build: |_| Ok(dup()),
        },
        NamedProcessor {
            name: "incr",
            arity: 0,
            bound: |_| 1,
            build: |_| Ok(incr()),
        },
        NamedProcessor {
            name: "negate",
            arity: 0,
            bound: |_| 1,
            build: |_| Ok(negate()),
        },
        NamedProcessor {
            name: "parity_scan",
            arity: 0,
            bound: |_| 1,
            build: |_| Ok(parity_scan()),
        },
        NamedProcessor {
            name: "drop_every",
            arity: 1,
            bound: |_| 2,
            build: |args| {
                if args[0] < 2 {
                    return Err(RegistryError::BadParam {
                        name: "drop_every",
                        reason: format!(
                            "k must be at least 2 to stay productive, got {}",
                            args[0]
                        ),
                    });
                }
                Ok(drop_every(args[0]))
            },
        },
        NamedProcessor {
            name: "window_sum",
            arity: 1,
            bound: |args| args[0].max(1),
            build: |args| {
                if args[0] < 1 {
                    return Err(RegistryError::BadParam {
                        name: "window_sum",
                        reason: "window size must be at least 1".into(),
                    });
                }
                Ok(window_sum(args[0]))
            },
        },
        NamedProcessor {
            name: "pairwise_sum",
            arity: 0,
            bound: |_| 2,
            build: |_| Ok(pairwise_sum()),
        },
        NamedProcessor {
            name: "delay",
            arity: 2,
            bound: |_| 1,
            build: |args| Ok(delay(args[0], byte_param("delay", args[1], "pad")?)),
        },
        NamedProcessor {
            name: "counter",
            arity: 0,
            bound: |_| 1,
            build: |_| Ok(counter()),
        },
        NamedProcessor {
            name: "const",
            arity: 1,
            bound: |_| 0,
            build: |args| Ok(constant(byte_param("const", args[0], "value")?)),
        },
    ]
}

/// Resolves a registry name and parameters to a runnable instance.
pub fn lookup(name: &str, args: &[u64]) -> Result<ProcessorInstance, RegistryError> {
    let entry = registry()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| RegistryError::UnknownProcessor(name.to_string()))?;
    if args.len() != entry.arity {
        return Err(RegistryError::BadArity {
            name: entry.name,
            expected: entry.arity,
            got: args.len(),
        });
    }
    Ok(ProcessorInstance {
        name: render_name(entry.name, args),
        proc: (entry.build)(args)?,
        max_inputs_per_output: (entry.bound)(args),
    })
}

fn render_name(name: &str, args: &[u64]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        let rendered: Vec<String> = args.iter().map(u64::to_string).collect();
        format!("{name}({})", rendered.join(","))
    }
}

/// One instance of every registry processor with representative parameters,
/// for suite-style tests.
pub fn default_instances() -> Vec<ProcessorInstance> {
    [
        ("id", vec![]),
        ("dup", vec![]),
        ("incr", vec![]),
        ("negate", vec![]),
        ("parity_scan", vec![]),
        ("drop_every", vec![2]),
        ("drop_every", vec![3]),
        ("window_sum", vec![2]),
        ("window_sum", vec![4]),
        ("pairwise_sum", vec![]),
        ("delay", vec![2, 0]),
        ("counter", vec![]),
        ("const", vec![7]),
    ]
    .into_iter()
    .map(|(name, args)| lookup(name, &args).expect("default instance"))
    .collect()
}

/// The 64-bit finalizer of the splitmix generator: a cheap, well-dispersed
/// hash used to derive child and continuation seeds.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic pseudo-random productive processor: every layer is a
/// random well-founded tree of depth at most `size`, with random byte
/// outputs and path-dependent continuation seeds. The same `(seed, size)`
/// always yields the same processor.
pub fn generator(seed: u64, size: u32) -> Proc<u8, u8> {
    Proc::unfold(
        move |layer_seed: u64| gen_layer(layer_seed, size),
        mix64(seed),
    )
}

fn gen_layer(seed: u64, depth_left: u32) -> Tree<u8, (u8, u64)> {
    let roll = mix64(seed);
    // A quarter of interior rolls stop early, so shallow and deep layers
    // both occur; depth_left == 0 forces a leaf, bounding every path.
    if depth_left == 0 || roll % 4 == 0 {
        let output = (mix64(!roll) % 256) as u8;
        let next_seed = mix64(roll.rotate_left(17));
        Tree::ret((output, next_seed))
    } else {
        Tree::rd(move |a: u8| gen_layer(mix64(roll ^ (u64::from(a) + 1).wrapping_mul(0xA5A5_A5A5)), depth_left - 1))
    }
}

/// A deterministic random well-founded tree over bytes, for property tests:
/// depth at most `depth`, leaves labelled with random bytes.
pub fn random_tree(seed: u64, depth: u32) -> Tree<u8, u8> {
    let roll = mix64(seed);
    if depth == 0 || roll % 3 == 0 {
        Tree::ret((roll >> 8) as u8)
    } else {
        Tree::rd(move |a: u8| random_tree(roll ^ (u64::from(a) << 1 | 1), depth - 1))
    }
}
