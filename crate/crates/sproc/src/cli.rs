//! The pipeline command line: parse `stage | stage | …` expressions, wire
//! them to byte I/O, and observe their evaluation.
//!
//! Pipe text reads left to right in shell order: in `s1 | s2`, the input
//! flows through `s1` first, so `s1` is the upstream (pre) side of the
//! composition and `s2` the downstream. Stage names come from the
//! [`crate::combinators`] registry, plus the special stage `gen(size)` which
//! builds a pseudo-random processor from the `--seed` option.
//!
//! Finite stdin is a truncation of the infinite input the processors are
//! defined over. When the source runs dry mid-demand, everything already
//! producible has been written (outputs are delivered one at a time, as
//! produced); the run then stops with exit status 0 and a diagnostic on the
//! side channel saying which input position the pipeline still demanded. A
//! pipeline that never reads (`const(9)`) produces forever: bound it with
//! `--outputs`.
//!
//! Exit codes: 0 on success (including input truncation), 2 for expression
//! errors (syntax, unknown stage, bad parameters), 3 for I/O errors.

use std::io::{self, BufReader, Read, Write};
use std::sync::{Arc, Mutex, PoisonError};

use crate::combinators::{self, RegistryError};
use crate::compose::{compose, Mode};
use crate::harness;
use crate::signal::{self, Caught};
use crate::streams::Stream;
use crate::tree::Tree;
use crate::Proc;

/// One parsed stage: a name, its integer arguments, and the 1-based byte
/// offset where it started (for error reporting).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    pub name: String,
    pub args: Vec<u64>,
    pub offset: usize,
}

/// A parsed pipeline plus the composition mode it should run under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineExpr {
    pub stages: Vec<StageSpec>,
    pub mode: Mode,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("syntax error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("stage at byte {offset}: {source}")]
    Stage {
        offset: usize,
        source: RegistryError,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// The process exit status this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Stage { .. } => 2,
            CliError::Io(_) => 3,
        }
    }
}

/// Parses `pipeline := stage ("|" stage)*`, `stage := ident ("(" int (","
/// int)* ")")?`. Whitespace is insignificant. Errors carry the 1-based byte
/// offset at which the problem was detected; a dangling `|` is reported at
/// the offset where the missing stage should have started.
pub fn parse_pipeline(text: &str) -> Result<PipelineExpr, CliError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let mut stages = vec![p.stage()?];
    loop {
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b'|') => {
                p.pos += 1;
                stages.push(p.stage()?);
            }
            Some(c) => {
                return Err(p.error(format!(
                    "expected `|` or end of input, found `{}`",
                    c as char
                )))
            }
        }
    }
    Ok(PipelineExpr {
        stages,
        mode: Mode::Lazy,
    })
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: String) -> CliError {
        CliError::Parse {
            offset: self.pos + 1,
            message,
        }
    }

    fn stage(&mut self) -> Result<StageSpec, CliError> {
        self.skip_ws();
        let offset = self.pos + 1;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {}
            _ => return Err(self.error("expected a stage name".into())),
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii idents are valid utf-8")
            .to_string();
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                args.push(self.number()?);
                self.skip_ws();
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected `,` or `)`".into())),
                }
            }
        }
        Ok(StageSpec { name, args, offset })
    }

    fn number(&mut self) -> Result<u64, CliError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits are valid utf-8")
            .parse()
            .map_err(|_| CliError::Parse {
                offset: start + 1,
                message: "number too large".into(),
            })
    }
}

/// Largest accepted `gen(size)` layer depth; deeper layers would make the
/// demo stage uselessly slow.
const MAX_GEN_SIZE: u64 = 1024;

/// Resolves every stage and composes them left to right under the
/// expression's mode. `seed` feeds `gen(size)` stages; each such stage mixes
/// in its position so two `gen` stages in one pipeline differ.
pub fn build_pipeline(expr: &PipelineExpr, seed: u64) -> Result<Proc<u8, u8>, CliError> {
    let mut built: Option<Proc<u8, u8>> = None;
    for (index, stage) in expr.stages.iter().enumerate() {
        let proc = resolve_stage(stage, seed.wrapping_add(index as u64))?;
        built = Some(match built {
            None => proc,
            Some(upstream) => compose(expr.mode, &proc, &upstream),
        });
    }
    built.ok_or(CliError::Parse {
        offset: 1,
        message: "empty pipeline".into(),
    })
}

fn resolve_stage(stage: &StageSpec, seed: u64) -> Result<Proc<u8, u8>, CliError> {
    let stage_error = |source| CliError::Stage {
        offset: stage.offset,
        source,
    };
    if stage.name == "gen" {
        if stage.args.len() != 1 {
            return Err(stage_error(RegistryError::BadArity {
                name: "gen",
                expected: 1,
                got: stage.args.len(),
            }));
        }
        if stage.args[0] > MAX_GEN_SIZE {
            return Err(stage_error(RegistryError::BadParam {
                name: "gen",
                reason: format!("size must be at most {MAX_GEN_SIZE}, got {}", stage.args[0]),
            }));
        }
        return Ok(combinators::generator(seed, stage.args[0] as u32));
    }
    combinators::lookup(&stage.name, &stage.args)
        .map(|instance| instance.proc)
        .map_err(stage_error)
}

/// Options for [`run`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Stop after this many output bytes; `None` runs until the input is
    /// exhausted (forever, if the pipeline never reads).
    pub outputs: Option<u64>,
    /// Seed for `gen(size)` stages.
    pub seed: u64,
}

/// What a finished [`run`] did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub outputs_emitted: u64,
    pub inputs_consumed: u64,
    /// True when the run stopped because the input ran out, rather than
    /// because the `outputs` bound was reached.
    pub source_ended: bool,
}

/// Turns a reader into a byte stream. Read errors are parked in the returned
/// slot and surface as end-of-source, so the driver can distinguish a true
/// EOF from a failed read afterwards.
fn source_stream(
    reader: impl Read + Send + 'static,
) -> (Stream<u8>, Arc<Mutex<Option<io::Error>>>) {
    let slot = Arc::new(Mutex::new(None));
    let parked = slot.clone();
    let mut bytes = BufReader::new(reader).bytes();
    let stream = Stream::from_source(move || match bytes.next() {
        Some(Ok(b)) => Some(b),
        Some(Err(e)) => {
            *parked.lock().unwrap_or_else(PoisonError::into_inner) = Some(e);
            None
        }
        None => None,
    });
    (stream, slot)
}

/// Runs the pipeline over `input`, writing output bytes to `output` one at a
/// time as they are produced and human diagnostics to `diag`.
///
/// The driver walks each forced layer to its leaf by hand rather than going
/// through [`Proc::eat`]: the output side of a CLI run is consumed exactly
/// once, so the memoized output stream would only add a cell allocation per
/// byte (megabytes of them on large inputs).
pub fn run(
    expr: &PipelineExpr,
    input: impl Read + Send + 'static,
    output: &mut impl Write,
    diag: &mut impl Write,
    options: &RunOptions,
) -> Result<RunSummary, CliError> {
    let pipeline = build_pipeline(expr, options.seed)?;
    let (mut stream, error_slot) = source_stream(input);
    let mut proc = pipeline;
    let mut emitted: u64 = 0;
    let mut consumed: u64 = 0;
    let mut ended_at: Option<u64> = None;
    'produce: loop {
        if let Some(limit) = options.outputs {
            if emitted >= limit {
                break;
            }
        }
        let mut tree = proc.out();
        loop {
            match tree {
                Tree::Ret((byte, next)) => {
                    output.write_all(&[byte])?;
                    emitted += 1;
                    proc = next;
                    break;
                }
                Tree::Rd(read) => match signal::catch(|| {
                    let b = stream.head();
                    (b, stream.tail())
                }) {
                    Ok((byte, rest)) => {
                        consumed += 1;
                        tree = read(byte);
                        stream = rest;
                    }
                    Err(Caught::EndOfSource(e)) => {
                        ended_at = Some(e.position);
                        break 'produce;
                    }
                    Err(other) => signal::resume(other),
                },
            }
        }
    }
    output.flush()?;
    if let Some(e) = error_slot
        .lock()
        .unwrap_or_else(PoisonError::into_inner)
        .take()
    {
        return Err(CliError::Io(e));
    }
    if let Some(position) = ended_at {
        writeln!(
            diag,
            "input ended after {consumed} byte(s); {emitted} output byte(s) written; \
             1 unmet demand remained (input position {position})"
        )?;
    }
    Ok(RunSummary {
        outputs_emitted: emitted,
        inputs_consumed: consumed,
        source_ended: ended_at.is_some(),
    })
}

/// Runs the pipeline for `n_outputs` outputs, logging one line per event:
/// `Rd` when an input byte is consumed, `Ret` when an output byte is
/// emitted, each with cumulative consumed/emitted counters. If the input
/// ends mid-trace, a final line says so and the log is returned as far as it
/// got.
pub fn trace(
    expr: &PipelineExpr,
    input: impl Read + Send + 'static,
    n_outputs: u64,
    seed: u64,
) -> Result<Vec<String>, CliError> {
    let pipeline = build_pipeline(expr, seed)?;
    let (stream, error_slot) = source_stream(input);
    let log = Arc::new(Mutex::new(Vec::new()));
    let sink = log.clone();
    let result = signal::catch(move || {
        let mut proc = pipeline;
        let mut stream = stream;
        let mut consumed: u64 = 0;
        let mut emitted: u64 = 0;
        for _ in 0..n_outputs {
            let mut tree = proc.out();
            loop {
                match tree {
                    Tree::Ret((byte, next)) => {
                        emitted += 1;
                        sink.lock()
                            .unwrap_or_else(PoisonError::into_inner)
                            .push(format!("Ret b={byte} consumed={consumed} emitted={emitted}"));
                        proc = next;
                        break;
                    }
                    Tree::Rd(read) => {
                        let byte = stream.head();
                        let rest = stream.tail();
                        consumed += 1;
                        sink.lock()
                            .unwrap_or_else(PoisonError::into_inner)
                            .push(format!("Rd a={byte} consumed={consumed} emitted={emitted}"));
                        tree = read(byte);
                        stream = rest;
                    }
                }
            }
        }
    });
    let mut lines = std::mem::take(&mut *log.lock().unwrap_or_else(PoisonError::into_inner));
    match result {
        Ok(()) => {}
        Err(Caught::EndOfSource(e)) => {
            if let Some(io_err) = error_slot
                .lock()
                .unwrap_or_else(PoisonError::into_inner)
                .take()
            {
                return Err(CliError::Io(io_err));
            }
            lines.push(format!("input ended at position {}", e.position));
        }
        Err(other) => signal::resume(other),
    }
    Ok(lines)
}

/// One row of a benchmark table: inputs needed before output number
/// `outputs` was available under `mode`, or `None` if the input ran out
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub mode: Mode,
    pub outputs: usize,
    pub inputs: Option<u64>,
}

impl BenchRow {
    pub fn render(&self) -> String {
        let mode = match self.mode {
            Mode::Lazy => "lazy",
            Mode::Greedy => "greedy",
        };
        match self.inputs {
            Some(n) => format!("mode={mode} outputs={} inputs={n}", self.outputs),
            None => format!(
                "mode={mode} outputs={} inputs=n/a (input exhausted)",
                self.outputs
            ),
        }
    }
}

/// Output milestones reported by [`bench`].
pub const BENCH_POINTS: [usize; 3] = [1, 10, 100];

/// Builds the pipeline under both modes over the same buffered input and
/// reports how many inputs each mode needed before outputs 1, 10, and 100.
pub fn bench(expr: &PipelineExpr, input: &[u8], seed: u64) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for mode in [Mode::Lazy, Mode::Greedy] {
        let mut moded = expr.clone();
        moded.mode = mode;
        let pipeline = build_pipeline(&moded, seed)?;
        let levels = consumption_levels(&pipeline, input, *BENCH_POINTS.iter().max().unwrap());
        for &point in &BENCH_POINTS {
            rows.push(BenchRow {
                mode,
                outputs: point,
                inputs: levels.get(point - 1).copied(),
            });
        }
    }
    Ok(rows)
}

/// Inputs consumed before each of up to `max_outputs` outputs, stopping
/// early if the buffered input is exhausted.
fn consumption_levels(pipeline: &Proc<u8, u8>, input: &[u8], max_outputs: usize) -> Vec<u64> {
    let buffered = input.to_vec();
    let mut iter = buffered.into_iter();
    let finite = Stream::from_source(move || iter.next());
    let (wrapped, count) = harness::counted(&finite);
    let mut cur = pipeline.eat(&wrapped);
    let mut levels = Vec::new();
    for _ in 0..max_outputs {
        match signal::catch(|| {
            let b = cur.head();
            (b, cur.tail())
        }) {
            Ok((_, rest)) => {
                levels.push(count.load(std::sync::atomic::Ordering::SeqCst));
                cur = rest;
            }
            Err(Caught::EndOfSource(_)) => break,
            Err(other) => signal::resume(other),
        }
    }
    levels
}
