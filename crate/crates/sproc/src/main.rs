use std::io::{self, Read, Write};

use clap::{Parser, ValueEnum};

use sproc::cli::{self, RunOptions};
use sproc::Mode;

/// Run a total stream-processor pipeline over stdin bytes.
///
/// The pipeline reads left to right: in `dup | window_sum(2)` the input
/// passes through `dup` first. Stage names come from the built-in registry
/// (`id`, `dup`, `incr`, `negate`, `parity_scan`, `drop_every(k)`,
/// `window_sum(k)`, `pairwise_sum`, `delay(d,pad)`, `counter`, `const(c)`),
/// plus `gen(size)` for a seeded pseudo-random stage.
#[derive(Parser)]
#[command(name = "sproc", version)]
struct Args {
    /// Pipeline expression, e.g. "dup | window_sum(2)"
    pipeline: String,

    /// Composition mode: when to consume input relative to emitting output
    #[arg(long, value_enum, default_value_t = ModeArg::Lazy)]
    mode: ModeArg,

    /// Print one line per read/emit event instead of the output bytes
    #[arg(long, conflicts_with = "bench")]
    trace: bool,

    /// Compare input consumption of both modes on the (buffered) input
    #[arg(long)]
    bench: bool,

    /// Stop after this many output bytes (default: until input is exhausted)
    #[arg(long)]
    outputs: Option<u64>,

    /// Seed for gen(size) stages
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lazy,
    Greedy,
}

fn main() {
    let args = Args::parse();
    std::process::exit(match dispatch(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sproc: {e}");
            e.exit_code()
        }
    });
}

fn dispatch(args: &Args) -> Result<(), cli::CliError> {
    let mut expr = cli::parse_pipeline(&args.pipeline)?;
    expr.mode = match args.mode {
        ModeArg::Lazy => Mode::Lazy,
        ModeArg::Greedy => Mode::Greedy,
    };
    if args.bench {
        let mut input = Vec::new();
        io::stdin().lock().read_to_end(&mut input)?;
        for row in cli::bench(&expr, &input, args.seed)? {
            println!("{}", row.render());
        }
        return Ok(());
    }
    if args.trace {
        // Default to a small window so a bare --trace terminates.
        let n = args.outputs.unwrap_or(10);
        for line in cli::trace(&expr, io::stdin(), n, args.seed)? {
            println!("{line}");
        }
        return Ok(());
    }
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let options = RunOptions {
        outputs: args.outputs,
        seed: args.seed,
    };
    cli::run(&expr, io::stdin(), &mut out, &mut io::stderr(), &options)?;
    out.flush()?;
    Ok(())
}
