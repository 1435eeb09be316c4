//! Control signals that travel through lazy stream cells.
//!
//! Streams are pulled through plain `Fn` closures, so an exceptional
//! condition discovered deep inside a pull (the backing source ran dry, a
//! probe's trap fired, a representation ran past its depth budget) cannot be
//! returned as a `Result` without threading error types through every
//! closure. Instead these conditions unwind with a distinguished payload and
//! are caught at designated boundaries: [`crate::represent::probe`] catches
//! its own traps, the CLI driver catches [`EndOfSource`], and the harness
//! catches [`BudgetExceeded`]. [`catch`] is the single audited catcher;
//! anything it does not recognize is reported as a foreign panic.
//!
//! Code under a catcher must be pure with respect to observable state: a
//! signal may abort it at any pull. All library closures satisfy this;
//! user-supplied stream functions are required to by contract (and must not
//! install their own catch-all unwind handlers).

use std::any::Any;
use std::fmt;
use std::panic::{catch_unwind, panic_any, resume_unwind, AssertUnwindSafe};
use std::sync::Once;

/// A backing source (finite file, exhausted reader) had no item at
/// `position`. Pure mathematical streams never raise this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndOfSource {
    /// Zero-based position of the first unavailable item.
    pub position: u64,
}

/// A probe's trap stream was demanded past the supplied prefix. The id ties
/// the signal to the probe invocation that built the trap, so nested probes
/// never confuse each other's traps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeTrap {
    pub probe_id: u64,
}

/// Representation extraction needed to read deeper than its depth budget
/// along some input path; the probed function is not continuous within the
/// budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetExceeded {
    /// Depth (number of items read) at which the budget was exhausted.
    pub depth: usize,
    /// The input prefix that forced the over-budget read, for diagnostics.
    pub prefix: String,
}

impl fmt::Display for EndOfSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input source ended at position {}", self.position)
    }
}

impl fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "representation budget exhausted at depth {} (prefix {})",
            self.depth, self.prefix
        )
    }
}

/// Everything [`catch`] can intercept.
pub enum Caught {
    EndOfSource(EndOfSource),
    Trap(ProbeTrap),
    Budget(BudgetExceeded),
    /// An ordinary panic from user code; the payload is preserved so it can
    /// be re-raised or rendered.
    Other(Box<dyn Any + Send>),
}

impl Caught {
    /// Renders a panic payload the way the default hook would.
    pub fn describe(&self) -> String {
        match self {
            Caught::EndOfSource(e) => e.to_string(),
            Caught::Trap(t) => format!("unmatched probe trap (probe {})", t.probe_id),
            Caught::Budget(b) => b.to_string(),
            Caught::Other(payload) => describe_payload(payload.as_ref()),
        }
    }
}

pub fn describe_payload(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

fn is_signal(payload: &dyn Any) -> bool {
    payload.is::<EndOfSource>() || payload.is::<ProbeTrap>() || payload.is::<BudgetExceeded>()
}

/// Installs (once) a panic hook that stays silent for our control signals and
/// defers to the previously installed hook for everything else. Signals are
/// raised on ordinary control paths, so printing a panic banner for each
/// would flood stderr.
fn ensure_quiet_hook() {
    static INSTALL: Once = Once::new();
    INSTALL.call_once(|| {
        let previous = std::panic::take_hook();
        std::panic::set_hook(Box::new(move |info| {
            if !is_signal(info.payload()) {
                previous(info);
            }
        }));
    });
}

pub fn raise_end_of_source(position: u64) -> ! {
    ensure_quiet_hook();
    panic_any(EndOfSource { position })
}

pub fn raise_probe_trap(probe_id: u64) -> ! {
    ensure_quiet_hook();
    panic_any(ProbeTrap { probe_id })
}

pub fn raise_budget_exceeded(depth: usize, prefix: String) -> ! {
    ensure_quiet_hook();
    panic_any(BudgetExceeded { depth, prefix })
}

/// Runs `f`, converting an unwind into a [`Caught`]. The closure is asserted
/// unwind-safe: callers rely on the purity contract above rather than on
/// poisoning.
pub fn catch<T>(f: impl FnOnce() -> T) -> Result<T, Caught> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => Ok(v),
        Err(payload) => Err(classify(payload)),
    }
}

fn classify(payload: Box<dyn Any + Send>) -> Caught {
    let payload = match payload.downcast::<EndOfSource>() {
        Ok(e) => return Caught::EndOfSource(*e),
        Err(p) => p,
    };
    let payload = match payload.downcast::<ProbeTrap>() {
        Ok(t) => return Caught::Trap(*t),
        Err(p) => p,
    };
    match payload.downcast::<BudgetExceeded>() {
        Ok(b) => Caught::Budget(*b),
        Err(p) => Caught::Other(p),
    }
}

/// Re-raises a caught condition with its original payload, for catchers that
/// recognized the condition but are not responsible for it.
pub fn resume(caught: Caught) -> ! {
    match caught {
        Caught::EndOfSource(e) => panic_any(e),
        Caught::Trap(t) => panic_any(t),
        Caught::Budget(b) => panic_any(b),
        Caught::Other(p) => resume_unwind(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catch_classifies_end_of_source() {
        match catch(|| -> u8 { raise_end_of_source(7) }) {
            Err(Caught::EndOfSource(e)) => assert_eq!(e.position, 7),
            _ => panic!("expected an end-of-source signal"),
        }
    }

    #[test]
    fn catch_classifies_trap_and_budget() {
        assert!(matches!(
            catch(|| -> u8 { raise_probe_trap(3) }),
            Err(Caught::Trap(ProbeTrap { probe_id: 3 }))
        ));
        assert!(matches!(
            catch(|| -> u8 { raise_budget_exceeded(5, "[0, 0]".into()) }),
            Err(Caught::Budget(BudgetExceeded { depth: 5, .. }))
        ));
    }

    #[test]
    fn catch_preserves_foreign_panics() {
        match catch(|| -> u8 { panic!("boom {}", 1) }) {
            Err(c @ Caught::Other(_)) => assert_eq!(c.describe(), "boom 1"),
            _ => panic!("expected a foreign panic"),
        }
    }

    #[test]
    fn ordinary_values_pass_through() {
        assert!(matches!(catch(|| 41 + 1), Ok(42)));
    }
}
