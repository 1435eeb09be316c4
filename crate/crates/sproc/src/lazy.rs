//! A synchronized, memoized suspension. Shared by stream cells and processor
//! layers; forcing is serialized per cell and the computation runs at most
//! once on success. If the computation unwinds (a control signal passing
//! through), the cell is left unevaluated and a later force retries, which is
//! sound because cell computations are pure.

use std::sync::{Mutex, OnceLock, PoisonError};

type Compute<T> = Box<dyn Fn() -> T + Send + Sync>;

pub(crate) struct ThunkCell<T> {
    value: OnceLock<T>,
    compute: Mutex<Option<Compute<T>>>,
}

impl<T> ThunkCell<T> {
    pub fn suspend(f: impl Fn() -> T + Send + Sync + 'static) -> Self {
        ThunkCell {
            value: OnceLock::new(),
            compute: Mutex::new(Some(Box::new(f))),
        }
    }

    /// A cell that is already forced; no computation is stored.
    pub fn ready(value: T) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(value);
        ThunkCell {
            value: cell,
            compute: Mutex::new(None),
        }
    }

    pub fn force(&self) -> &T {
        if let Some(v) = self.value.get() {
            return v;
        }
        // The poison recovery matters: a signal unwinding out of a compute
        // poisons the mutex, and the retry path below must still run.
        let mut slot = self
            .compute
            .lock()
            .unwrap_or_else(PoisonError::into_inner);
        if self.value.get().is_none() {
            let f = slot
                .as_ref()
                .expect("unforced cell must hold its computation");
            let v = f();
            let _ = self.value.set(v);
            *slot = None;
        }
        drop(slot);
        self.value.get().expect("cell was just forced")
    }

    /// Removes the forced value, used by iterative drops of long chains.
    pub fn take_value(&mut self) -> Option<T> {
        self.value.take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    #[test]
    fn forces_once_and_memoizes() {
        let runs = Arc::new(AtomicU32::new(0));
        let r = runs.clone();
        let cell = ThunkCell::suspend(move || {
            r.fetch_add(1, Ordering::SeqCst);
            11
        });
        assert_eq!(*cell.force(), 11);
        assert_eq!(*cell.force(), 11);
        assert_eq!(runs.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retries_after_an_unwind() {
        let runs = Arc::new(AtomicU32::new(0));
        let r = runs.clone();
        let cell = ThunkCell::suspend(move || {
            if r.fetch_add(1, Ordering::SeqCst) == 0 {
                panic!("first attempt fails");
            }
            5
        });
        assert!(crate::signal::catch(|| *cell.force()).is_err());
        assert_eq!(*cell.force(), 5);
        assert_eq!(runs.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn ready_cells_need_no_computation() {
        let cell = ThunkCell::ready("x");
        assert_eq!(*cell.force(), "x");
    }
}
