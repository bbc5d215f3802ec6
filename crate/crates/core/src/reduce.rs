//! Order-stable parallel averaging over fading states.

use std::ops::AddAssign;

use rayon::prelude::*;

/// States per work item. Fixed, so chunk sums never depend on the thread count.
pub(crate) const CHUNK: usize = 2048;

/// Sums `f` over `items` chunk by chunk, then adds the chunk sums in order.
pub(crate) fn chunked_sum<T, A, F>(items: &[T], f: F) -> A
where
    T: Sync,
    A: Default + AddAssign + Send,
    F: Fn(usize, &T) -> A + Sync,
{
    let parts: Vec<A> = items
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = A::default();
            for (i, item) in chunk.iter().enumerate() {
                acc += f(c * CHUNK + i, item);
            }
            acc
        })
        .collect();
    let mut total = A::default();
    for p in parts {
        total += p;
    }
    total
}

/// Running sums shared by the dual evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Sums {
    pub objective: f64,
    pub power: f64,
    pub metric: [f64; 2],
}

impl AddAssign for Sums {
    fn add_assign(&mut self, o: Self) {
        self.objective += o.objective;
        self.power += o.power;
        self.metric[0] += o.metric[0];
        self.metric[1] += o.metric[1];
    }
}
