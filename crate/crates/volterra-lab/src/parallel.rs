//! Seed fan-out over OS threads. Results come back in seed order, so the
//! merged output is independent of the schedule; `VOLTERRA_LAB_THREADS`
//! caps the worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub fn max_threads() -> usize {
    if let Ok(v) = std::env::var("VOLTERRA_LAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Apply `f` to every seed on a worker pool and return results in input
/// order.
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let workers = max_threads().min(seeds.len().max(1));
    if workers <= 1 || seeds.len() <= 1 {
        return seeds.iter().map(|&s| f(s)).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let value = f(seeds[i]);
                *slots[i].lock().unwrap() = Some(value);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_arrive_in_seed_order() {
        let seeds: Vec<u64> = (0..64).collect();
        let out = map_seeds(&seeds, |s| s * s);
        let expect: Vec<u64> = seeds.iter().map(|&s| s * s).collect();
        assert_eq!(out, expect);
    }

    #[test]
    fn thread_cap_is_respected_for_single_worker() {
        std::env::set_var("VOLTERRA_LAB_THREADS", "1");
        assert_eq!(max_threads(), 1);
        let out = map_seeds(&[5, 6], |s| s + 1);
        assert_eq!(out, vec![6, 7]);
        std::env::remove_var("VOLTERRA_LAB_THREADS");
    }
}
