//! Thin execution helpers: rayon data-parallelism with a sequential fallback.
//!
//! Parallel reductions in this crate are written so that the result does not
//! depend on thread scheduling: sweeps map into indexed vectors first and
//! reduce in index order, which keeps CLI output byte-deterministic.

/// Runs `f` inside a rayon pool with `jobs` threads when the `parallel`
/// feature is active. `jobs = None` uses the global pool; without the
/// feature the closure just runs on the current thread.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .expect("rayon pool")
                .install(f),
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

/// Maps `f` over `0..len`, in parallel when available, preserving order.
pub fn map_indexed<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Always-sequential variant of [`map_indexed`], kept public so benchmarks
/// can compare both paths in a single build.
pub fn map_indexed_seq<T>(len: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..len).map(f).collect()
}

/// Maximizes `value(i)` over `0..len`, returning `(argmax, max)`. Ties break
/// toward the smaller index so parallel and sequential runs agree.
pub fn argmax_indexed(len: usize, value: impl Fn(usize) -> f64 + Sync + Send) -> Option<(usize, f64)> {
    if len == 0 {
        return None;
    }
    let pick = |a: (usize, f64), b: (usize, f64)| {
        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len)
            .into_par_iter()
            .map(|i| (i, value(i)))
            .reduce_with(|a, b| if a.0 < b.0 { pick(a, b) } else { pick(b, a) })
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(|i| (i, value(i))).reduce(|a, b| pick(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_sequential() {
        let par = map_indexed(100, |i| i * i);
        let seq = map_indexed_seq(100, |i| i * i);
        assert_eq!(par, seq);
    }

    #[test]
    fn argmax_breaks_ties_deterministically() {
        let vals = [1.0, 3.0, 3.0, 2.0];
        let (i, v) = argmax_indexed(vals.len(), |i| vals[i]).unwrap();
        assert_eq!(i, 1);
        assert_eq!(v, 3.0);
        assert!(argmax_indexed(0, |_| 0.0).is_none());
    }

    #[test]
    fn with_jobs_runs_closure() {
        let out = with_jobs(Some(2), || map_indexed(10, |i| i).iter().sum::<usize>());
        assert_eq!(out, 45);
    }
}
