//! Data-parallel campaign execution over sample-index ranges.
//!
//! Reports merge associatively with index tie-breaks, so the result does not
//! depend on the number of workers.

use std::ops::Range;
use std::thread;

use hessianlab_core::inequality::{finish, Campaign};
use hessianlab_core::{Result, VerificationReport};

/// Worker count: `HESSIANLAB_THREADS` if set to a positive integer, else the
/// available parallelism.
pub fn thread_count() -> usize {
    std::env::var("HESSIANLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Splits `0..count` into contiguous chunks, runs `f` on each, and merges in
/// chunk order.
pub fn run_chunked<F>(count: u64, threads: usize, f: F) -> Result<VerificationReport>
where
    F: Fn(Range<u64>) -> Result<VerificationReport> + Sync,
{
    let workers = (threads.max(1) as u64).min(count.max(1));
    let chunk = count.div_ceil(workers);
    let ranges: Vec<Range<u64>> = (0..workers)
        .map(|w| (w * chunk).min(count)..((w + 1) * chunk).min(count))
        .collect();
    if workers == 1 {
        return f(0..count);
    }
    let results: Vec<Result<VerificationReport>> = thread::scope(|s| {
        let handles: Vec<_> = ranges.into_iter().map(|r| s.spawn(|| f(r))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("campaign worker panicked"))
            .collect()
    });
    let mut it = results.into_iter();
    let mut acc = it.next().expect("at least one worker")?;
    for r in it {
        acc = acc.merge(r?);
    }
    Ok(acc)
}

pub fn run_campaign(c: &Campaign) -> Result<VerificationReport> {
    run_campaign_with(c, thread_count())
}

pub fn run_campaign_with(c: &Campaign, threads: usize) -> Result<VerificationReport> {
    finish(run_chunked(c.spec.count, threads, |r| c.run_range(r))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hessianlab_core::inequality::Target;
    use hessianlab_core::sampling::SampleSpec;

    #[test]
    fn worker_count_does_not_change_the_report() {
        let mut spec = SampleSpec::new(4, 3);
        spec.count = 300;
        spec.seed = 11;
        let c = Campaign::new(Target::Concavity, spec).unwrap();
        let one = run_campaign_with(&c, 1).unwrap();
        for t in [2, 3, 7] {
            assert_eq!(run_campaign_with(&c, t).unwrap(), one);
        }
    }
}
