//! Rayon executor for level plans, optionally backed by a level cache.

use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;
use rmc_core::rigidprod::{Executor, LevelPartial, LevelPlan};

use crate::cache::LevelCache;
use crate::CliError;

/// Worker count: RMC_THREADS if set (at least 1), else the available parallelism.
pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("RMC_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        Some(n) => n.max(1),
        None => avail,
    }
}

pub struct Parallel {
    pool: ThreadPool,
    chunks: usize,
    cache: Option<Arc<LevelCache>>,
}

impl Parallel {
    pub fn new(threads: usize, cache: Option<Arc<LevelCache>>) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
        Ok(Parallel {
            pool,
            chunks: 4 * threads.max(1),
            cache,
        })
    }

    pub fn from_env(cache: Option<Arc<LevelCache>>) -> Result<Self, CliError> {
        Self::new(thread_count(), cache)
    }

    pub fn pool(&self) -> &ThreadPool {
        &self.pool
    }

    pub fn cache(&self) -> Option<&Arc<LevelCache>> {
        self.cache.as_ref()
    }
}

impl Executor for Parallel {
    fn run_plan(&self, plan: &LevelPlan) -> LevelPartial {
        let cache = self.cache.as_ref().filter(|_| !plan.opts.certify);
        if let Some(hit) = cache.and_then(|c| c.get(plan)) {
            return hit;
        }
        let ranges = plan.chunks(self.chunks);
        let parts: Vec<LevelPartial> = self
            .pool
            .install(|| ranges.par_iter().map(|&r| plan.run(r)).collect());
        let out = plan.merge(parts);
        if let Some(c) = cache {
            c.insert(plan, &out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmc_core::msymb::{i_embedding, GammaElement};
    use rmc_core::padic::{ExtKind, QuadExtApprox};
    use rmc_core::rigidprod::{
        level_product, path_level_product, DivisorSpec, LevelOptions, Model, PointX,
    };

    #[test]
    fn parallel_matches_sequential() {
        let spec = DivisorSpec::parse(Model::Bianchi, 5, "3:1,6:-1,7:1").unwrap();
        let t1 = QuadExtApprox::from_i64(ExtKind::Unramified, 5, 20, 1234567, 7654321);
        let t2 = QuadExtApprox::from_i64(ExtKind::Unramified, 5, 20, 2345678, 8765433);
        let pt = PointX::bianchi(t1, t2, i_embedding(5, 20).unwrap()).unwrap();
        let opts = LevelOptions::new(12);
        let g = GammaElement::identity();
        let seq = level_product(&spec, &g, 1, &pt, opts).unwrap();
        for threads in [1, 3] {
            let ex = Parallel::new(threads, None).unwrap();
            let par =
                path_level_product(&ex, &spec, std::slice::from_ref(&g), &pt, 1, opts).unwrap();
            assert_eq!(par, seq);
        }
    }
}
