use std::collections::{BTreeMap, BTreeSet};

use parking_lot::{Mutex, RwLock};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{plan, settings_hash, ChangeReport, ChangeSet, EngineError, GenerateOptions, StreetModelStore};
use crate::network::{AxisId, EdgeId, Topology};
use crate::settings::Settings;

#[derive(Debug, Default)]
struct LedgerState {
    owners: BTreeMap<AxisId, String>,
    done: BTreeSet<AxisId>,
}

/// Exclusive per-axis claims for concurrent workers.
#[derive(Debug, Default)]
pub struct SemaphoreLedger {
    state: Mutex<LedgerState>,
}

impl SemaphoreLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tag the untagged axes among `ids` with `token` and return them;
    /// axes held by another token are skipped.
    pub fn acquire(&self, ids: &[AxisId], token: &str) -> Vec<AxisId> {
        if token.is_empty() {
            return Vec::new();
        }
        let mut st = self.state.lock();
        let mut granted = Vec::new();
        for id in ids {
            if !st.owners.contains_key(id) {
                st.owners.insert(id.clone(), token.to_string());
                granted.push(id.clone());
            }
        }
        granted
    }

    /// Free every axis tagged with `token`; returns how many were held.
    pub fn release(&self, token: &str) -> usize {
        let mut st = self.state.lock();
        let before = st.owners.len();
        st.owners.retain(|_, t| t != token);
        before - st.owners.len()
    }

    pub fn owner(&self, id: &AxisId) -> Option<String> {
        self.state.lock().owners.get(id).cloned()
    }

    /// Record axes as processed; returns those not processed before.
    pub fn mark_done(&self, ids: &[AxisId]) -> Vec<AxisId> {
        let mut st = self.state.lock();
        ids.iter().filter(|id| st.done.insert((*id).clone())).cloned().collect()
    }

    pub fn done_count(&self) -> usize {
        self.state.lock().done.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct WorkerStats {
    /// How many times each axis was processed.
    pub processed: BTreeMap<AxisId, usize>,
    /// Axes processed by each worker.
    pub per_worker: Vec<usize>,
    pub report: ChangeReport,
}

/// Run one worker per partition over a shared store. Workers start on their
/// own partition and then help with the others; each chunk of axes is
/// claimed through the ledger, generated outside the store lock and
/// applied atomically. A nonzero `seed` shuffles claim order and chunk
/// sizes; with seed 0 partitions are taken in order, `chunk` axes at a time,
/// so `usize::MAX` makes each partition a single batch.
pub fn run_workers(
    store: &RwLock<StreetModelStore>,
    ledger: &SemaphoreLedger,
    topo: &Topology,
    settings: &Settings,
    partitions: &[Vec<AxisId>],
    chunk: usize,
    seed: u64,
) -> Result<WorkerStats, EngineError> {
    let k = partitions.len();
    let processed: Mutex<BTreeMap<AxisId, usize>> = Mutex::new(BTreeMap::new());
    let reports: Mutex<Vec<(usize, usize, ChangeReport)>> = Mutex::new(Vec::new());
    let failure: Mutex<Option<EngineError>> = Mutex::new(None);
    let opts = GenerateOptions { roundabouts: true, fail_at: None };
    std::thread::scope(|scope| {
        for w in 0..k {
            let (processed, reports, failure) = (&processed, &reports, &failure);
            scope.spawn(move || {
                let token = format!("worker-{w}");
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(w as u64));
                let mut mine = 0;
                let mut report = ChangeReport::default();
                for step in 0..k {
                    let mut order = partitions[(w + step) % k].clone();
                    if seed != 0 {
                        order.shuffle(&mut rng);
                    }
                    let mut i = 0;
                    while i < order.len() {
                        if failure.lock().is_some() {
                            return;
                        }
                        let size = if seed == 0 { chunk.max(1) } else { rng.random_range(1..=chunk.max(1).saturating_mul(2)) };
                        let batch = &order[i..i.saturating_add(size).min(order.len())];
                        i = i.saturating_add(size);
                        let granted = ledger.acquire(batch, &token);
                        let fresh = ledger.mark_done(&granted);
                        if !fresh.is_empty() {
                            {
                                let mut p = processed.lock();
                                fresh.iter().for_each(|a| *p.entry(a.clone()).or_default() += 1);
                            }
                            let scope: BTreeSet<EdgeId> =
                                fresh.iter().flat_map(|a| topo.axis_edges.get(a).into_iter().flatten().cloned()).collect();
                            let res = if scope.is_empty() {
                                Ok(ChangeReport::default())
                            } else {
                                let cs = plan(&store.read(), topo, &scope, settings, opts);
                                cs.and_then(|cs| store.write().apply(cs, None))
                            };
                            match res {
                                Ok(r) => report.merge(r),
                                Err(e) => {
                                    failure.lock().get_or_insert(e);
                                    ledger.release(&token);
                                    return;
                                }
                            }
                            mine += fresh.len();
                        }
                        ledger.release(&token);
                    }
                }
                reports.lock().push((w, mine, report));
            });
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // every axis processed: the store now reflects a full build
    if ledger.done_count() == topo.axes.len() {
        let cs = ChangeSet { settings_hash: Some(settings_hash(settings)), ..ChangeSet::default() };
        store.write().apply(cs, None)?;
    }
    let mut reports = reports.into_inner();
    reports.sort_by_key(|r| r.0);
    let mut stats = WorkerStats { processed: processed.into_inner(), ..WorkerStats::default() };
    for (_, n, r) in reports {
        stats.per_worker.push(n);
        stats.report.merge(r);
    }
    Ok(stats)
}
