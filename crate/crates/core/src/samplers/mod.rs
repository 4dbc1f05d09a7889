//! Batch selection strategies.
//!
//! Every selector returns distinct indices taken from its pool argument, in
//! selection order.

mod cluster_margin;
mod diversity;
mod margin;
mod partition;

pub use cluster_margin::{cluster_margin_select, round_robin_select};
pub use diversity::{kcenter_greedy, kmeanspp_select, random_select, KmeansppSelection};
pub use margin::{binary_margin, labeled_margin, margin_scores, select_lowest_margin};
pub use partition::{
    partitioned_select, BadgeSampler, BatchSampler, ClusterMarginSampler, KCenterSampler, MarginSampler,
    RandomSampler,
};

use crate::{Error, Result};

pub(crate) fn check_budget(k: usize, available: usize) -> Result<()> {
    if k > available {
        return Err(Error::Budget(format!("asked for {k} indices from a pool of {available}")));
    }
    Ok(())
}
