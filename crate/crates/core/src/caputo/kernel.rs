//! Process-wide cache of kernel tables q_i = (i·h)^(n−α).
//!
//! Both quadratures at node k only need (t_k − x_j)^(n−α) = q_{k−j}, so one
//! table per (α, h) serves every node, every t_index and both methods. The
//! table for a key is replaced only by a longer one.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::FractionalOrder;
use crate::scalar::{from_usize, to_f64, Scalar};

type Key = (TypeId, u64, u64);
type Table = Arc<dyn Any + Send + Sync>;

fn cache() -> &'static RwLock<HashMap<Key, Table>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, Table>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn key<T: Scalar>(ord: &FractionalOrder<T>, h: T) -> Key {
    (TypeId::of::<T>(), to_f64(ord.effective()).to_bits(), to_f64(h).to_bits())
}

fn lookup<T: Scalar>(key: &Key, len: usize) -> Option<Arc<[T]>> {
    let map = cache().read().unwrap_or_else(|e| e.into_inner());
    let table = map.get(key)?.downcast_ref::<Arc<[T]>>()?;
    (table.len() >= len).then(|| Arc::clone(table))
}

fn compute<T: Scalar>(beta: T, h: T, len: usize) -> Arc<[T]> {
    (0..len).map(|i| if i == 0 { T::zero() } else { (beta * (from_usize::<T>(i) * h).ln()).exp() }).collect()
}

/// Returns a table with at least `m + 1` entries, q_0 = 0 exactly.
pub(crate) fn kernel_table<T: Scalar>(ord: &FractionalOrder<T>, h: T, m: usize) -> Arc<[T]> {
    let key = key(ord, h);
    let len = m + 1;
    if let Some(t) = lookup::<T>(&key, len) {
        return t;
    }
    let table = compute(ord.beta(), h, len);
    let mut map = cache().write().unwrap_or_else(|e| e.into_inner());
    let longer = map.get(&key).and_then(|t| t.downcast_ref::<Arc<[T]>>()).filter(|t| t.len() >= len).cloned();
    match longer {
        Some(t) => t,
        None => {
            map.insert(key, Arc::new(Arc::clone(&table)));
            table
        }
    }
}

/// Number of cached kernel tables.
pub fn kernel_cache_len() -> usize {
    cache().read().unwrap_or_else(|e| e.into_inner()).len()
}

/// Drops every cached kernel table.
pub fn clear_kernel_cache() {
    cache().write().unwrap_or_else(|e| e.into_inner()).clear();
}
