//! Occupation-number basis of the truncated two-copy Fock space.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest number of oscillator configurations per winding sector.
///
/// Vectors store only the winding sectors they occupy, so memory scales with
/// this number rather than with the full product basis.
pub const SECTOR_CAP: usize = 1_000_000;

/// Largest total dimension for which sparse operator matrices are materialized.
pub const OPERATOR_CAP: usize = 200_000;

const NONE: u32 = u32::MAX;

/// A basis element `η`: occupations `m_{A,n}` and windings `w₁, w₂`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockState {
    /// Occupations in slot order `(1,1), …, (1,M), (2,1), …, (2,M)`.
    pub m: Vec<u32>,
    pub w1: i32,
    pub w2: i32,
}

impl FockState {
    pub fn vacuum(mode_cutoff: usize) -> Self {
        Self { m: vec![0; 2 * mode_cutoff], w1: 0, w2: 0 }
    }

    pub fn mode_cutoff(&self) -> usize {
        self.m.len() / 2
    }

    /// Occupation of mode `n` of copy `a ∈ {1, 2}`.
    pub fn occupation(&self, a: u8, n: usize) -> u32 {
        self.m[slot(a, n, self.mode_cutoff())]
    }

    pub fn with_occupation(mut self, a: u8, n: usize, k: u32) -> Self {
        let s = slot(a, n, self.mode_cutoff());
        self.m[s] = k;
        self
    }

    pub fn with_winding(mut self, w1: i32, w2: i32) -> Self {
        self.w1 = w1;
        self.w2 = w2;
        self
    }

    /// Total level `Σ n·m_{A,n}`.
    pub fn level(&self) -> usize {
        let mc = self.mode_cutoff();
        self.m.iter().enumerate().map(|(s, &k)| (s % mc + 1) * k as usize).sum()
    }
}

/// Slot index of mode `n` (1-based) in copy `a` (1 or 2).
pub fn slot(a: u8, n: usize, mode_cutoff: usize) -> usize {
    debug_assert!((a == 1 || a == 2) && n >= 1 && n <= mode_cutoff);
    (a as usize - 1) * mode_cutoff + n - 1
}

/// Truncated basis: modes `1..=M` per copy, level `≤ L`, windings `|w_A| ≤ W`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    mode_cutoff: usize,
    level_cutoff: usize,
    winding_cutoff: i32,
    n_slots: usize,
    occ: Vec<u8>,
    levels: Vec<u32>,
    index: HashMap<Box<[u8]>, u32>,
    raise: Vec<u32>,
    lower: Vec<u32>,
}

/// Number of oscillator configurations with `Σ n m ≤ L` for `M` modes per copy.
pub fn oscillator_count(mode_cutoff: usize, level_cutoff: usize) -> usize {
    // ways[l] = number of configurations of exact level l
    let mut ways = vec![0u128; level_cutoff + 1];
    ways[0] = 1;
    for _copy in 0..2 {
        for n in 1..=mode_cutoff {
            for l in n..=level_cutoff {
                ways[l] += ways[l - n];
            }
        }
    }
    ways.iter().sum::<u128>().min(usize::MAX as u128) as usize
}

impl FockBasis {
    pub fn new(mode_cutoff: usize, level_cutoff: usize, winding_cutoff: i32) -> Result<Self> {
        if mode_cutoff < 1 {
            return invalid("mode cutoff must be at least 1");
        }
        if winding_cutoff < 0 {
            return invalid("winding cutoff must be non-negative");
        }
        if level_cutoff > 255 {
            return invalid("level cutoff above 255 is not supported");
        }
        let size = oscillator_count(mode_cutoff, level_cutoff);
        if size > SECTOR_CAP {
            return Err(Error::BasisTooLarge { size, cap: SECTOR_CAP });
        }
        let n_slots = 2 * mode_cutoff;
        let mut occ = Vec::with_capacity(size * n_slots);
        let mut levels = Vec::with_capacity(size);
        let mut cur = vec![0u8; n_slots];
        enumerate(&mut cur, 0, level_cutoff, mode_cutoff, &mut occ, &mut levels, 0);
        debug_assert_eq!(levels.len(), size);
        let mut index = HashMap::with_capacity(size);
        for i in 0..size {
            index.insert(occ[i * n_slots..(i + 1) * n_slots].to_vec().into_boxed_slice(), i as u32);
        }
        let mut raise = vec![NONE; size * n_slots];
        let mut lower = vec![NONE; size * n_slots];
        let mut key = vec![0u8; n_slots];
        for i in 0..size {
            key.copy_from_slice(&occ[i * n_slots..(i + 1) * n_slots]);
            for s in 0..n_slots {
                let n = s % mode_cutoff + 1;
                if levels[i] as usize + n <= level_cutoff {
                    key[s] += 1;
                    let j = index[&key[..]];
                    raise[i * n_slots + s] = j;
                    lower[j as usize * n_slots + s] = i as u32;
                    key[s] -= 1;
                }
            }
        }
        Ok(Self {
            mode_cutoff,
            level_cutoff,
            winding_cutoff,
            n_slots,
            occ,
            levels,
            index,
            raise,
            lower,
        })
    }

    pub fn mode_cutoff(&self) -> usize {
        self.mode_cutoff
    }

    pub fn level_cutoff(&self) -> usize {
        self.level_cutoff
    }

    pub fn winding_cutoff(&self) -> i32 {
        self.winding_cutoff
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    /// Oscillator configurations per winding sector.
    pub fn n_osc(&self) -> usize {
        self.levels.len()
    }

    pub fn n_sectors(&self) -> usize {
        let w = 2 * self.winding_cutoff as usize + 1;
        w * w
    }

    /// Total number of basis states.
    pub fn dim(&self) -> usize {
        self.n_osc() * self.n_sectors()
    }

    pub fn winding_in_range(&self, w: i32) -> bool {
        w.abs() <= self.winding_cutoff
    }

    /// Position of a winding sector in the lexicographic order.
    pub fn sector_index(&self, w1: i32, w2: i32) -> Option<usize> {
        if !self.winding_in_range(w1) || !self.winding_in_range(w2) {
            return None;
        }
        let w = 2 * self.winding_cutoff + 1;
        Some(((w1 + self.winding_cutoff) * w + (w2 + self.winding_cutoff)) as usize)
    }

    pub fn sector_windings(&self, sector: usize) -> (i32, i32) {
        let w = 2 * self.winding_cutoff as usize + 1;
        (
            (sector / w) as i32 - self.winding_cutoff,
            (sector % w) as i32 - self.winding_cutoff,
        )
    }

    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.occ[i * self.n_slots..(i + 1) * self.n_slots]
    }

    #[inline]
    pub fn occupation(&self, i: usize, s: usize) -> u32 {
        self.occ[i * self.n_slots + s] as u32
    }

    pub fn level(&self, i: usize) -> usize {
        self.levels[i] as usize
    }

    /// Index of the configuration with one more quantum in slot `s`, if retained.
    #[inline]
    pub fn raise(&self, i: usize, s: usize) -> Option<usize> {
        let j = self.raise[i * self.n_slots + s];
        (j != NONE).then_some(j as usize)
    }

    #[inline]
    pub fn lower(&self, i: usize, s: usize) -> Option<usize> {
        let j = self.lower[i * self.n_slots + s];
        (j != NONE).then_some(j as usize)
    }

    /// Oscillator index of a state, if it lies in the basis.
    pub fn osc_index(&self, state: &FockState) -> Option<usize> {
        if state.m.len() != self.n_slots || state.m.iter().any(|&k| k > 255) {
            return None;
        }
        let key: Vec<u8> = state.m.iter().map(|&k| k as u8).collect();
        self.index.get(&key[..]).map(|&i| i as usize)
    }

    /// Global index in the enumeration `(w₁, w₂, occupations)`.
    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        let sec = self.sector_index(state.w1, state.w2)?;
        Some(sec * self.n_osc() + self.osc_index(state)?)
    }

    pub fn state(&self, global: usize) -> FockState {
        let (w1, w2) = self.sector_windings(global / self.n_osc());
        let i = global % self.n_osc();
        FockState { m: self.occupations(i).iter().map(|&k| k as u32).collect(), w1, w2 }
    }

    pub fn osc_state(&self, i: usize, w1: i32, w2: i32) -> FockState {
        FockState { m: self.occupations(i).iter().map(|&k| k as u32).collect(), w1, w2 }
    }

    /// Indices of oscillator configurations with level at most `max_level`.
    pub fn low_levels(&self, max_level: usize) -> Vec<usize> {
        (0..self.n_osc()).filter(|&i| self.level(i) <= max_level).collect()
    }
}

fn enumerate(
    cur: &mut [u8],
    s: usize,
    budget: usize,
    mode_cutoff: usize,
    occ: &mut Vec<u8>,
    levels: &mut Vec<u32>,
    level: usize,
) {
    if s == cur.len() {
        occ.extend_from_slice(cur);
        levels.push(level as u32);
        return;
    }
    let n = s % mode_cutoff + 1;
    let max_k = budget / n;
    for k in 0..=max_k {
        cur[s] = k as u8;
        enumerate(cur, s + 1, budget - k * n, mode_cutoff, occ, levels, level + k * n);
    }
    cur[s] = 0;
}
