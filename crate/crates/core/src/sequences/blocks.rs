use super::{check_rate, TimeSequence};
use crate::error::Result;
use crate::sum::fit_line;

/// `2^{−j·2/(1+r)}`; block `l` is `(level_boundary(l+1), level_boundary(l)]`.
pub fn level_boundary(j: u32, r: f64) -> f64 {
    2f64.powf(-(j as f64) * 2.0 / (1.0 + r))
}

/// Level `l` of a time `t ∈ (0, 1]`, consistent with [`level_boundary`].
pub fn level_of(t: f64, r: f64) -> u32 {
    let mut l = (-(1.0 + r) * t.log2() / 2.0).floor().max(0.0) as u32;
    while l > 0 && t > level_boundary(l, r) {
        l -= 1;
    }
    while t <= level_boundary(l + 1, r) {
        l += 1;
    }
    l
}

/// One time block: indices `first..=last` (empty when `count == 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub level: u32,
    pub first: u64,
    pub last: u64,
    pub count: u64,
}

impl Block {
    pub fn indices(&self) -> std::ops::RangeInclusive<u64> {
        if self.count == 0 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        self.first..=self.last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub r: f64,
    pub blocks: Vec<Block>,
    /// Smallest `C` with `#A_l ≤ C·2^{2rl/(r+1)}` over the nonempty levels.
    pub constant: f64,
    /// Slope of `log₂(#A_l / 2^{2rl/(r+1)})` against `l` over the upper half
    /// of the nonempty levels.
    pub trend: f64,
    /// Set when the trend indicates that no finite `C` exists.
    pub unbounded: bool,
}

impl BlockDecomposition {
    pub fn block(&self, level: u32) -> Option<&Block> {
        self.blocks.iter().find(|b| b.level == level)
    }

    /// `#A_l / 2^{2rl/(r+1)}`
    pub fn normalized_count(&self, level: u32) -> Option<f64> {
        self.block(level).map(|b| b.count as f64 / block_bound(level, self.r))
    }
}

/// `2^{2rl/(r+1)}`
pub fn block_bound(level: u32, r: f64) -> f64 {
    2f64.powf(2.0 * r * level as f64 / (r + 1.0))
}

/// Trend slope above which the normalized counts are reported as unbounded.
pub const UNBOUNDED_TREND: f64 = 0.1;

/// Splits the sequence into the dyadic blocks `A_0, …, A_max_level`.
pub fn block_decompose(seq: &TimeSequence, r: f64, max_level: u32) -> Result<BlockDecomposition> {
    check_rate(r)?;
    let mut blocks = Vec::with_capacity(max_level as usize + 1);
    for l in 0..=max_level {
        let above = seq.count_greater(level_boundary(l, r));
        let upto = seq.count_greater(level_boundary(l + 1, r));
        let count = upto - above;
        blocks.push(Block { level: l, first: above + 1, last: upto, count });
    }
    let nonempty: Vec<&Block> = blocks.iter().filter(|b| b.count > 0).collect();
    let constant = nonempty
        .iter()
        .map(|b| b.count as f64 / block_bound(b.level, r))
        .fold(0.0, f64::max);
    let upper = &nonempty[nonempty.len() / 2..];
    let trend = if upper.len() >= 2 {
        let xs: Vec<f64> = upper.iter().map(|b| b.level as f64).collect();
        let ys: Vec<f64> = upper.iter().map(|b| (b.count as f64 / block_bound(b.level, r)).log2()).collect();
        fit_line(&xs, &ys).0
    } else {
        0.0
    };
    Ok(BlockDecomposition { r, blocks, constant, trend, unbounded: trend > UNBOUNDED_TREND })
}
