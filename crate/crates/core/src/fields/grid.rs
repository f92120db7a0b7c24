use crate::error::{Error, Result};

/// Points are stored padded to three coordinates; unused axes are zero.
pub type Point = [f64; 3];

/// Uniform cell-centred grid over an axis-aligned box, optionally masked to a
/// centred ball. Each active point carries the weight `Π δ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
    ball: Option<f64>,
    active: Vec<usize>,
}

impl SpatialGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > 3 {
            return Err(Error::param("dim", "grids support 1 to 3 axes"));
        }
        if hi.len() != dim || counts.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: hi.len().min(counts.len()) });
        }
        for i in 0..dim {
            if lo[i].partial_cmp(&hi[i]) != Some(std::cmp::Ordering::Less) || counts[i] == 0 {
                return Err(Error::param("grid", format!("axis {i} is empty")));
            }
        }
        let total = counts.iter().product();
        Ok(Self { lo, hi, counts, ball: None, active: (0..total).collect() })
    }

    /// `count` points per axis over `[−half_width, half_width]ᴺ`.
    pub fn cube(dim: usize, half_width: f64, count: usize) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim], vec![count; dim])
    }

    /// Grid over `[−1, 1]ᴺ` restricted to the closed unit ball.
    pub fn unit_ball(dim: usize, count: usize) -> Result<Self> {
        Self::cube(dim, 1.0, count)?.with_ball(1.0)
    }

    /// Keeps only the points with `|x| ≤ radius`.
    pub fn with_ball(mut self, radius: f64) -> Result<Self> {
        if radius.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::param("radius", "must be positive"));
        }
        let r2 = radius * radius;
        let total: usize = self.counts.iter().product();
        self.ball = Some(radius);
        self.active = (0..total)
            .filter(|&i| {
                let p = self.point_of(i);
                p.iter().map(|v| v * v).sum::<f64>() <= r2
            })
            .collect();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn ball(&self) -> Option<f64> {
        self.ball
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.counts[axis] as f64
    }

    pub fn max_step(&self) -> f64 {
        (0..self.dim()).map(|i| self.step(i)).fold(0.0, f64::max)
    }

    /// Quadrature weight of every point.
    pub fn weight(&self) -> f64 {
        (0..self.dim()).map(|i| self.step(i)).product()
    }

    /// Number of active points.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Total weight of the active points.
    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.weight()
    }

    fn point_of(&self, flat: usize) -> Point {
        let mut p = [0.0; 3];
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            let i = rest % self.counts[axis];
            rest /= self.counts[axis];
            p[axis] = self.lo[axis] + (i as f64 + 0.5) * self.step(axis);
        }
        p
    }

    /// Coordinates of the `i`-th active point.
    pub fn point(&self, i: usize) -> Point {
        self.point_of(self.active[i])
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.active.iter().map(|&i| self.point_of(i))
    }

    /// Whether the box contains `[−ρ, ρ]ᴺ`.
    pub fn covers_ball(&self, radius: f64) -> bool {
        self.lo.iter().all(|&a| a <= -radius) && self.hi.iter().all(|&b| b >= radius)
    }
}
