use crate::error::{Error, Result};

/// A real quadratic form `P(ξ) = ξᵀAξ` on `Rᴺ`, the symbol of `P(D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSymbol {
    dim: usize,
    // Row-major symmetric coefficient table.
    form: Vec<f64>,
}

/// Sign of the `ξ₃²` term in the three-dimensional nonelliptic symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThirdAxisSign {
    #[default]
    Plus,
    Minus,
}

impl ThirdAxisSign {
    pub fn value(self) -> f64 {
        match self {
            ThirdAxisSign::Plus => 1.0,
            ThirdAxisSign::Minus => -1.0,
        }
    }
}

impl QuadraticSymbol {
    /// Builds a symbol from a row-major `dim × dim` table, which must be symmetric.
    pub fn new(dim: usize, form: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if form.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: form.len() });
        }
        if form.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("form", "coefficients must be finite"));
        }
        for i in 0..dim {
            for j in 0..i {
                if form[i * dim + j] != form[j * dim + i] {
                    return Err(Error::param("form", "coefficient table must be symmetric"));
                }
            }
        }
        Ok(Self { dim, form })
    }

    /// `|ξ|²` in `dim` dimensions.
    pub fn elliptic(dim: usize) -> Self {
        let mut form = vec![0.0; dim * dim];
        for i in 0..dim {
            form[i * dim + i] = 1.0;
        }
        Self { dim, form }
    }

    /// `ξ₁ξ₂`, the rotated form of `ξ₁² − ξ₂²`.
    pub fn nonelliptic_2d() -> Self {
        Self { dim: 2, form: vec![0.0, 0.5, 0.5, 0.0] }
    }

    /// `ξ₁ξ₂ ± ξ₃²`.
    pub fn nonelliptic_3d(sign: ThirdAxisSign) -> Self {
        let mut form = vec![0.0; 9];
        form[1] = 0.5;
        form[3] = 0.5;
        form[8] = sign.value();
        Self { dim: 3, form }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.form[i * self.dim + j]
    }

    /// Evaluates `ξᵀAξ`. Zero coefficients are skipped, so the nonelliptic
    /// preset returns `ξ₁ξ₂` without rounding beyond the single product.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.form[i * self.dim + j];
                if a != 0.0 {
                    acc += xi[i] * a * xi[j];
                }
            }
        }
        acc
    }

    /// Operator norm bound `Σ|a_ij|`, so that `|P(ξ)| ≤ bound·|ξ|²`.
    pub fn coefficient_bound(&self) -> f64 {
        self.form.iter().map(|a| a.abs()).sum()
    }
}
