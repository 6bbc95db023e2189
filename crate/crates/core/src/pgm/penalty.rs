use crate::error::{Error, Result};
use crate::stochastics::{Matrix, SymMatrix};

/// Second-difference penalty on the free logits `(beta_2, ..., beta_K)`.
#[derive(Clone, Debug)]
pub struct PenaltyMatrix {
    /// `(K-3) x (K-1)` second-difference operator.
    pub d: Matrix,
    pub p: SymMatrix,
    /// `P` with `1/c` added to its first two diagonal entries.
    pub pstar: SymMatrix,
    pub c: f64,
}

impl PenaltyMatrix {
    pub fn new(components: usize, c: f64) -> Result<Self> {
        if components < 4 {
            return Err(Error::param(format!(
                "penalty needs at least 4 components, got {components}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param(format!("prior constant c must be positive, got {c}")));
        }
        let free = components - 1;
        let d = Matrix::from_fn(free - 2, free, |i, j| match j.wrapping_sub(i) {
            0 | 2 => 1.0,
            1 => -2.0,
            _ => 0.0,
        });
        let p = d.gram();
        let mut pstar = p.clone();
        let mut corner = vec![0.0; free];
        corner[0] = 1.0 / c;
        corner[1] = 1.0 / c;
        pstar.add_diagonal(&corner);
        Ok(Self { d, p, pstar, c })
    }

    /// Number of free logits, `K - 1`.
    pub fn dim(&self) -> usize {
        self.pstar.dim()
    }

    /// `beta' P* beta`.
    pub fn quad_form(&self, beta: &[f64]) -> f64 {
        self.pstar.quad_form(beta)
    }
}
