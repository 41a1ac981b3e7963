//! Second-order forward-mode differentiation in two variables.

use std::ops::{Add, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar function of `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 2], dd: [[0.0; 2]; 2] }
    }

    /// The coordinate functions `x` and `y` at the point `p`.
    pub fn coords(p: [f64; 2]) -> (Self, Self) {
        (
            Self { v: p[0], d: [1.0, 0.0], dd: [[0.0; 2]; 2] },
            Self { v: p[1], d: [0.0, 1.0], dd: [[0.0; 2]; 2] },
        )
    }

    /// `g ∘ self` for a scalar `g` with `g(v), g'(v), g''(v)` given.
    fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        let mut out = Self { v: g, d: [g1 * self.d[0], g1 * self.d[1]], dd: [[0.0; 2]; 2] };
        for i in 0..2 {
            for j in i..2 {
                out.dd[i][j] = g2 * self.d[i] * self.d[j] + g1 * self.dd[i][j];
            }
        }
        out.dd[1][0] = out.dd[0][1];
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn powi(self, n: i32) -> Self {
        let g = self.v.powi(n);
        let g1 = if n == 0 { 0.0 } else { n as f64 * self.v.powi(n - 1) };
        let g2 = if n < 2 && n >= 0 { 0.0 } else { (n * (n - 1)) as f64 * self.v.powi(n - 2) };
        self.chain(g, g1, g2)
    }

    pub fn scale(self, a: f64) -> Self {
        self * Jet::constant(a)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for i in 0..2 {
            out.d[i] += o.d[i];
            for j in 0..2 {
                out.dd[i][j] += o.dd[i][j];
            }
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet { v: self.v * o.v, d: [0.0; 2], dd: [[0.0; 2]; 2] };
        for i in 0..2 {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in i..2 {
                out.dd[i][j] =
                    self.dd[i][j] * o.v + self.d[i] * o.d[j] + self.d[j] * o.d[i] + self.v * o.dd[i][j];
            }
        }
        out.dd[1][0] = out.dd[0][1];
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, a: f64) -> Jet {
        self + Jet::constant(a)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, a: f64) -> Jet {
        self.scale(a)
    }
}
