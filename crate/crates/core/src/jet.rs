//! Second-order forward-mode jets in three variables.
//!
//! A [`Jet`] carries a value together with its exact gradient and Hessian with
//! respect to the chart coordinates. Arithmetic on jets applies the chain and
//! product rules, so analytic expressions built from coordinate jets produce
//! exact first and second derivatives (up to rounding) without finite
//! differences.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub const ZERO: Jet = Jet {
        v: 0.0,
        g: [0.0; 3],
        h: [[0.0; 3]; 3],
    };

    pub fn constant(v: f64) -> Self {
        Jet { v, ..Jet::ZERO }
    }

    /// The coordinate function `x^axis` evaluated at `value`.
    pub fn coordinate(value: f64, axis: usize) -> Self {
        let mut j = Jet::constant(value);
        j.g[axis] = 1.0;
        j
    }

    /// The three coordinate jets at a point.
    pub fn coordinates(x: [f64; 3]) -> [Jet; 3] {
        [
            Jet::coordinate(x[0], 0),
            Jet::coordinate(x[1], 1),
            Jet::coordinate(x[2], 2),
        ]
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    pub fn compose(self, f: f64, df: f64, ddf: f64) -> Jet {
        let mut out = Jet::constant(f);
        for k in 0..3 {
            out.g[k] = df * self.g[k];
        }
        for k in 0..3 {
            for l in k..3 {
                let v = df * self.h[k][l] + ddf * self.g[k] * self.g[l];
                out.h[k][l] = v;
                out.h[l][k] = v;
            }
        }
        out
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        self.compose(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(self) -> Jet {
        let s = self.v.sqrt();
        self.compose(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powi(self, n: i32) -> Jet {
        if n == 0 {
            return Jet::constant(1.0);
        }
        let nf = n as f64;
        let p2 = if n >= 2 { self.v.powi(n - 2) } else { 1.0 / self.v.powi(2 - n) };
        let p1 = p2 * self.v;
        self.compose(p1 * self.v, nf * p1, nf * (nf - 1.0) * p2)
    }

    pub fn powf(self, e: f64) -> Jet {
        let p = self.v.powf(e);
        self.compose(p, e * p / self.v, e * (e - 1.0) * p / (self.v * self.v))
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn scale(self, s: f64) -> Jet {
        let mut out = self;
        out.v *= s;
        for k in 0..3 {
            out.g[k] *= s;
            for l in 0..3 {
                out.h[k][l] *= s;
            }
        }
        out
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::ZERO
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for k in 0..3 {
            out.g[k] += o.g[k];
            for l in 0..3 {
                out.h[k][l] += o.h[k][l];
            }
        }
        out
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for k in 0..3 {
            out.g[k] = self.g[k] * o.v + self.v * o.g[k];
        }
        for k in 0..3 {
            for l in k..3 {
                let v = self.h[k][l] * o.v
                    + self.v * o.h[k][l]
                    + (self.g[k] * o.g[l] + self.g[l] * o.g[k]);
                out.h[k][l] = v;
                out.h[l][k] = v;
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        let mut out = self;
        out.v += c;
        out
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, c: f64) -> Jet {
        self.scale(1.0 / c)
    }
}

/// Euclidean radius |x| as a jet.
pub fn radius(x: &[Jet; 3]) -> Jet {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}
