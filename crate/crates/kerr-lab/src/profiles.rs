//! Radial profiles with analytic derivatives up to third order.
//!
//! The multiplier `q` uses `b, b'`; its d'Alembertian needs `q''` and hence
//! `b'''`, so profiles carry three derivatives. All formulas are exact.

/// A smooth radial profile with first, second, and third derivatives.
pub trait RadialProfile {
    fn v(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    fn d3(&self, r: f64) -> f64;
}

/// Constant profile.
#[derive(Debug, Clone, Copy)]
pub struct Const(pub f64);

impl RadialProfile for Const {
    fn v(&self, _r: f64) -> f64 {
        self.0
    }
    fn d1(&self, _r: f64) -> f64 {
        0.0
    }
    fn d2(&self, _r: f64) -> f64 {
        0.0
    }
    fn d3(&self, _r: f64) -> f64 {
        0.0
    }
}

/// Quintic smoothstep s(x) = 10x^3 - 15x^4 + 6x^5 clamped to [0, 1],
/// C^2 at both ends. Derivatives are with respect to x.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

pub fn smoothstep_d1(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        30.0 * x * x * (1.0 - x) * (1.0 - x)
    }
}

pub fn smoothstep_d2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    }
}

pub fn smoothstep_d3(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        60.0 * (1.0 - 6.0 * x + 6.0 * x * x)
    }
}

/// Antiderivative of the quintic smoothstep on [0, 1]:
/// S(x) = 2.5x^4 - 3x^5 + x^6, with S(x) = x - 1/2 continued for x > 1.
pub fn smoothstep_integral(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        x - 0.5
    } else {
        let x2 = x * x;
        x2 * x2 * (2.5 - 3.0 * x + x2)
    }
}

/// The default multiplier profile b(r) = P(x) + floor(r), x = 2M/r, with
///
///   P(x) = 1.5 - 0.7 x + 1.5 x^2 - 2.35 x^3
///
/// and a positivity floor 3 * s((2.06M - r)/(0.31M)) supported in
/// r < 2.06M, i.e. entirely below every audit grid. The cubic coefficients
/// were tuned so that the assembled q satisfies box q < 0 on [2.2M, 200M]
/// with margin; see the multiplier module tests.
#[derive(Debug, Clone, Copy)]
pub struct DefaultB {
    pub mass: f64,
}

const BP: [f64; 4] = [1.5, -0.7, 1.5, -2.35];

impl DefaultB {
    fn poly(&self, x: f64, k: usize) -> f64 {
        match k {
            0 => BP[0] + x * (BP[1] + x * (BP[2] + x * BP[3])),
            1 => BP[1] + x * (2.0 * BP[2] + x * 3.0 * BP[3]),
            2 => 2.0 * BP[2] + x * 6.0 * BP[3],
            3 => 6.0 * BP[3],
            _ => 0.0,
        }
    }

    /// Floor bump and its r-derivatives: amp * s((r1 - r)/w).
    fn floor(&self, r: f64, k: usize) -> f64 {
        let m = self.mass;
        let (amp, r1, w) = (3.0, 2.06 * m, 0.31 * m);
        let x = (r1 - r) / w;
        let dxdr = -1.0 / w;
        match k {
            0 => amp * smoothstep(x),
            1 => amp * smoothstep_d1(x) * dxdr,
            2 => amp * smoothstep_d2(x) * dxdr * dxdr,
            3 => amp * smoothstep_d3(x) * dxdr * dxdr * dxdr,
            _ => 0.0,
        }
    }
}

impl RadialProfile for DefaultB {
    fn v(&self, r: f64) -> f64 {
        self.poly(2.0 * self.mass / r, 0) + self.floor(r, 0)
    }
    fn d1(&self, r: f64) -> f64 {
        let x = 2.0 * self.mass / r;
        let dx = -2.0 * self.mass / (r * r);
        self.poly(x, 1) * dx + self.floor(r, 1)
    }
    fn d2(&self, r: f64) -> f64 {
        let m = self.mass;
        let x = 2.0 * m / r;
        let dx = -2.0 * m / (r * r);
        let ddx = 4.0 * m / (r * r * r);
        self.poly(x, 2) * dx * dx + self.poly(x, 1) * ddx + self.floor(r, 2)
    }
    fn d3(&self, r: f64) -> f64 {
        let m = self.mass;
        let x = 2.0 * m / r;
        let dx = -2.0 * m / (r * r);
        let ddx = 4.0 * m / (r * r * r);
        let dddx = -12.0 * m / (r * r * r * r);
        self.poly(x, 3) * dx * dx * dx
            + 3.0 * self.poly(x, 2) * dx * ddx
            + self.poly(x, 1) * dddx
            + self.floor(r, 3)
    }
}

/// Smooth compactly supported bump exp(-1/(x(1-x))) on (r0, r1), scaled so
/// the peak value is `amp`. C-infinity; derivatives are exact.
#[derive(Debug, Clone, Copy)]
pub struct ExpBump {
    pub r0: f64,
    pub r1: f64,
    pub amp: f64,
}

impl ExpBump {
    /// g(x) = exp(4 - 1/(x(1-x))) so that g(1/2) = 1.
    fn g(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            (4.0 - 1.0 / (x * (1.0 - x))).exp()
        }
    }
    /// dg/dx = g * (1-2x)... via u = 1/(x(1-x)): du/dx = -(1-2x) u^2 * x(1-x)... kept explicit below.
    fn dg(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            let p = x * (1.0 - x);
            self.g(x) * (1.0 - 2.0 * x) / (p * p)
        }
    }
    // With u = 1/p, p = x(1-x): g = exp(4 - u), g'/g = w := (1-2x)/p^2,
    // w' = -2/p^2 - 2(1-2x)^2/p^3, w'' = 12(1-2x)/p^3 + 6(1-2x)^3/p^4.
    fn d2g(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            let p = x * (1.0 - x);
            let pp = 1.0 - 2.0 * x;
            let w = pp / (p * p);
            let dw = -2.0 / (p * p) - 2.0 * pp * pp / (p * p * p);
            self.g(x) * (w * w + dw)
        }
    }
    fn d3g(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            let p = x * (1.0 - x);
            let pp = 1.0 - 2.0 * x;
            let w = pp / (p * p);
            let dw = -2.0 / (p * p) - 2.0 * pp * pp / (p * p * p);
            let d2w = 12.0 * pp / (p * p * p) + 6.0 * pp * pp * pp / (p * p * p * p);
            self.g(x) * (w * w * w + 3.0 * w * dw + d2w)
        }
    }
    fn x_of(&self, r: f64) -> f64 {
        (r - self.r0) / (self.r1 - self.r0)
    }
}

impl RadialProfile for ExpBump {
    fn v(&self, r: f64) -> f64 {
        self.amp * self.g(self.x_of(r))
    }
    fn d1(&self, r: f64) -> f64 {
        let s = 1.0 / (self.r1 - self.r0);
        self.amp * self.dg(self.x_of(r)) * s
    }
    fn d2(&self, r: f64) -> f64 {
        let s = 1.0 / (self.r1 - self.r0);
        self.amp * self.d2g(self.x_of(r)) * s * s
    }
    fn d3(&self, r: f64) -> f64 {
        let s = 1.0 / (self.r1 - self.r0);
        self.amp * self.d3g(self.x_of(r)) * s * s * s
    }
}

/// Far-field profile amp * (1 - (R1/r)^delta) * s((r - R1)/R1), supported on
/// r >= R1. Used as the f component of the Morawetz vector field.
#[derive(Debug, Clone, Copy)]
pub struct FarField {
    pub r1: f64,
    pub delta: f64,
    pub amp: f64,
}

impl FarField {
    fn parts(&self, r: f64) -> ([f64; 4], [f64; 4]) {
        // a(r) = 1 - (R1/r)^delta and its derivatives
        let d = self.delta;
        let t = (self.r1 / r).powf(d); // = R1^d r^-d
        let a0 = 1.0 - t;
        let a1 = d * t / r;
        let a2 = -d * (d + 1.0) * t / (r * r);
        let a3 = d * (d + 1.0) * (d + 2.0) * t / (r * r * r);
        // s((r - R1)/R1) and derivatives
        let w = 1.0 / self.r1;
        let x = (r - self.r1) * w;
        let s = [
            smoothstep(x),
            smoothstep_d1(x) * w,
            smoothstep_d2(x) * w * w,
            smoothstep_d3(x) * w * w * w,
        ];
        ([a0, a1, a2, a3], s)
    }
}

impl RadialProfile for FarField {
    fn v(&self, r: f64) -> f64 {
        let (a, s) = self.parts(r);
        self.amp * a[0] * s[0]
    }
    fn d1(&self, r: f64) -> f64 {
        let (a, s) = self.parts(r);
        self.amp * (a[1] * s[0] + a[0] * s[1])
    }
    fn d2(&self, r: f64) -> f64 {
        let (a, s) = self.parts(r);
        self.amp * (a[2] * s[0] + 2.0 * a[1] * s[1] + a[0] * s[2])
    }
    fn d3(&self, r: f64) -> f64 {
        let (a, s) = self.parts(r);
        self.amp * (a[3] * s[0] + 3.0 * a[2] * s[1] + 3.0 * a[1] * s[2] + a[0] * s[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivs<P: RadialProfile>(p: &P, pts: &[f64], tol: f64) {
        for &r in pts {
            let h = 1e-5 * r.max(1.0);
            let fd1 = (p.v(r + h) - p.v(r - h)) / (2.0 * h);
            let fd2 = (p.d1(r + h) - p.d1(r - h)) / (2.0 * h);
            let fd3 = (p.d2(r + h) - p.d2(r - h)) / (2.0 * h);
            assert!((fd1 - p.d1(r)).abs() < tol * (1.0 + p.d1(r).abs()), "d1 at {r}");
            assert!((fd2 - p.d2(r)).abs() < tol * (1.0 + p.d2(r).abs()), "d2 at {r}");
            assert!((fd3 - p.d3(r)).abs() < tol * (1.0 + p.d3(r).abs()), "d3 at {r}");
        }
    }

    #[test]
    fn default_b_derivatives_match_finite_differences() {
        let b = DefaultB { mass: 1.0 };
        check_derivs(&b, &[2.2, 2.5, 3.0, 3.3, 5.0, 20.0, 100.0], 1e-6);
    }

    #[test]
    fn default_b_positive_on_domain() {
        let b = DefaultB { mass: 1.0 };
        let mut r = 1.72;
        while r < 300.0 {
            assert!(b.v(r) > 0.0, "b({r}) = {} <= 0", b.v(r));
            r *= 1.003;
        }
    }

    #[test]
    fn exp_bump_supported_and_smooth() {
        let c = ExpBump { r0: 1.9, r1: 2.4, amp: 0.005 };
        assert_eq!(c.v(1.9), 0.0);
        assert_eq!(c.v(2.4), 0.0);
        assert!((c.v(2.15) - 0.005).abs() < 1e-15);
        check_derivs(&c, &[2.0, 2.1, 2.2, 2.3], 1e-4);
    }

    #[test]
    fn far_field_derivatives_match_finite_differences() {
        let f = FarField { r1: 20.0, delta: 0.05, amp: 1.0 };
        check_derivs(&f, &[21.0, 25.0, 30.0, 39.0, 50.0, 200.0], 1e-5);
        assert_eq!(f.v(19.0), 0.0);
        assert!(f.v(45.0) > 0.0);
    }
}
