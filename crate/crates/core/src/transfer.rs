//! Exact 2x2 transfer-matrix algebra for homogeneous unit-width layers.
//!
//! A layer with phase multiplier `s` maps Cauchy data `(u, u')` across unit
//! width via a matrix with unit determinant. Long ordered products are kept
//! representable by [`ScaledMat`], which stores a max-abs-normalized matrix
//! together with the logarithm of the factored-out magnitude.
//!
//! Note on conventions: [`homogeneous_transfer`] uses the phase `s * omega`,
//! so `s` is the slowness of a physical layer with wave speed `c = 1/s`.
//! Trace-map computations conventionally take `s = 1` for A layers and
//! `s = r` for B layers; a material profile storing physical speeds `c`
//! maps each cell to `homogeneous_transfer(1.0 / c, omega)`.

use crate::{Error, Result};

/// Tolerance on `| |tr| - 2 |` for the hyperbolic/parabolic/elliptic split.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Real 2x2 matrix; constructors and compositions in this module keep
/// the determinant equal to 1 up to roundoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

/// Trichotomy of SL(2, R) elements by |trace|.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatClass {
    Hyperbolic,
    Parabolic,
    Elliptic,
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    /// Frobenius norm squared.
    fn frob_sq(&self) -> f64 {
        self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22
    }

    /// Spectral (operator 2-) norm, from the closed form for 2x2 matrices.
    pub fn spectral_norm(&self) -> f64 {
        let f = self.frob_sq();
        let d = self.det();
        let disc = (f * f - 4.0 * d * d).max(0.0);
        (0.5 * (f + disc.sqrt())).sqrt()
    }

    /// Apply to a column vector.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    /// Classify by trace with tolerance [`CLASSIFY_TOL`].
    pub fn classify(&self) -> MatClass {
        let t = self.trace().abs();
        if (t - 2.0).abs() <= CLASSIFY_TOL {
            MatClass::Parabolic
        } else if t > 2.0 {
            MatClass::Hyperbolic
        } else {
            MatClass::Elliptic
        }
    }
}

/// Matrix product `later * earlier`: `earlier` acts first on the Cauchy data.
pub fn compose(later: &Mat2, earlier: &Mat2) -> Mat2 {
    Mat2::new(
        later.a11 * earlier.a11 + later.a12 * earlier.a21,
        later.a11 * earlier.a12 + later.a12 * earlier.a22,
        later.a21 * earlier.a11 + later.a22 * earlier.a21,
        later.a21 * earlier.a12 + later.a22 * earlier.a22,
    )
}

/// Transfer matrix of a homogeneous unit-width layer with phase `speed * omega`:
/// entries `[[cos(a), sin(a)/a], [-a sin(a), cos(a)]]` with `a = speed * omega`.
pub fn homogeneous_transfer(speed: f64, omega: f64) -> Result<Mat2> {
    if !(speed > 0.0) {
        return Err(Error::Domain(format!("layer speed must be positive, got {speed}")));
    }
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be finite and nonzero, got {omega}")));
    }
    let a = speed * omega;
    let (s, c) = a.sin_cos();
    Ok(Mat2::new(c, s / a, -a * s, c))
}

/// Inverse of the transfer matrix of a mirror-symmetric unit: `S t S` with
/// `S = diag(1, -1)`, i.e. the off-diagonal entries change sign.
pub fn symmetric_inverse(t: &Mat2) -> Mat2 {
    Mat2::new(t.a11, -t.a12, -t.a21, t.a22)
}

/// Eigen-decomposition of a det-1 matrix.
///
/// For hyperbolic (and parabolic) input the eigenvalues are real and the unit
/// eigenvectors are available; elliptic input has a complex-conjugate pair of
/// unit modulus and `vectors` is `None`.
#[derive(Debug, Clone, Copy)]
pub struct EigenPair2 {
    /// Smaller eigenvalue (real case) or the common modulus (elliptic case).
    pub lambda_small: f64,
    /// Larger eigenvalue (real case) or the common modulus (elliptic case).
    pub lambda_large: f64,
    /// Unit eigenvectors `(v_small, v_large)`; `None` for elliptic input.
    pub vectors: Option<([f64; 2], [f64; 2])>,
}

impl EigenPair2 {
    pub fn is_real(&self) -> bool {
        self.vectors.is_some()
    }
}

fn unit2(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// Unit eigenvector for eigenvalue `lambda`, built from the numerically
/// larger row of `t - lambda I` to avoid cancellation near parabolic points.
fn eigenvector_for(t: &Mat2, lambda: f64) -> [f64; 2] {
    let r1 = [t.a11 - lambda, t.a12];
    let r2 = [t.a21, t.a22 - lambda];
    let n1 = r1[0] * r1[0] + r1[1] * r1[1];
    let n2 = r2[0] * r2[0] + r2[1] * r2[1];
    let r = if n1 >= n2 { r1 } else { r2 };
    unit2([-r[1], r[0]])
}

/// Eigen-decomposition via the closed-form quadratic on the trace.
pub fn eigen(t: &Mat2) -> EigenPair2 {
    let tr = t.trace();
    let det = t.det();
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        // complex pair; modulus sqrt(det) (= 1 for SL(2,R))
        let m = det.max(0.0).sqrt();
        return EigenPair2 {
            lambda_small: m,
            lambda_large: m,
            vectors: None,
        };
    }
    let sq = disc.sqrt();
    // avoid cancellation: compute the larger-magnitude root first
    let l_big = 0.5 * (tr + tr.signum() * sq);
    let l_sml = det / l_big;
    let (lambda_small, lambda_large) = if l_sml.abs() <= l_big.abs() {
        (l_sml, l_big)
    } else {
        (l_big, l_sml)
    };
    let v_small = eigenvector_for(t, lambda_small);
    let v_large = eigenvector_for(t, lambda_large);
    EigenPair2 {
        lambda_small,
        lambda_large,
        vectors: Some((v_small, v_large)),
    }
}

/// Like [`eigen`] but demands real eigenvectors.
pub fn eigen_real(t: &Mat2) -> Result<EigenPair2> {
    let pair = eigen(t);
    if pair.is_real() {
        Ok(pair)
    } else {
        Err(Error::NotHyperbolic { trace: t.trace() })
    }
}

/// A 2x2 matrix stored as `exp(log_scale) * unit` with `unit.max_abs() == 1`,
/// so that products of thousands of layer matrices stay representable.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMat {
    pub unit: Mat2,
    pub log_scale: f64,
}

impl ScaledMat {
    pub fn identity() -> Self {
        ScaledMat {
            unit: Mat2::identity(),
            log_scale: 0.0,
        }
    }

    pub fn from_mat(m: &Mat2) -> Self {
        let s = m.max_abs();
        ScaledMat {
            unit: m.scale(1.0 / s),
            log_scale: s.ln(),
        }
    }

    /// Reconstruct the plain matrix. Only valid while `exp(log_scale)` is
    /// finite; long in-gap products overflow by design and should be
    /// interrogated through the logarithmic accessors instead.
    pub fn reconstruct(&self) -> Mat2 {
        self.unit.scale(self.log_scale.exp())
    }

    /// log of the spectral norm of the represented matrix.
    pub fn log_spectral_norm(&self) -> f64 {
        self.log_scale + self.unit.spectral_norm().ln()
    }

    /// log|trace| of the represented matrix, or `None` when the unit trace
    /// is exactly zero.
    pub fn log_abs_trace(&self) -> Option<f64> {
        let t = self.unit.trace().abs();
        if t == 0.0 {
            None
        } else {
            Some(self.log_scale + t.ln())
        }
    }

    /// Does the represented matrix (assumed det = 1) have |trace| > 2?
    pub fn is_hyperbolic(&self) -> bool {
        match self.log_abs_trace() {
            Some(lt) => lt > (2.0 + CLASSIFY_TOL).ln(),
            None => false,
        }
    }

    /// log of |lambda_large| of the represented matrix, assuming det = 1.
    /// `None` when the matrix is not hyperbolic.
    pub fn log_lambda_large(&self) -> Option<f64> {
        if !self.is_hyperbolic() {
            return None;
        }
        let tr = self.unit.trace();
        let det_u = self.unit.det();
        let disc = tr * tr - 4.0 * det_u;
        if disc <= 0.0 {
            return None;
        }
        let mu_large = 0.5 * (tr.abs() + disc.sqrt());
        Some(self.log_scale + mu_large.ln())
    }

    /// log of |lambda_small| = -log|lambda_large| for a det-1 product.
    pub fn log_lambda_small(&self) -> Option<f64> {
        self.log_lambda_large().map(|l| -l)
    }

    /// Right singular direction of the smallest singular value: the initial
    /// data most strongly damped by the represented matrix. Unlike the small
    /// eigenvector this stays well-defined when the trace passes through
    /// zero, which happens for finite structures near their own mode loci.
    pub fn small_singular_vector(&self) -> [f64; 2] {
        let m = &self.unit;
        // entries of unit^T unit
        let a = m.a11 * m.a11 + m.a21 * m.a21;
        let b = m.a11 * m.a12 + m.a21 * m.a22;
        let d = m.a12 * m.a12 + m.a22 * m.a22;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        let lam_small = 0.5 * (a + d - disc);
        let r1 = [a - lam_small, b];
        let r2 = [b, d - lam_small];
        let n1 = r1[0] * r1[0] + r1[1] * r1[1];
        let n2 = r2[0] * r2[0] + r2[1] * r2[1];
        let r = if n1 >= n2 { r1 } else { r2 };
        unit2([-r[1], r[0]])
    }

    /// Unit eigenvector of the smaller eigenvalue, assuming det = 1.
    /// Eigenvectors of the represented matrix and of `unit` coincide.
    pub fn small_eigenvector(&self) -> Option<[f64; 2]> {
        if !self.is_hyperbolic() {
            return None;
        }
        let tr = self.unit.trace();
        let det_u = self.unit.det();
        let disc = tr * tr - 4.0 * det_u;
        if disc <= 0.0 {
            return None;
        }
        let l_big = 0.5 * (tr + tr.signum() * disc.sqrt());
        let l_sml = det_u / l_big;
        Some(eigenvector_for(&self.unit, l_sml))
    }
}

/// Prepend a layer: represents `next * acc` with the scale renormalized so
/// the unit part has max-abs entry exactly 1.
pub fn scaled_compose(acc: &ScaledMat, next: &Mat2) -> ScaledMat {
    let raw = compose(next, &acc.unit);
    let s = raw.max_abs();
    ScaledMat {
        unit: raw.scale(1.0 / s),
        log_scale: acc.log_scale + s.ln(),
    }
}

/// Product of two scaled matrices (`later * earlier`).
pub fn scaled_mul(later: &ScaledMat, earlier: &ScaledMat) -> ScaledMat {
    let raw = compose(&later.unit, &earlier.unit);
    let s = raw.max_abs();
    ScaledMat {
        unit: raw.scale(1.0 / s),
        log_scale: later.log_scale + earlier.log_scale + s.ln(),
    }
}
