//! Second-order finite differences for the modes of a finite reflected
//! medium with Dirichlet ends.
//!
//! The eigenproblem `-c(x)^2 u'' = omega^2 u` is discretized on a uniform
//! grid in the symmetrized form `C^{1/2} (-D2) C^{1/2}` with `C = diag(c^2)`,
//! which is similar to the raw operator, symmetric tridiagonal by
//! construction, and positive semidefinite. Eigenpairs come from Sturm
//! bisection plus inverse iteration; modes are mapped back via `u = C^{1/2} w`
//! and L2-normalized with trapezoid weights.

use crate::exec;
use crate::tiling::MaterialProfile;
use crate::{Error, Result};
use std::io::Write;

mod tridiag;

pub use tridiag::SymTridiag;

/// Default grid step (100 nodes per unit cell).
pub const DEFAULT_H: f64 = 0.01;

/// Default localization window half-width and mass threshold.
pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_LOC_THRESHOLD: f64 = 0.5;

/// Symmetric tridiagonal discretization of a material profile.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub h: f64,
    /// x-position of the first interior node.
    pub x0: f64,
    pub domain: (f64, f64),
    /// sqrt of the per-node weight c^2 (used to map w back to u).
    sqrt_weight: Vec<f64>,
    matrix: SymTridiag,
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &SymTridiag {
        &self.matrix
    }

    /// Interior node positions.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x0 + i as f64 * self.h).collect()
    }
}

/// Assemble the operator for `profile` with grid step `h`.
///
/// `h` must divide the unit-cell boundaries exactly; interior nodes that land
/// on a cell boundary take the harmonic mean of the two adjacent `c^2` values.
pub fn assemble(profile: &MaterialProfile, h: f64) -> Result<DiscreteOperator> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h must be positive, got {h}")));
    }
    let (x_min, x_max) = profile.domain;
    let span = x_max - x_min;
    let m = span / h;
    let m_round = m.round();
    if (m - m_round).abs() > 1e-9 || m_round < 2.0 {
        return Err(Error::IncommensurateStep { h });
    }
    let per_cell = 1.0 / h;
    if (per_cell - per_cell.round()).abs() > 1e-12 {
        return Err(Error::IncommensurateStep { h });
    }
    let m = m_round as usize;
    let n = m - 1;
    let inv_h2 = 1.0 / (h * h);
    let mut gamma = Vec::with_capacity(n);
    for i in 1..m {
        let x = x_min + i as f64 * h;
        let rel = x - x_min;
        let nearest = rel.round();
        let g = if (rel - nearest).abs() < 1e-9 && nearest >= 1.0 && nearest <= span - 1.0 {
            // interior cell boundary: harmonic mean of adjacent c^2
            let cl = profile.speed_at(x_min + nearest - 0.5);
            let cr = profile.speed_at(x_min + nearest + 0.5);
            let (l2, r2) = (cl * cl, cr * cr);
            2.0 * l2 * r2 / (l2 + r2)
        } else {
            let c = profile.speed_at(x);
            c * c
        };
        gamma.push(g);
    }
    let sqrt_weight: Vec<f64> = gamma.iter().map(|g| g.sqrt()).collect();
    let diag: Vec<f64> = gamma.iter().map(|g| 2.0 * g * inv_h2).collect();
    let offdiag: Vec<f64> = (0..n - 1)
        .map(|i| -sqrt_weight[i] * sqrt_weight[i + 1] * inv_h2)
        .collect();
    Ok(DiscreteOperator {
        h,
        x0: x_min + h,
        domain: profile.domain,
        sqrt_weight,
        matrix: SymTridiag::new(diag, offdiag),
    })
}

/// A computed eigenmode.
#[derive(Debug, Clone)]
pub struct ModeRecord {
    pub omega: f64,
    /// Mode values on the interior nodes, unit L2 norm (trapezoid weights).
    pub mode_values: Vec<f64>,
    /// Fraction of L2 mass within the localization window.
    pub localization: f64,
    pub is_localized: bool,
    /// Grid geometry for self-contained exports.
    pub x0: f64,
    pub h: f64,
}

impl ModeRecord {
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.mode_values.len()).map(move |i| self.x0 + i as f64 * self.h)
    }

    /// Mode value at x = 0 (exact node when the grid covers it).
    pub fn value_at_zero(&self) -> f64 {
        let idx = (-self.x0 / self.h).round() as isize;
        if idx < 0 || idx as usize >= self.mode_values.len() {
            return 0.0;
        }
        self.mode_values[idx as usize]
    }

    /// Peak amplitude over the whole domain.
    pub fn peak(&self) -> f64 {
        self.mode_values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// CSV rows `x, u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,u")?;
        for (x, u) in self.nodes().zip(self.mode_values.iter()) {
            writeln!(w, "{},{}", x, u)?;
        }
        Ok(())
    }
}

/// Write the spectrum summary CSV `omega, localization, is_localized`.
pub fn write_spectrum_csv<W: Write>(modes: &[ModeRecord], mut w: W) -> Result<()> {
    writeln!(w, "omega,localization,is_localized")?;
    for m in modes {
        writeln!(w, "{},{},{}", m.omega, m.localization, m.is_localized)?;
    }
    Ok(())
}

fn trapezoid_mass(values: &[f64], h: f64) -> f64 {
    // boundary values are zero (Dirichlet), so all interior nodes carry weight h
    values.iter().map(|v| v * v).sum::<f64>() * h
}

/// Fraction of L2 mass with |x| <= window_halfwidth.
pub fn localization_metric(mode: &ModeRecord, window_halfwidth: f64) -> f64 {
    let total: f64 = trapezoid_mass(&mode.mode_values, mode.h);
    if total == 0.0 {
        return 0.0;
    }
    let inner: f64 = mode
        .nodes()
        .zip(mode.mode_values.iter())
        .filter(|(x, _)| x.abs() <= window_halfwidth)
        .map(|(_, v)| v * v)
        .sum::<f64>()
        * mode.h;
    (inner / total).clamp(0.0, 1.0)
}

/// All eigenpairs with `omega <= omega_max`, ascending.
pub fn eigensolve(op: &DiscreteOperator, omega_max: f64) -> Result<Vec<ModeRecord>> {
    eigensolve_with(op, omega_max, DEFAULT_WINDOW, DEFAULT_LOC_THRESHOLD)
}

/// [`eigensolve`] with explicit localization window and threshold.
pub fn eigensolve_with(
    op: &DiscreteOperator,
    omega_max: f64,
    window: f64,
    threshold: f64,
) -> Result<Vec<ModeRecord>> {
    if !(omega_max > 0.0) {
        return Err(Error::Domain(format!("omega_max must be positive, got {omega_max}")));
    }
    let pairs = op.matrix.eigenpairs_below(omega_max * omega_max)?;
    let mut modes = Vec::with_capacity(pairs.len());
    for (lambda, w) in pairs {
        let omega = lambda.max(0.0).sqrt();
        let mut u: Vec<f64> = w
            .iter()
            .zip(op.sqrt_weight.iter())
            .map(|(wi, sw)| wi * sw)
            .collect();
        let norm = trapezoid_mass(&u, op.h).sqrt();
        for v in &mut u {
            *v /= norm;
        }
        let mut rec = ModeRecord {
            omega,
            mode_values: u,
            localization: 0.0,
            is_localized: false,
            x0: op.x0,
            h: op.h,
        };
        rec.localization = localization_metric(&rec, window);
        rec.is_localized = rec.localization >= threshold;
        modes.push(rec);
    }
    Ok(modes)
}

/// Rotate within near-degenerate clusters so that one member concentrates the
/// cluster's interface mass. Any orthonormal basis of a degenerate eigenspace
/// is equally valid; this picks the basis aligned with the localization
/// window, which untangles interface modes that are degenerate with bulk
/// states. Localization fields are recomputed.
pub fn rotate_clusters(modes: &mut [ModeRecord], window: f64, threshold: f64, rel_tol: f64) {
    let n = modes.len();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (modes[j].omega - modes[j - 1].omega).abs() <= rel_tol * modes[j].omega.max(1e-9) {
            j += 1;
        }
        if j - i >= 2 {
            rotate_group(&mut modes[i..j], window);
        }
        for m in &mut modes[i..j] {
            m.localization = localization_metric(m, window);
            m.is_localized = m.localization >= threshold;
        }
        i = j;
    }
}

fn rotate_group(group: &mut [ModeRecord], window: f64) {
    let k = group.len();
    let h = group[0].h;
    // Gram matrix of the window-restricted inner products
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let s: f64 = group[a]
                .nodes()
                .zip(group[a].mode_values.iter().zip(group[b].mode_values.iter()))
                .filter(|(x, _)| x.abs() <= window)
                .map(|(_, (ua, ub))| ua * ub)
                .sum::<f64>()
                * h;
            gram[a * k + b] = s;
            gram[b * k + a] = s;
        }
    }
    // top eigenvector of the k x k Gram matrix by power iteration
    let mut v = vec![1.0 / (k as f64).sqrt(); k];
    for _ in 0..200 {
        let mut next = vec![0.0; k];
        for a in 0..k {
            for b in 0..k {
                next[a] += gram[a * k + b] * v[b];
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return;
        }
        for x in &mut next {
            *x /= norm;
        }
        v = next;
    }
    let len = group[0].mode_values.len();
    let mut combined = vec![0.0; len];
    for (a, coeff) in v.iter().enumerate() {
        for (c, m) in combined.iter_mut().zip(group[a].mode_values.iter()) {
            *c += coeff * m;
        }
    }
    let norm = trapezoid_mass(&combined, h).sqrt();
    for c in &mut combined {
        *c /= norm;
    }
    group[0].mode_values = combined;
    // remaining members keep their span up to the removed component; they are
    // re-orthogonalized against the representative for cleanliness
    for a in 1..k {
        let dot: f64 = group[a]
            .mode_values
            .iter()
            .zip(group[0].mode_values.iter())
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * h;
        let rep = group[0].mode_values.clone();
        let mv = &mut group[a].mode_values;
        for (x, r) in mv.iter_mut().zip(rep.iter()) {
            *x -= dot * r;
        }
        let nrm = trapezoid_mass(mv, h).sqrt();
        if nrm > 1e-12 {
            for x in mv.iter_mut() {
                *x /= nrm;
            }
        }
    }
}

/// Envelope check: `|u(x)| <= slack * u_peak * exp(-kappa |x|)` on the inner
/// `inner` fraction of the domain. The anchor is the mode's peak amplitude,
/// which equals |u(0)| for even interface modes and stands in for it when the
/// mode is odd (u(0) = 0 exactly).
pub fn envelope_check(mode: &ModeRecord, kappa: f64, slack: f64) -> bool {
    envelope_check_inner(mode, kappa, slack, 0.9)
}

pub fn envelope_check_inner(mode: &ModeRecord, kappa: f64, slack: f64, inner: f64) -> bool {
    envelope_worst_ratio(mode, kappa, slack, inner) <= 1.0
}

/// Worst ratio |u(x)| / envelope(x) over the inner region; <= 1 means the
/// bound holds.
pub fn envelope_worst_ratio(mode: &ModeRecord, kappa: f64, slack: f64, inner: f64) -> f64 {
    let anchor = mode.peak().max(mode.value_at_zero().abs());
    if anchor == 0.0 {
        return f64::INFINITY;
    }
    let half_span = (mode.x0.abs()).max(
        mode.x0 + (mode.mode_values.len() - 1) as f64 * mode.h,
    );
    let limit = inner * half_span;
    let mut worst = 0.0f64;
    for (x, u) in mode.nodes().zip(mode.mode_values.iter()) {
        if x.abs() <= limit {
            let bound = slack * anchor * (-kappa * x.abs()).exp();
            worst = worst.max(u.abs() / bound);
        }
    }
    worst
}

/// Solve several profiles concurrently (each assembly/solve is independent).
pub fn eigensolve_profiles(
    profiles: &[MaterialProfile],
    h: f64,
    omega_max: f64,
) -> Vec<Result<Vec<ModeRecord>>> {
    exec::map_slice(profiles, |p| assemble(p, h).and_then(|op| eigensolve(&op, omega_max)))
}
