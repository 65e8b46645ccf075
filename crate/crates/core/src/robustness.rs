//! Randomized per-cell disorder sweeps for edge-mode stability studies.
//!
//! Every cell of the full reflected profile receives an independent
//! multiplicative perturbation `c -> (1 + X) c` with `X ~ N(0, sigma^2)`,
//! clamped below by `clamp_epsilon`; the left and right halves are drawn
//! independently, so the perturbation breaks the mirror symmetry. Variates
//! come from ChaCha8 with explicitly derived per-(step, trial) seeds, so a
//! sweep is reproducible bit for bit.

use crate::discretize::{assemble, eigensolve_with, ModeRecord};
use crate::exec;
use crate::tiling::MaterialProfile;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::io::Write;

/// Parameters of one random perturbation draw.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSpec {
    /// Standard deviation of the relative speed perturbation.
    pub sigma: f64,
    /// Lower clamp applied after perturbing (default 1e-3).
    pub clamp_epsilon: f64,
    pub rng_seed: u64,
}

impl PerturbationSpec {
    pub fn new(sigma: f64, rng_seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Domain(format!("sigma must be nonnegative, got {sigma}")));
        }
        Ok(PerturbationSpec {
            sigma,
            clamp_epsilon: 1e-3,
            rng_seed,
        })
    }
}

/// Perturb every cell speed independently; deterministic given the seed.
pub fn perturb_profile(profile: &MaterialProfile, spec: &PerturbationSpec) -> Result<MaterialProfile> {
    if !(spec.clamp_epsilon > 0.0) {
        return Err(Error::Domain("clamp epsilon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let normal = Normal::new(0.0, spec.sigma)
        .map_err(|e| Error::Domain(format!("bad sigma: {e}")))?;
    let speeds: Vec<f64> = profile
        .speeds
        .iter()
        .map(|&c| {
            let x: f64 = normal.sample(&mut rng);
            (c * (1.0 + x)).max(spec.clamp_epsilon)
        })
        .collect();
    Ok(MaterialProfile {
        breakpoints: profile.breakpoints.clone(),
        speeds,
        domain: profile.domain,
    })
}

/// One spectrum entry of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub trial: u32,
    pub omega: f64,
    pub localization: f64,
    pub is_localized: bool,
}

/// Full result of a disorder sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub sigma_values: Vec<f64>,
    pub trials_per_sigma: u32,
}

impl SweepResult {
    /// CSV rows `sigma, trial, omega, localization, is_localized`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sigma,trial,omega,localization,is_localized")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.sigma, r.trial, r.omega, r.localization, r.is_localized
            )?;
        }
        Ok(())
    }
}

/// splitmix64, used to derive independent per-(step, trial) seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed for (step, trial): `base_seed XOR splitmix64(step << 32 | trial)`.
pub fn derive_seed(base_seed: u64, step: u32, trial: u32) -> u64 {
    base_seed ^ splitmix64(((step as u64) << 32) | trial as u64)
}

/// Evenly spaced sigma grid `[0, sigma_max]` with `n_steps` points.
pub fn sigma_grid(sigma_max: f64, n_steps: usize) -> Vec<f64> {
    if n_steps <= 1 {
        return vec![0.0];
    }
    (0..n_steps)
        .map(|k| sigma_max * k as f64 / (n_steps - 1) as f64)
        .collect()
}

/// Sweep over the sigma grid with `trials_per_sigma` independent draws each,
/// eigensolving the perturbed profile up to `omega_max`. (step, trial) pairs
/// are independent and run in parallel; rows are assembled in (step, trial)
/// order.
#[allow(clippy::too_many_arguments)]
pub fn robustness_sweep(
    profile: &MaterialProfile,
    sigma_max: f64,
    n_steps: usize,
    trials_per_sigma: u32,
    omega_max: f64,
    base_seed: u64,
    h: f64,
    loc_window: f64,
    loc_threshold: f64,
) -> Result<SweepResult> {
    if n_steps < 1 || trials_per_sigma < 1 {
        return Err(Error::Domain("need at least one sigma step and one trial".into()));
    }
    let sigmas = sigma_grid(sigma_max, n_steps);
    let jobs: Vec<(usize, u32)> = (0..sigmas.len())
        .flat_map(|s| (0..trials_per_sigma).map(move |t| (s, t)))
        .collect();
    let results: Vec<Result<Vec<SweepRow>>> = exec::map_slice(&jobs, |&(step, trial)| {
        let sigma = sigmas[step];
        let spec = PerturbationSpec {
            sigma,
            clamp_epsilon: 1e-3,
            rng_seed: derive_seed(base_seed, step as u32, trial),
        };
        let perturbed = perturb_profile(profile, &spec)?;
        let op = assemble(&perturbed, h).map_err(|e| annotate(e, sigma, trial))?;
        let modes =
            eigensolve_with(&op, omega_max, loc_window, loc_threshold).map_err(|e| annotate(e, sigma, trial))?;
        Ok(modes
            .iter()
            .map(|m: &ModeRecord| SweepRow {
                sigma,
                trial,
                omega: m.omega,
                localization: m.localization,
                is_localized: m.is_localized,
            })
            .collect())
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(SweepResult {
        rows,
        sigma_values: sigmas,
        trials_per_sigma,
    })
}

fn annotate(e: Error, sigma: f64, trial: u32) -> Error {
    match e {
        Error::SolverFailure { index, detail } => Error::SolverFailure {
            index,
            detail: format!("{detail} (sigma = {sigma}, trial = {trial})"),
        },
        other => other,
    }
}

/// Tracked entry: the localized mode nearest a reference frequency, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    pub sigma: f64,
    pub trial: u32,
    pub omega_matched: Option<f64>,
    pub drift: Option<f64>,
}

/// For each (sigma, trial), find the localized mode nearest `omega_ref`
/// within `tolerance`, or record a miss.
pub fn track_mode(sweep: &SweepResult, omega_ref: f64, tolerance: f64) -> Result<Vec<TrackRow>> {
    if !(omega_ref > 0.0) {
        return Err(Error::Domain(format!("omega_ref must be positive, got {omega_ref}")));
    }
    let mut out = Vec::new();
    for (step, &sigma) in sweep.sigma_values.iter().enumerate() {
        for trial in 0..sweep.trials_per_sigma {
            let best = sweep
                .rows
                .iter()
                .filter(|r| {
                    r.sigma == sigma
                        && r.trial == trial
                        && r.is_localized
                        && (r.omega - omega_ref).abs() <= tolerance
                })
                .min_by(|a, b| {
                    (a.omega - omega_ref)
                        .abs()
                        .total_cmp(&(b.omega - omega_ref).abs())
                });
            out.push(TrackRow {
                sigma,
                trial,
                omega_matched: best.map(|r| r.omega),
                drift: best.map(|r| r.omega - omega_ref),
            });
        }
        let _ = step;
    }
    Ok(out)
}

/// CSV rows `sigma, trial, omega_matched, drift` (empty fields on a miss).
pub fn write_track_csv<W: Write>(rows: &[TrackRow], mut w: W) -> Result<()> {
    writeln!(w, "sigma,trial,omega_matched,drift")?;
    for r in rows {
        match (r.omega_matched, r.drift) {
            (Some(om), Some(d)) => writeln!(w, "{},{},{},{}", r.sigma, r.trial, om, d)?,
            _ => writeln!(w, "{},{},,", r.sigma, r.trial)?,
        }
    }
    Ok(())
}

/// Sample standard deviation of the tracked drifts at one sigma value.
pub fn drift_std(rows: &[TrackRow], sigma: f64) -> Option<f64> {
    let drifts: Vec<f64> = rows
        .iter()
        .filter(|r| r.sigma == sigma)
        .filter_map(|r| r.drift)
        .collect();
    if drifts.len() < 2 {
        return None;
    }
    let mean = drifts.iter().sum::<f64>() / drifts.len() as f64;
    let var = drifts.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / drifts.len() as f64;
    Some(var.sqrt())
}

/// Number of tracking misses at one sigma value.
pub fn miss_count(rows: &[TrackRow], sigma: f64) -> usize {
    rows.iter()
        .filter(|r| r.sigma == sigma && r.omega_matched.is_none())
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::reflected_profile_from_cells;

    fn flat_profile(n: usize) -> MaterialProfile {
        MaterialProfile::from_cells(0.0, &vec![1.0; n]).unwrap()
    }

    #[test]
    fn sigma_zero_is_identity() {
        let p = flat_profile(20);
        let spec = PerturbationSpec::new(0.0, 42).unwrap();
        let q = perturb_profile(&p, &spec).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn perturbation_is_deterministic() {
        let p = flat_profile(50);
        let spec = PerturbationSpec::new(0.08, 7).unwrap();
        let a = perturb_profile(&p, &spec).unwrap();
        let b = perturb_profile(&p, &spec).unwrap();
        assert_eq!(a, b);
        let other = PerturbationSpec::new(0.08, 8).unwrap();
        let c = perturb_profile(&p, &other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_statistics_match_the_distribution() {
        let p = flat_profile(10_000);
        let spec = PerturbationSpec::new(0.05, 123).unwrap();
        let q = perturb_profile(&p, &spec).unwrap();
        let rel: Vec<f64> = q.speeds.iter().map(|c| c - 1.0).collect();
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        assert!(mean.abs() <= 3.0 * 0.05 / 100.0, "mean = {mean}");
        let var = rel.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rel.len() as f64;
        let std = var.sqrt();
        assert!((std - 0.05).abs() / 0.05 <= 0.05, "std = {std}");
    }

    #[test]
    fn clamp_floors_small_speeds() {
        // large sigma forces some (1 + X) factors negative
        let p = flat_profile(2000);
        let spec = PerturbationSpec::new(1.0, 99).unwrap();
        let q = perturb_profile(&p, &spec).unwrap();
        let min = q.speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= 1e-3);
        assert!(
            q.speeds.iter().filter(|&&c| c == 1e-3).count() > 0,
            "expected at least one clamped cell"
        );
    }

    #[test]
    fn sweep_is_deterministic_and_sigma_zero_matches_unperturbed() {
        let cells: Vec<f64> = (0..12).map(|i| if i % 2 == 1 { 2.0 } else { 1.0 }).collect();
        let p = reflected_profile_from_cells(&cells).unwrap();
        let a = robustness_sweep(&p, 0.05, 2, 2, 1.0, 11, 0.02, 5.0, 0.5).unwrap();
        let b = robustness_sweep(&p, 0.05, 2, 2, 1.0, 11, 0.02, 5.0, 0.5).unwrap();
        assert_eq!(a.rows, b.rows);
        // sigma = 0 rows reproduce the unperturbed spectrum
        let op = assemble(&p, 0.02).unwrap();
        let unperturbed = eigensolve_with(&op, 1.0, 5.0, 0.5).unwrap();
        let zero_rows: Vec<&SweepRow> =
            a.rows.iter().filter(|r| r.sigma == 0.0 && r.trial == 0).collect();
        assert_eq!(zero_rows.len(), unperturbed.len());
        for (r, m) in zero_rows.iter().zip(unperturbed.iter()) {
            assert_eq!(r.omega, m.omega);
        }
    }

    #[test]
    fn tracking_matches_and_misses() {
        let rows = vec![
            SweepRow { sigma: 0.0, trial: 0, omega: 1.40, localization: 0.9, is_localized: true },
            SweepRow { sigma: 0.0, trial: 0, omega: 2.80, localization: 0.1, is_localized: false },
            SweepRow { sigma: 0.1, trial: 0, omega: 1.47, localization: 0.8, is_localized: true },
        ];
        let sweep = SweepResult {
            rows,
            sigma_values: vec![0.0, 0.1],
            trials_per_sigma: 1,
        };
        let tracked = track_mode(&sweep, 1.41, 0.1).unwrap();
        assert_eq!(tracked.len(), 2);
        assert_eq!(tracked[0].omega_matched, Some(1.40));
        assert_eq!(tracked[1].omega_matched, Some(1.47));
        let tight = track_mode(&sweep, 1.41, 0.02).unwrap();
        assert_eq!(tight[0].omega_matched, Some(1.40));
        assert_eq!(tight[1].omega_matched, None);
        assert_eq!(miss_count(&tight, 0.1), 1);
    }

    #[test]
    fn seed_derivation_separates_cells() {
        let s1 = derive_seed(5, 0, 0);
        let s2 = derive_seed(5, 0, 1);
        let s3 = derive_seed(5, 1, 0);
        assert_ne!(s1, s2);
        assert_ne!(s1, s3);
        assert_ne!(s2, s3);
    }
}
