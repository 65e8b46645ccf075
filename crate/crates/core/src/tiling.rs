//! Recursive tiling rules, their expansion into A/B label sequences, and
//! reflected piecewise-constant material profiles.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

/// Default cap on materialized expansion length.
pub const DEFAULT_LENGTH_CAP: u64 = 10_000_000;

/// One of the two unit-width building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

/// Nonempty ordered list of labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSequence(Vec<Label>);

impl LabelSequence {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidRule("label sequence must be nonempty".into()));
        }
        Ok(LabelSequence(labels))
    }

    /// Parse from a string of `A`/`B` characters (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| match c {
                'A' | 'a' => Ok(Label::A),
                'B' | 'b' => Ok(Label::B),
                other => Err(Error::InvalidRule(format!("unexpected label character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        LabelSequence::new(labels)
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Count of (A, B) labels.
    pub fn counts(&self) -> (u64, u64) {
        let a = self.0.iter().filter(|&&l| l == Label::A).count() as u64;
        (a, self.0.len() as u64 - a)
    }

    /// The same cells read in the opposite direction.
    pub fn reversed(&self) -> LabelSequence {
        LabelSequence(self.0.iter().rev().copied().collect())
    }

    /// The same cells with the roles of A and B exchanged.
    pub fn swapped(&self) -> LabelSequence {
        LabelSequence(
            self.0
                .iter()
                .map(|l| match l {
                    Label::A => Label::B,
                    Label::B => Label::A,
                })
                .collect(),
        )
    }

    /// First `n` labels of the rule's infinite word, truncating the smallest
    /// sufficient expansion.
    pub fn truncated(&self, n: usize) -> Result<LabelSequence> {
        if n == 0 || n > self.0.len() {
            return Err(Error::Domain(format!(
                "cannot truncate length-{} sequence to {n} labels",
                self.0.len()
            )));
        }
        Ok(LabelSequence(self.0[..n].to_vec()))
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", if *l == Label::A { 'A' } else { 'B' })?;
        }
        Ok(())
    }
}

/// A recursive construction rule for media on the half line.
#[derive(Debug, Clone, PartialEq)]
pub enum TilingRule {
    /// `M_1 = A`, `M_2 = AB`, `M_N = M_{N-1} M_{N-2}`.
    Fibonacci,
    /// `M_1 = seed`, `M_{N+1} = M_N seed`.
    Periodic(LabelSequence),
    /// `M_1 = m1`; level `N >= 2` is level `N-1` followed by the earlier
    /// levels listed in `suffix_plan` for that level (1-based level indices,
    /// each strictly less than `N`). A plan shorter than the requested level
    /// repeats its last entry.
    Custom {
        m1: LabelSequence,
        suffix_plan: Vec<Vec<u32>>,
    },
}

impl TilingRule {
    /// Validate structural invariants that do not depend on the level.
    pub fn validate(&self) -> Result<()> {
        if let TilingRule::Custom { suffix_plan, .. } = self {
            if suffix_plan.is_empty() {
                return Err(Error::InvalidRule("custom rule needs a nonempty suffix plan".into()));
            }
            for (i, entry) in suffix_plan.iter().enumerate() {
                if entry.is_empty() {
                    return Err(Error::InvalidRule(format!("suffix plan entry {i} is empty")));
                }
                if entry.iter().any(|&j| j == 0) {
                    return Err(Error::InvalidRule("suffix plan levels are 1-based".into()));
                }
            }
        }
        Ok(())
    }

    /// Suffix levels appended at `level` (>= 2).
    fn plan_entry(&self, level: u32) -> Result<Vec<u32>> {
        match self {
            TilingRule::Fibonacci => Ok(vec![level - 2]),
            TilingRule::Periodic(_) => Ok(vec![1]),
            TilingRule::Custom { suffix_plan, .. } => {
                let idx = (level as usize - 2).min(suffix_plan.len() - 1);
                let entry = &suffix_plan[idx];
                for &j in entry {
                    if j >= level {
                        return Err(Error::InvalidRule(format!(
                            "level {level} references level {j}, which is not strictly earlier"
                        )));
                    }
                }
                Ok(entry.clone())
            }
        }
    }

    fn base(&self) -> LabelSequence {
        match self {
            TilingRule::Fibonacci => LabelSequence(vec![Label::A]),
            TilingRule::Periodic(seed) => seed.clone(),
            TilingRule::Custom { m1, .. } => m1.clone(),
        }
    }
}

/// Exact label sequence of level `level`, memoizing earlier levels.
pub fn expand(rule: &TilingRule, level: u32) -> Result<LabelSequence> {
    expand_capped(rule, level, DEFAULT_LENGTH_CAP)
}

/// [`expand`] with an explicit length cap.
pub fn expand_capped(rule: &TilingRule, level: u32, cap: u64) -> Result<LabelSequence> {
    if level == 0 {
        return Err(Error::Domain("level must be >= 1".into()));
    }
    rule.validate()?;
    let total = level_length_capped(rule, level, cap)?;
    if total > cap {
        return Err(Error::LengthCapExceeded { requested: total, cap });
    }
    let mut levels: Vec<Vec<Label>> = Vec::with_capacity(level as usize);
    levels.push(rule.base().0.clone());
    // Fibonacci levels 1 and 2 are special-cased: M_2 = AB is part of the rule.
    if level >= 2 {
        let second = match rule {
            TilingRule::Fibonacci => vec![Label::A, Label::B],
            _ => {
                let mut v = levels[0].clone();
                for j in rule.plan_entry(2)? {
                    let piece = levels[j as usize - 1].clone();
                    v.extend(piece);
                }
                v
            }
        };
        levels.push(second);
    }
    for n in 3..=level {
        let mut v = levels[n as usize - 2].clone();
        for j in rule.plan_entry(n)? {
            let piece = levels[j as usize - 1].clone();
            v.extend(piece);
        }
        levels.push(v);
    }
    Ok(LabelSequence(levels.pop().expect("level >= 1")))
}

/// Length of `expand(rule, level)` without materializing it.
pub fn level_length(rule: &TilingRule, level: u32) -> Result<u64> {
    level_length_capped(rule, level, u64::MAX)
}

fn level_length_capped(rule: &TilingRule, level: u32, cap: u64) -> Result<u64> {
    if level == 0 {
        return Err(Error::Domain("level must be >= 1".into()));
    }
    rule.validate()?;
    let mut lens: Vec<u64> = vec![rule.base().len() as u64];
    if level >= 2 {
        let second = match rule {
            TilingRule::Fibonacci => 2,
            _ => {
                let mut s = lens[0];
                for j in rule.plan_entry(2)? {
                    s = s.saturating_add(lens[j as usize - 1]);
                }
                s
            }
        };
        lens.push(second);
    }
    for n in 3..=level {
        let mut s = lens[n as usize - 2];
        for j in rule.plan_entry(n)? {
            s = s.saturating_add(lens[j as usize - 1]);
        }
        if s > cap.saturating_mul(2) {
            return Err(Error::LengthCapExceeded { requested: s, cap });
        }
        lens.push(s);
    }
    Ok(*lens.last().expect("level >= 1"))
}

/// `(count_A, count_B)` of level `level` without materializing it.
pub fn label_counts(rule: &TilingRule, level: u32) -> Result<(u64, u64)> {
    if level == 0 {
        return Err(Error::Domain("level must be >= 1".into()));
    }
    rule.validate()?;
    let base = rule.base().counts();
    let mut counts: Vec<(u64, u64)> = vec![base];
    if level >= 2 {
        let second = match rule {
            TilingRule::Fibonacci => (1, 1),
            _ => {
                let mut s = counts[0];
                for j in rule.plan_entry(2)? {
                    let c = counts[j as usize - 1];
                    s = (s.0 + c.0, s.1 + c.1);
                }
                s
            }
        };
        counts.push(second);
    }
    for n in 3..=level {
        let mut s = counts[n as usize - 2];
        for j in rule.plan_entry(n)? {
            let c = counts[j as usize - 1];
            s = (s.0 + c.0, s.1 + c.1);
        }
        counts.push(s);
    }
    Ok(*counts.last().expect("level >= 1"))
}

/// Piecewise-constant wave-speed profile on `[x_min, x_max]` with unit cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProfile {
    /// Cell boundaries, ascending, spanning the domain exactly.
    pub breakpoints: Vec<f64>,
    /// Per-cell speeds, `speeds[i]` on `[breakpoints[i], breakpoints[i+1])`.
    pub speeds: Vec<f64>,
    /// `[x_min, x_max]`.
    pub domain: (f64, f64),
}

impl MaterialProfile {
    /// Profile from explicit cell speeds, cells of unit width starting at `x0`.
    pub fn from_cells(x0: f64, cells: &[f64]) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Domain("profile needs at least one cell".into()));
        }
        if cells.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Domain("cell speeds must be positive".into()));
        }
        let breakpoints: Vec<f64> = (0..=cells.len()).map(|i| x0 + i as f64).collect();
        Ok(MaterialProfile {
            domain: (x0, x0 + cells.len() as f64),
            breakpoints,
            speeds: cells.to_vec(),
        })
    }

    /// Number of unit cells.
    pub fn n_cells(&self) -> usize {
        self.speeds.len()
    }

    /// Speed at position `x` (right-continuous; clamped at the ends).
    pub fn speed_at(&self, x: f64) -> f64 {
        let i = (x - self.domain.0).floor() as isize;
        let i = i.clamp(0, self.speeds.len() as isize - 1) as usize;
        self.speeds[i]
    }

    /// CSV rows `x_left, x_right, speed`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x_left,x_right,speed")?;
        for (i, s) in self.speeds.iter().enumerate() {
            writeln!(w, "{},{},{}", self.breakpoints[i], self.breakpoints[i + 1], s)?;
        }
        Ok(())
    }

    /// JSON document `{domain:[a,b], breakpoints:[...], speeds:[...]}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "domain": [self.domain.0, self.domain.1],
            "breakpoints": self.breakpoints,
            "speeds": self.speeds,
        })
        .to_string()
    }

    /// Parse the JSON document produced by [`MaterialProfile::to_json`].
    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            domain: (f64, f64),
            breakpoints: Vec<f64>,
            speeds: Vec<f64>,
        }
        let doc: Doc = serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))?;
        if doc.breakpoints.len() != doc.speeds.len() + 1 {
            return Err(Error::Io("breakpoints/speeds length mismatch".into()));
        }
        if doc.speeds.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Domain("cell speeds must be positive".into()));
        }
        Ok(MaterialProfile {
            breakpoints: doc.breakpoints,
            speeds: doc.speeds,
            domain: doc.domain,
        })
    }
}

/// Map labels to speeds: A -> `speed_a`, B -> `speed_b`.
pub fn cells_from_labels(labels: &LabelSequence, speed_a: f64, speed_b: f64) -> Vec<f64> {
    labels
        .labels()
        .iter()
        .map(|l| match l {
            Label::A => speed_a,
            Label::B => speed_b,
        })
        .collect()
}

/// Reflected profile on `[-L, L]`: the right half carries `cells` read
/// outward from the junction at x = 0, the left half is its mirror image.
pub fn reflected_profile_from_cells(cells: &[f64]) -> Result<MaterialProfile> {
    if cells.is_empty() {
        return Err(Error::Domain("profile needs at least one cell".into()));
    }
    let mut full: Vec<f64> = cells.iter().rev().copied().collect();
    full.extend_from_slice(cells);
    MaterialProfile::from_cells(-(cells.len() as f64), &full)
}

/// Reflected profile of `expand(rule, level)` with speed 1 on A cells and
/// `contrast_r` on B cells.
pub fn reflected_profile(rule: &TilingRule, level: u32, contrast_r: f64) -> Result<MaterialProfile> {
    if !(contrast_r > 0.0) {
        return Err(Error::Domain(format!("contrast must be positive, got {contrast_r}")));
    }
    let labels = expand(rule, level)?;
    reflected_profile_from_cells(&cells_from_labels(&labels, 1.0, contrast_r))
}

/// Reflected profile truncated to exactly `cells_per_side` cells per side.
pub fn reflected_profile_cells(
    rule: &TilingRule,
    cells_per_side: usize,
    contrast_r: f64,
) -> Result<MaterialProfile> {
    if !(contrast_r > 0.0) {
        return Err(Error::Domain(format!("contrast must be positive, got {contrast_r}")));
    }
    if cells_per_side == 0 {
        return Err(Error::Domain("need at least one cell per side".into()));
    }
    // expand the smallest level whose length covers the request
    let mut level = 1;
    loop {
        let len = level_length(rule, level)?;
        if len >= cells_per_side as u64 {
            break;
        }
        level += 1;
        if level > 64 {
            return Err(Error::Domain("rule does not grow; cannot cover the requested length".into()));
        }
    }
    let labels = expand(rule, level)?.truncated(cells_per_side)?;
    reflected_profile_from_cells(&cells_from_labels(&labels, 1.0, contrast_r))
}
