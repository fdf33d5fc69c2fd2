//! Seeded generator of random admissible sections.
//!
//! A piecewise-constant weight `μ ∈ [0, 1]` drives
//! `raw(t) = ∫₀ᵗ μ(s) d(s + φ(s))`, normalized so that `raw(1) = 1`; the
//! section is `min{raw, t, φ(t)}`. Since `0 ≤ μ ≤ 1`, `raw` is increasing with
//! `raw − t − φ` non-increasing, both properties survive the minimum with
//! `min{t, φ(t)}`, and `raw(1) = 1` yields the lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ModelError;
use crate::model::{upper_section, validate_section, CurveMap, SectionPair, DEFAULT_SECTION_SAMPLES};
use crate::piecewise::{pointwise_min, Piece, PiecewiseFunction, Term};

pub struct SectionGenerator {
    rng: ChaCha8Rng,
}

impl SectionGenerator {
    pub fn new(seed: u64) -> Self {
        SectionGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn curve_map(&mut self) -> Result<CurveMap, ModelError> {
        random_curve_map(&mut self.rng)
    }

    pub fn section(&mut self) -> Result<SectionPair, ModelError> {
        let phi = random_curve_map(&mut self.rng)?;
        random_section(&mut self.rng, phi)
    }
}

fn sorted_cuts<R: Rng>(rng: &mut R, max_count: usize) -> Vec<f64> {
    let count = rng.gen_range(0..=max_count);
    let mut cuts: Vec<f64> = (0..count).map(|_| rng.gen_range(0.02..0.98)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    cuts
}

/// One of: identity, `t^p`, a random increasing table, or `t^p` followed by
/// an affine stretch.
pub fn random_curve_map<R: Rng>(rng: &mut R) -> Result<CurveMap, ModelError> {
    match rng.gen_range(0..4) {
        0 => Ok(CurveMap::identity()),
        1 => CurveMap::power(rng.gen_range(0.35..3.0)),
        2 => {
            let ts = sorted_cuts(rng, 5);
            let mut vs: Vec<f64> = ts.iter().map(|_| rng.gen_range(0.02..0.98)).collect();
            vs.sort_by(f64::total_cmp);
            vs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let n = ts.len().min(vs.len());
            let mut knots = vec![(0.0, 0.0)];
            knots.extend(ts[..n].iter().copied().zip(vs[..n].iter().copied()));
            knots.push((1.0, 1.0));
            CurveMap::new(PiecewiseFunction::new(vec![Piece::table(knots)?])?)
        }
        _ => {
            let p: f64 = rng.gen_range(0.35..3.0);
            let c: f64 = rng.gen_range(0.2..0.8);
            let cp = c.powf(p);
            let slope = (1.0 - cp) / (1.0 - c);
            CurveMap::new(PiecewiseFunction::new(vec![
                Piece::power_sum(0.0, c, vec![Term::new(1.0, p)])?,
                Piece::power_sum(c, 1.0, vec![Term::new(slope, 1.0), Term::new(1.0 - slope, 0.0)])?,
            ])?)
        }
    }
}

/// A random admissible section for `phi`.
pub fn random_section<R: Rng>(rng: &mut R, phi: CurveMap) -> Result<SectionPair, ModelError> {
    let mut cells = vec![0.0];
    cells.extend(sorted_cuts(rng, 5));
    cells.push(1.0);
    let lambda: Vec<f64> = (1..cells.len())
        .map(|_| match rng.gen_range(0..7) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..1.0),
        })
        .collect();

    let s = phi.function().combine(1.0, &PiecewiseFunction::identity(), 1.0)?;
    let weights: Vec<f64> = cells.windows(2).map(|w| s.value(w[1]) - s.value(w[0])).collect();
    let z: f64 = lambda.iter().zip(&weights).map(|(l, w)| l * w).sum();
    // Normalize so that Σ μ·w = 1 while keeping μ ∈ [0, 1]; the total weight is 2.
    let mu: Vec<f64> = if z >= 1.0 {
        lambda.iter().map(|l| l / z).collect()
    } else {
        lambda.iter().map(|l| 1.0 - (1.0 - l) / (2.0 - z)).collect()
    };

    let mut pieces = Vec::new();
    let mut running = 0.0;
    for (k, w) in cells.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let offset = running - mu[k] * s.value(lo);
        for p in s.restrict(lo, hi) {
            pieces.push(p.combine(mu[k], &p, 0.0).plus_terms(&[Term::new(offset, 0.0)]));
        }
        running += mu[k] * weights[k];
    }
    let raw = PiecewiseFunction::new(pieces)?;
    let gamma = pointwise_min(&raw, &upper_section(&phi)?)?;
    validate_section(phi, gamma, DEFAULT_SECTION_SAMPLES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_sections_validate() {
        let mut g = SectionGenerator::new(7);
        for i in 0..300 {
            g.section().unwrap_or_else(|e| panic!("trial {i}: {e}"));
        }
    }

    #[test]
    fn seeded_generator_is_reproducible() {
        let a = SectionGenerator::new(11).section().unwrap();
        let b = SectionGenerator::new(11).section().unwrap();
        assert_eq!(a, b);
    }
}
