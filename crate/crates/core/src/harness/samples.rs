//! Seeded random cylinder profiles built from compactly supported bumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cylinder::{CylinderFunction, ModeProfile};
use crate::error::{Error, Result};
use crate::modes::SphericalMode;
use crate::quadrature::Grid1D;

/// Recipe for a reproducible family of random profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
    pub modes: Vec<SphericalMode>,
    pub bumps_per_mode: usize,
    /// Range of `|amplitude|`; the sign is drawn separately.
    pub amplitude: (f64, f64),
    /// Range of bump half-widths in `s`.
    pub width: (f64, f64),
    /// Range of bump centres in `s`.
    pub center: (f64, f64),
    /// Use every mode in each sample, or one randomly chosen mode per sample.
    pub combine_modes: bool,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            count: 100,
            modes: vec![SphericalMode::radial()],
            bumps_per_mode: 2,
            amplitude: (0.5, 2.0),
            width: (1.0, 4.0),
            center: (-4.0, 4.0),
            combine_modes: true,
        }
    }
}

impl SampleSpec {
    /// Profiles supported in `s > 0`, that is inside the unit ball.
    pub fn unit_ball(seed: u64, count: usize, modes: Vec<SphericalMode>) -> Self {
        Self {
            seed,
            count,
            modes,
            width: (0.5, 1.4),
            center: (1.5, 5.0),
            ..Self::default()
        }
    }

    fn validate(&self, grid: &Grid1D) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::params("sample spec needs at least one mode"));
        }
        if self.bumps_per_mode == 0 {
            return Err(Error::params(
                "sample spec needs at least one bump per mode",
            ));
        }
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ordered(self.amplitude) || !ordered(self.width) || !ordered(self.center) {
            return Err(Error::params("sample ranges must be finite with lo <= hi"));
        }
        if self.amplitude.0 <= 0.0 || self.width.0 <= 0.0 {
            return Err(Error::params("amplitudes and widths must be positive"));
        }
        let h = grid.require_step()?;
        if self.center.0 - self.width.1 <= grid.start() + h
            || self.center.1 + self.width.1 >= grid.end() - h
        {
            return Err(Error::grid(format!(
                "bumps reach [{}, {}] outside the grid [{}, {}]",
                self.center.0 - self.width.1,
                self.center.1 + self.width.1,
                grid.start(),
                grid.end()
            )));
        }
        Ok(())
    }
}

/// `(1 - z^2)^4` and its first two derivatives in `s`.
fn bump(s: f64, center: f64, width: f64) -> (f64, f64, f64) {
    let z = (s - center) / width;
    if z.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let b = 1.0 - z * z;
    (
        b.powi(4),
        -8.0 * z * b.powi(3) / width,
        (48.0 * z * z * b * b - 8.0 * b.powi(3)) / (width * width),
    )
}

struct Bump {
    amplitude: f64,
    center: f64,
    width: f64,
}

fn draw_bumps(rng: &mut ChaCha8Rng, spec: &SampleSpec) -> Vec<Bump> {
    (0..spec.bumps_per_mode)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Bump {
                amplitude: sign * rng.gen_range(spec.amplitude.0..=spec.amplitude.1),
                center: rng.gen_range(spec.center.0..=spec.center.1),
                width: rng.gen_range(spec.width.0..=spec.width.1),
            }
        })
        .collect()
}

/// Sums of seeded bumps per mode. Identical seeds give bitwise-identical samples.
pub fn generate_samples(spec: &SampleSpec, grid: &Grid1D) -> Result<Vec<CylinderFunction>> {
    spec.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let modes: Vec<SphericalMode> = if spec.combine_modes {
            spec.modes.clone()
        } else {
            vec![spec.modes[rng.gen_range(0..spec.modes.len())]]
        };
        let profiles = modes
            .into_iter()
            .map(|mode| {
                let bumps = draw_bumps(&mut rng, spec);
                ModeProfile::from_fn(mode, grid, |s| {
                    bumps.iter().fold((0.0, 0.0, 0.0), |acc, b| {
                        let (w, w1, w2) = bump(s, b.center, b.width);
                        (
                            acc.0 + b.amplitude * w,
                            acc.1 + b.amplitude * w1,
                            acc.2 + b.amplitude * w2,
                        )
                    })
                })
            })
            .collect();
        out.push(CylinderFunction::new(grid.clone(), profiles)?);
    }
    Ok(out)
}
